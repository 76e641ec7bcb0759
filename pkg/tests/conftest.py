import numpy as np
import pytest

import belleval as bv
from belleval.prior import PriorSample, build_prior

CACHE_DIR = None  # set lazily relative to this file


def _cache_dir(tmp_path_factory):
    global CACHE_DIR
    if CACHE_DIR is None:
        import pathlib
        CACHE_DIR = pathlib.Path(__file__).parent / "_prior_cache"
        CACHE_DIR.mkdir(exist_ok=True)
    return CACHE_DIR


@pytest.fixture(scope="session")
def prior_cache(tmp_path_factory):
    """Build-once prior samples, persisted across test sessions on disk.

    The heavy acceptance runs reuse identical builds; the cache key covers
    params, size, epsilon, and seed, so a stale file can never be confused
    with a requested build.
    """
    cache = _cache_dir(tmp_path_factory)

    def get(params: bv.ExperimentParams, n: int, seed: int = 1,
            epsilon: float = 0.001) -> PriorSample:
        key = {"params": params.as_dict(), "n_per_component": n,
               "epsilon": epsilon, "seed": seed}
        import hashlib
        import json
        digest = hashlib.sha256(
            json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]
        path = cache / f"prior-{digest}.bin"
        if path.exists():
            return PriorSample.load(path, expect_key=key)
        sample = build_prior(params, n, epsilon=epsilon, seed=seed)
        sample.save(path)
        return sample

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
