"""Prior sample construction: the two-component sample over the permissible
probabilities, region classification, prior contents, and sampling-error
intervals.

The prior is defined by the sampling algorithm itself: half the points come
from random high-purity quantum states, half from random hidden-weight
assignments, each component normalized to total mass 1/2.  Classifying every
point into the three regions (quantum-only, both, LHV-only) turns region
contents into counting.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import ParseError
from .lhv import (_MembershipLP, bell_violation, lhv_sample_tables,
                  qm_membership, BELL_PRECHECK_TOL)
from .params import ExperimentParams
from .probability import ProbabilityVector, reduced_from_table, table_from_reduced
from .quantum import (_MembershipGeometry, _max_min_eigenvalue,
                      _recover_state_family, MEMBERSHIP_TOL, qm_sample_tables)

QM_ONLY, BOTH, LHV_ONLY = 0, 1, 2
REGION_NAMES = ("QM only", "both", "LHV only")
ORIGIN_QM, ORIGIN_LHV = 0, 1
ORIGIN_NAMES = ("QM-sampler", "LHV-sampler")

_CHUNK = 4096  # fixed substream granularity: results independent of scheduling


@dataclass(frozen=True)
class LabeledSample:
    """One prior point: its probabilities, which sampler produced it, and its
    region label; the log-likelihood slot is filled lazily by evidence runs."""

    probability: ProbabilityVector
    origin: str
    region: str
    log_likelihood: float | None = None

    def __post_init__(self):
        if self.origin not in ORIGIN_NAMES:
            raise ValueError(f"origin must be one of {ORIGIN_NAMES}")
        if self.region not in REGION_NAMES:
            raise ValueError(f"region must be one of {REGION_NAMES}")
        if self.origin == "QM-sampler" and self.region == "LHV only":
            raise ValueError("a QM-sampled point cannot be LHV-only")
        if self.origin == "LHV-sampler" and self.region == "QM only":
            raise ValueError("an LHV-sampled point cannot be QM-only")


@dataclass(frozen=True)
class PriorContents:
    """Region contents of the two-component prior, with the subsample splits."""

    n1: int  # QM subsample, classified QM-only
    n2: int  # QM subsample, classified both
    n3: int  # LHV subsample, classified LHV-only
    n4: int  # LHV subsample, classified both

    @property
    def s_qm_only(self) -> float:
        return 0.5 * self.n1 / (self.n1 + self.n2)

    @property
    def s_lhv_only(self) -> float:
        return 0.5 * self.n3 / (self.n3 + self.n4)

    @property
    def s_both(self) -> float:
        return 1.0 - self.s_qm_only - self.s_lhv_only

    def as_array(self) -> np.ndarray:
        return np.array([self.s_qm_only, self.s_both, self.s_lhv_only])

    def as_dict(self) -> dict:
        return {"QM only": self.s_qm_only, "both": self.s_both,
                "LHV only": self.s_lhv_only,
                "n1": self.n1, "n2": self.n2, "n3": self.n3, "n4": self.n4}


class PriorSample:
    """The assembled two-component sample, immutable after construction.

    Stored as arrays: flattened probability tables (2n, 16), origin codes,
    and region codes; per-point LabeledSample views are created on demand.
    """

    def __init__(self, tables: np.ndarray, origin: np.ndarray, region: np.ndarray,
                 params: ExperimentParams, epsilon: float, seed: int):
        order = np.argsort(origin, kind="stable")  # QM half first, then LHV
        # canonicalize through the eight-parameter form: the cache stores the
        # reduced records, so this makes save/load bit-lossless
        self.reduced = np.ascontiguousarray(
            reduced_from_table(tables[order].reshape(-1, 4, 4)))
        self.tables = np.ascontiguousarray(
            table_from_reduced(self.reduced).reshape(-1, 16))
        self.origin = np.ascontiguousarray(origin[order].astype(np.uint8))
        self.region = np.ascontiguousarray(region[order].astype(np.uint8))
        self.params = params
        self.epsilon = epsilon
        self.seed = seed
        for arr in (self.reduced, self.tables, self.origin, self.region):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tables)

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(
            probability=ProbabilityVector(self.tables[i].reshape(4, 4)),
            origin=ORIGIN_NAMES[self.origin[i]],
            region=REGION_NAMES[self.region[i]],
        )

    @property
    def contents(self) -> PriorContents:
        qm = self.origin == ORIGIN_QM
        return PriorContents(
            n1=int((self.region[qm] == QM_ONLY).sum()),
            n2=int((self.region[qm] == BOTH).sum()),
            n3=int((self.region[~qm] == LHV_ONLY).sum()),
            n4=int((self.region[~qm] == BOTH).sum()),
        )

    def region_indices(self, region: int) -> np.ndarray:
        return np.nonzero(self.region == region)[0]

    # -- cache format: magic, header length, JSON header, fixed-width records
    _MAGIC = b"BEVPRIOR"
    _VERSION = 1
    _RECORD = np.dtype([("reduced", "<f8", 8), ("origin", "u1"), ("region", "u1")])

    def cache_key(self) -> dict:
        return {"params": self.params.as_dict(), "n_per_component": len(self) // 2,
                "epsilon": self.epsilon, "seed": self.seed, "version": self._VERSION}

    def save(self, path: str | Path) -> None:
        header = json.dumps(self.cache_key(), sort_keys=True).encode("utf-8")
        rec = np.empty(len(self), dtype=self._RECORD)
        rec["reduced"] = self.reduced
        rec["origin"] = self.origin
        rec["region"] = self.region
        with open(path, "wb") as fh:
            fh.write(self._MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(rec.tobytes())

    @classmethod
    def load(cls, path: str | Path, expect_key: dict | None = None) -> "PriorSample":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != cls._MAGIC:
                raise ParseError(f"{path}: not a prior cache file")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            if header.get("version") != cls._VERSION:
                raise ParseError(f"{path}: cache version {header.get('version')} unsupported")
            if expect_key is not None:
                probe = dict(expect_key, version=cls._VERSION)
                if header != probe:
                    raise ParseError(f"{path}: cache key mismatch")
            rec = np.frombuffer(fh.read(), dtype=cls._RECORD)
        params = ExperimentParams(
            header["params"]["gamma"], header["params"]["theta_A_deg"],
            header["params"]["theta_B_deg"], header["params"]["eta_A"],
            header["params"]["eta_B"])
        obj = cls.__new__(cls)
        obj.reduced = np.ascontiguousarray(rec["reduced"])
        obj.tables = np.ascontiguousarray(
            table_from_reduced(obj.reduced).reshape(-1, 16))
        obj.origin = np.ascontiguousarray(rec["origin"])
        obj.region = np.ascontiguousarray(rec["region"])
        obj.params = params
        obj.epsilon = header["epsilon"]
        obj.seed = header["seed"]
        for arr in (obj.reduced, obj.tables, obj.origin, obj.region):
            arr.setflags(write=False)
        return obj


# ---------------------------------------------------------------------------
# classification

def classify_qm_tables(tables: np.ndarray, params: ExperimentParams) -> np.ndarray:
    """Region codes for quantum-sampled tables: LP feasibility decides, with
    the Bell-violation pre-check short-circuiting certified non-members."""
    lp = _MembershipLP(params)
    reduced = reduced_from_table(tables.reshape(-1, 4, 4))
    region = np.empty(len(tables), dtype=np.uint8)
    for i in range(len(tables)):
        tbl = tables[i].reshape(4, 4)
        if bell_violation(tbl) > BELL_PRECHECK_TOL:
            region[i] = QM_ONLY
        else:
            region[i] = BOTH if lp.feasible(reduced[i]) else QM_ONLY
    return region


def classify_lhv_tables(tables: np.ndarray, params: ExperimentParams) -> np.ndarray:
    """Region codes for LHV-sampled tables via the quantum membership test."""
    geo = _MembershipGeometry(params)
    reduced = reduced_from_table(tables.reshape(-1, 4, 4))
    region = np.empty(len(tables), dtype=np.uint8)
    for i in range(len(tables)):
        slack = _max_min_eigenvalue(_recover_state_family(reduced[i], geo))
        region[i] = BOTH if slack >= -MEMBERSHIP_TOL else LHV_ONLY
    return region


def qm_sample(params: ExperimentParams, count: int, epsilon: float = 0.001,
              seed: int = 0) -> PriorSample:
    """The quantum half of the prior on its own: each point is the Born image
    of a randomly drawn high-purity state, flagged quantum-only when no
    hidden-weight assignment reproduces it."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    tables = qm_sample_tables(params, count, epsilon, rng)
    region = classify_qm_tables(tables, params)
    return PriorSample(tables, np.zeros(count, dtype=np.uint8), region,
                       params, epsilon, seed)


def lhv_sample(params: ExperimentParams, count: int, epsilon: float = 0.001,
               seed: int = 0) -> PriorSample:
    """The LHV half of the prior on its own: hidden-weight draws accepted by
    the apparatus bounds, flagged LHV-only when no quantum state reproduces
    them."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    tables = lhv_sample_tables(params, count, epsilon, rng)
    region = classify_lhv_tables(tables, params)
    return PriorSample(tables, np.ones(count, dtype=np.uint8), region,
                       params, epsilon, seed)


def build_prior(params: ExperimentParams, n_per_component: int,
                epsilon: float = 0.001, seed: int = 0) -> PriorSample:
    """Draw and classify the full two-component prior sample.

    Deterministic given the seed: generation proceeds over fixed-size chunks,
    each fed by its own substream spawned as SeedSequence(seed).spawn, so the
    result does not depend on how chunks are scheduled.
    """
    if n_per_component < 1:
        raise ValueError("n_per_component must be positive")
    n_chunks = (n_per_component + _CHUNK - 1) // _CHUNK
    streams = np.random.SeedSequence(seed).spawn(2 * n_chunks)

    qm_parts, lhv_parts = [], []
    for k in range(n_chunks):
        m = min(_CHUNK, n_per_component - k * _CHUNK)
        qm_parts.append(qm_sample_tables(
            params, m, epsilon, np.random.default_rng(streams[2 * k])))
        lhv_parts.append(lhv_sample_tables(
            params, m, epsilon, np.random.default_rng(streams[2 * k + 1])))
    qm_tables = np.concatenate(qm_parts)
    lhv_tables = np.concatenate(lhv_parts)

    region = np.concatenate([classify_qm_tables(qm_tables, params),
                             classify_lhv_tables(lhv_tables, params)])
    origin = np.concatenate([np.zeros(n_per_component, dtype=np.uint8),
                             np.ones(n_per_component, dtype=np.uint8)])
    return PriorSample(np.vstack([qm_tables, lhv_tables]), origin, region,
                       params, epsilon, seed)


# ---------------------------------------------------------------------------
# sampling-error intervals

@dataclass(frozen=True)
class ContentIntervals:
    """Uncertainty summary for a region fraction estimated from n1 hits in
    n1+n2 tries."""

    mle: float
    variance: float
    one_sigma: tuple[float, float]
    plausible: tuple[float, float]

    def as_dict(self) -> dict:
        return {"mle": self.mle, "variance": self.variance,
                "one_sigma": list(self.one_sigma), "plausible": list(self.plausible)}


def content_intervals(n1: int, n2: int) -> ContentIntervals:
    """Exact binomial-likelihood intervals for a subsample split.

    The plausible interval collects every fraction whose binomial likelihood
    is at least the flat-prior average 1/(n1+n2+1); its endpoints are found by
    bisection in log space.  The one-sigma interval uses the Gaussian
    approximation around the maximum with variance n1*n2/(n1+n2)^3; the exact
    plausible interval is the authoritative one.
    """
    if n1 < 0 or n2 < 0 or n1 + n2 < 1:
        raise ValueError("need n1 + n2 >= 1 nonnegative counts")
    total = n1 + n2
    ahat = n1 / total
    variance = n1 * n2 / total**3
    sig = np.sqrt(variance)
    one_sigma = (ahat - sig, ahat + sig)

    ln_thresh = -np.log(total + 1.0)
    ln_comb = gammaln(total + 1) - gammaln(n1 + 1) - gammaln(n2 + 1)

    def excess(a: float) -> float:
        if a <= 0.0:
            return (ln_comb - ln_thresh) if n1 == 0 else -np.inf
        if a >= 1.0:
            return (ln_comb - ln_thresh) if n2 == 0 else -np.inf
        return ln_comb + n1 * np.log(a) + n2 * np.log1p(-a) - ln_thresh

    lo = 0.0 if n1 == 0 else brentq(excess, np.nextafter(0.0, 1.0), ahat, xtol=1e-12)
    hi = 1.0 if n2 == 0 else brentq(excess, ahat, np.nextafter(1.0, 0.0), xtol=1e-12)
    return ContentIntervals(mle=ahat, variance=float(variance),
                            one_sigma=one_sigma, plausible=(float(lo), float(hi)))


def content_interval_report(contents: PriorContents) -> dict:
    """Intervals for all three region contents, halving the subsample
    fractions onto the content scale (each component carries mass 1/2)."""
    qm = content_intervals(contents.n1, contents.n2)
    lhv = content_intervals(contents.n3, contents.n4)
    halve = lambda iv: [0.5 * iv[0], 0.5 * iv[1]]
    return {
        "QM only": {"content": contents.s_qm_only,
                    "one_sigma": halve(qm.one_sigma), "plausible": halve(qm.plausible)},
        "LHV only": {"content": contents.s_lhv_only,
                     "one_sigma": halve(lhv.one_sigma), "plausible": halve(lhv.plausible)},
        "both": {"content": contents.s_both},
        "subsample_intervals": {"qm": qm.as_dict(), "lhv": lhv.as_dict()},
    }
