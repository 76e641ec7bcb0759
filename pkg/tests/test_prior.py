import numpy as np
import pytest
from scipy import stats

import belleval as bv
from belleval.errors import ParseError
from belleval.lhv import sample_hidden_weights, MARGINAL_MATRIX
from belleval.params import PRESETS
from belleval.prior import (BOTH, LHV_ONLY, QM_ONLY, PriorSample,
                            build_prior, content_interval_report)
from belleval.quantum import _random_pure_states, BornMap

BOULDER = PRESETS["boulder"].with_gamma(0.000722)


# ---- sampling-error intervals (exact published values) ----

def test_plausible_interval_qm_split():
    iv = bv.content_intervals(1210, 998_790)
    assert iv.mle == pytest.approx(0.001210, abs=1e-9)
    assert iv.plausible[0] == pytest.approx(0.001066, abs=5e-7)
    assert iv.plausible[1] == pytest.approx(0.001367, abs=5e-7)


def test_plausible_interval_lhv_split():
    iv = bv.content_intervals(993_805, 6_195)
    assert iv.plausible[0] == pytest.approx(0.993475, abs=5e-7)
    assert iv.plausible[1] == pytest.approx(0.994124, abs=5e-7)


def test_content_bounds_on_the_half_scale():
    # one-sigma inside plausible, mapped to region contents by the factor 1/2
    from belleval.prior import PriorContents
    contents = PriorContents(n1=1210, n2=998_790, n3=993_805, n4=6_195)
    report = content_interval_report(contents)
    qm = report["QM only"]
    assert qm["plausible"][0] == pytest.approx(0.000533, abs=5e-7)
    assert qm["one_sigma"][0] == pytest.approx(0.000588, abs=5e-7)
    assert qm["one_sigma"][1] == pytest.approx(0.000622, abs=5e-7)
    assert qm["plausible"][1] == pytest.approx(0.000683, abs=5e-7)
    lhv = report["LHV only"]
    assert lhv["plausible"][0] == pytest.approx(0.496738, abs=5e-7)
    assert lhv["one_sigma"][0] == pytest.approx(0.496863, abs=5e-7)
    assert lhv["one_sigma"][1] == pytest.approx(0.496942, abs=5e-7)
    assert lhv["plausible"][1] == pytest.approx(0.497062, abs=5e-7)


def test_interval_boundary_mode():
    iv = bv.content_intervals(0, 10)
    assert iv.mle == 0.0
    assert iv.plausible[0] == 0.0
    assert 0.0 < iv.plausible[1] < 1.0


def test_one_sigma_inside_plausible():
    # holds away from extreme skew; at splits like (1, 99) the Gaussian
    # one-sigma interval pokes below the exact likelihood interval
    for n1, n2 in [(3, 7), (50, 950), (1210, 998_790), (993_805, 6_195)]:
        iv = bv.content_intervals(n1, n2)
        assert iv.plausible[0] < iv.one_sigma[0]
        assert iv.one_sigma[1] < iv.plausible[1]


# ---- structural properties of the built prior ----

@pytest.fixture(scope="module")
def small_prior():
    return build_prior(BOULDER, 1000, seed=5)


def test_contents_sum_to_one(small_prior):
    c = small_prior.contents
    assert c.s_qm_only + c.s_both + c.s_lhv_only == pytest.approx(1.0, abs=1e-12)
    assert c.n1 + c.n2 == 1000
    assert c.n3 + c.n4 == 1000


def test_origin_region_invariant(small_prior):
    for i in range(0, len(small_prior), 97):
        point = small_prior[i]
        if point.origin == "QM-sampler":
            assert point.region in ("QM only", "both")
        else:
            assert point.region in ("LHV only", "both")


def test_prior_determinism_and_chunking():
    a = build_prior(BOULDER, 700, seed=9)
    b = build_prior(BOULDER, 700, seed=9)
    assert np.array_equal(a.tables, b.tables)
    assert np.array_equal(a.region, b.region)


def test_cache_round_trip(tmp_path, small_prior):
    path = tmp_path / "prior.bin"
    small_prior.save(path)
    loaded = PriorSample.load(path, expect_key={
        "params": BOULDER.as_dict(), "n_per_component": 1000,
        "epsilon": 0.001, "seed": 5})
    assert np.array_equal(loaded.origin, small_prior.origin)
    assert np.array_equal(loaded.region, small_prior.region)
    assert np.abs(loaded.tables - small_prior.tables).max() < 1e-15
    with pytest.raises(ParseError, match="mismatch"):
        PriorSample.load(path, expect_key={
            "params": BOULDER.as_dict(), "n_per_component": 999,
            "epsilon": 0.001, "seed": 5})


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a cache file at all")
    with pytest.raises(ParseError):
        PriorSample.load(path)


# ---- single-setting marginal law (both samplers share it) ----

def _setting_simplex_coordinates_qm(n, rng):
    """Step-1 pure states at unit efficiency: per-setting outcome vector."""
    params = bv.ExperimentParams(0.5, 60.2, 60.2, 1.0, 1.0)
    born = BornMap(params)
    tables = born.tables(_random_pure_states(rng, n)).reshape(n, 4, 4)
    q = tables[:, 0, :].copy() / params.gamma
    q[:, 3] = (tables[:, 0, 3] - (1 - params.gamma)) / params.gamma
    return q


def _setting_simplex_coordinates_lhv(n, rng):
    gamma = 0.5
    w = sample_hidden_weights(gamma, n, rng)
    tables = (w @ MARGINAL_MATRIX.T).reshape(n, 4, 4)
    q = tables[:, 0, :].copy() / gamma
    q[:, 3] = (tables[:, 0, 3] - (1 - gamma)) / gamma
    return q


def _simplex_histogram(q, edges):
    """Counts over a product partition of (q_++, q_00)."""
    i = np.digitize(q[:, 0], edges)
    j = np.digitize(q[:, 3], edges)
    counts = np.zeros((len(edges) + 1, len(edges) + 1), dtype=int)
    np.add.at(counts, (i, j), 1)
    return counts.reshape(-1)


def test_single_setting_marginal_matches_reference_density(rng):
    # the rescaled per-setting outcome quartet of step-1 draws follows the
    # inverse-square-root simplex density, i.e. Dirichlet(1/2,...,1/2)
    n = 30_000
    edges = np.array([0.05, 0.15, 0.3, 0.5, 0.7])
    reference = rng.dirichlet([0.5] * 4, size=n)
    href = _simplex_histogram(reference, edges)
    for draw in (_setting_simplex_coordinates_qm(n, rng),
                 _setting_simplex_coordinates_lhv(n, rng)):
        hq = _simplex_histogram(draw, edges)
        keep = (href + hq) > 10
        table = np.vstack([href[keep], hq[keep]])
        _, pvalue, _, _ = stats.chi2_contingency(table)
        assert pvalue > 0.01


def test_two_samplers_share_the_marginal(rng):
    n = 30_000
    edges = np.array([0.05, 0.15, 0.3, 0.5, 0.7])
    hq = _simplex_histogram(_setting_simplex_coordinates_qm(n, rng), edges)
    hl = _simplex_histogram(_setting_simplex_coordinates_lhv(n, rng), edges)
    keep = (hq + hl) > 10
    _, pvalue, _, _ = stats.chi2_contingency(np.vstack([hq[keep], hl[keep]]))
    assert pvalue > 0.01


def test_classifier_cross_consistency(small_prior):
    # membership calls on already-labeled points reproduce the labels
    params = small_prior.params
    idx = np.linspace(0, len(small_prior) - 1, 120).astype(int)
    for i in idx:
        tbl = small_prior.tables[i].reshape(4, 4)
        lhv_ok = bv.lhv_membership(tbl, params)
        qm_ok = bv.qm_membership(tbl, params).member
        region = small_prior.region[i]
        if region == QM_ONLY:
            assert qm_ok and not lhv_ok
        elif region == LHV_ONLY:
            assert lhv_ok and not qm_ok
        else:
            assert lhv_ok and qm_ok
