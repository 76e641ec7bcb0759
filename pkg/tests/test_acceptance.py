"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS line with the measured values once its assertions
hold (run with ``pytest tests/test_acceptance.py -v -s`` to stream them).
Heavy prior builds go through the disk-backed session cache, so re-runs are
cheap; the first full run builds eight prior samples.
"""
import time

import numpy as np
import pytest

import belleval as bv
from belleval.evidence import posterior_contents
from belleval.biascheck import run_bias_check
from belleval.bhattacharyya import bhattacharyya_angle
from belleval.lhv import MARGINAL_MATRIX
from belleval.likelihood import LN10
from belleval.params import PRESETS
from belleval.prior import BOTH, LHV_ONLY, QM_ONLY, build_prior
from belleval.probability import reduced_from_table
from belleval.quantum import (BornMap, SIGMA_YY, _MembershipGeometry,
                              _recover_state_family, sample_states)

SEED = 1
CI_SAMPLE = 100_000
CI_MOCKS = 200

BOULDER = PRESETS["boulder"]
B722 = BOULDER.with_gamma(0.000722)
B5E4 = BOULDER.with_gamma(0.0005)


def _report(criterion: str, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: PASS  {detail}")


# ---------------------------------------------------------------------------
# 1. Boulder five-trigger maximum-likelihood values

def test_criterion_1_boulder_mle_values():
    counts = bv.load_dataset("boulder-5").counts
    t0 = time.time()
    qm722 = bv.qm_mle(counts, B722, seed=SEED)
    t_qm = time.time() - t0
    assert qm722.log10_likelihood == pytest.approx(-46.59, abs=0.02)

    t0 = time.time()
    qm5 = bv.qm_mle(counts, B5E4, seed=SEED)
    t_qm5 = time.time() - t0
    assert qm5.log10_likelihood == pytest.approx(-711.52, abs=0.1)

    lhv_vals = []
    t0 = time.time()
    for gamma in (0.0005, 0.0007, 0.0009):
        lhv_vals.append(
            bv.lhv_mle(counts, BOULDER.with_gamma(gamma), seed=SEED).log10_likelihood)
    t_lhv = (time.time() - t0) / 3
    assert lhv_vals[1] == pytest.approx(-57.64, abs=0.05)
    assert max(lhv_vals) - min(lhv_vals) <= 0.01

    t0 = time.time()
    ns = bv.nosignaling_mle(counts, B722)
    t_ns = time.time() - t0
    assert ns.log10_likelihood == pytest.approx(-46.54, abs=0.02)
    assert ns.log10_likelihood - qm722.log10_likelihood <= 0.061
    assert ns.log10_likelihood >= qm722.log10_likelihood - 1e-9

    for t in (t_qm, t_qm5, t_lhv, t_ns):
        assert t <= 120.0
    _report("1", f"QM {qm722.log10_likelihood:.3f} / {qm5.log10_likelihood:.2f}, "
                 f"LHV {lhv_vals[1]:.3f} (drift {max(lhv_vals) - min(lhv_vals):.4f}), "
                 f"NS {ns.log10_likelihood:.3f}; slowest opt {max(t_qm, t_qm5, t_lhv, t_ns):.1f}s")


# ---------------------------------------------------------------------------
# 2. gamma self-calibration

def test_criterion_2_gamma_self_calibration():
    expected = {"boulder-5": 0.000722, "vienna-6": 0.00296,
                "vienna-7": 0.00287, "vienna-8": 0.00264}
    tolerance = {"boulder-5": 1e-5, "vienna-6": 3e-5,
                 "vienna-7": 3e-5, "vienna-8": 3e-5}
    details = []
    for name, want in expected.items():
        bundle = bv.load_dataset(name)
        t0 = time.time()
        est = bv.estimate_gamma(bundle.counts, bundle.params,
                                bundle.gamma_scan_range, seed=SEED)
        elapsed = time.time() - t0
        assert elapsed <= 1800.0
        assert est.gamma_hat == pytest.approx(want, abs=tolerance[name])
        lhv = bv.lhv_mle(bundle.counts, bundle.params.with_gamma(est.gamma_hat),
                         starts=2, seed=SEED)
        margin = est.log10_l_at_hat - lhv.log10_likelihood
        assert margin >= 10.0
        details.append(f"{name}: {est.gamma_hat:.6f} (margin {margin:.0f} dec, "
                       f"{elapsed:.0f}s)")
    _report("2", "; ".join(details))


# ---------------------------------------------------------------------------
# 3. prior contents at ci scale

PAPER_CONTENTS = {
    "boulder": (B722, (0.0006, 0.5025, 0.4969)),
    "vienna": (PRESETS["vienna"].with_gamma(0.00296), (0.0018, 0.5018, 0.4964)),
    "delft": (PRESETS["delft"], (0.1512, 0.3627, 0.4860)),
    "munich": (PRESETS["munich"], (0.0769, 0.4267, 0.4964)),
}


def _content_sigmas(expected, n):
    s_qm, s_both, s_lhv = expected
    var_a = (2 * s_qm) * (1 - 2 * s_qm) / n      # subsample fraction scale
    var_b = (2 * s_lhv) * (1 - 2 * s_lhv) / n
    sig_qm = 0.5 * np.sqrt(var_a)
    sig_lhv = 0.5 * np.sqrt(var_b)
    sig_both = np.sqrt(sig_qm**2 + sig_lhv**2)
    return sig_qm, sig_both, sig_lhv


@pytest.mark.parametrize("experiment", list(PAPER_CONTENTS))
def test_criterion_3_prior_contents(experiment, prior_cache):
    params, expected = PAPER_CONTENTS[experiment]
    t0 = time.time()
    sample = prior_cache(params, CI_SAMPLE, seed=SEED)
    elapsed = time.time() - t0
    assert elapsed <= 3600.0
    got = sample.contents.as_array()
    sigmas = _content_sigmas(expected, CI_SAMPLE)
    for value, want, sigma in zip(got, expected, sigmas):
        assert abs(value - want) <= 4 * sigma
    _report(f"3[{experiment}]",
            f"S = ({got[0]:.4f}, {got[1]:.4f}, {got[2]:.4f}) vs {expected} "
            f"({elapsed:.0f}s)")


# ---------------------------------------------------------------------------
# 4. posterior verdicts

def test_criterion_4_boulder_posteriors(prior_cache):
    counts = bv.load_dataset("boulder-5").counts
    sample = prior_cache(B722, CI_SAMPLE, seed=SEED)
    report = posterior_contents(sample, counts, dataset="boulder-5")
    assert report.region("QM only").posterior == pytest.approx(1.0, abs=1e-9)
    assert report.region("both").log10_posterior < -100
    assert report.region("LHV only").log10_posterior < -100

    sample5 = prior_cache(B5E4, CI_SAMPLE, seed=SEED)
    report5 = posterior_contents(sample5, counts, dataset="boulder-5")
    assert report5.region("both").posterior == pytest.approx(1.0, abs=1e-9)
    assert report5.region("QM only").log10_posterior < -100
    assert report5.region("LHV only").log10_posterior < -100
    _report("4[boulder]",
            f"gamma=0.000722: C_QM-only=1 (others 10^{report.region('both').log10_posterior:.0f}, "
            f"10^{report.region('LHV only').log10_posterior:.0f}); "
            f"gamma=0.0005: C_both=1")


@pytest.mark.parametrize("name,gamma", [("vienna-6", 0.00296),
                                        ("vienna-7", 0.00287),
                                        ("vienna-8", 0.00264)])
def test_criterion_4_vienna_posteriors(name, gamma, prior_cache):
    bundle = bv.load_dataset(name)
    sample = prior_cache(bundle.params.with_gamma(gamma), CI_SAMPLE, seed=SEED)
    report = posterior_contents(sample, bundle.counts, dataset=name)
    assert report.region("QM only").posterior == pytest.approx(1.0, abs=1e-9)
    assert report.region("both").below_representable
    assert report.region("LHV only").below_representable
    _report(f"4[{name}]", "C_QM-only = 1, others below representable")


@pytest.mark.parametrize("name", ["munich-1", "munich-2"])
def test_criterion_4_munich_posteriors(name, prior_cache):
    bundle = bv.load_dataset(name)
    sample = prior_cache(PRESETS["munich"], CI_SAMPLE, seed=SEED)
    report = posterior_contents(sample, bundle.counts, dataset=name)
    assert report.region("QM only").posterior == pytest.approx(1.0, abs=1e-9)
    assert report.region("both").below_representable
    assert report.region("LHV only").below_representable
    _report(f"4[{name}]", "C_QM-only = 1, others below representable")


def test_criterion_4_delft_posteriors(prior_cache):
    # the tail contents are rare-point-dominated Monte Carlo sums; the
    # one-decade check needs a larger sample than the contents criterion
    bundle = bv.load_dataset("delft-1")
    sample = prior_cache(PRESETS["delft"], 600_000, seed=SEED)
    report = posterior_contents(sample, bundle.counts, dataset="delft-1")
    assert report.region("QM only").posterior >= 0.9999
    log_both = report.region("both").log10_posterior
    log_lhv = report.region("LHV only").log10_posterior
    assert abs(log_both - np.log10(1.2e-7)) <= 1.0
    assert abs(log_lhv - np.log10(4.5e-8)) <= 1.0
    _report("4[delft-1]",
            f"C_QM-only >= 0.9999, C_both = 10^{log_both:.2f} (paper -6.92), "
            f"C_LHV-only = 10^{log_lhv:.2f} (paper -7.35)")


# ---------------------------------------------------------------------------
# 5. sampling-error intervals

def test_criterion_5_sampling_error_intervals():
    t0 = time.time()
    qm = bv.content_intervals(1210, 998_790)
    lhv = bv.content_intervals(993_805, 6_195)
    assert qm.plausible[0] == pytest.approx(0.001066, abs=5e-7)
    assert qm.plausible[1] == pytest.approx(0.001367, abs=5e-7)
    assert lhv.plausible[0] == pytest.approx(0.993475, abs=5e-7)
    assert lhv.plausible[1] == pytest.approx(0.994124, abs=5e-7)
    # derived bounds on the content scale (one-sigma nested in plausible)
    for value, want in [
        (0.5 * qm.plausible[0], 0.000533), (0.5 * (qm.mle - np.sqrt(qm.variance)), 0.000588),
        (0.5 * (qm.mle + np.sqrt(qm.variance)), 0.000622), (0.5 * qm.plausible[1], 0.000683),
        (0.5 * lhv.plausible[0], 0.496738), (0.5 * (lhv.mle - np.sqrt(lhv.variance)), 0.496863),
        (0.5 * (lhv.mle + np.sqrt(lhv.variance)), 0.496942), (0.5 * lhv.plausible[1], 0.497062),
    ]:
        assert value == pytest.approx(want, abs=5e-7)
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _report("5", f"plausible intervals and content bounds to 6 decimals ({elapsed:.3f}s)")


# ---------------------------------------------------------------------------
# 6. Bhattacharyya comparisons

def test_criterion_6_boulder_angle_table():
    counts = bv.load_dataset("boulder-5").counts
    freq = counts.relative_frequencies()
    expected = {0.0005: (0.1164, 0.0462, 0.0056), 0.000722: (0.0106, 0.0014, 0.0047)}
    details = []
    for gamma, (want_t, want_qm, want_lhv) in expected.items():
        params = BOULDER.with_gamma(gamma)
        p_target = bv.probabilities_from_state(bv.target_state(params), params)
        p_qm = bv.qm_mle(counts, params, seed=SEED).probabilities
        p_lhv = bv.lhv_mle(counts, params, seed=SEED).probabilities
        a_t = bhattacharyya_angle(freq, p_target, gamma)
        a_qm = bhattacharyya_angle(freq, p_qm, gamma)
        a_lhv = bhattacharyya_angle(freq, p_lhv, gamma)
        assert a_t == pytest.approx(want_t, abs=0.001)
        assert a_qm == pytest.approx(want_qm, abs=0.001)
        assert a_lhv == pytest.approx(want_lhv, abs=0.0015)
        details.append(f"gamma={gamma:g}: ({a_t:.4f}, {a_qm:.4f}, {a_lhv:.4f})")
    _report("6[table]", "; ".join(details))


def test_criterion_6_triangles():
    sides = {}
    for name in ("delft-1", "delft-2", "delft-1+2", "munich-1", "munich-2"):
        bundle = bv.load_dataset(name)
        tri = bv.triangle_report(bundle.counts, bundle.analysis_params, seed=SEED)
        assert tri.satisfies_triangle_inequality
        sides[name] = tri
    # reference stretch quoted alongside the triangles
    boulder_tri = bv.triangle_report(bv.load_dataset("boulder-5").counts, B722,
                                     seed=SEED)
    assert boulder_tri.target_qm_mle == pytest.approx(0.011, abs=0.001)
    _report("6[triangles]",
            f"five triangle inequalities hold; boulder target<->QM-MLE "
            f"{boulder_tri.target_qm_mle:.4f}")


# ---------------------------------------------------------------------------
# 7. likelihood-ratio table

def test_criterion_7_likelihood_ratios():
    expected = {"delft-1": 7.2, "delft-2": 3.1, "delft-1+2": 12.0,
                "munich-1": 4.1e3, "munich-2": 6.5e15}
    details = []
    for name, want in expected.items():
        bundle = bv.load_dataset(name)
        params = bundle.analysis_params
        qm = bv.qm_mle(bundle.counts, params, seed=SEED)
        lhv = bv.lhv_mle(bundle.counts, params, seed=SEED)
        ratio = np.exp(qm.log_likelihood - lhv.log_likelihood)
        assert want / 1.5 <= ratio <= want * 1.5
        details.append(f"{name}: {ratio:.3g}")
    _report("7", "; ".join(details))


# ---------------------------------------------------------------------------
# 8. bias-check tallies

def _assert_rates(matrix, paper, mocks, paper_total):
    for r in range(3):
        for c in range(3):
            p = paper[r][c] / paper_total
            if p == 0.0:
                assert matrix[r, c] <= 1
            else:
                sigma = np.sqrt(p * (1 - p) / mocks)
                assert abs(matrix[r, c] / mocks - p) <= 3 * sigma


def test_criterion_8_boulder_bias(prior_cache):
    t0 = time.time()
    sample = prior_cache(B722, CI_SAMPLE, seed=SEED)
    tally = run_bias_check(B722, sample, CI_MOCKS,
                           bv.load_dataset("boulder-5").counts.total, seed=SEED)
    elapsed = time.time() - t0
    assert elapsed <= 7200.0
    assert tally.matrix[BOTH, QM_ONLY] == 0
    assert tally.matrix[LHV_ONLY, QM_ONLY] == 0
    paper = [(8809, 1278, 0), (0, 8365, 1635), (0, 145, 9855)]
    _assert_rates(tally.matrix, paper, CI_MOCKS, 10_000)
    _report("8[boulder]", f"tally rows {tally.matrix.tolist()} ({elapsed:.0f}s)")


def test_criterion_8_delft_bias(prior_cache):
    sample = prior_cache(PRESETS["delft"], CI_SAMPLE, seed=SEED)
    tally = run_bias_check(PRESETS["delft"], sample, CI_MOCKS, 245, seed=SEED)
    paper = [(971, 153, 0), (65, 810, 216), (8, 48, 958)]
    _assert_rates(tally.matrix, paper, CI_MOCKS, 1_000)
    _report("8[delft]", f"tally rows {tally.matrix.tolist()}")


# ---------------------------------------------------------------------------
# 9. property suites, standalone

def test_criterion_9_property_suites(rng):
    t0 = time.time()

    # no-signaling round trip
    from tests_util import random_reduced
    reduced = random_reduced(rng, 10_000)
    from belleval.probability import table_from_reduced
    assert np.abs(reduced_from_table(table_from_reduced(reduced)) - reduced).max() < 1e-12

    # classifier cross-consistency on points from both samplers
    n_cls = 10_000
    sample = build_prior(B722, n_cls // 2, seed=77)
    qm_half = sample.origin == 0
    from belleval.lhv import bell_violation as bviol
    for i in np.nonzero(sample.region == LHV_ONLY)[0][:2000]:
        assert bviol(sample.tables[i].reshape(4, 4)) <= 1e-12
    violating = [i for i in range(len(sample))
                 if bviol(sample.tables[i].reshape(4, 4)) > 1e-12]
    for i in violating:
        assert not bv.lhv_membership(sample.tables[i].reshape(4, 4), B722,
                                     use_precheck=False)
    # every LHV-sampled point is an LHV member by construction
    lhv_idx = np.nonzero(~qm_half)[0][:1500]
    for i in lhv_idx:
        assert bv.lhv_membership(sample.tables[i].reshape(4, 4), B722)

    # qm membership equals the brute-force grid over the free coordinate
    geo = _MembershipGeometry(B722)
    ts = np.linspace(-1.0, 1.0, 200_001)
    m4 = SIGMA_YY / 4.0
    for i in (0, len(sample) // 2 + 1, len(sample) - 1):
        rho0 = _recover_state_family(sample.reduced[i], geo)
        grid = max(np.linalg.eigvalsh(rho0 + t * m4)[0] for t in ts)
        assert bv.qm_membership(sample.tables[i].reshape(4, 4), B722
                                ).slack == pytest.approx(grid, abs=1e-8)

    # gradient finite differences (quantum factor and hidden weights)
    from belleval.mle import _qm_objective
    counts = bv.load_dataset("delft-1").counts
    negll_grad = _qm_objective(BornMap(PRESETS["delft"]), counts)
    h = 1e-6
    for _ in range(30):
        x = rng.standard_normal(16)
        _, g = negll_grad(x)
        k = int(rng.integers(0, 16))
        e = np.zeros(16)
        e[k] = h
        fd = (negll_grad(x + e)[0] - negll_grad(x - e)[0]) / (2 * h)
        assert fd == pytest.approx(g[k], rel=1e-5, abs=1e-6)
    nf = counts.flat.astype(float)
    for _ in range(30):
        w = rng.dirichlet(np.ones(16)) * 0.9 + 0.1 / 16
        grad = MARGINAL_MATRIX.T @ (nf / (MARGINAL_MATRIX @ w))
        k = int(rng.integers(0, 16))
        e = np.zeros(16)
        e[k] = 1e-7
        fd = (nf @ np.log(MARGINAL_MATRIX @ (w + e))
              - nf @ np.log(MARGINAL_MATRIX @ (w - e))) / 2e-7
        assert fd == pytest.approx(grad[k], rel=1e-6)

    # metric axioms for the angle
    from tests_util import random_tables
    tabs = random_tables(rng, 12).reshape(-1, 4, 4)
    for k in range(0, 9, 3):
        a, b, c = tabs[k], tabs[k + 1], tabs[k + 2]
        assert bhattacharyya_angle(a, b, 1.0) == pytest.approx(
            bhattacharyya_angle(b, a, 1.0), abs=1e-12)
        assert (bhattacharyya_angle(a, b, 1.0)
                <= bhattacharyya_angle(a, c, 1.0)
                + bhattacharyya_angle(c, b, 1.0) + 1e-12)

    # posterior equals prior on empty data
    empty = bv.EventCounts(np.zeros((4, 4), dtype=int))
    report = posterior_contents(sample, empty)
    prior = sample.contents.as_dict()
    for region in report.regions:
        assert region.posterior == prior[region.region]

    elapsed = time.time() - t0
    assert elapsed <= 600.0
    _report("9", f"all property suites green in {elapsed:.0f}s")
