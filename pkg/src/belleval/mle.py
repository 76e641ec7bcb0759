"""Constrained maximum-likelihood estimation over the quantum, LHV, and
no-signaling sets, and the trigger-probability self-calibration scan.

The multinomial log-likelihood is concave in the cell probabilities, and all
three feasible sets enter through affine parameterizations, so each problem
is a concave maximization.  The quantum set is parameterized without
projection as rho = A^T A / tr(A^T A) over real 4x4 factors; the LHV set by
hidden weights on the 15-simplex; the no-signaling set by the eight reduced
parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .bhattacharyya import bhattacharyya_angle
from .errors import ConvergenceFailure, RangeMaximumAtBoundary
from .likelihood import LN10, combinatorial_constant
from .lhv import (HiddenWeights, MARGINAL_MATRIX, bell_violation,
                  check_bounds_batch, probabilities_from_weights)
from .params import ExperimentParams
from .probability import (EventCounts, ProbabilityVector, ReducedProbabilities,
                          reconstruct_full, table_from_reduced)
from .quantum import BornMap, DensityMatrix, probabilities_from_state, target_state

REL_GAIN_TOL = 1e-12
GAIN_WINDOW = 50
GRAD_TOL = 1e-8
START_AGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class MleResult:
    """A constrained maximum-likelihood estimate with its witness."""

    probabilities: ProbabilityVector
    witness: DensityMatrix | HiddenWeights | ReducedProbabilities
    log_likelihood: float        # natural log, combinatorial factor included
    iterations: int
    grad_norm: float
    converged: bool

    @property
    def log10_likelihood(self) -> float:
        return self.log_likelihood / LN10


def _check_start_agreement(values: list[float], label: str) -> None:
    finite = sorted((v for v in values if np.isfinite(v)), reverse=True)
    if not finite:
        raise ConvergenceFailure(f"{label}: every start failed")
    if len(finite) > 1 and finite[0] - finite[1] > START_AGREEMENT_TOL:
        raise ConvergenceFailure(
            f"{label}: best two starts disagree by {finite[0] - finite[1]:.2e} "
            f"(> {START_AGREEMENT_TOL})")


# ---------------------------------------------------------------------------
# quantum MLE

def _qm_objective(born: BornMap, counts: EventCounts):
    n = counts.flat.astype(float)
    const = combinatorial_constant(counts)
    emat = born.effects_flat
    cflat = born.constants_flat
    eye = np.eye(4)

    def negll_grad(x: np.ndarray):
        A = x.reshape(4, 4)
        tau = float((A * A).sum())
        rho = A.T @ A / tau
        p = emat @ rho.reshape(16) + cflat
        if (p <= 0.0).any():
            return np.inf, np.zeros(16)
        ll = float(n @ np.log(p) + const)
        G = (emat.T @ (n / p)).reshape(4, 4)
        gA = 2.0 * A @ (G - np.trace(G @ rho) * eye) / tau
        return -ll, -gA.reshape(16)

    return negll_grad


def _qm_solve_one(born: BornMap, counts: EventCounts, x0: np.ndarray):
    negll_grad = _qm_objective(born, counts)
    res = minimize(negll_grad, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": 100_000, "maxfun": 200_000,
                            "ftol": 1e-18, "gtol": 1e-12, "maxcor": 30})
    A = res.x.reshape(4, 4)
    rho = A.T @ A / (A * A).sum()
    grad_norm = float(np.linalg.norm(res.jac))
    return -float(res.fun), rho, res.nit, grad_norm


def qm_mle(counts: EventCounts, params: ExperimentParams, starts: int = 5,
           seed: int = 0, warm_start: np.ndarray | None = None) -> MleResult:
    """Maximum likelihood over the quantum set.

    Ascent runs in the square-factor parameterization rho = A^T A/tr(A^T A),
    which keeps iterates feasible without projection; L-BFGS handles the
    stiff curvature (cell probabilities span several orders of magnitude).
    Multistart with agreement check guards the factorization's nonconvexity.
    """
    born = BornMap(params)
    rng = np.random.default_rng(seed)
    inits = [rng.standard_normal(16) for _ in range(starts)]
    if warm_start is not None:
        inits.insert(0, np.asarray(warm_start, float).reshape(16))
    if not inits:
        raise ValueError("qm_mle needs at least one start or a warm start")
    outcomes = [_qm_solve_one(born, counts, x0) for x0 in inits]
    _check_start_agreement([o[0] for o in outcomes], "qm_mle")
    ll, rho, nit, gnorm = max(outcomes, key=lambda o: o[0])
    rho = 0.5 * (rho + rho.T)
    return MleResult(probabilities=probabilities_from_state(rho, params),
                     witness=DensityMatrix(rho), log_likelihood=ll,
                     iterations=nit, grad_norm=gnorm,
                     converged=bool(np.isfinite(ll)))


# ---------------------------------------------------------------------------
# LHV MLE

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorting method)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1.0))[0][-1]
    theta = (css[idx] - 1.0) / (idx + 1.0)
    return np.maximum(v - theta, 0.0)


def _bound_rows(params: ExperimentParams) -> tuple[np.ndarray, np.ndarray]:
    """Apparatus bounds as rows B w <= d on the hidden weights."""
    g, ea, eb = params.gamma, params.eta_a, params.eta_b
    M = MARGINAL_MATRIX
    rows, rhs = [], []
    for s in range(4):
        rows.append(M[4 * s + 0])          # coincidence bound
        rhs.append(g * ea * eb)
        rows.append(-M[4 * s + 3])         # null lower bound
        rhs.append(-(1.0 - g))
    singles = [M[0] + M[1], M[8] + M[9], M[0] + M[2], M[4] + M[6]]
    for k, row in enumerate(singles):
        rows.append(row)
        rhs.append(g * ea if k < 2 else g * eb)
    return np.array(rows), np.array(rhs)


def _project_feasible(v: np.ndarray, brows: np.ndarray, brhs: np.ndarray,
                      max_iter: int = 2000) -> np.ndarray:
    """Dykstra's alternating projection onto simplex and bound halfspaces.

    The simplex projection alone almost always lands inside the bounds (they
    are slack at every real dataset's optimum); the halfspace corrections
    only engage when an apparatus bound goes active.  Each cycle ends with
    the simplex projection, so the returned point always sits exactly on the
    simplex; residual halfspace violation shrinks with the iteration count
    and is re-checked by the caller's feasibility test.
    """
    w = _project_simplex(v)
    viol = brows @ w - brhs
    if (viol <= 1e-12).all():
        return w
    m = len(brhs)
    corr = np.zeros((m + 1, 16))
    w = v.copy()
    norms2 = np.einsum("ij,ij->i", brows, brows)
    for _ in range(max_iter):
        prev = w.copy()
        for k in range(m):
            y = w + corr[k]
            excess = brows[k] @ y - brhs[k]
            w = y - (excess / norms2[k]) * brows[k] if excess > 0 else y
            corr[k] = y - w
        y = w + corr[m]
        w = _project_simplex(y)
        corr[m] = y - w
        if np.abs(w - prev).max() < 1e-15 and (brows @ w - brhs <= 1e-12).all():
            break
    return w


def _feasible_start(params: ExperimentParams, rng: np.random.Generator | None,
                    brows: np.ndarray, brhs: np.ndarray) -> np.ndarray:
    """A strictly feasible hidden-weight start: the no-pair mass pinned on
    the all-null corner plus a random (or uniform) spread of the rest."""
    g = params.gamma
    for _ in range(64):
        spread = (np.full(16, 1.0 / 16.0) if rng is None
                  else rng.dirichlet(np.ones(16)))
        w = g * spread
        w[15] += 1.0 - g
        if (brows @ w - brhs <= 0.0).all():
            return w
        rng = rng or np.random.default_rng(0)
    # extreme efficiencies: shrink toward the pinned corner until feasible
    w = g * np.full(16, 1.0 / 16.0)
    w[15] += 1.0 - g
    corner = np.zeros(16)
    corner[15] = 1.0
    for t in np.linspace(0.9, 0.0, 10):
        cand = t * w + (1 - t) * corner
        if (brows @ cand - brhs <= 0.0).all():
            return cand
    return corner


def _lhv_newton_polish(w: np.ndarray, n: np.ndarray, const: float,
                       brows: np.ndarray, brhs: np.ndarray,
                       max_rounds: int = 25) -> tuple[float, np.ndarray]:
    """Active-set Newton polish on the hidden-weight simplex.

    Projected gradient stalls at ~1e-5 accuracy on this stiff likelihood.
    On a fixed support the problem is smooth and concave, but the marginal
    map has rank 9, so the face Hessian is singular whenever the support
    exceeds nine coordinates; the KKT system is therefore solved in the
    least-norm sense (the optimal marginals are unique even though the
    weights are not).  Between Newton phases a zero coordinate is opened
    exactly when its gradient exceeds the equality multiplier, which at any
    feasible point equals the total count N.
    """
    def ll_of(w_full):
        p = MARGINAL_MATRIX @ w_full
        if ((p <= 0.0).any() or abs(w_full.sum() - 1.0) > 1e-9
                or (w_full < -1e-15).any()
                or (brows @ w_full - brhs > 1e-12).any()):
            return -np.inf, None
        return float(n @ np.log(p) + const), p

    ll, p = ll_of(w)
    if not np.isfinite(ll):
        return ll, w
    total = n.sum()
    for _ in range(max_rounds):
        support = w > 1e-14
        k = int(support.sum())
        if k < 2:
            break
        Ms = MARGINAL_MATRIX[:, support]
        ones = np.ones(k)
        for _ in range(60):
            g = Ms.T @ (n / p)
            H = -Ms.T @ ((n / p**2)[:, None] * Ms)
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = H
            kkt[:k, k] = ones
            kkt[k, :k] = ones
            rhs = np.concatenate([-g, [0.0]])
            dw = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
            step = 1.0
            moved = False
            for _ in range(60):
                w_try = w.copy()
                w_try[support] = w[support] + step * dw
                if (w_try[support] >= 0.0).all():
                    ll_try, p_try = ll_of(w_try)
                    if ll_try >= ll:
                        moved = ll_try > ll
                        w, ll, p = w_try, ll_try, p_try
                        break
                step *= 0.5
            if not moved or np.abs(dw).max() * step < 1e-16:
                break
        # open the most promising zero coordinate, if any helps
        grad_full = MARGINAL_MATRIX.T @ (n / p)
        closed = ~(w > 1e-14)
        if not closed.any():
            break
        gain = grad_full[closed] - total
        if gain.max() <= 1e-9 * max(total, 1.0):
            break
        j = np.nonzero(closed)[0][int(np.argmax(gain))]
        delta = 1e-9
        w_open = (w + delta * np.eye(16)[j]) / (1.0 + delta)
        ll_open, p_open = ll_of(w_open)
        if not np.isfinite(ll_open):
            break
        w, ll, p = w_open, ll_open, p_open
    return ll, w


def _lhv_solve_one(counts: EventCounts, params: ExperimentParams,
                   w0: np.ndarray, max_iter: int = 200_000):
    n = counts.flat.astype(float)
    const = combinatorial_constant(counts)
    brows, brhs = _bound_rows(params)

    def ll_of(w):
        p = MARGINAL_MATRIX @ w
        if ((p <= 0.0).any() or abs(w.sum() - 1.0) > 1e-9
                or (brows @ w - brhs > 1e-10).any()):
            return -np.inf, None
        return float(n @ np.log(p) + const), p

    w = _project_feasible(w0, brows, brhs)
    ll, p = ll_of(w)
    if not np.isfinite(ll):
        w = _feasible_start(params, None, brows, brhs)
        ll, p = ll_of(w)
        if not np.isfinite(ll):
            return -np.inf, w, 0, np.inf
    step = 1e-9
    history = [ll]
    grad = MARGINAL_MATRIX.T @ (n / p)
    it = 0
    for it in range(max_iter):
        while True:
            w_new = _project_feasible(w + step * grad, brows, brhs)
            ll_new, p_new = ll_of(w_new)
            if ll_new >= ll - 1e-13:
                break
            step *= 0.5
            if step < 1e-24:
                break
        if step < 1e-24:
            break
        if ll_new > ll:
            w, ll, p = w_new, ll_new, p_new
            grad = MARGINAL_MATRIX.T @ (n / p)
        step *= 1.6
        history.append(ll)
        if (len(history) > GAIN_WINDOW
                and history[-1] - history[-GAIN_WINDOW]
                < REL_GAIN_TOL * max(1.0, abs(ll))):
            break
    ll, w = _lhv_newton_polish(w, n, const, brows, brhs)
    grad = MARGINAL_MATRIX.T @ (n / (MARGINAL_MATRIX @ w))
    proj_grad = _project_feasible(w + 1e-6 * grad, brows, brhs) - w
    return ll, w, it, float(np.linalg.norm(proj_grad) / 1e-6)


def lhv_mle(counts: EventCounts, params: ExperimentParams, starts: int = 5,
            seed: int = 0) -> MleResult:
    """Maximum likelihood over the LHV set: projected gradient ascent with
    Armijo backtracking over hidden weights, exact simplex projection, and
    Dykstra corrections when an apparatus bound activates; an active-set
    Newton polish finishes each start."""
    rng = np.random.default_rng(seed)
    brows, brhs = _bound_rows(params)
    inits = [_feasible_start(params, None, brows, brhs)]
    inits += [_feasible_start(params, rng, brows, brhs) for _ in range(starts - 1)]
    outcomes = [_lhv_solve_one(counts, params, w0) for w0 in inits]
    _check_start_agreement([o[0] for o in outcomes], "lhv_mle")
    ll, w, nit, gnorm = max(outcomes, key=lambda o: o[0])
    weights = HiddenWeights(w / w.sum())
    return MleResult(probabilities=probabilities_from_weights(weights),
                     witness=weights, log_likelihood=ll, iterations=nit,
                     grad_norm=gnorm, converged=True)


# ---------------------------------------------------------------------------
# no-signaling ceiling

def _reduced_jacobian() -> np.ndarray:
    """Constant Jacobian of the flattened table w.r.t. the reduced parameters."""
    J = np.zeros((16, 8))
    for i in range(2):          # Alice setting
        for j in range(2):      # Bob setting
            s = 2 * i + j
            J[4 * s + 0, i] = 1.0
            J[4 * s + 0, 2 + j] = 1.0
            J[4 * s + 0, 4 + s] = 1.0
            J[4 * s + 1, 2 + j] = -1.0
            J[4 * s + 1, 4 + s] = -1.0
            J[4 * s + 2, i] = -1.0
            J[4 * s + 2, 4 + s] = -1.0
            J[4 * s + 3, 4 + s] = 1.0
    return J


_NS_JACOBIAN = _reduced_jacobian()


def _ns_gradient(n: np.ndarray, p: np.ndarray) -> np.ndarray:
    return _NS_JACOBIAN.T @ (n / p).reshape(16)


def nosignaling_mle(counts: EventCounts, params: ExperimentParams,
                    max_iter: int = 200_000) -> MleResult:
    """Maximum likelihood over everything no-signaling allows (the absolute
    ceiling for both constrained estimates), via safeguarded gradient ascent
    on the eight reduced parameters.  Steps that leave the feasible region
    (any completed probability nonpositive, or an apparatus bound broken)
    are rejected by the backtracking line search."""
    nf = counts.table.astype(float)
    const = combinatorial_constant(counts)

    def ll_of(r):
        p = table_from_reduced(r)
        if (p <= 0.0).any() or (p >= 1.0).any():
            return -np.inf, None
        if not check_bounds_batch(p.reshape(1, 16), params)[0]:
            return -np.inf, None
        return float((nf * np.log(p)).sum() + const), p

    freq = counts.relative_frequencies()
    r = np.array([
        0.5 * (freq[0, 0] + freq[0, 1] + freq[1, 0] + freq[1, 1]),
        0.5 * (freq[2, 0] + freq[2, 1] + freq[3, 0] + freq[3, 1]),
        0.5 * (freq[0, 0] + freq[0, 2] + freq[2, 0] + freq[2, 2]),
        0.5 * (freq[1, 0] + freq[1, 2] + freq[3, 0] + freq[3, 2]),
        freq[0, 3], freq[1, 3], freq[2, 3], freq[3, 3]])
    ll, p = ll_of(r)
    if not np.isfinite(ll):
        raise ConvergenceFailure("nosignaling_mle: frequency-based start infeasible")
    it = 0
    nflat = nf.reshape(16)
    for it in range(max_iter):
        # Newton on the 8 free parameters; all counts positive keeps the
        # optimum interior, so the constraints only act through backtracking.
        pflat = p.reshape(16)
        g = _NS_JACOBIAN.T @ (nflat / pflat)
        H = -_NS_JACOBIAN.T @ ((nflat / pflat**2)[:, None] * _NS_JACOBIAN)
        try:
            dr = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        moved = False
        for _ in range(80):
            ll_new, p_new = ll_of(r + step * dr)
            if ll_new >= ll:
                moved = ll_new > ll or step * np.abs(dr).max() < 1e-15
                r, ll, p = r + step * dr, ll_new, p_new
                break
            step *= 0.5
        if not moved or np.abs(dr).max() * step < 1e-15:
            break
    reduced = ReducedProbabilities(r)
    return MleResult(probabilities=reconstruct_full(reduced), witness=reduced,
                     log_likelihood=ll, iterations=it,
                     grad_norm=float(np.linalg.norm(_ns_gradient(nf, p))),
                     converged=True)


# ---------------------------------------------------------------------------
# gamma self-calibration

@dataclass(frozen=True)
class GammaScanPoint:
    gamma: float
    log10_l_qm: float
    log10_l_lhv: float
    eberhard_violated: bool
    phi_b_target_qm_mle: float

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "log10_L_qm": self.log10_l_qm,
                "log10_L_lhv": self.log10_l_lhv,
                "eberhard_violated": self.eberhard_violated,
                "phi_b": self.phi_b_target_qm_mle}


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    log10_l_at_hat: float
    scan: tuple[GammaScanPoint, ...]

    def as_dict(self) -> dict:
        return {"gamma_hat": self.gamma_hat,
                "log10_L_at_hat": self.log10_l_at_hat,
                "scan": [pt.as_dict() for pt in self.scan]}


def _scan_point(counts, params, gamma, target_psi, warm, seed) -> tuple:
    # one init per grid point: the warm chain tracks the slowly moving
    # optimum, and refinement re-checks against cold starts
    pg = params.with_gamma(gamma)
    res = qm_mle(counts, pg, starts=0 if warm is not None else 1,
                 seed=seed, warm_start=warm)
    lhv = lhv_mle(counts, pg, starts=2, seed=seed)
    rho_t = np.outer(target_psi, target_psi)
    p_t = probabilities_from_state(rho_t, pg)
    phi = bhattacharyya_angle(p_t, res.probabilities, gamma)
    point = GammaScanPoint(
        gamma=float(gamma), log10_l_qm=res.log10_likelihood,
        log10_l_lhv=lhv.log10_likelihood,
        eberhard_violated=bool(bell_violation(res.probabilities) > 0.0),
        phi_b_target_qm_mle=float(phi))
    wit = res.witness.matrix
    vals, vecs = np.linalg.eigh(wit)
    warm_factor = (vecs * np.sqrt(np.clip(vals, 1e-12, None))).T
    return point, res, warm_factor


def estimate_gamma(counts: EventCounts, params: ExperimentParams,
                   gamma_range: tuple[float, float], grid: int = 41,
                   seed: int = 0, refine_tol: float = 1e-6) -> GammaEstimate:
    """Self-calibrating scan: maximize the quantum likelihood over the state
    and the trigger probability.

    A coarse grid of quantum MLEs (each warm-started from its neighbour, the
    state changes slowly along the scan) brackets the maximum; golden-section
    refinement then localizes it to ``refine_tol``.  Refinement solves are
    warm-started from the coarse argmax's state and additionally run one cold
    start, because a factor carried over from a distant gamma can strand the
    ascent at a spurious stationary point.  The LHV maximum is recomputed for
    every scan row; it does not depend on gamma while the apparatus bounds
    stay slack, and the rows let callers verify that.
    """
    lo, hi = gamma_range
    if not (0.0 < lo < hi < 1.0):
        raise ValueError(f"need 0 < lo < hi < 1, got {gamma_range}")
    vals, vecs = np.linalg.eigh(target_state(params).matrix)
    psi = vecs[:, -1]

    gammas = np.linspace(lo, hi, grid)
    points: list[GammaScanPoint] = []
    warm = None
    lls = np.empty(grid)
    warm_at: dict[float, np.ndarray] = {}
    for i, gm in enumerate(gammas):
        point, res, warm = _scan_point(counts, params, gm, psi, warm, seed)
        points.append(point)
        lls[i] = res.log_likelihood
        warm_at[float(gm)] = warm
    k = int(np.argmax(lls))
    if k in (0, grid - 1):
        raise RangeMaximumAtBoundary(
            f"gamma scan maximum at range edge {gammas[k]:.6g}; widen the range")

    warm_best = warm_at[float(gammas[k])]
    cache: dict[float, float] = {float(gammas[i]): lls[i] for i in range(grid)}

    def value(gm: float) -> float:
        gm = float(gm)
        if gm not in cache:
            pg = params.with_gamma(gm)
            res_warm = qm_mle(counts, pg, starts=0, seed=seed, warm_start=warm_best)
            res_cold = qm_mle(counts, pg, starts=1, seed=seed + 1)
            cache[gm] = max(res_warm.log_likelihood, res_cold.log_likelihood)
        return cache[gm]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(gammas[k - 1]), float(gammas[k + 1])
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = value(c), value(d)
    while b - a > refine_tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = value(d)
    gamma_hat = 0.5 * (a + b)
    return GammaEstimate(gamma_hat=float(gamma_hat),
                         log10_l_at_hat=value(gamma_hat) / LN10,
                         scan=tuple(points))


# ---------------------------------------------------------------------------
# probability-space triangles

@dataclass(frozen=True)
class TriangleReport:
    """Pairwise Bhattacharyya angles between the observed relative
    frequencies, the target-state probabilities, and the quantum MLE."""

    freq_target: float
    freq_qm_mle: float
    target_qm_mle: float

    @property
    def satisfies_triangle_inequality(self) -> bool:
        a, b, c = sorted((self.freq_target, self.freq_qm_mle, self.target_qm_mle))
        return a + b >= c - 1e-12

    def as_dict(self) -> dict:
        return {"freq_target": self.freq_target, "freq_qm_mle": self.freq_qm_mle,
                "target_qm_mle": self.target_qm_mle}


def triangle_report(counts: EventCounts, params: ExperimentParams,
                    gamma: float | None = None, seed: int = 0) -> TriangleReport:
    """Triangle of angles for one dataset at one trigger probability."""
    pg = params if gamma is None else params.with_gamma(gamma)
    g = pg.gamma
    freq = counts.relative_frequencies()
    p_target = probabilities_from_state(target_state(pg), pg)
    p_mle = qm_mle(counts, pg, seed=seed).probabilities
    return TriangleReport(
        freq_target=bhattacharyya_angle(freq, p_target, g),
        freq_qm_mle=bhattacharyya_angle(freq, p_mle, g),
        target_qm_mle=bhattacharyya_angle(p_target, p_mle, g))
