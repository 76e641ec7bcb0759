"""Local-hidden-variable model: joint hidden weights, their marginal map,
apparatus bounds, LP membership in the local polytope, and the LHV sampler.

A hidden-weight assignment w gives a probability to each of the sixteen
counterfactual outcome combinations (Alice's result under a AND under a',
Bob's under b AND under b').  Index order: w is a 16-vector with flat index
8*ia + 4*iap + 2*ib + ibp, where each digit is 0 for a click (+) and 1 for
no click (0).  Every observable cell probability is a plain marginal: the sum
of the four w entries consistent with that setting's pair of outcomes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import SolverFailure
from .params import ExperimentParams
from .probability import (ProbabilityVector, reduced_from_table,
                          singles_from_table)
from .quantum import qm_membership

BOUNDS_TOL = 1e-12
LP_TOL = 1e-10
BELL_PRECHECK_TOL = 1e-12


def _build_marginal_matrix() -> np.ndarray:
    """M with p_flat = M @ w: row 4*s + o selects the w's marginal to cell (s, o)."""
    M = np.zeros((16, 16))
    for k in range(16):
        ia, iap, ib, ibp = (k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1
        alice = (ia, iap)
        bob = (ib, ibp)
        for i in range(2):
            for j in range(2):
                s = 2 * i + j
                o = 2 * alice[i] + bob[j]
                M[4 * s + o, k] = 1.0
    return M


MARGINAL_MATRIX = _build_marginal_matrix()
MARGINAL_MATRIX.setflags(write=False)


def weight_index(pattern: str) -> int:
    """Flat index of w(pattern) for a pattern like '+0+0' (order: a, a', b, b')."""
    if len(pattern) != 4 or any(ch not in "+0" for ch in pattern):
        raise ValueError(f"pattern must be four characters of '+'/'0', got {pattern!r}")
    digits = [0 if ch == "+" else 1 for ch in pattern]
    return (digits[0] << 3) | (digits[1] << 2) | (digits[2] << 1) | digits[3]


@dataclass(frozen=True)
class HiddenWeights:
    """Sixteen joint hidden probabilities on the 15-simplex."""

    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float)
        if w.shape != (16,):
            raise ValueError(f"expected 16 weights, got shape {w.shape}")
        if (w < -BOUNDS_TOL).any():
            raise ValueError(f"negative hidden weight: {w.min()}")
        if abs(w.sum() - 1.0) > BOUNDS_TOL:
            raise ValueError(f"weights sum to {w.sum()}, not 1")
        w = np.ascontiguousarray(np.clip(w, 0.0, None))
        w.setflags(write=False)
        object.__setattr__(self, "values", w)

    def __getitem__(self, pattern: str) -> float:
        return float(self.values[weight_index(pattern)])


def probabilities_from_weights(w: HiddenWeights | np.ndarray) -> ProbabilityVector:
    """Observable probabilities as marginals of the hidden weights."""
    vals = w.values if isinstance(w, HiddenWeights) else np.asarray(w, float)
    return ProbabilityVector((MARGINAL_MATRIX @ vals).reshape(4, 4))


# ---------------------------------------------------------------------------
# apparatus bounds

def check_bounds(p: ProbabilityVector | np.ndarray, params: ExperimentParams,
                 tol: float = BOUNDS_TOL) -> bool:
    """Apparatus bounds every permissible p obeys: coincidences at most
    gamma*etaA*etaB, nulls at least 1-gamma, singles at most gamma*eta."""
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, float)
    return bool(check_bounds_batch(tbl.reshape(1, 16), params, tol)[0])


def check_bounds_batch(tables: np.ndarray, params: ExperimentParams,
                       tol: float = BOUNDS_TOL) -> np.ndarray:
    """Vectorized bounds check on (m, 16) flattened tables."""
    p = tables.reshape(-1, 4, 4)
    g, ea, eb = params.gamma, params.eta_a, params.eta_b
    ok = (p[:, :, 0] <= g * ea * eb + tol).all(axis=1)
    ok &= (p[:, :, 3] >= 1.0 - g - tol).all(axis=1)
    singles = singles_from_table(p)
    ok &= (singles[:, 0] <= g * ea + tol) & (singles[:, 1] <= g * ea + tol)
    ok &= (singles[:, 2] <= g * eb + tol) & (singles[:, 3] <= g * eb + tol)
    return ok


def bell_violation(p: ProbabilityVector | np.ndarray) -> float:
    """p_++(ab) - p_+0(ab') - p_0+(a'b) - p_++(a'b').

    A positive value certifies that no hidden-weight assignment reproduces p.
    """
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, float)
    return float(tbl[0, 0] - tbl[1, 1] - tbl[2, 2] - tbl[3, 0])


# ---------------------------------------------------------------------------
# LP membership

class _MembershipLP:
    """Feasibility LP: does any w on the 15-simplex have the given marginals?

    The eight marginal equalities plus normalization are solved in rescaled
    form: singles rows and click-mass rows (1 - p00) are divided by gamma so
    all coefficients are O(1) even when gamma ~ 1e-4, keeping HiGHS's
    feasibility tolerances meaningful.
    """

    def __init__(self, params: ExperimentParams):
        self.gamma = params.gamma
        A = np.zeros((9, 16))
        A[0] = 1.0
        for k in range(16):
            ia, iap, ib, ibp = (k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1
            if ia == 0:
                A[1, k] = 1.0
            if iap == 0:
                A[2, k] = 1.0
            if ib == 0:
                A[3, k] = 1.0
            if ibp == 0:
                A[4, k] = 1.0
            if not (ia == 1 and ib == 1):
                A[5, k] = 1.0
            if not (ia == 1 and ibp == 1):
                A[6, k] = 1.0
            if not (iap == 1 and ib == 1):
                A[7, k] = 1.0
            if not (iap == 1 and ibp == 1):
                A[8, k] = 1.0
        A[1:] /= self.gamma
        self.A_eq = A
        self.bounds = [(0.0, None)] * 16
        self.options = {
            "presolve": True,
            "primal_feasibility_tolerance": LP_TOL,
            "dual_feasibility_tolerance": LP_TOL,
        }

    def feasible(self, reduced8: np.ndarray) -> bool:
        b = np.empty(9)
        b[0] = 1.0
        b[1:5] = reduced8[:4] / self.gamma
        b[5:9] = (1.0 - reduced8[4:]) / self.gamma
        res = linprog(np.zeros(16), A_eq=self.A_eq, b_eq=b, bounds=self.bounds,
                      method="highs", options=self.options)
        if res.status == 0:
            return True
        if res.status == 2:
            return False
        raise SolverFailure(f"membership LP ended with status {res.status}: {res.message}")


def lhv_membership(p: ProbabilityVector | np.ndarray, params: ExperimentParams,
                   use_precheck: bool = True) -> bool:
    """Exact membership in the LHV-permissible set.

    The Bell-violation functional is a valid facet of the local polytope, so a
    strictly positive value settles non-membership without touching the LP;
    otherwise LP feasibility over the hidden-weight simplex decides.  Points
    on the boundary count as members.
    """
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, float)
    if not check_bounds_batch(tbl.reshape(1, 16), params)[0]:
        return False
    if use_precheck and bell_violation(tbl) > BELL_PRECHECK_TOL:
        return False
    return _MembershipLP(params).feasible(reduced_from_table(tbl))


# ---------------------------------------------------------------------------
# LHV prior sampler pieces

def sample_hidden_weights(gamma: float, count: int,
                          rng: np.random.Generator) -> np.ndarray:
    """(count, 16) raw hidden-weight draws with the null-corner mass pinned.

    Sixteen Gamma(1/8, 1) variates are normalized to the simplex and scaled
    by gamma, with the remaining 1-gamma placed on w(0000); this builds the
    null-probability bound directly into the parameterization, so rejection
    later only ever fires on the remaining apparatus bounds.  The 1/8 shape
    makes each setting's marginal distribution on its 3-simplex match the
    quantum sampler's.
    """
    y = rng.gamma(1.0 / 8.0, 1.0, size=(count, 16))
    w = gamma * y / y.sum(axis=1, keepdims=True)
    w[:, 15] += 1.0 - gamma
    return w


def mix_weights(draws: np.ndarray, epsilon: float) -> np.ndarray:
    """Convex mixture (1-3e) w1 + e (w2 + w3 + w4) over axis 1 of (m, 4, 16)."""
    mix = np.array([1.0 - 3.0 * epsilon, epsilon, epsilon, epsilon])
    return np.einsum("k,mkj->mj", mix, draws)


@dataclass
class RejectionStats:
    """Instrumentation for the sampler's accept/reject step."""

    proposed: int = 0
    accepted: int = 0
    rejected_null: int = 0       # null bound (never fires: pinned by construction)
    rejected_other: int = 0      # coincidence/singles bounds

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")


def lhv_sample_tables(params: ExperimentParams, count: int, epsilon: float,
                      rng: np.random.Generator,
                      stats: RejectionStats | None = None) -> np.ndarray:
    """(count, 16) probability tables accepted by the apparatus bounds."""
    out: list[np.ndarray] = []
    have = 0
    batch = max(2048, min(count, 1 << 16))
    g = params.gamma
    while have < count:
        draws = sample_hidden_weights(g, 4 * batch, rng).reshape(batch, 4, 16)
        w = mix_weights(draws, epsilon)
        tables = w @ MARGINAL_MATRIX.T
        ok = check_bounds_batch(tables, params)
        if stats is not None:
            stats.proposed += batch
            stats.accepted += int(ok.sum())
            nulls_ok = (tables.reshape(-1, 4, 4)[:, :, 3] >= 1.0 - g - BOUNDS_TOL).all(axis=1)
            stats.rejected_null += int((~nulls_ok).sum())
            stats.rejected_other += int((~ok & nulls_ok).sum())
        out.append(tables[ok])
        have += int(ok.sum())
    return np.concatenate(out)[:count]
