"""Two-qubit quantum model: real density matrices, the Born-rule probability
map, membership testing, target states, and the quantum prior sampler.

Because the setting vectors lie in the xz plane, every outcome probability is
a linear combination of expectation values of operators built from the
identity, sigma_x, and sigma_z on each side, all real in the standard basis.
Real symmetric density matrices therefore suffice; they form a
nine-dimensional convex set whose ninth coordinate (the sigma_y (x) sigma_y
expectation) never enters the probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DegenerateGeometry
from .params import ExperimentParams
from .probability import ProbabilityVector, reduced_from_table

I2 = np.eye(2)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
# sigma_y (x) sigma_y is real symmetric although sigma_y itself is imaginary
SIGMA_YY = np.array([
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
])

SYMMETRY_TOL = 1e-14
TRACE_TOL = 1e-14
PSD_TOL = 1e-12
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class DensityMatrix:
    """Real symmetric 4x4 unit-trace positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if np.abs(m - m.T).max() > SYMMETRY_TOL:
            raise ValueError("density matrix is not symmetric")
        if abs(np.trace(m) - 1.0) > 10 * TRACE_TOL:
            raise ValueError(f"trace {np.trace(m)} != 1")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError(f"minimum eigenvalue {np.linalg.eigvalsh(m)[0]:.2e} < -{PSD_TOL}")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix))


@dataclass(frozen=True)
class SettingVectors:
    """Unit vectors a, a', b, b' in the xz plane, symmetric about the z axis."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    @classmethod
    def from_params(cls, params: ExperimentParams) -> "SettingVectors":
        ha = np.deg2rad(params.theta_a_deg) / 2.0
        hb = np.deg2rad(params.theta_b_deg) / 2.0
        mk = lambda s, h: np.array([s * np.sin(h), 0.0, np.cos(h)])
        return cls(mk(+1, ha), mk(-1, ha), mk(+1, hb), mk(-1, hb))


def _projector(v: np.ndarray) -> np.ndarray:
    """(1 + v.sigma)/2 for a unit vector v = (x, 0, z)."""
    return 0.5 * (I2 + v[0] * SIGMA_X + v[2] * SIGMA_Z)


class BornMap:
    """Precomputed affine map rho -> probability table for fixed parameters.

    Each cell probability is tr(E[s, o] rho) + const[s, o] with 4x4 real
    symmetric effect operators; the only nonzero constant is (1 - gamma) on
    the null-event cells (no pair produced, nothing can click).
    """

    def __init__(self, params: ExperimentParams):
        self.params = params
        vecs = SettingVectors.from_params(params)
        g, ea, eb = params.gamma, params.eta_a, params.eta_b
        alice = [_projector(vecs.a), _projector(vecs.a_prime)]
        bob = [_projector(vecs.b), _projector(vecs.b_prime)]
        E = np.zeros((4, 4, 4, 4))
        c = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                s = 2 * i + j
                pu, pv = alice[i], bob[j]
                E[s, 0] = g * ea * eb * np.kron(pu, pv)
                E[s, 1] = g * ea * np.kron(pu, I2 - eb * pv)
                E[s, 2] = g * eb * np.kron(I2 - ea * pu, pv)
                E[s, 3] = g * np.kron(I2 - ea * pu, I2 - eb * pv)
                c[s, 3] = 1.0 - g
        self.effects = E
        self.constants = c
        self.effects_flat = E.reshape(16, 16)      # row s*4+o, column = rho flat
        self.constants_flat = c.reshape(16)

    def table(self, rho: np.ndarray) -> np.ndarray:
        """Raw (4, 4) probability table for one density matrix."""
        return (self.effects_flat @ np.asarray(rho, float).reshape(16)
                + self.constants_flat).reshape(4, 4)

    def tables(self, rhos: np.ndarray) -> np.ndarray:
        """(m, 16) flattened tables for a stack of (m, 4, 4) density matrices."""
        flat = rhos.reshape(len(rhos), 16)
        return flat @ self.effects_flat.T + self.constants_flat

    def gradient_operator(self, weights: np.ndarray) -> np.ndarray:
        """sum_so weights[s, o] * E[s, o], the adjoint map used by optimizers."""
        return (self.effects_flat.T @ weights.reshape(16)).reshape(4, 4)


def probabilities_from_state(rho: DensityMatrix | np.ndarray,
                             params: ExperimentParams) -> ProbabilityVector:
    """Born-rule probabilities of a two-qubit state under the experiment's map."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, float)
    tbl = BornMap(params).table(m)
    return ProbabilityVector(np.clip(tbl, 0.0, 1.0))


# ---------------------------------------------------------------------------
# random states

def random_pure_state(rng: np.random.Generator) -> DensityMatrix:
    """Rank-1 projector from a standard-normal 4-vector, uniform on the 3-sphere."""
    return DensityMatrix(_random_pure_states(rng, 1)[0])


def _random_pure_states(rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 4, 4) stack of real pure-state projectors."""
    out = np.empty((n, 4, 4))
    todo = np.arange(n)
    while todo.size:
        x = rng.standard_normal((todo.size, 4))
        norms = np.einsum("ij,ij->i", x, x)
        ok = norms > 0.0  # the all-zeros draw has measure zero; resample it
        idx = todo[ok]
        out[idx] = np.einsum("ni,nj->nij", x[ok], x[ok]) / norms[ok, None, None]
        todo = todo[~ok]
    return out


def mix_states(primary: DensityMatrix, others: tuple[DensityMatrix, ...] | list,
               epsilon: float) -> DensityMatrix:
    """Convex mixture (1-3e) rho1 + e (rho2 + rho3 + rho4)."""
    if not 0.0 <= epsilon < 1.0 / 3.0:
        raise ValueError(f"epsilon must be in [0, 1/3), got {epsilon}")
    if len(others) != 3:
        raise ValueError("exactly three admixture states required")
    mats = [o.matrix if isinstance(o, DensityMatrix) else np.asarray(o, float) for o in others]
    prim = primary.matrix if isinstance(primary, DensityMatrix) else np.asarray(primary, float)
    return DensityMatrix((1.0 - 3.0 * epsilon) * prim + epsilon * sum(mats))


# ---------------------------------------------------------------------------
# membership in the quantum set

@dataclass(frozen=True)
class QmMembership:
    member: bool
    slack: float  # best achievable minimum eigenvalue over the free parameter


class _MembershipGeometry:
    """Cached trigonometry and checks for the expectation-value recovery."""

    def __init__(self, params: ExperimentParams):
        ha = np.deg2rad(params.theta_a_deg) / 2.0
        hb = np.deg2rad(params.theta_b_deg) / 2.0
        self.sa, self.ca = np.sin(ha), np.cos(ha)
        self.sb, self.cb = np.sin(hb), np.cos(hb)
        self.g, self.ea, self.eb = params.gamma, params.eta_a, params.eta_b
        small = 1e-12
        if (abs(self.sa) < small or abs(self.ca) < small
                or abs(self.sb) < small or abs(self.cb) < small
                or self.g * self.ea < small or self.g * self.eb < small):
            raise DegenerateGeometry(
                "expectation-value recovery is singular: theta at 0/180 degrees "
                "or vanishing gamma*eta")
        self.u = (np.array([self.sa, self.ca]), np.array([-self.sa, self.ca]))
        self.v = (np.array([self.sb, self.cb]), np.array([-self.sb, self.cb]))


def _recover_state_family(reduced8: np.ndarray, geo: _MembershipGeometry) -> np.ndarray:
    """Invert the Born map on the eight reduced probabilities.

    Returns rho0 such that the physical candidates are rho0 + t * SIGMA_YY / 4
    with t the one free (probability-invisible) coordinate.
    """
    g, ea, eb = geo.g, geo.ea, geo.eb
    pa, pap, pb, pbp = reduced8[:4]
    nulls = reduced8[4:]
    ex1 = (pa - pap) / (g * ea * geo.sa)
    ez1 = ((pa + pap) / (g * ea) - 1.0) / geo.ca
    ex2 = (pb - pbp) / (g * eb * geo.sb)
    ez2 = ((pb + pbp) / (g * eb) - 1.0) / geo.cb
    m1 = np.array([ex1, ez1])
    m2 = np.array([ex2, ez2])
    K = np.empty(4)
    for i in range(2):
        for j in range(2):
            s = 2 * i + j
            u, v = geo.u[i], geo.v[j]
            tu = 0.5 * (1.0 + u @ m1)
            tv = 0.5 * (1.0 + v @ m2)
            tuv = ((nulls[s] - (1.0 - g)) / g - 1.0 + ea * tu + eb * tv) / (ea * eb)
            K[s] = 4.0 * tuv - 1.0 - u @ m1 - v @ m2
    sa, ca, sb, cb = geo.sa, geo.ca, geo.sb, geo.cb
    exx = (K[0] - K[1] - K[2] + K[3]) / (4 * sa * sb)
    exz = (K[0] + K[1] - K[2] - K[3]) / (4 * sa * cb)
    ezx = (K[0] - K[1] + K[2] - K[3]) / (4 * ca * sb)
    ezz = (K[0] + K[1] + K[2] + K[3]) / (4 * ca * cb)
    rho0 = 0.25 * (np.eye(4)
                   + ex1 * np.kron(SIGMA_X, I2) + ez1 * np.kron(SIGMA_Z, I2)
                   + ex2 * np.kron(I2, SIGMA_X) + ez2 * np.kron(I2, SIGMA_Z)
                   + exx * np.kron(SIGMA_X, SIGMA_X) + exz * np.kron(SIGMA_X, SIGMA_Z)
                   + ezx * np.kron(SIGMA_Z, SIGMA_X) + ezz * np.kron(SIGMA_Z, SIGMA_Z))
    return rho0


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _max_min_eigenvalue(rho0: np.ndarray, width: float = 1e-12) -> float:
    """Golden-section maximization of the (concave) minimum eigenvalue of
    rho0 + t * SIGMA_YY/4 over t in [-1, 1]."""
    m4 = SIGMA_YY / 4.0
    f = lambda t: np.linalg.eigvalsh(rho0 + t * m4)[0]
    a, b = -1.0, 1.0
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return float(max(fc, fd))


def qm_membership(p: ProbabilityVector | np.ndarray,
                  params: ExperimentParams) -> QmMembership:
    """Decide whether p is realizable by some two-qubit state.

    The eight expectation values visible in the probabilities are recovered
    by an exact linear inversion; membership then reduces to whether the one
    remaining coordinate t = <sigma_y sigma_y> can make the state matrix
    positive semidefinite.  The minimum eigenvalue is concave in t, so a
    golden-section search over [-1, 1] finds its maximum; boundary states
    (slack within -1e-9) count as members.
    """
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, float)
    geo = _MembershipGeometry(params)
    slack = _max_min_eigenvalue(_recover_state_family(reduced_from_table(tbl), geo))
    return QmMembership(member=bool(slack >= -MEMBERSHIP_TOL), slack=slack)


def _qm_slack_batch(reduced: np.ndarray, geo: _MembershipGeometry) -> np.ndarray:
    """Membership slack for many reduced-form points (classification loop)."""
    out = np.empty(len(reduced))
    for k in range(len(reduced)):
        out[k] = _max_min_eigenvalue(_recover_state_family(reduced[k], geo))
    return out


# ---------------------------------------------------------------------------
# target states

def violation_operator(params: ExperimentParams,
                       eta_a: float | None = None,
                       eta_b: float | None = None) -> np.ndarray:
    """The per-pair Bell-violation functional as a 4x4 real symmetric operator.

    tr(F rho) * gamma equals the violation margin
    p_++(ab) - p_+0(ab') - p_0+(a'b) - p_++(a'b').
    """
    ea = params.eta_a if eta_a is None else eta_a
    eb = params.eta_b if eta_b is None else eta_b
    vecs = SettingVectors.from_params(params)
    pa, pap = _projector(vecs.a), _projector(vecs.a_prime)
    pb, pbp = _projector(vecs.b), _projector(vecs.b_prime)
    four = (np.kron(pa, pb) + np.kron(pa, pbp) + np.kron(pap, pb)
            - np.kron(pap, pbp))
    F = ea * eb * four - ea * np.kron(pa, I2) - eb * np.kron(I2, pb)
    return 0.5 * (F + F.T)


TARGET_CRITERIA = ("threshold-efficiency", "max-violation")


def target_state(params: ExperimentParams,
                 criterion: str = "max-violation") -> DensityMatrix:
    """The pure state maximizing the Bell-violation margin at the experiment's
    angles and efficiencies.

    Both named criteria optimize the same margin: states that survive at the
    smallest threshold efficiency and states with the strongest violation are
    the maximizers of the same functional once the apparatus parameters are
    fixed.  The margin is linear in rho, so the exact optimum over all states
    is the top eigenvector of the 4x4 violation operator; no iterative search
    is needed and the result is deterministic.
    """
    if criterion not in TARGET_CRITERIA:
        raise ValueError(f"criterion must be one of {TARGET_CRITERIA}, got {criterion!r}")
    F = violation_operator(params)
    vals, vecs = np.linalg.eigh(F)
    if vals[-1] - vals[-2] < 1e-10:
        raise ConvergenceFailure(
            f"violation operator has a degenerate maximum (gap {vals[-1] - vals[-2]:.2e}); "
            "the optimal state is not unique")
    psi = vecs[:, -1]
    return DensityMatrix(np.outer(psi, psi))


# ---------------------------------------------------------------------------
# quantum prior sampler

def sample_states(params: ExperimentParams, count: int, epsilon: float,
                  rng: np.random.Generator) -> np.ndarray:
    """(count, 4, 4) full-rank states: for each entry, four random pure states
    mixed as (1-3e) rho1 + e (rho2 + rho3 + rho4)."""
    pure = _random_pure_states(rng, 4 * count).reshape(count, 4, 4, 4)
    mix = np.array([1.0 - 3.0 * epsilon, epsilon, epsilon, epsilon])
    return np.einsum("k,nkij->nij", mix, pure)


def qm_sample_tables(params: ExperimentParams, count: int, epsilon: float,
                     rng: np.random.Generator) -> np.ndarray:
    """(count, 16) probability tables of randomly drawn high-purity states."""
    born = BornMap(params)
    return born.tables(sample_states(params, count, epsilon, rng))
