"""Bhattacharyya fidelity and angle between probability tables.

The comparison first strips the apparatus scale: every non-null probability
is divided by 4*gamma and the null cells have the no-pair mass 1-gamma
removed first.  The rescaled entries are nonnegative with unit total for any
table obeying the apparatus bounds, so the fidelity sum of square-root
products lies in [0, 1] and its arccos is a genuine metric angle.
"""
from __future__ import annotations

import numpy as np

from .errors import NegativeQ
from .probability import ProbabilityVector

_NEG_TOL = 1e-12


def click_mass_rescale(p: ProbabilityVector | np.ndarray, gamma: float) -> np.ndarray:
    """Rescaled (4, 4) table q with q = p/(4 gamma), null cells mapped as
    (p00 - (1 - gamma))/(4 gamma).  Raises NegativeQ when gamma is
    inconsistent with p (a negative rescaled entry)."""
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, dtype=float)
    q = tbl.copy() / (4.0 * gamma)
    q[:, 3] = (tbl[:, 3] - (1.0 - gamma)) / (4.0 * gamma)
    if (q < -_NEG_TOL).any():
        raise NegativeQ(
            f"rescaling produced a negative entry (min {q.min():.3e}); "
            f"gamma={gamma} is inconsistent with the table")
    return np.clip(q, 0.0, None)


def bhattacharyya_fidelity(p: ProbabilityVector | np.ndarray,
                           p_prime: ProbabilityVector | np.ndarray,
                           gamma: float) -> float:
    q1 = click_mass_rescale(p, gamma)
    q2 = click_mass_rescale(p_prime, gamma)
    return float(np.sqrt(q1 * q2).sum())


def bhattacharyya_angle(p: ProbabilityVector | np.ndarray,
                        p_prime: ProbabilityVector | np.ndarray,
                        gamma: float) -> float:
    """arccos of the fidelity, in [0, pi/2]; zero iff the tables agree."""
    return float(np.arccos(np.clip(bhattacharyya_fidelity(p, p_prime, gamma), 0.0, 1.0)))
