"""Multinomial log-likelihood of event counts, computed in natural-log space.

The likelihood of counts D under cell probabilities p (settings chosen
uniformly at random) is  (N!/4^N) * prod p^n / n!.  The combinatorial factor
encodes one particular stopping rule; any other rule changes it by a constant
that cancels in every posterior ratio, so this fixed convention is used for
all datasets and reported maxima are directly comparable between runs.

Everything is evaluated with log-gamma functions, so counts up to 1e10 and
likelihoods down to 1e-13000 stay finite.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .probability import EventCounts, ProbabilityVector

LN10 = float(np.log(10.0))


def combinatorial_constant(counts: EventCounts) -> float:
    """ln(N!/4^N) - sum ln(n!) for the uniform-settings stopping rule."""
    n = counts.flat
    total = counts.total
    return float(gammaln(total + 1) - total * np.log(4.0) - gammaln(n + 1).sum())


def log_likelihood(counts: EventCounts, p: ProbabilityVector | np.ndarray) -> float:
    """Natural log of the multinomial likelihood.

    Cells with zero probability are allowed only where the count is zero;
    a positive count on a zero-probability cell returns -inf (the data are
    impossible under that p).
    """
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, dtype=float)
    n = counts.flat
    pf = tbl.reshape(16)
    const = combinatorial_constant(counts)
    zero = pf <= 0.0
    if (n[zero] > 0).any():
        return -np.inf
    terms = np.zeros(16)
    nz = ~zero
    terms[nz] = n[nz] * np.log(pf[nz])
    return float(terms.sum() + const)


def log_likelihood_batch(counts: EventCounts, tables: np.ndarray) -> np.ndarray:
    """Log-likelihood for many probability tables at once.

    tables: (m, 16) flattened setting-major tables; cells with nonpositive
    probability are impossible, so a positive count there sends that row
    to -inf.
    """
    lnp, zero_mask = prepare_log_tables(tables)
    return log_likelihood_from_prepared(counts, lnp, zero_mask)


def prepare_log_tables(tables: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Precompute log tables for repeated scoring of one sample.

    Returns (lnp, zero_mask): lnp holds 0.0 on nonpositive cells and
    zero_mask marks them (None when every entry is positive, the fast path).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        lnp = np.log(tables)
    mask = tables <= 0.0
    if mask.any():
        return np.where(mask, 0.0, lnp), mask
    return lnp, None


def log_likelihood_from_prepared(counts: EventCounts, lnp: np.ndarray,
                                 zero_mask: np.ndarray | None) -> np.ndarray:
    n = counts.flat.astype(float)
    const = combinatorial_constant(counts)
    out = lnp @ n + const
    if zero_mask is not None:
        bad = (zero_mask & (n > 0)).any(axis=1)
        out[bad] = -np.inf
    return out
