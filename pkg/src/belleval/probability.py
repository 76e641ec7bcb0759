"""Probability-space data model for the four-setting, four-outcome experiment.

Conventions used throughout the package:

* settings are ordered ``ab, ab', a'b, a'b'``; setting index ``s = 2*i + j``
  where ``i`` picks Alice's setting (0 for a, 1 for a') and ``j`` Bob's;
* outcomes are ordered ``++, +0, 0+, 00``;
* a probability table is a ``(4, 4)`` array ``p[s, o]``; its flattened
  16-vector is setting-major.

Each setting's four probabilities sum to one, and the no-signaling equalities
tie the four settings together: Alice's click probability cannot depend on
Bob's setting choice and vice versa.  The resulting eight-dimensional space is
parameterized by the four singles probabilities and the four null-event
probabilities; the remaining entries follow from

    p_++ = p_A + p_B + p_00 - 1,   p_+0 = 1 - p_00 - p_B,   p_0+ = 1 - p_00 - p_A.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NoSignalingViolation, OutOfSimplex, ParseError

SETTINGS = ("ab", "ab'", "a'b", "a'b'")
OUTCOMES = ("++", "+0", "0+", "00")

SIMPLEX_TOL = 1e-12
NOSIGNALING_TOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# array-level helpers (used by the samplers and optimizers on raw tables)

def singles_from_table(p: np.ndarray) -> np.ndarray:
    """(p_a, p_a', p_b, p_b') from a (..., 4, 4) table, read off the ab / a'b'
    settings (identical to the ab' / a'b readings when no-signaling holds)."""
    pa = p[..., 0, 0] + p[..., 0, 1]
    pap = p[..., 2, 0] + p[..., 2, 1]
    pb = p[..., 0, 0] + p[..., 0, 2]
    pbp = p[..., 1, 0] + p[..., 1, 2]
    return np.stack([pa, pap, pb, pbp], axis=-1)


def reduced_from_table(p: np.ndarray) -> np.ndarray:
    """Eight reduced parameters (4 singles, 4 nulls) from a (..., 4, 4) table."""
    return np.concatenate([singles_from_table(p), p[..., :, 3]], axis=-1)


def table_from_reduced(r: np.ndarray) -> np.ndarray:
    """Rebuild the (..., 4, 4) table from the eight reduced parameters."""
    r = np.asarray(r, dtype=float)
    pa, pap, pb, pbp = (r[..., k] for k in range(4))
    nulls = r[..., 4:]
    p = np.empty(r.shape[:-1] + (4, 4))
    alice = (pa, pa, pap, pap)
    bob = (pb, pbp, pb, pbp)
    for s in range(4):
        n00 = nulls[..., s]
        p[..., s, 0] = alice[s] + bob[s] + n00 - 1.0
        p[..., s, 1] = 1.0 - n00 - bob[s]
        p[..., s, 2] = 1.0 - n00 - alice[s]
        p[..., s, 3] = n00
    return p


def nosignaling_residual(p: np.ndarray) -> float:
    """Largest absolute violation of the no-signaling equalities."""
    da = (p[..., 0, 0] + p[..., 0, 1]) - (p[..., 1, 0] + p[..., 1, 1])
    dap = (p[..., 2, 0] + p[..., 2, 1]) - (p[..., 3, 0] + p[..., 3, 1])
    db = (p[..., 0, 0] + p[..., 0, 2]) - (p[..., 2, 0] + p[..., 2, 2])
    dbp = (p[..., 1, 0] + p[..., 1, 2]) - (p[..., 3, 0] + p[..., 3, 2])
    return float(np.max(np.abs(np.stack([da, dap, db, dbp]))))


# ---------------------------------------------------------------------------
# validated value types

@dataclass(frozen=True)
class ReducedProbabilities:
    """The eight-parameter form: four singles probabilities and four nulls."""

    values: np.ndarray  # (8,): p_a, p_a', p_b, p_b', p00 per setting

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (8,):
            raise ValueError(f"expected 8 reduced parameters, got shape {vals.shape}")
        if (vals < -SIMPLEX_TOL).any() or (vals > 1.0 + SIMPLEX_TOL).any():
            raise OutOfSimplex(f"reduced parameters outside [0, 1]: {vals}")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def singles(self) -> np.ndarray:
        return self.values[:4]

    @property
    def nulls(self) -> np.ndarray:
        return self.values[4:]


@dataclass(frozen=True)
class ProbabilityVector:
    """Sixteen per-setting outcome probabilities, validated on construction.

    Stored in full 16-component form; the reduced form is a derived view.
    Construction re-checks the per-setting normalization and the no-signaling
    equalities so that drift introduced by numerical transforms is caught.
    """

    table: np.ndarray  # (4, 4): p[s, o]

    def __post_init__(self):
        tbl = np.asarray(self.table, dtype=float)
        if tbl.shape != (4, 4):
            raise ValueError(f"expected a (4, 4) table, got shape {tbl.shape}")
        if (tbl < -SIMPLEX_TOL).any() or (tbl > 1.0 + SIMPLEX_TOL).any():
            raise OutOfSimplex(f"probabilities outside [0, 1]: min {tbl.min()}, max {tbl.max()}")
        row_err = np.abs(tbl.sum(axis=1) - 1.0).max()
        if row_err > 4 * SIMPLEX_TOL:
            raise OutOfSimplex(f"setting probabilities do not sum to 1 (residual {row_err:.2e})")
        ns_err = nosignaling_residual(tbl)
        if ns_err > NOSIGNALING_TOL:
            raise NoSignalingViolation(f"no-signaling residual {ns_err:.2e}")
        object.__setattr__(self, "table", _freeze(tbl))

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(16)

    @property
    def reduced(self) -> ReducedProbabilities:
        return ReducedProbabilities(reduced_from_table(self.table))

    def __getitem__(self, key) -> float:
        setting, outcome = key
        return float(self.table[SETTINGS.index(setting), OUTCOMES.index(outcome)])


def reconstruct_full(reduced: ReducedProbabilities | np.ndarray) -> ProbabilityVector:
    """Rebuild all sixteen probabilities from the eight-parameter form.

    The completion satisfies the per-setting normalization and no-signaling
    exactly by construction; raises OutOfSimplex if any completed entry falls
    outside [0, 1] beyond tolerance.
    """
    vals = reduced.values if isinstance(reduced, ReducedProbabilities) else np.asarray(reduced, float)
    tbl = table_from_reduced(vals)
    if (tbl < -SIMPLEX_TOL).any() or (tbl > 1.0 + SIMPLEX_TOL).any():
        raise OutOfSimplex(
            f"reconstruction leaves the simplex: min {tbl.min():.3e}, max {tbl.max():.6f}")
    return ProbabilityVector(np.clip(tbl, 0.0, 1.0))


def reduce_probabilities(p: ProbabilityVector | np.ndarray,
                         tol: float = NOSIGNALING_TOL) -> ReducedProbabilities:
    """Extract the eight-parameter form, verifying the no-signaling equalities.

    Raises NoSignalingViolation when the two readings of a party's marginal
    disagree beyond ``tol`` (relative frequencies from finite counts generally
    fail this).
    """
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, dtype=float)
    err = nosignaling_residual(tbl)
    if err > tol:
        raise NoSignalingViolation(f"no-signaling residual {err:.3e} exceeds {tol:.1e}")
    return ReducedProbabilities(reduced_from_table(tbl))


# ---------------------------------------------------------------------------
# event counts

@dataclass(frozen=True)
class EventCounts:
    """The sixteen observed event counts of one run."""

    table: np.ndarray  # (4, 4) nonnegative integers

    def __post_init__(self):
        tbl = np.asarray(self.table)
        if tbl.shape != (4, 4):
            raise ValueError(f"expected a (4, 4) count table, got shape {tbl.shape}")
        if not np.issubdtype(tbl.dtype, np.integer):
            as_int = np.asarray(tbl, dtype=np.int64)
            if not np.array_equal(as_int, tbl):
                raise ValueError("counts must be integers")
            tbl = as_int
        if (tbl < 0).any():
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "table", _freeze(tbl.astype(np.int64)))

    @property
    def total(self) -> int:
        """Total number of trigger signals (sum of all sixteen counts)."""
        return int(self.table.sum())

    @property
    def setting_totals(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(16)

    def relative_frequencies(self) -> np.ndarray:
        """Per-setting relative frequencies as a raw (4, 4) table.

        These generally violate no-signaling, so the result is a plain array,
        not a ProbabilityVector.
        """
        totals = self.setting_totals
        if (totals == 0).any():
            raise ValueError("cannot form frequencies: a setting has zero events")
        return self.table / totals[:, None]

    def frequencies_are_signaling(self) -> bool:
        """Check the relative frequencies against no-signaling with a
        statistics-aware tolerance that scales like 1/sqrt(N)."""
        freq = self.relative_frequencies()
        tol = 1.0 / np.sqrt(max(self.total, 1))
        return nosignaling_residual(freq) > tol


# ---------------------------------------------------------------------------
# counts file format: line-oriented UTF-8 with a header, one record per setting

_COUNTS_HEADER = ["setting", "n_pp", "n_p0", "n_0p", "n_00"]


def read_counts_file(path: str | Path) -> EventCounts:
    """Parse a counts file; rejects duplicate or missing settings."""
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(f"{path}: empty counts file")
    header = [f.strip() for f in lines[0].split(",")]
    if header != _COUNTS_HEADER:
        raise ParseError(f"{path}: bad header {header!r}, expected {_COUNTS_HEADER!r}")
    table = np.zeros((4, 4), dtype=np.int64)
    seen: set[str] = set()
    for ln in lines[1:]:
        fields = [f.strip() for f in ln.split(",")]
        if len(fields) != 5:
            raise ParseError(f"{path}: expected 5 fields, got {len(fields)}: {ln!r}")
        setting = fields[0]
        if setting not in SETTINGS:
            raise ParseError(f"{path}: unknown setting {setting!r}")
        if setting in seen:
            raise ParseError(f"{path}: duplicate setting {setting!r}")
        seen.add(setting)
        try:
            row = [int(f) for f in fields[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}: non-integer count in {ln!r}") from exc
        table[SETTINGS.index(setting)] = row
    missing = [s for s in SETTINGS if s not in seen]
    if missing:
        raise ParseError(f"{path}: missing settings {missing}")
    return EventCounts(table)


def write_counts_file(path: str | Path, counts: EventCounts) -> None:
    lines = [",".join(_COUNTS_HEADER)]
    for s, name in enumerate(SETTINGS):
        lines.append(",".join([name] + [str(int(v)) for v in counts.table[s]]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
