"""Prior-bias protocol: draw mock-true probabilities from each region,
simulate runs of the experiment, score them with the evidence engine, and
tally which regions receive in-favor verdicts.

A prior with no procedural bias should essentially never produce evidence in
favor of the quantum-only region when the mock truth lies elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientRegionPoints
from .evidence import IN_FAVOR, posterior_contents
from .likelihood import log_likelihood_from_prepared, prepare_log_tables
from .params import ExperimentParams
from .prior import PriorSample, REGION_NAMES
from .probability import EventCounts, ProbabilityVector


def simulate_data(p: ProbabilityVector | np.ndarray, n_triggers: int,
                  rng: np.random.Generator) -> EventCounts:
    """Simulate one run: every trigger picks one of the sixteen (setting,
    outcome) cells, the setting uniformly at random, the outcome from p."""
    tbl = p.table if isinstance(p, ProbabilityVector) else np.asarray(p, float)
    if n_triggers < 0:
        raise ValueError("n_triggers must be nonnegative")
    pvals = np.clip(tbl.reshape(16), 0.0, None) / 4.0
    pvals = pvals / pvals.sum()  # guard the multinomial against 1e-16 drift
    cells = rng.multinomial(n_triggers, pvals)
    return EventCounts(cells.reshape(4, 4))


@dataclass(frozen=True)
class BiasTally:
    """3x3 in-favor counts: rows are the mock-true regions, columns the
    regions receiving evidence in favor.  Rows can sum beyond the number of
    mocks because a dataset may favor two regions at once."""

    matrix: np.ndarray            # (3, 3) int
    mocks_per_region: int
    multi_favor: int              # datasets with more than one in-favor verdict
    drawn_with_replacement: tuple[bool, bool, bool]

    def as_dict(self) -> dict:
        return {"rows": REGION_NAMES, "columns": REGION_NAMES,
                "matrix": self.matrix.tolist(),
                "mocks_per_region": self.mocks_per_region,
                "multi_favor": self.multi_favor,
                "drawn_with_replacement": list(self.drawn_with_replacement)}

    def table(self) -> str:
        head = f"{'mock-true region':<18}" + "".join(f"{c:>12}" for c in REGION_NAMES)
        lines = [head]
        for r, name in enumerate(REGION_NAMES):
            lines.append(f"{name:<18}" + "".join(f"{int(v):>12}" for v in self.matrix[r]))
        lines.append(f"(mocks per region: {self.mocks_per_region}, "
                     f"multi-favor cases: {self.multi_favor})")
        return "\n".join(lines)


def run_bias_check(params: ExperimentParams, prior_sample: PriorSample,
                   mocks_per_region: int, n_triggers: int,
                   seed: int = 0) -> BiasTally:
    """Tally in-favor verdicts over simulated datasets.

    Mock-true probabilities are reused from the labeled prior points, so the
    region labels are exact and free; each region draws without replacement
    when it holds enough points, with replacement otherwise (recorded in the
    tally).  Verdicts come from the same evidence engine that scores real
    data, with the sample's log-probabilities precomputed once.
    """
    if mocks_per_region < 1:
        raise ValueError("mocks_per_region must be positive")
    rng = np.random.default_rng(seed)
    lnp, zero_mask = prepare_log_tables(prior_sample.tables)
    matrix = np.zeros((3, 3), dtype=np.int64)
    multi = 0
    replacement = []
    for region_code in range(3):
        idx = prior_sample.region_indices(region_code)
        if idx.size == 0:
            raise InsufficientRegionPoints(
                f"prior sample holds no points in region {REGION_NAMES[region_code]!r}")
        replace = bool(idx.size < mocks_per_region)
        replacement.append(replace)
        chosen = rng.choice(idx, size=mocks_per_region, replace=replace)
        for i in chosen:
            mock_p = np.clip(prior_sample.tables[i].reshape(4, 4), 0.0, None)
            counts = simulate_data(mock_p, n_triggers, rng)
            ell = log_likelihood_from_prepared(counts, lnp, zero_mask)
            report = posterior_contents(prior_sample, counts,
                                        dataset="bias-mock", weight_floor=0,
                                        log_likelihoods=ell)
            favored = [k for k, r in enumerate(report.regions) if r.verdict == IN_FAVOR]
            if len(favored) > 1:
                multi += 1
            for k in favored:
                matrix[region_code, k] += 1
    return BiasTally(matrix=matrix, mocks_per_region=mocks_per_region,
                     multi_favor=multi,
                     drawn_with_replacement=tuple(replacement))
