"""Posterior region contents by importance-weighting the prior sample, and
the evidence verdicts that compare them with the prior contents.

The posterior content of a region is the likelihood-weighted fraction of
prior points falling in it (self-normalized importance sampling with the
prior as proposal).  All weights are formed in natural-log space and shifted
by the maximum before exponentiation; contents too small for floating point
are reported through their log10 value with a below-representable flag
rather than as a bare zero.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateWeightsWarning
from .likelihood import LN10, log_likelihood_batch
from .params import ExperimentParams
from .prior import PriorSample, REGION_NAMES
from .probability import EventCounts

BELOW_REPRESENTABLE_LOG10 = -320.0  # smallest positive float is ~1e-323
IN_FAVOR, AGAINST, NEUTRAL = "in-favor", "against", "neutral"


@dataclass(frozen=True)
class RegionEvidence:
    region: str
    prior: float
    posterior: float               # 0.0 when below representable
    log10_posterior: float         # always carries the estimate (-inf if no weight)
    below_representable: bool
    verdict: str

    def as_dict(self) -> dict:
        return {"region": self.region, "prior": self.prior,
                "posterior": self.posterior,
                "log10_posterior": self.log10_posterior,
                "below_representable": self.below_representable,
                "verdict": self.verdict}


@dataclass(frozen=True)
class EvidenceReport:
    dataset: str
    params: ExperimentParams
    regions: tuple[RegionEvidence, ...]
    effective_sample_size: float
    heavy_points: int              # points within e^-30 of the peak weight
    degenerate_weights: bool
    neutrality_band: float = 0.0

    def region(self, name: str) -> RegionEvidence:
        for r in self.regions:
            if r.region == name:
                return r
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"dataset": self.dataset, "params": self.params.as_dict(),
                "regions": [r.as_dict() for r in self.regions],
                "effective_sample_size": self.effective_sample_size,
                "heavy_points": self.heavy_points,
                "degenerate_weights": self.degenerate_weights,
                "neutrality_band": self.neutrality_band}


def _verdict(posterior: float, prior: float, band: float) -> str:
    if abs(posterior - prior) <= band:
        return NEUTRAL
    return IN_FAVOR if posterior > prior else AGAINST


def posterior_contents(sample: PriorSample, counts: EventCounts,
                       dataset: str = "", weight_floor: int = 10,
                       neutrality_band: float = 0.0,
                       log_likelihoods: np.ndarray | None = None) -> EvidenceReport:
    """Score the prior sample against the data and report per-region evidence.

    ``log_likelihoods`` can carry precomputed values for this (sample, counts)
    pair; bias-check loops use that to amortize the log of the sample tables.
    """
    if len(sample) == 0:
        raise ValueError("empty prior sample")
    ell = (log_likelihood_batch(counts, sample.tables)
           if log_likelihoods is None else np.asarray(log_likelihoods, float))
    peak = ell.max()
    if not np.isfinite(peak):
        raise ValueError("no sample point has positive likelihood for these counts")
    w = np.exp(ell - peak)
    total = w.sum()
    heavy = int((w > np.exp(-30.0)).sum())
    ess = float(total**2 / (w @ w))
    degenerate = heavy < weight_floor
    if degenerate:
        warnings.warn(
            f"only {heavy} sample points carry weight within e^-30 of the peak; "
            f"the Monte Carlo posterior estimate is unreliable (ESS {ess:.2f})",
            DegenerateWeightsWarning, stacklevel=2)

    prior = sample.contents.as_array()
    ln_total = logsumexp(ell)
    regions = []
    for code, name in enumerate(REGION_NAMES):
        mask = sample.region == code
        post = float(w[mask].sum() / total)
        log10_post = float((logsumexp(ell[mask]) - ln_total) / LN10) if mask.any() else -np.inf
        below = log10_post < BELOW_REPRESENTABLE_LOG10
        regions.append(RegionEvidence(
            region=name, prior=float(prior[code]),
            posterior=0.0 if below else post,
            log10_posterior=log10_post, below_representable=below,
            verdict=_verdict(post, float(prior[code]), neutrality_band)))
    return EvidenceReport(dataset=dataset, params=sample.params,
                          regions=tuple(regions), effective_sample_size=ess,
                          heavy_points=heavy, degenerate_weights=degenerate,
                          neutrality_band=neutrality_band)


def verdicts(report: EvidenceReport) -> dict[str, str]:
    """Per-region verdicts: in favor where posterior exceeds prior, against
    where it falls short, neutral inside the configured band."""
    return {r.region: r.verdict for r in report.regions}


def evidence_table(report: EvidenceReport) -> str:
    """Aligned text table in the prior/posterior layout of the paper-style
    region summaries."""
    lines = [f"dataset: {report.dataset}",
             f"{'region':<10}{'prior':>12}{'posterior':>16}  verdict"]
    for r in report.regions:
        if r.below_representable:
            post = "0 (<1e-320)"
        elif r.posterior > 1 - 1e-9:
            post = "1"
        else:
            post = f"{r.posterior:.6g}"
        lines.append(f"{r.region:<10}{r.prior:>12.4f}{post:>16}  {r.verdict}")
    lines.append(f"effective sample size: {report.effective_sample_size:.1f}")
    return "\n".join(lines)
