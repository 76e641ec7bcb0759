"""Experiment parameters: trigger-to-pair probability, setting angles, efficiencies.

Angles are degrees in configuration and converted to radians internally.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError


@dataclass(frozen=True)
class ExperimentParams:
    """One experiment's apparatus parameters.

    gamma:        probability that a trigger signal yields a qubit pair, in (0, 1]
    theta_a_deg:  angle between Alice's two settings, in (0, 180) degrees
    theta_b_deg:  angle between Bob's two settings, in (0, 180) degrees
    eta_a, eta_b: detector efficiencies, in (0, 1]
    """

    gamma: float
    theta_a_deg: float
    theta_b_deg: float
    eta_a: float
    eta_b: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        for name in ("theta_a_deg", "theta_b_deg"):
            val = getattr(self, name)
            if not 0.0 < val < 180.0:
                raise ValueError(f"{name} must be in (0, 180) degrees, got {val}")
        for name in ("eta_a", "eta_b"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {val}")

    def with_gamma(self, gamma: float) -> "ExperimentParams":
        return ExperimentParams(gamma, self.theta_a_deg, self.theta_b_deg,
                                self.eta_a, self.eta_b)

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "theta_A_deg": self.theta_a_deg,
                "theta_B_deg": self.theta_b_deg, "eta_A": self.eta_a,
                "eta_B": self.eta_b}


# Nominal parameters of the four experiments.
PRESETS: dict[str, ExperimentParams] = {
    "delft": ExperimentParams(1.0, 90.0, 80.6, 0.971, 0.963),
    "vienna": ExperimentParams(0.0035, 64.0, 64.0, 0.786, 0.762),
    "boulder": ExperimentParams(0.0005, 60.2, 60.2, 0.747, 0.756),
    "munich": ExperimentParams(1.0, 90.0, 90.0, 0.975, 0.975),
}

_CONFIG_KEYS = ("gamma", "theta_A_deg", "theta_B_deg", "eta_A", "eta_B")


def load_params(name_or_path: str | Path) -> ExperimentParams:
    """Resolve a preset name or load a JSON config file with the named fields."""
    key = str(name_or_path).lower()
    if key in PRESETS:
        return PRESETS[key]
    path = Path(name_or_path)
    if not path.exists():
        raise ParseError(
            f"unknown params {name_or_path!r}: not a preset "
            f"({', '.join(sorted(PRESETS))}) and no such file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    missing = [k for k in _CONFIG_KEYS if k not in raw]
    if missing:
        raise ParseError(f"{path}: missing fields {missing}")
    try:
        return ExperimentParams(raw["gamma"], raw["theta_A_deg"], raw["theta_B_deg"],
                                raw["eta_A"], raw["eta_B"])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
