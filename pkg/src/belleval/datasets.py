"""Bundled event-count datasets of the four experiments and their loader.

Boulder runs are keyed by triggers per trial (1/3/5/7, in increasing-N
order); Vienna by dataset number; Delft and Munich by run.  The two Delft
runs also ship merged as ``delft-1+2`` because their counts are small enough
that the combined set is analyzed too; the Munich runs are never merged (the
two runs pursued different target states).

Where the bundled nominal gamma is known to be inaccurate, the bundle carries
the self-calibrated best guess and the scan range that brackets it.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, TotalMismatch
from .params import ExperimentParams, PRESETS
from .probability import EventCounts, read_counts_file


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    experiment: str
    run: str
    counts: EventCounts
    params: ExperimentParams | None            # None for counts files without one
    best_gamma: float | None = None            # self-calibrated; None: nominal is fine
    gamma_scan_range: tuple[float, float] | None = None

    @property
    def analysis_gamma(self) -> float:
        if self.best_gamma is not None:
            return self.best_gamma
        if self.params is None:
            raise ValueError(f"dataset {self.name!r} carries no parameters")
        return self.params.gamma

    @property
    def analysis_params(self) -> ExperimentParams:
        if self.params is None:
            raise ValueError(f"dataset {self.name!r} carries no parameters")
        return self.params.with_gamma(self.analysis_gamma)


# name -> (experiment, run label, declared N, best-guess gamma, scan range)
_REGISTRY: dict[str, tuple[str, str, int, float | None, tuple[float, float] | None]] = {
    "boulder-1": ("boulder", "one trigger per trial", 175_647_100, 0.000722, (0.0005, 0.0009)),
    "boulder-3": ("boulder", "three triggers per trial", 527_164_272, 0.000722, (0.0005, 0.0009)),
    "boulder-5": ("boulder", "five triggers per trial", 886_791_755, 0.000722, (0.0005, 0.0009)),
    "boulder-7": ("boulder", "seven triggers per trial", 1_244_205_032, 0.000722, (0.0005, 0.0009)),
    "vienna-6": ("vienna", "dataset 6", 3_843_698_536, 0.00296, (0.0025, 0.0034)),
    "vienna-7": ("vienna", "dataset 7", 3_502_784_150, 0.00287, (0.0025, 0.0034)),
    "vienna-8": ("vienna", "dataset 8", 9_994_696_192, 0.00264, (0.0025, 0.0034)),
    "delft-1": ("delft", "run 1", 245, None, None),
    "delft-2": ("delft", "run 2", 228, None, None),
    "delft-1+2": ("delft", "runs 1 and 2 merged", 473, None, None),
    "munich-1": ("munich", "run 1", 27_885, None, None),
    "munich-2": ("munich", "run 2", 27_683, None, None),
}

BUNDLED_DATASETS = tuple(_REGISTRY)


def _bundled_counts(name: str) -> EventCounts:
    if name == "delft-1+2":
        a = _bundled_counts("delft-1")
        b = _bundled_counts("delft-2")
        return EventCounts(a.table + b.table)
    with resources.as_file(resources.files("belleval.data") / f"{name}.csv") as path:
        return read_counts_file(path)


def load_dataset(name_or_path: str | Path) -> DatasetBundle:
    """Resolve a bundled dataset id or parse a counts file on disk.

    Bundled counts are cross-checked against the declared trigger totals;
    a mismatch means the package data is corrupt.
    """
    key = str(name_or_path)
    if key in _REGISTRY:
        experiment, run, declared_n, best_gamma, scan = _REGISTRY[key]
        counts = _bundled_counts(key)
        if counts.total != declared_n:
            raise TotalMismatch(
                f"{key}: column sum {counts.total} != declared N {declared_n}")
        return DatasetBundle(name=key, experiment=experiment, run=run,
                             counts=counts, params=PRESETS[experiment],
                             best_gamma=best_gamma, gamma_scan_range=scan)
    path = Path(name_or_path)
    if not path.exists():
        raise ParseError(
            f"unknown dataset {name_or_path!r}: not a bundled id "
            f"({', '.join(BUNDLED_DATASETS)}) and no such file")
    counts = read_counts_file(path)
    return DatasetBundle(name=path.stem, experiment="custom", run=str(path),
                         counts=counts, params=None)
