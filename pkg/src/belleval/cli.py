"""Command-line front end: dataset ingestion, pipeline stages, reports.

Subcommands
    prior         build (or load) a prior sample; report contents + intervals
    evidence      posterior contents and verdicts for a dataset
    mle           QM / LHV / no-signaling maximum-likelihood table
    gamma-scan    likelihood scan over the trigger probability, CSV output
    bhattacharyya angles between frequencies, target state, and the MLEs
    bias-check    mock-truth tally of in-favor verdicts
    reproduce     chain the full per-experiment analysis

Exit codes: 0 success, 2 validation/input error, 3 convergence or solver
failure.  All JSON output is key-sorted and timestamp-free, so identical
inputs reproduce identical bytes.
"""
from __future__ import annotations

import argparse
import fcntl
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bhattacharyya import bhattacharyya_angle
from .biascheck import run_bias_check
from .datasets import BUNDLED_DATASETS, DatasetBundle, load_dataset
from .errors import (BellevalError, ConvergenceFailure, ParseError,
                     RangeMaximumAtBoundary, SolverFailure)
from .evidence import evidence_table, posterior_contents
from .mle import estimate_gamma, lhv_mle, nosignaling_mle, qm_mle, triangle_report
from .params import ExperimentParams, load_params
from .prior import PriorSample, build_prior, content_interval_report
from .probability import SETTINGS, reduced_from_table
from .quantum import probabilities_from_state, target_state

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3


@dataclass(frozen=True)
class Profile:
    name: str
    sample_size: int      # prior points per component
    bias_mocks: int       # mock-true draws per region

    def as_dict(self) -> dict:
        return {"name": self.name, "sample_size": self.sample_size,
                "bias_mocks": self.bias_mocks}


PROFILES = {
    "paper": Profile("paper", 10**6, 10**4),
    "ci": Profile("ci", 10**5, 200),
}


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               default=_json_default) + "\n",
                    encoding="utf-8")


def _resolve(args) -> tuple[DatasetBundle | None, ExperimentParams, float]:
    """Dataset bundle (if any), parameters, and the gamma to analyze at."""
    bundle = load_dataset(args.dataset) if getattr(args, "dataset", None) else None
    if args.params is not None:
        params = load_params(args.params)
    elif bundle is not None and bundle.params is not None:
        params = bundle.params
    else:
        raise ParseError("no parameters: pass --params <preset|file>")
    if args.gamma is not None:
        gamma = args.gamma
    elif bundle is not None and bundle.params is not None and args.params is None:
        gamma = bundle.analysis_gamma
    else:
        gamma = params.gamma
    return bundle, params.with_gamma(gamma), gamma


class _CacheLock:
    """Advisory lock so one pipeline invocation owns the cache directory."""

    def __init__(self, cache_dir: Path):
        cache_dir.mkdir(parents=True, exist_ok=True)
        self._fh = open(cache_dir / ".lock", "w")

    def __enter__(self):
        fcntl.flock(self._fh, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        fcntl.flock(self._fh, fcntl.LOCK_UN)
        self._fh.close()


def _prior_sample(params: ExperimentParams, n: int, epsilon: float, seed: int,
                  out: Path, quiet: bool = False) -> PriorSample:
    """Load the prior from the cache if an identical build exists, else build
    and cache it."""
    key = {"params": params.as_dict(), "n_per_component": n,
           "epsilon": epsilon, "seed": seed}
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]
    cache_dir = out / "cache"
    path = cache_dir / f"prior-{digest}.bin"
    with _CacheLock(cache_dir):
        if path.exists():
            return PriorSample.load(path, expect_key=key)
        if not quiet:
            print(f"building prior sample ({2 * n} points) ...", file=sys.stderr)
        sample = build_prior(params, n, epsilon=epsilon, seed=seed)
        sample.save(path)
    return sample


def _sample_size(args) -> int:
    return args.sample_size if args.sample_size else PROFILES[args.profile].sample_size


# ---------------------------------------------------------------------------
# subcommands

def _cmd_prior(args, out: Path) -> int:
    _, params, gamma = _resolve(args)
    sample = _prior_sample(params, _sample_size(args), args.epsilon, args.seed, out)
    contents = sample.contents
    payload = {
        "params": params.as_dict(),
        "profile": args.profile,
        "seed": args.seed,
        "epsilon": args.epsilon,
        "n_per_component": len(sample) // 2,
        "contents": contents.as_dict(),
        "intervals": content_interval_report(contents),
    }
    tag = args.dataset if getattr(args, "dataset", None) else f"gamma-{gamma:g}"
    _write_json(out / f"prior-{tag}.json", payload)
    print(json.dumps(payload["contents"], sort_keys=True))
    return EXIT_OK


def _cmd_evidence(args, out: Path) -> int:
    bundle, params, _ = _resolve(args)
    sample = _prior_sample(params, _sample_size(args), args.epsilon, args.seed, out)
    report = posterior_contents(sample, bundle.counts, dataset=bundle.name)
    payload = report.as_dict()
    payload["profile"] = args.profile
    payload["seed"] = args.seed
    _write_json(out / f"evidence-{bundle.name}.json", payload)
    text = evidence_table(report)
    (out / f"evidence-{bundle.name}.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _mle_probability_table(bundle, params, results) -> str:
    """Aligned comparison of frequencies, target state, and the MLEs, scaled
    like the paper's per-setting tables (entries in units of 1e-6 when gamma
    is small, raw otherwise)."""
    scale = 1e6 if params.gamma < 0.01 else 1.0
    unit = "1e-6" if scale != 1.0 else "1"
    freq = bundle.counts.relative_frequencies()
    p_target = probabilities_from_state(target_state(params), params).table
    rows = {"frequencies": freq, "target": p_target,
            "QM-MLE": results["qm"].probabilities.table,
            "LHV-MLE": results["lhv"].probabilities.table,
            "NS-MLE": results["ns"].probabilities.table}
    hdr = f"{'source':<14}"
    for s in SETTINGS:
        for o in ("++", "+0", "0+"):
            hdr += f"{s + ':' + o:>12}"
    lines = [f"per-setting probabilities (units of {unit})", hdr]
    for name, tbl in rows.items():
        row = f"{name:<14}"
        for s in range(4):
            for o in range(3):
                row += f"{scale * tbl[s, o]:>12.2f}"
        lines.append(row)
    return "\n".join(lines)


def _cmd_mle(args, out: Path) -> int:
    bundle, params, gamma = _resolve(args)
    results = {
        "qm": qm_mle(bundle.counts, params, seed=args.seed),
        "lhv": lhv_mle(bundle.counts, params, seed=args.seed),
        "ns": nosignaling_mle(bundle.counts, params),
    }
    payload = {"dataset": bundle.name, "params": params.as_dict(), "gamma": gamma,
               "seed": args.seed}
    for key, res in results.items():
        payload[key] = {
            "log10_likelihood": res.log10_likelihood,
            "log_likelihood": res.log_likelihood,
            "iterations": res.iterations,
            "converged": res.converged,
            "reduced_probabilities": reduced_from_table(
                res.probabilities.table).tolist(),
        }
    payload["ratio_qm_over_lhv_log10"] = (payload["qm"]["log10_likelihood"]
                                          - payload["lhv"]["log10_likelihood"])
    _write_json(out / f"mle-{bundle.name}.json", payload)
    table = _mle_probability_table(bundle, params, results)
    (out / f"mle-{bundle.name}.txt").write_text(table + "\n", encoding="utf-8")
    print(f"log10 L: QM {payload['qm']['log10_likelihood']:.4f}  "
          f"LHV {payload['lhv']['log10_likelihood']:.4f}  "
          f"NS {payload['ns']['log10_likelihood']:.4f}")
    return EXIT_OK


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise ParseError(f"bad --range {text!r}, expected lo:hi") from exc
    return lo, hi


def _cmd_gamma_scan(args, out: Path) -> int:
    bundle, params, _ = _resolve(args)
    if args.range:
        rng = _parse_range(args.range)
    elif bundle.gamma_scan_range:
        rng = bundle.gamma_scan_range
    else:
        raise ParseError(f"dataset {bundle.name!r} has no default scan range; "
                         "pass --range lo:hi")
    base = params if args.params else (bundle.params or params)
    estimate = estimate_gamma(bundle.counts, base, rng, grid=args.grid,
                              seed=args.seed)
    csv_lines = ["gamma,log10_L_qm,log10_L_lhv,eberhard_violated,phi_b"]
    for pt in estimate.scan:
        csv_lines.append(f"{pt.gamma:.8g},{pt.log10_l_qm:.6f},{pt.log10_l_lhv:.6f},"
                         f"{int(pt.eberhard_violated)},{pt.phi_b_target_qm_mle:.6f}")
    (out / f"gamma-scan-{bundle.name}.csv").write_text(
        "\n".join(csv_lines) + "\n", encoding="utf-8")
    payload = {"dataset": bundle.name, "range": list(rng), "seed": args.seed,
               "gamma_hat": estimate.gamma_hat,
               "log10_L_at_hat": estimate.log10_l_at_hat}
    _write_json(out / f"gamma-scan-{bundle.name}.json", payload)
    print(f"gamma_hat = {estimate.gamma_hat:.6g} "
          f"(log10 L = {estimate.log10_l_at_hat:.4f})")
    return EXIT_OK


def _cmd_bhattacharyya(args, out: Path) -> int:
    bundle, params, gamma = _resolve(args)
    freq = bundle.counts.relative_frequencies()
    p_target = probabilities_from_state(target_state(params), params)
    res_qm = qm_mle(bundle.counts, params, seed=args.seed)
    res_lhv = lhv_mle(bundle.counts, params, seed=args.seed)
    tri = triangle_report(bundle.counts, params, seed=args.seed)
    payload = {
        "dataset": bundle.name, "gamma": gamma, "seed": args.seed,
        "angles": {
            "freq_target": bhattacharyya_angle(freq, p_target, gamma),
            "freq_qm_mle": bhattacharyya_angle(freq, res_qm.probabilities, gamma),
            "freq_lhv_mle": bhattacharyya_angle(freq, res_lhv.probabilities, gamma),
            "target_qm_mle": bhattacharyya_angle(p_target, res_qm.probabilities, gamma),
        },
        "triangle": tri.as_dict(),
        "triangle_inequality_ok": tri.satisfies_triangle_inequality,
    }
    _write_json(out / f"bhattacharyya-{bundle.name}.json", payload)
    print(json.dumps(payload["angles"], sort_keys=True))
    return EXIT_OK


def _cmd_bias_check(args, out: Path) -> int:
    bundle, params, _ = _resolve(args)
    sample = _prior_sample(params, _sample_size(args), args.epsilon, args.seed, out)
    mocks = args.mocks if args.mocks else PROFILES[args.profile].bias_mocks
    tally = run_bias_check(params, sample, mocks, bundle.counts.total,
                           seed=args.seed)
    payload = {"dataset": bundle.name, "profile": args.profile, "seed": args.seed,
               "n_triggers": bundle.counts.total, "tally": tally.as_dict()}
    _write_json(out / f"bias-check-{bundle.name}.json", payload)
    text = tally.table()
    (out / f"bias-check-{bundle.name}.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_reproduce(args, out: Path) -> int:
    """Chain the per-experiment analysis; each stage's files land as soon as
    the stage finishes, so partial results survive a late failure."""
    stages = []
    bundle = load_dataset(args.dataset)
    manifest = {"dataset": bundle.name, "profile": args.profile,
                "seed": args.seed, "stages": stages}

    def stage(name, fn):
        try:
            fn(args, out)
            stages.append({"stage": name, "status": "ok"})
        except Exception as exc:
            stages.append({"stage": name, "status": "failed",
                           "error": f"{type(exc).__name__}: {exc}"})
            _write_json(out / f"report-{bundle.name}.json", manifest)
            raise

    if bundle.gamma_scan_range is not None:
        stage("gamma-scan", _cmd_gamma_scan)
    stage("prior", _cmd_prior)
    stage("evidence", _cmd_evidence)
    stage("mle", _cmd_mle)
    stage("bhattacharyya", _cmd_bhattacharyya)
    stage("bias-check", _cmd_bias_check)
    _write_json(out / f"report-{bundle.name}.json", manifest)
    print(f"report written to {out / f'report-{bundle.name}.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_common(sub, dataset: bool = True):
    if dataset:
        sub.add_argument("dataset", help="bundled id (%s) or a counts file"
                         % ", ".join(BUNDLED_DATASETS))
    sub.add_argument("--params", help="experiment preset name or JSON config file")
    sub.add_argument("--gamma", type=float, help="override the trigger probability")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--profile", choices=sorted(PROFILES), default="ci")
    sub.add_argument("--out", default="belleval-out", help="output directory")
    sub.add_argument("--sample-size", type=int, default=0,
                     help="prior points per component (default: profile value)")
    sub.add_argument("--epsilon", type=float, default=0.001,
                     help="admixture weight in the prior samplers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="belleval",
        description="Bayesian evidence evaluation of Bell-test event counts")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("prior", help="build a prior sample, report contents")
    sp.add_argument("dataset", nargs="?", help="optional bundled id for params")
    _add_common(sp, dataset=False)

    _add_common(subs.add_parser("evidence", help="posterior contents and verdicts"))
    _add_common(subs.add_parser("mle", help="constrained maximum-likelihood table"))

    sp = subs.add_parser("gamma-scan", help="self-calibration scan over gamma")
    _add_common(sp)
    sp.add_argument("--range", help="scan range lo:hi (default: bundle metadata)")
    sp.add_argument("--grid", type=int, default=41, help="coarse grid points")

    _add_common(subs.add_parser("bhattacharyya", help="probability-space angles"))

    sp = subs.add_parser("bias-check", help="prior-bias tally from mock truths")
    _add_common(sp)
    sp.add_argument("--mocks", type=int, default=0,
                    help="mock draws per region (default: profile value)")

    sp = subs.add_parser("reproduce", help="full per-experiment analysis chain")
    _add_common(sp)
    sp.add_argument("--range", help="gamma scan range lo:hi")
    sp.add_argument("--grid", type=int, default=41)
    sp.add_argument("--mocks", type=int, default=0)
    return parser


_HANDLERS = {
    "prior": _cmd_prior,
    "evidence": _cmd_evidence,
    "mle": _cmd_mle,
    "gamma-scan": _cmd_gamma_scan,
    "bhattacharyya": _cmd_bhattacharyya,
    "bias-check": _cmd_bias_check,
    "reproduce": _cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _HANDLERS[args.command](args, out)
    except (ConvergenceFailure, SolverFailure, RangeMaximumAtBoundary) as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (BellevalError, ValueError, OSError) as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
