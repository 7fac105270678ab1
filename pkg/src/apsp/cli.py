"""Command-line surface: fit, simulate, calibrate-null, baseline, report.

A run is configured by an optional JSON file plus flags; flags win.  All
randomness flows from one seed, commands never mutate their inputs, and a
rerun with identical configuration produces byte-identical outputs.  Exit
codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .apsp import build_apsp_prior, two_step_fit
from .baselines import (
    METHODS,
    fit_commensurate,
    fit_horseshoe,
    fit_lasso,
    fit_map,
    fit_modified_power_prior,
    fit_power_prior,
)
from .data import apply_standardization, fit_standardization, ingest_csv
from .empirical_null import NullThresholds, calibrate_null, select
from .errors import ChainDivergenceError, UserInputError
from .mcmc import ChainSpec, derive_seed
from .report import write_report
from .simulate import (
    ALL_METHODS,
    SCENARIOS,
    BenchmarkConfig,
    read_metrics_csv,
    run_benchmark,
    write_metrics_csv,
    write_summary,
)
from .ssp import SspPriorSpec, fit_ssp

_CONFIG_KEYS = {
    "fit": {"seed", "outcome", "chain", "null_chain", "null_n", "threshold",
            "standardization", "workers", "out", "no_null"},
    "simulate": {"seed", "chain", "null_chain", "null_n", "scenarios", "methods",
                 "n_internal", "replicates", "noise_sd", "n_external", "a0",
                 "threshold", "standardization", "workers", "out"},
    "calibrate-null": {"seed", "outcome", "chain", "null_chain", "n", "mode",
                       "standardization", "workers", "out", "save_pips"},
    "baseline": {"seed", "outcome", "chain", "method", "a0", "standardization", "out"},
    "report": {"out"},
}


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UserInputError(f"no such config file: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UserInputError(f"config {p} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UserInputError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS[command]
    if unknown:
        raise UserInputError(f"unknown config keys for {command!r}: {sorted(unknown)}")
    return cfg


def _setting(args, cfg: dict, key: str, default):
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _chain_from(cfg: dict, key: str, seed: int) -> ChainSpec:
    spec = dict(cfg.get(key) or {})
    spec.setdefault("seed", seed)
    return ChainSpec.from_dict(spec)


def _ingest_pair(args, outcome):
    ds_ext = ingest_csv(args.external, outcome, "external")
    ds_int = ingest_csv(args.internal, outcome, "internal")
    return ds_ext, ds_int


def _standardize_pair(ds_ext, ds_int, policy):
    smap = fit_standardization([ds_ext, ds_int], policy)
    return apply_standardization(ds_ext, smap), apply_standardization(ds_int, smap), smap


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_selection_csv(path: Path, columns, pips, thresholds, selected) -> None:
    lines = ["covariate,pip,threshold,selected"]
    for c, p, t, s in zip(columns, pips, thresholds, selected):
        pip_txt = "" if p is None or (isinstance(p, float) and np.isnan(p)) else repr(float(p))
        lines.append(f"{c},{pip_txt},{repr(float(t))},{int(bool(s))}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_fit(args) -> int:
    cfg = _load_config(args.config, "fit")
    outcome = _setting(args, cfg, "outcome", None)
    if outcome is None:
        raise UserInputError("an outcome column is required (--outcome or config)")
    seed = int(_setting(args, cfg, "seed", 0))
    threshold = float(_setting(args, cfg, "threshold", 0.5))
    workers = int(_setting(args, cfg, "workers", 1))
    no_null = bool(args.no_null or cfg.get("no_null", False))
    null_n = int(_setting(args, cfg, "null_n", 200))
    out = Path(_setting(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)

    ds_ext, ds_int = _ingest_pair(args, outcome)
    exts, ints, smap = _standardize_pair(
        ds_ext, ds_int, str(_setting(args, cfg, "standardization", "pooled"))
    )
    chain = _chain_from(cfg, "chain", derive_seed(seed, "fit"))
    fit, ext = two_step_fit(
        exts, ints,
        chain_external=chain.with_seed(derive_seed(seed, "fit", "external")),
        chain_internal=chain.with_seed(derive_seed(seed, "fit", "internal")),
        threshold=threshold, diagnostics=True,
    )
    pips = fit.pips()
    if no_null:
        thr = np.full(ints.k, threshold)
        selected = pips > thr
    else:
        null_chain = _chain_from(cfg, "null_chain", 0)
        thresholds = calibrate_null(
            exts, ints, n_replicates=null_n, seed=derive_seed(seed, "null"),
            chain_external=null_chain, chain_internal=null_chain,
            threshold=threshold, mode="fixed-prior",
            apsp_prior=build_apsp_prior(ext, ints.column_names),
            workers=workers, keep_matrix=False,
        )
        _write_json(out / "thresholds.json", json.loads(thresholds.to_json()))
        thr = thresholds.c_hat
        selected = select(pips, thresholds)
    fit.selected = selected
    payload = fit.to_dict()
    payload["external_summary"] = {
        "columns": list(ext.columns),
        "beta_hat": [float(v) for v in ext.beta_hat],
        "var_hat": [float(v) for v in ext.var_hat],
        "pip": [float(v) for v in ext.pip],
        "delta_hat": [int(v) for v in ext.delta_hat],
        "threshold_used": ext.threshold_used,
    }
    payload["standardization"] = json.loads(smap.to_json())
    payload["dropped_rows"] = {"external": ds_ext.n_dropped, "internal": ds_int.n_dropped}
    _write_json(out / "fit.json", payload)
    _write_selection_csv(out / "selection.csv", ints.column_names, pips, thr, selected)
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config, "simulate")
    seed = int(_setting(args, cfg, "seed", 0))
    chain = _chain_from(cfg, "chain", 0)
    null_chain = _chain_from(cfg, "null_chain", 0) if cfg.get("null_chain") else None
    bench = BenchmarkConfig(
        scenarios=tuple(_setting(args, cfg, "scenarios", SCENARIOS)),
        methods=tuple(_setting(args, cfg, "methods", ALL_METHODS)),
        n_internal=tuple(_setting(args, cfg, "n_internal", (10, 20, 30))),
        replicates=int(_setting(args, cfg, "replicates", 200)),
        seed=seed,
        noise_sd=float(_setting(args, cfg, "noise_sd", 1.0)),
        n_external=int(_setting(args, cfg, "n_external", 50)),
        chain=chain,
        null_n=int(_setting(args, cfg, "null_n", 0)),
        null_chain=null_chain,
        a0=float(_setting(args, cfg, "a0", 1.0)),
        threshold=float(_setting(args, cfg, "threshold", 0.5)),
        standardization=str(_setting(args, cfg, "standardization", "pooled")),
        workers=int(_setting(args, cfg, "workers", 1)),
    )
    out = Path(_setting(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    rows = run_benchmark(bench)
    write_metrics_csv(rows, out / "metrics.csv")
    write_summary(rows, out / "summary.csv", out / "summary.json")
    n_failed = sum(1 for r in rows if r.status != "ok")
    if n_failed:
        print(f"{n_failed} of {len(rows)} method runs failed (flagged in metrics.csv)",
              file=sys.stderr)
    return 0


def _cmd_calibrate_null(args) -> int:
    cfg = _load_config(args.config, "calibrate-null")
    outcome = _setting(args, cfg, "outcome", None)
    if outcome is None:
        raise UserInputError("an outcome column is required (--outcome or config)")
    seed = int(_setting(args, cfg, "seed", 0))
    out = Path(_setting(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    ds_ext, ds_int = _ingest_pair(args, outcome)
    exts, ints, _ = _standardize_pair(
        ds_ext, ds_int, str(_setting(args, cfg, "standardization", "pooled"))
    )
    chain = _chain_from(cfg, "chain", 0)
    thresholds = calibrate_null(
        exts, ints,
        n_replicates=int(_setting(args, cfg, "n", 200)),
        seed=derive_seed(seed, "null"),
        chain_external=chain, chain_internal=chain,
        mode=str(_setting(args, cfg, "mode", "fixed-prior")),
        workers=int(_setting(args, cfg, "workers", 1)),
    )
    (out / "thresholds.json").write_text(thresholds.to_json() + "\n", encoding="utf-8")
    if args.save_pips or cfg.get("save_pips"):
        thresholds.write_matrix_csv(out / "null_pips.csv")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _load_config(args.config, "baseline")
    method = _setting(args, cfg, "method", None)
    if method is None:
        raise UserInputError("--method is required")
    if method not in METHODS:
        raise UserInputError(f"unknown method {method!r}; choose from {METHODS}")
    outcome = _setting(args, cfg, "outcome", None)
    if outcome is None:
        raise UserInputError("an outcome column is required (--outcome or config)")
    seed = int(_setting(args, cfg, "seed", 0))
    out = Path(_setting(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    needs_external = method in ("PP", "MPP", "MAP", "CP")
    if needs_external and args.external is None:
        raise UserInputError(f"method {method} needs an external dataset")
    ds_int = ingest_csv(args.internal, outcome, "internal")
    policy = str(_setting(args, cfg, "standardization", "pooled"))
    if args.external is not None:
        ds_ext = ingest_csv(args.external, outcome, "external")
        exts, ints, _ = _standardize_pair(ds_ext, ds_int, policy)
    else:
        smap = fit_standardization([ds_int], policy)
        ints = apply_standardization(ds_int, smap)
        exts = None
    chain = _chain_from(cfg, "chain", derive_seed(seed, "baseline", method))
    a0 = float(_setting(args, cfg, "a0", 1.0))
    if method == "SSP":
        fit = fit_ssp(ints, SspPriorSpec(), chain)
    elif method == "LASSO":
        fit = fit_lasso(ints, seed=derive_seed(seed, "baseline", "LASSO"))
    elif method == "HP":
        fit = fit_horseshoe(ints, chain)
    elif method == "PP":
        fit = fit_power_prior(ints, exts, a0=a0)
    elif method == "MPP":
        fit = fit_modified_power_prior(ints, exts, chain=chain)
    elif method == "MAP":
        fit = fit_map(ints, exts, chain=chain)
    else:
        fit = fit_commensurate(ints, exts, chain=chain)
    _write_json(out / f"{method.lower()}_fit.json", fit.to_dict())
    pips = fit.pips()
    thr = np.full(ints.k, 0.5)
    _write_selection_csv(
        out / f"{method.lower()}_selection.csv",
        ints.column_names,
        [None if np.isnan(p) else p for p in pips],
        thr, fit.selected,
    )
    return 0


def _cmd_report(args) -> int:
    cfg = _load_config(args.config, "report")
    out = Path(_setting(args, cfg, "out", "."))
    rows = read_metrics_csv(args.metrics)
    written = write_report(rows, out)
    for p in written:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apsp",
        description="Variable selection for small samples with adaptive external borrowing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run-configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    p_fit = sub.add_parser("fit", help="two-step adaptive borrowing fit on two CSVs")
    p_fit.add_argument("external")
    p_fit.add_argument("internal")
    p_fit.add_argument("--outcome", default=None)
    p_fit.add_argument("--threshold", type=float, default=None)
    p_fit.add_argument("--no-null", action="store_true",
                       help="skip null calibration; threshold selection at 0.5")
    p_fit.add_argument("--null-n", dest="null_n", type=int, default=None)
    p_fit.add_argument("--workers", type=int, default=None)
    add_common(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_sim = sub.add_parser("simulate", help="run the replicate benchmark")
    p_sim.add_argument("--scenarios", nargs="+", default=None, choices=SCENARIOS)
    p_sim.add_argument("--methods", nargs="+", default=None, choices=ALL_METHODS)
    p_sim.add_argument("--n-internal", dest="n_internal", nargs="+", type=int, default=None)
    p_sim.add_argument("--replicates", type=int, default=None)
    p_sim.add_argument("--noise-sd", dest="noise_sd", type=float, default=None)
    p_sim.add_argument("--null-n", dest="null_n", type=int, default=None)
    p_sim.add_argument("--a0", type=float, default=None)
    p_sim.add_argument("--workers", type=int, default=None)
    add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_null = sub.add_parser("calibrate-null", help="permutation empirical-null thresholds")
    p_null.add_argument("external")
    p_null.add_argument("internal")
    p_null.add_argument("--outcome", default=None)
    p_null.add_argument("--n", type=int, default=None, help="permutation replicates")
    p_null.add_argument("--mode", choices=("fixed-prior", "two-step", "combined"),
                        default=None)
    p_null.add_argument("--workers", type=int, default=None)
    p_null.add_argument("--save-pips", action="store_true",
                        help="also write the replicate pip matrix as CSV")
    add_common(p_null)
    p_null.set_defaults(func=_cmd_calibrate_null)

    p_base = sub.add_parser("baseline", help="run one comparison method")
    p_base.add_argument("internal")
    p_base.add_argument("external", nargs="?", default=None)
    p_base.add_argument("--method", choices=METHODS, default=None)
    p_base.add_argument("--outcome", default=None)
    p_base.add_argument("--a0", type=float, default=None)
    add_common(p_base)
    p_base.set_defaults(func=_cmd_baseline)

    p_rep = sub.add_parser("report", help="SVG charts from a metrics CSV")
    p_rep.add_argument("metrics")
    add_common(p_rep)
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UserInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ChainDivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
