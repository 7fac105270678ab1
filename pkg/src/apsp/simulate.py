"""Scenario generators, selection metrics, and the replicate benchmark runner.

Four scenarios span the spectrum from full coefficient exchangeability
between the external and internal generating models down to disjoint signal
sets.  Fifteen covariates: five standard normal, five uniform on (-1, 1),
five Bernoulli(0.5); six are signals in each dataset.  Within a replicate
every method sees the same generated pair of datasets, so cross-method
comparisons are paired.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .apsp import build_apsp_prior, two_step_fit
from .baselines import (
    fit_commensurate,
    fit_horseshoe,
    fit_lasso,
    fit_map,
    fit_modified_power_prior,
    fit_power_prior,
)
from .data import (
    Dataset,
    apply_standardization,
    destandardized_coefficients,
    fit_standardization,
)
from .empirical_null import calibrate_null, select
from .errors import UserInputError
from .mcmc import ChainSpec, derive_rng, derive_seed
from .ssp import SspPriorSpec, fit_ssp

K_COVARIATES = 15
N_EXTERNAL_DEFAULT = 50

SCENARIOS = ("IdenticalSignals", "SamePattern", "PartialOverlap", "NoOverlap")
ALL_METHODS = ("APSP", "SSP", "LASSO", "HP", "PP", "MAP", "MPP", "CP")

# 1-based signal positions and coefficient values per generating model
EXTERNAL_BETA = np.zeros(K_COVARIATES)
EXTERNAL_BETA[[0, 1, 5, 6, 10, 11]] = [0.5, 1.5, -0.6, -1.5, 0.4, 1.2]

INTERNAL_BETA = {
    "IdenticalSignals": EXTERNAL_BETA.copy(),
    "SamePattern": np.zeros(K_COVARIATES),
    "PartialOverlap": np.zeros(K_COVARIATES),
    "NoOverlap": np.zeros(K_COVARIATES),
}
INTERNAL_BETA["SamePattern"][[0, 1, 5, 6, 10, 11]] = [0.8, 1.8, -1.0, -1.7, 0.3, 1.4]
INTERNAL_BETA["PartialOverlap"][[1, 2, 6, 7, 11, 12]] = [1.0, 1.6, -0.8, -1.2, 0.8, 1.5]
INTERNAL_BETA["NoOverlap"][[2, 3, 7, 8, 12, 13]] = [1.0, 1.6, -0.8, -1.2, 0.8, 1.5]

COLUMNS = tuple(
    (f"x{i + 1}", "continuous" if i < 10 else "binary") for i in range(K_COVARIATES)
)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    n_internal: int
    n_external: int = N_EXTERNAL_DEFAULT
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise UserInputError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.n_internal < 2 or self.n_external < 2:
            raise UserInputError("sample sizes must be at least 2")
        if self.noise_sd <= 0:
            raise UserInputError("noise_sd must be positive")


def _draw_covariates(rng, n):
    return np.column_stack([
        rng.standard_normal((n, 5)),
        rng.uniform(-1.0, 1.0, (n, 5)),
        rng.integers(0, 2, (n, 5)).astype(float),
    ])


def generate_scenario(spec: ScenarioSpec) -> tuple[Dataset, Dataset, np.ndarray]:
    """Independent external and internal draws; returns the true internal beta."""
    rng = derive_rng(spec.seed, "dgp", spec.scenario)
    beta_int = INTERNAL_BETA[spec.scenario]
    x_ext = _draw_covariates(rng, spec.n_external)
    y_ext = x_ext @ EXTERNAL_BETA + spec.noise_sd * rng.standard_normal(spec.n_external)
    x_int = _draw_covariates(rng, spec.n_internal)
    y_int = x_int @ beta_int + spec.noise_sd * rng.standard_normal(spec.n_internal)
    ds_ext = Dataset("external", "external", COLUMNS, x_ext, y_ext)
    ds_int = Dataset("internal", "internal", COLUMNS, x_int, y_int)
    return ds_ext, ds_int, beta_int.copy()


def score_selection(selected, truth) -> tuple[float, float, float]:
    """(correctness %, false discovery rate, true discovery rate); 0/0 -> 0."""
    selected = np.asarray(selected, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if selected.shape != truth.shape:
        raise UserInputError("selection and truth vectors differ in length")
    tp = int(np.sum(selected & truth))
    fp = int(np.sum(selected & ~truth))
    fn = int(np.sum(~selected & truth))
    tn = int(np.sum(~selected & ~truth))
    k = selected.size
    correctness = 100.0 * (tp + tn) / k
    fdr = fp / max(tp + fp, 1)
    tdr = tp / max(tp + fn, 1)
    return correctness, fdr, tdr


def score_rmse(beta_hat, beta_true) -> float:
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise UserInputError("coefficient vectors differ in length")
    return float(np.sqrt(np.mean((beta_hat - beta_true) ** 2)))


@dataclass(frozen=True)
class MetricsRow:
    scenario: str
    method: str
    n_internal: int
    replicate: int
    correctness_pct: float
    fdr: float
    tdr: float
    rmse: float
    status: str = "ok"


@dataclass(frozen=True)
class BenchmarkConfig:
    scenarios: tuple = SCENARIOS
    methods: tuple = ALL_METHODS
    n_internal: tuple = (10, 20, 30)
    replicates: int = 200
    seed: int = 0
    noise_sd: float = 1.0
    n_external: int = N_EXTERNAL_DEFAULT
    chain: ChainSpec = field(default_factory=ChainSpec)
    null_n: int = 0  # 0: adaptive selection thresholds fixed at 0.5
    null_chain: ChainSpec | None = None
    a0: float = 1.0
    threshold: float = 0.5
    standardization: str = "pooled"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_internal", tuple(int(n) for n in self.n_internal))
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown:
            raise UserInputError(f"unknown scenarios: {sorted(unknown)}")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise UserInputError(f"unknown methods: {sorted(unknown)}")
        if self.replicates < 1:
            raise UserInputError("replicates must be >= 1")
        if self.null_n < 0:
            raise UserInputError("null_n must be >= 0")


def _fit_one_method(method, cfg, exts, ints, smap, seed_base):
    chain = cfg.chain

    def cseed(*labels):
        return chain.with_seed(derive_seed(cfg.seed, *seed_base, method, *labels))

    if method == "SSP":
        fit = fit_ssp(ints, SspPriorSpec(), cseed(), diagnostics=False)
        selected = fit.pips() > cfg.threshold
    elif method == "APSP":
        fit, ext_summary = two_step_fit(
            exts, ints, SspPriorSpec(),
            cseed("external"), cseed("internal"), threshold=cfg.threshold,
        )
        if cfg.null_n > 0:
            null_chain = cfg.null_chain or chain
            thresholds = calibrate_null(
                exts, ints,
                n_replicates=cfg.null_n,
                seed=derive_seed(cfg.seed, *seed_base, method, "null"),
                chain_external=null_chain,
                chain_internal=null_chain,
                threshold=cfg.threshold,
                mode="fixed-prior",
                apsp_prior=build_apsp_prior(ext_summary, ints.column_names),
                keep_matrix=False,
            )
            selected = select(fit.pips(), thresholds)
        else:
            selected = fit.pips() > cfg.threshold
    elif method == "LASSO":
        fit = fit_lasso(ints, seed=derive_seed(cfg.seed, *seed_base, method))
        selected = fit.selected
    elif method == "HP":
        fit = fit_horseshoe(ints, cseed(), diagnostics=False)
        selected = fit.selected
    elif method == "PP":
        fit = fit_power_prior(ints, exts, a0=cfg.a0)
        selected = fit.selected
    elif method == "MPP":
        fit = fit_modified_power_prior(ints, exts, chain=cseed(), diagnostics=False)
        selected = fit.selected
    elif method == "MAP":
        fit = fit_map(ints, exts, chain=cseed(), diagnostics=False)
        selected = fit.selected
    elif method == "CP":
        fit = fit_commensurate(ints, exts, chain=cseed(), diagnostics=False)
        selected = fit.selected
    else:
        raise UserInputError(f"unknown method {method!r}")
    beta_hat = destandardized_coefficients(fit.means(), ints.columns, smap, ints.name)
    return selected, beta_hat


def _bench_cell(args):
    cfg, scenario, n_int, rep = args
    spec = ScenarioSpec(
        scenario, n_int, cfg.n_external, cfg.noise_sd,
        seed=derive_seed(cfg.seed, "data", scenario, n_int, rep),
    )
    ds_ext, ds_int, beta_true = generate_scenario(spec)
    smap = fit_standardization([ds_ext, ds_int], cfg.standardization)
    exts = apply_standardization(ds_ext, smap)
    ints = apply_standardization(ds_int, smap)
    truth = beta_true != 0.0
    rows = []
    for method in cfg.methods:
        try:
            selected, beta_hat = _fit_one_method(
                method, cfg, exts, ints, smap, (scenario, n_int, rep)
            )
            correctness, fdr, tdr = score_selection(selected, truth)
            rmse = score_rmse(beta_hat, beta_true)
            rows.append(MetricsRow(scenario, method, n_int, rep,
                                   correctness, fdr, tdr, rmse))
        except Exception as exc:  # flagged row, never a silent drop
            rows.append(MetricsRow(scenario, method, n_int, rep,
                                   float("nan"), float("nan"), float("nan"),
                                   float("nan"), status=f"failed: {type(exc).__name__}"))
    return rows


def run_benchmark(cfg: BenchmarkConfig) -> list[MetricsRow]:
    """Paired replicate benchmark; rows in deterministic order."""
    tasks = [
        (cfg, scenario, n, rep)
        for scenario in cfg.scenarios
        for n in cfg.n_internal
        for rep in range(cfg.replicates)
    ]
    all_rows = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for rows in pool.map(_bench_cell, tasks, chunksize=1):
                all_rows.extend(rows)
    else:
        for task in tasks:
            all_rows.extend(_bench_cell(task))
    order = {
        (s, n, r, m): i
        for i, (s, n, r, m) in enumerate(
            (s, n, r, m)
            for s in cfg.scenarios
            for n in cfg.n_internal
            for r in range(cfg.replicates)
            for m in cfg.methods
        )
    }
    all_rows.sort(key=lambda row: order[(row.scenario, row.n_internal, row.replicate, row.method)])
    return all_rows


def summarize_benchmark(rows: list[MetricsRow]) -> dict:
    """Per-(n, scenario, method) mean and sd of each metric over ok rows."""
    cells: dict = {}
    for row in sorted(rows, key=lambda r: (r.n_internal, r.scenario, r.method, r.replicate)):
        cells.setdefault((row.n_internal, row.scenario, row.method), []).append(row)
    out: dict = {}
    for (n, scenario, method), cell_rows in cells.items():
        ok = [r for r in cell_rows if r.status == "ok"]
        entry = {"n_ok": len(ok), "n_failed": len(cell_rows) - len(ok)}
        for metric in ("correctness_pct", "fdr", "tdr", "rmse"):
            values = np.array([getattr(r, metric) for r in ok])
            entry[metric] = {
                "mean": float(values.mean()) if len(ok) else None,
                "sd": float(values.std(ddof=1)) if len(ok) > 1 else 0.0 if len(ok) else None,
            }
        out.setdefault(str(n), {}).setdefault(scenario, {})[method] = entry
    return out


METRICS_HEADER = "scenario,method,n_internal,replicate,correctness_pct,fdr,tdr,rmse,status"


def write_metrics_csv(rows: list[MetricsRow], path) -> None:
    lines = [METRICS_HEADER]
    for r in rows:
        lines.append(
            f"{r.scenario},{r.method},{r.n_internal},{r.replicate},"
            f"{repr(r.correctness_pct)},{repr(r.fdr)},{repr(r.tdr)},{repr(r.rmse)},{r.status}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_metrics_csv(path) -> list[MetricsRow]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != METRICS_HEADER:
        raise UserInputError(f"{path} is not a metrics table (bad header)")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 9:
            raise UserInputError(f"malformed metrics row: {ln!r}")
        rows.append(MetricsRow(
            parts[0], parts[1], int(parts[2]), int(parts[3]),
            float(parts[4]), float(parts[5]), float(parts[6]), float(parts[7]),
            parts[8],
        ))
    return rows


def write_summary(rows: list[MetricsRow], csv_path, json_path,
                  scenarios=SCENARIOS, methods=ALL_METHODS) -> dict:
    """Correctness table (mean (sd) cells) as CSV plus full summary JSON."""
    summary = summarize_benchmark(rows)
    present_n = sorted({r.n_internal for r in rows})
    present_scen = [s for s in scenarios if any(r.scenario == s for r in rows)]
    present_methods = [m for m in methods if any(r.method == m for r in rows)]
    lines = ["n_internal,scenario," + ",".join(present_methods)]
    for n in present_n:
        for scenario in present_scen:
            cells = []
            for method in present_methods:
                entry = summary.get(str(n), {}).get(scenario, {}).get(method)
                if entry is None or entry["correctness_pct"]["mean"] is None:
                    cells.append("")
                else:
                    c = entry["correctness_pct"]
                    cells.append(f"{c['mean']:.1f} ({c['sd']:.1f})")
            lines.append(f"{n},{scenario}," + ",".join(cells))
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
