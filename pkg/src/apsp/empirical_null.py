"""Permutation empirical null: per-covariate selection thresholds.

The combined outcome vector is permuted without replacement (breaking any
X-Y association), split back into the original external/internal blocks, and
the full two-step pipeline is rerun; the mean of each covariate's null
inclusion probabilities over replicates becomes its threshold.  Calibrating
on the same statistic that is later thresholded keeps the selection rule
honest about how much apparent signal borrowing alone can manufacture.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .apsp import build_apsp_prior, fit_apsp, two_step_fit
from .data import Dataset, require_same_schema
from .errors import UserInputError
from .mcmc import ChainSpec, derive_rng, derive_seed
from .ssp import SspPriorSpec, fit_ssp, summarize_external

MODES = ("fixed-prior", "two-step", "combined")
_RUNTIME_WARN_REPLICATES = 1000


@dataclass(frozen=True)
class NullThresholds:
    """Per-covariate null-PIP means, with the replicate matrix optionally kept."""

    columns: tuple[str, ...]
    c_hat: np.ndarray
    n_replicates: int
    seed: int
    pip_matrix: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c_hat, dtype=float)
        if c.shape != (len(self.columns),):
            raise UserInputError("c_hat must have one entry per covariate")
        object.__setattr__(self, "c_hat", c)
        if self.n_replicates < 1:
            raise UserInputError("n_replicates must be >= 1")
        if np.any((c < 0) | (c > 1)):
            raise UserInputError("thresholds must lie in [0, 1]")
        if self.pip_matrix is not None:
            m = np.asarray(self.pip_matrix, dtype=float)
            if m.shape != (self.n_replicates, len(self.columns)):
                raise UserInputError("pip matrix shape mismatch")
            if np.any((m < 0) | (m > 1)):
                raise UserInputError("pip matrix entries must lie in [0, 1]")
            if np.max(np.abs(m.mean(axis=0) - c)) > 1e-12:
                raise UserInputError("c_hat must equal the column means of the pip matrix")
            object.__setattr__(self, "pip_matrix", m)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_replicates": self.n_replicates,
                "seed": self.seed,
                "thresholds": [
                    {"covariate": c, "c_hat": float(v)}
                    for c, v in zip(self.columns, self.c_hat)
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "NullThresholds":
        d = json.loads(text)
        cols = tuple(r["covariate"] for r in d["thresholds"])
        c_hat = np.array([r["c_hat"] for r in d["thresholds"]], dtype=float)
        return cls(cols, c_hat, int(d["n_replicates"]), int(d["seed"]))

    def write_matrix_csv(self, path) -> None:
        if self.pip_matrix is None:
            raise UserInputError("replicate matrix was not retained")
        header = ",".join(self.columns)
        rows = [",".join(repr(float(v)) for v in row) for row in self.pip_matrix]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n" + "\n".join(rows) + "\n")


def _null_replicate(args):
    (j, ds_ext, ds_int, seed, chain_ext, chain_int, prior, threshold, tau_hyper,
     mode, apsp_prior) = args
    rng = derive_rng(seed, "null-permutation", j)
    y_all = np.concatenate([ds_ext.y, ds_int.y])
    y_perm = y_all[rng.permutation(len(y_all))]
    n_ext = ds_ext.n
    ext_j = ds_ext.with_outcome(y_perm[:n_ext])
    int_j = ds_int.with_outcome(y_perm[n_ext:])
    if mode == "fixed-prior":
        # the real borrowing structure stays in place; only the internal
        # model is refit, so the null carries the same prior pull and sample
        # size as the statistic being thresholded
        fit = fit_apsp(int_j, apsp_prior,
                       chain_int.with_seed(derive_seed(seed, "null", j, "internal")),
                       diagnostics=False)
        return j, fit.pips()
    if mode == "combined":
        combined = Dataset(
            "null-combined", "internal", ds_int.columns,
            np.vstack([ext_j.X, int_j.X]), y_perm,
            standardization=ds_int.standardization,
        )
        chain = chain_int.with_seed(derive_seed(seed, "null", j, "combined"))
        if apsp_prior is not None:
            fit = fit_apsp(combined, apsp_prior, chain, diagnostics=False)
        else:
            fit = fit_ssp(combined, prior, chain, diagnostics=False)
        return j, fit.pips()
    fit, _ = two_step_fit(
        ext_j, int_j, prior,
        chain_ext.with_seed(derive_seed(seed, "null", j, "external")),
        chain_int.with_seed(derive_seed(seed, "null", j, "internal")),
        threshold=threshold, tau_hyper=tau_hyper,
    )
    return j, fit.pips()


def calibrate_null(
    ds_ext: Dataset,
    ds_int: Dataset,
    *,
    n_replicates: int = 200,
    seed: int = 0,
    chain_external: ChainSpec | None = None,
    chain_internal: ChainSpec | None = None,
    prior: SspPriorSpec | None = None,
    threshold: float = 0.5,
    tau_hyper: tuple[float, float] = (2.0, 2.0),
    mode: str = "fixed-prior",
    apsp_prior=None,
    workers: int = 1,
    keep_matrix: bool = True,
) -> NullThresholds:
    """Mean null PIP per covariate over permutation replicates.

    Permutations and chain seeds are derived from (seed, replicate), so the
    result is deterministic regardless of worker count or completion order.

    Modes: ``fixed-prior`` (default pipeline choice) keeps the real external
    fit's borrowing structure (``apsp_prior``) and refits only the internal
    model on each permuted internal block, so the null carries the same
    prior pull and sample size as the statistic being thresholded;
    ``two-step`` reruns the whole pipeline on permuted blocks (the external
    refit rarely borrows, so borrowed covariates get uncalibrated
    thresholds); ``combined`` fits once on the stacked permuted data.
    """
    require_same_schema(ds_ext, ds_int)
    if mode not in MODES:
        raise UserInputError(f"mode must be one of {MODES}")
    chain_external = chain_external or ChainSpec()
    chain_internal = chain_internal or ChainSpec()
    prior = prior or SspPriorSpec()
    if mode == "fixed-prior" and apsp_prior is None:
        # derive the borrowing structure the thresholds are calibrated for
        ext_fit = fit_ssp(
            ds_ext, prior,
            chain_external.with_seed(derive_seed(seed, "null", "external-fit")),
            diagnostics=False,
        )
        apsp_prior = build_apsp_prior(
            summarize_external(ext_fit, threshold), ds_int.column_names, prior, tau_hyper
        )
    if n_replicates < 1:
        raise UserInputError("n_replicates must be >= 1")
    if n_replicates > _RUNTIME_WARN_REPLICATES:
        warnings.warn(
            f"{n_replicates} permutation replicates each rerun the full pipeline; "
            "this may take a while",
            stacklevel=2,
        )
    tasks = [
        (j, ds_ext, ds_int, seed, chain_external, chain_internal, prior,
         threshold, tau_hyper, mode, apsp_prior)
        for j in range(n_replicates)
    ]
    matrix = np.empty((n_replicates, ds_int.k))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for j, pips in pool.map(_null_replicate, tasks, chunksize=4):
                matrix[j] = pips
    else:
        for task in tasks:
            j, pips = _null_replicate(task)
            matrix[j] = pips
    return NullThresholds(
        columns=tuple(ds_int.column_names),
        c_hat=matrix.mean(axis=0),
        n_replicates=n_replicates,
        seed=seed,
        pip_matrix=matrix if keep_matrix else None,
    )


def select(pips, thresholds: NullThresholds) -> np.ndarray:
    """Selection flags: pip strictly above its covariate's threshold."""
    pips = np.asarray(pips, dtype=float)
    if pips.shape != thresholds.c_hat.shape:
        raise UserInputError(
            f"{pips.shape[0]} pips but {len(thresholds.columns)} thresholds"
        )
    return pips > thresholds.c_hat
