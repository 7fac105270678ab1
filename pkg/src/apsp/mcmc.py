"""Chain configuration, seeded stream derivation, posterior summaries, diagnostics.

Every sampler in the package draws from a ``numpy.random.Generator`` that is
fully determined by a ``ChainSpec`` (including its seed), so identical specs
and inputs reproduce identical draws bit for bit.  Streams for independent
replicates are derived from one top-level seed plus string/int labels via
``derive_seed`` so that adding a component never perturbs another's stream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UserInputError

_U64 = 2**64


def derive_seed(seed: int, *labels) -> int:
    """Derive a 64-bit sub-seed from a top-level seed and a label path.

    Labels are hashed (not summed), so ("a", 1) and ("a1",) never collide by
    accident and inserting a new label leaves sibling streams untouched.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little") % _U64


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Independent generator for the stream identified by ``labels``."""
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(seed)).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    w = int.from_bytes(h.digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([int(seed) % _U64, w % _U64, (w >> 64) % _U64]))


@dataclass(frozen=True)
class ChainSpec:
    """Sampler controls shared by every MCMC method in the package.

    ``mh_step`` is the standard deviation of the log-scale random-walk
    proposal used for non-conjugate positive scalars.
    """

    n_iter: int = 6000
    n_burn: int = 2000
    thin: int = 2
    seed: int = 0
    mh_step: float = 0.5

    def __post_init__(self):
        if self.n_iter <= 0 or self.n_burn < 0 or self.n_burn >= self.n_iter:
            raise UserInputError(f"need 0 <= n_burn < n_iter, got {self.n_burn}, {self.n_iter}")
        if self.thin < 1:
            raise UserInputError(f"thin must be >= 1, got {self.thin}")
        if self.mh_step <= 0:
            raise UserInputError(f"mh_step must be positive, got {self.mh_step}")
        if not (0 <= self.seed < _U64):
            raise UserInputError("seed must fit in an unsigned 64-bit integer")
        if self.n_retained < 100:
            raise UserInputError(
                f"chain would retain {self.n_retained} draws; at least 100 are required"
            )

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed))

    def with_seed(self, seed: int) -> "ChainSpec":
        return ChainSpec(self.n_iter, self.n_burn, self.thin, seed, self.mh_step)

    def to_dict(self) -> dict:
        return {
            "n_iter": self.n_iter,
            "n_burn": self.n_burn,
            "thin": self.thin,
            "seed": self.seed,
            "mh_step": self.mh_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        known = {"n_iter", "n_burn", "thin", "seed", "mh_step"}
        extra = set(d) - known
        if extra:
            raise UserInputError(f"unknown chain settings: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class PosteriorSummary:
    """Sample moments and empirical 95% interval of a draw vector."""

    mean: float
    variance: float
    ci95: tuple[float, float]
    quantile: Callable[[float], float]


def summarize(draws) -> PosteriorSummary:
    """Moments (denominator n-1) and interpolated empirical quantiles of draws."""
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise UserInputError("cannot summarize an empty draw vector")
    if not np.all(np.isfinite(draws)):
        raise UserInputError("draws contain non-finite values")
    mean = float(np.mean(draws))
    variance = float(np.var(draws, ddof=1)) if draws.size > 1 else 0.0
    lo, hi = np.quantile(draws, [0.025, 0.975])
    sorted_draws = np.sort(draws)

    def quantile(p: float) -> float:
        return float(np.quantile(sorted_draws, p))

    return PosteriorSummary(mean, variance, (float(lo), float(hi)), quantile)


def split_rhat(draws) -> float:
    """Split-chain potential scale reduction of a single draw vector.

    The retained chain is split in halves which are treated as two chains.
    Constant input returns 1.0 by convention; a constant-within-halves but
    shifted chain returns ``inf``.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.size < 4:
        raise UserInputError("split_rhat needs at least 4 draws")
    half = draws.size // 2
    chains = np.stack([draws[:half], draws[half : 2 * half]])
    within = float(np.mean(np.var(chains, axis=1, ddof=1)))
    between = half * float(np.var(np.mean(chains, axis=1), ddof=1))
    if within == 0.0:
        return 1.0 if between == 0.0 else float("inf")
    var_plus = (half - 1) / half * within + between / half
    return max(1.0, float(np.sqrt(var_plus / within)))


def effective_sample_size(draws) -> float:
    """ESS from the initial positive sequence of autocorrelations, capped at n."""
    draws = np.asarray(draws, dtype=float)
    n = draws.size
    if n < 4:
        return float(n)
    centered = draws - draws.mean()
    var0 = float(centered @ centered) / n
    if var0 == 0.0:
        return float(n)
    # FFT autocovariance, truncated at the first non-positive pair sum.
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n].real / n
    rho = acov / acov[0]
    s = 0.0
    t = 1
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair <= 0.0:
            break
        s += pair
        t += 2
    ess = n / (1.0 + 2.0 * s)
    return float(min(max(ess, 1.0), n))


@dataclass(frozen=True)
class ChainDiagnostics:
    """Per-scalar ESS, split R-hat, and MH acceptance rates where applicable."""

    ess: dict = field(default_factory=dict)
    rhat: dict = field(default_factory=dict)
    accept_rate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ess": dict(self.ess),
            "rhat": dict(self.rhat),
            "accept_rate": dict(self.accept_rate),
        }


@dataclass(frozen=True)
class CoefficientPosterior:
    """Posterior of one regression coefficient, draws optional.

    When draws are retained, ``mean``/``variance`` are their sample moments
    and ``ci95`` the 2.5%/97.5% empirical quantiles; methods with closed-form
    posteriors store exact moments and drop the draws.
    """

    name: str
    mean: float
    variance: float
    ci95: tuple[float, float]
    pip: float | None = None
    draws: np.ndarray | None = None

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"negative posterior variance for {self.name}")
        if self.ci95[0] > self.ci95[1]:
            raise ValueError(f"inverted credible interval for {self.name}")
        if self.pip is not None and not (0.0 <= self.pip <= 1.0):
            raise ValueError(f"pip outside [0,1] for {self.name}")

    @classmethod
    def from_draws(cls, name: str, draws, pip: float | None = None) -> "CoefficientPosterior":
        s = summarize(draws)
        return cls(name, s.mean, s.variance, s.ci95, pip, np.asarray(draws, dtype=float))

    def excludes_zero(self) -> bool:
        return self.ci95[0] > 0.0 or self.ci95[1] < 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": self.mean,
            "variance": self.variance,
            "ci95": [self.ci95[0], self.ci95[1]],
            "pip": self.pip,
        }


@dataclass
class FitResult:
    """Uniform fit output across methods: one CoefficientPosterior per covariate.

    ``selected`` holds the method's own selection rule; callers may overwrite
    it (the adaptive pipeline re-selects against calibrated thresholds).
    ``extras`` carries per-covariate method-specific scalars (e.g. borrow
    flags) and ``aux_draws`` whole-chain auxiliaries keyed by name.
    """

    method: str
    coefficients: list[CoefficientPosterior]
    intercept: CoefficientPosterior | None = None
    selected: np.ndarray | None = None
    diagnostics: ChainDiagnostics | None = None
    extras: dict = field(default_factory=dict)
    aux_draws: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return [c.name for c in self.coefficients]

    def coefficient(self, name: str) -> CoefficientPosterior:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.coefficients])

    def variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.coefficients])

    def pips(self) -> np.ndarray:
        return np.array([np.nan if c.pip is None else c.pip for c in self.coefficients])

    def to_dict(self) -> dict:
        cov = []
        for i, c in enumerate(self.coefficients):
            d = c.to_dict()
            if self.selected is not None:
                d["selected"] = bool(self.selected[i])
            for key, values in self.extras.items():
                d[key] = values[i]
            cov.append(d)
        out = {"method": self.method, "covariates": cov}
        if self.intercept is not None:
            out["intercept"] = self.intercept.to_dict()
        if self.diagnostics is not None:
            out["diagnostics"] = self.diagnostics.to_dict()
        return out
