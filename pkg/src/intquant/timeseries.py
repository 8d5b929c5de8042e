"""Layer-integral inference for stationary AR(1) series.

Pipeline: simulate X_t = phi X_{t-1} + e_t, estimate a layer integral from
the path, and standardise by a Bartlett long-run variance of the matching
h-transform of the data.  The mixing-coefficient bounds for AR(1) are
available in closed form.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from . import _rng
from .dist import Distribution, Normal, Sample, StepCDF, quad_unit
from .errors import DomainError
from .layers import LayerSpec, empirical_layer, layer_integral
from .montecarlo import ks_vs_standard_normal


@dataclass(frozen=True)
class AR1Config:
    phi: float
    innovation: Distribution = field(default_factory=Normal)
    burn_in: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not (abs(self.phi) < 1.0):
            raise DomainError(f"AR(1) needs |phi| < 1, got {self.phi}")
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        mu = self.innovation.mean
        scale = math.sqrt(innovation_variance(self.innovation))
        if abs(mu) > 1e-10 * max(scale, 1.0):
            raise DomainError(f"innovations must have mean zero, got {mu}")

    @property
    def sigma2(self) -> float:
        return innovation_variance(self.innovation)

    @property
    def stationary_variance(self) -> float:
        return self.sigma2 / (1.0 - self.phi ** 2)

    def to_dict(self) -> dict:
        return {"phi": self.phi, "innovation": self.innovation.describe(),
                "burn_in": self.burn_in, "seed": self.seed}


def innovation_abs_moment(dist: Distribution, p: float) -> float:
    """E|e|^p."""
    if isinstance(dist, Normal) and dist.mu == 0.0:
        return dist.sigma ** p * 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)
    ppf = dist._ppf
    return quad_unit(lambda u: np.abs(ppf(u)) ** p, 0.0, 1.0)


def innovation_variance(dist: Distribution) -> float:
    if isinstance(dist, Normal):
        return dist.sigma ** 2
    return innovation_abs_moment(dist, 2.0) - dist.mean ** 2


# ---------------------------------------------------------------- simulation
def _ar1_path(cfg: AR1Config, n: int, rng: np.random.Generator) -> np.ndarray:
    eps = cfg.innovation.sample(rng, n + cfg.burn_in)
    x = signal.lfilter([1.0], [1.0, -cfg.phi], eps)
    return x[cfg.burn_in:]


def simulate_ar1(cfg: AR1Config, n: int, replicate: int = 0) -> Sample:
    """Length-n path after burn-in; path ``replicate`` has its own stream."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = _rng.stream(cfg.seed, _rng.experiment_id(_rng.AR1), replicate)
    return Sample(_ar1_path(cfg, n, rng))


def stationary_marginal(cfg: AR1Config, pilot_size: int = 10_000_000) -> tuple[Distribution, bool]:
    """Marginal law of X_t and whether it is exact.

    Normal innovations give the closed form Normal(0, sigma^2/(1-phi^2)).
    Otherwise a long pilot path is tabulated as a step cdf (approximate).
    """
    if isinstance(cfg.innovation, Normal):
        return Normal(0.0, math.sqrt(cfg.stationary_variance)), True
    rng = _rng.stream(cfg.seed, _rng.experiment_id(_rng.PILOT), 0)
    return StepCDF.from_sample(_ar1_path(cfg, pilot_size, rng)), False


# --------------------------------------------------------------- transforms
@dataclass(frozen=True)
class HTransform:
    """h_upper(x) = (x - q)^+, h_lower(x) = (q - x)^+,
    h_middle(x) = (q2 - x)^+ - (q1 - x)^+, with q = F^{-1}(p)."""

    kind: str
    q1: float
    q2: float | None = None

    @classmethod
    def from_spec(cls, spec: LayerSpec, dist: Distribution) -> "HTransform":
        if spec.kind in ("upper", "lower"):
            return cls(spec.kind, float(dist.quantile(spec.p1)))
        if spec.kind == "middle":
            return cls("middle", float(dist.quantile(spec.p1)), float(dist.quantile(spec.p2)))
        raise DomainError("h-transforms exist for upper, lower and middle layers")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "upper":
            return np.maximum(x - self.q1, 0.0)
        if self.kind == "lower":
            return np.maximum(self.q1 - x, 0.0)
        return np.maximum(self.q2 - x, 0.0) - np.maximum(self.q1 - x, 0.0)

    @property
    def bound(self) -> float:
        """sup |h| (finite only for the middle transform)."""
        return self.q2 - self.q1 if self.kind == "middle" else math.inf


# ----------------------------------------------------------- long-run variance
def default_bandwidth(n: int) -> int:
    return int(math.floor(n ** (1.0 / 3.0)))


def long_run_variance(series, transform=None, bandwidth: int | None = None) -> float:
    """Bartlett estimate gamma_0 + 2 sum_{h<=L} (1 - h/(L+1)) gamma_h."""
    x = series.values if isinstance(series, Sample) else np.asarray(series, dtype=float).ravel()
    y = transform(x) if transform is not None else x
    n = y.size
    L = default_bandwidth(n) if bandwidth is None else int(bandwidth)
    if L < 0 or L >= n:
        raise DomainError(f"bandwidth must lie in [0, n), got {L} for n={n}")
    if n < 10 * L:
        warnings.warn(f"series length {n} is short for bandwidth {L}", stacklevel=2)
    yc = y - y.mean()
    total = float(np.dot(yc, yc)) / n
    for h in range(1, L + 1):
        total += 2.0 * (1.0 - h / (L + 1.0)) * float(np.dot(yc[:-h], yc[h:])) / n
    return max(total, 0.0)


# --------------------------------------------------------------- mixing bounds
def mixing_bounds(cfg: AR1Config, m, kind: str = "s_mixing", a: float = 1.0, p: float = 2.0):
    """Closed-form AR(1) coupling bounds.

    s_mixing:  delta_m = phi^{2(m+1)} sigma^2 / (gamma_m^2 (1 - phi^2)), gamma_m = m^{-a}
    m_mixing:  rho_m = |phi|^{m+1} (E|e|^p)^{1/p} / (1 - |phi|)
    """
    m_arr = np.asarray(m, dtype=float)
    phi = cfg.phi
    if kind == "s_mixing":
        if a <= 0:
            raise DomainError("gamma_m exponent a must be > 0")
        if np.any(m_arr < 1):
            raise DomainError("s-mixing bound needs m >= 1")
        gamma = m_arr ** (-a)
        out = phi ** (2 * (m_arr + 1)) * cfg.sigma2 / (gamma ** 2 * (1 - phi ** 2))
    elif kind == "m_mixing":
        if p < 1:
            raise DomainError("moment order p must be >= 1")
        if np.any(m_arr < 0):
            raise DomainError("m-mixing bound needs m >= 0")
        moment = innovation_abs_moment(cfg.innovation, p) ** (1.0 / p)
        out = abs(phi) ** (m_arr + 1) * moment / (1 - abs(phi))
    else:
        raise DomainError(f"unknown mixing kind {kind!r}")
    return float(out) if m_arr.ndim == 0 else out


def mmix_clt_conditions(A: float, eta: float, p: float) -> dict:
    """Check A > max{1, (p-2)/(2 eta) (1 - (1+eta)/p)} and (1+eta)/p < 1/2.

    These are existence conditions on the decay exponent of rho_m; they
    are reported, not verified from data.
    """
    if eta <= 0 or p <= 2:
        raise DomainError("need eta > 0 and p > 2")
    a_min = max(1.0, (p - 2.0) / (2.0 * eta) * (1.0 - (1.0 + eta) / p))
    cond_a = A > a_min
    cond_eta = (1.0 + eta) / p < 0.5
    return {"A": A, "eta": eta, "p": p, "A_min": a_min, "A_ok": cond_a,
            "eta_ok": cond_eta, "satisfied": bool(cond_a and cond_eta)}


# ------------------------------------------------------------------ CLT harness
@dataclass
class TSReport:
    config: dict
    n: int
    layer: str
    m_reps: int
    bandwidth: int
    population: float
    marginal_exact: bool
    stats: np.ndarray
    nu2: np.ndarray
    ks: float
    coverage: float
    confidence: float

    @property
    def mean(self) -> float:
        return float(self.stats.mean())

    @property
    def variance(self) -> float:
        return float(self.stats.var(ddof=1)) if self.stats.size > 1 else 0.0

    def to_dict(self, with_replicates: bool = False) -> dict:
        out = {
            "config": self.config,
            "n": self.n,
            "layer": self.layer,
            "m_reps": self.m_reps,
            "bandwidth": self.bandwidth,
            "population": self.population,
            "marginal_exact": self.marginal_exact,
            "mean_stat": self.mean,
            "var_stat": self.variance,
            "mean_nu2": float(self.nu2.mean()),
            "ks": self.ks,
            "coverage": self.coverage,
            "confidence": self.confidence,
        }
        if with_replicates:
            out["stats"] = self.stats.tolist()
            out["nu2"] = self.nu2.tolist()
        return out


def ts_layer_clt_report(cfg: AR1Config, n: int, spec: LayerSpec, m_reps: int,
                        bandwidth: int | None = None, confidence: float = 0.95,
                        threads: int | None = None, pilot_size: int = 10_000_000) -> TSReport:
    """Standardised statistics sqrt(n)(estimate - population)/sqrt(nu2_hat)
    over m_reps independent paths, with KS distance and CI coverage."""
    if m_reps < 1:
        raise DomainError("m_reps must be >= 1")
    marginal, exact = stationary_marginal(cfg, pilot_size)
    pop = layer_integral(marginal, spec)
    h = HTransform.from_spec(spec, marginal)
    L = default_bandwidth(n) if bandwidth is None else int(bandwidth)
    z = float(special.ndtri(0.5 + confidence / 2.0))
    exp = _rng.experiment_id(_rng.AR1)
    root_n = math.sqrt(n)

    def one(r: int) -> tuple[float, float]:
        x = _ar1_path(cfg, n, _rng.stream(cfg.seed, exp, r))
        est = empirical_layer(x, spec)
        nu2 = long_run_variance(h(x), bandwidth=L)
        return root_n * (est - pop) / math.sqrt(nu2) if nu2 > 0 else math.nan, nu2

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(one, range(m_reps)))
    else:
        pairs = [one(r) for r in range(m_reps)]
    stats = np.array([s for s, _ in pairs])
    nu2 = np.array([v for _, v in pairs])
    ok = stats[np.isfinite(stats)]
    return TSReport(
        config=cfg.to_dict(), n=n, layer=str(spec), m_reps=m_reps, bandwidth=L,
        population=pop, marginal_exact=exact, stats=stats, nu2=nu2,
        ks=ks_vs_standard_normal(ok) if ok.size else math.nan,
        coverage=float(np.mean(np.abs(ok) <= z)) if ok.size else math.nan,
        confidence=confidence,
    )
