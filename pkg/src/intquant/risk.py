"""Tail-value-at-risk, Lorenz and Gini curves: population values, empirical
estimates, plug-in asymptotic variances and normal confidence intervals."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from . import _rng
from .dist import Distribution, Sample, ceil_np, quad_unit, quantile_continuity_check
from .errors import DegenerateMeanError, DomainError
from .layers import empirical_lower, empirical_upper

MEASURES = ("tvar-up", "tvar-down", "lorenz", "gini")


@dataclass(frozen=True)
class MeasureEstimate:
    measure: str
    p: float
    estimate: float
    stderr: float
    ci: tuple[float, float]
    n: int
    variance_method: str
    confidence: float = 0.95
    variance: float = math.nan  # asymptotic variance (sigma^2, not divided by n)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "p": self.p,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "n": self.n,
            "method": self.variance_method,
            "confidence": self.confidence,
            "variance": self.variance,
        }


def _level(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return float(p)


def _sorted(data) -> np.ndarray:
    if isinstance(data, Sample):
        return data.sorted
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample contains non-finite values")
    return np.sort(x)


def _check_mean(mu: float, scale: float) -> None:
    if abs(mu) < 1e-12 * max(scale, 1e-300) or mu == 0.0:
        raise DegenerateMeanError("mean is zero; ratio measures are undefined")


def _sample_mean(x: np.ndarray) -> float:
    mu = float(x.mean())
    _check_mean(mu, float(np.max(np.abs(x))))
    return mu


def _dist_mean(dist: Distribution) -> float:
    mu = dist.mean
    scale = max(abs(dist.quantile(0.25)), abs(dist.quantile(0.75)), abs(mu))
    _check_mean(mu, scale)
    return mu


# ------------------------------------------------------------ point estimates
def _tvar_up_point(x: np.ndarray, p: float) -> float:
    return empirical_upper(x, p) / (1.0 - p)


def _tvar_down_point(x: np.ndarray, p: float) -> float:
    return empirical_lower(x, p) / p


def _lorenz_point(x: np.ndarray, p: float) -> float:
    return empirical_lower(x, p) / _sample_mean(x)


def _gini_point(x: np.ndarray, p: float) -> float:
    mu = _sample_mean(x)
    return 1.0 - (empirical_lower(x, 1.0 - p) + empirical_lower(x, p)) / mu


_POINT: dict[str, Callable[[np.ndarray, float], float]] = {
    "tvar-up": _tvar_up_point,
    "tvar-down": _tvar_down_point,
    "lorenz": _lorenz_point,
    "gini": _gini_point,
}


def point_estimate(measure: str, data, p: float) -> float:
    if measure not in _POINT:
        raise DomainError(f"unknown measure {measure!r}; choose from {MEASURES}")
    x = data.sorted if isinstance(data, Sample) else np.asarray(data, dtype=float)
    return _POINT[measure](x, _level(p))


# ------------------------------------------------------------ influence values
def _q_hat(x_sorted: np.ndarray, p: float) -> float:
    return float(x_sorted[ceil_np(x_sorted.size, p) - 1])


def lorenz_influence(data, p: float) -> np.ndarray:
    """Plug-in values of Y_LC(p) for each observation (exactly centred)."""
    p = _level(p)
    x = _sorted(data)
    mu = _sample_mean(x)
    q = _q_hat(x, p)
    neg = np.maximum(q - x, 0.0)
    lc = empirical_lower(x, p) / mu
    return (neg - neg.mean()) / mu + lc * (x - mu) / mu


def gini_influence(data, p: float) -> np.ndarray:
    """Plug-in values of Y_GC(p) = Y_LC(1-p) + Y_LC(p)."""
    return lorenz_influence(data, 1.0 - p) + lorenz_influence(data, p)


# --------------------------------------------------------------- estimators
def _finish(measure, p, est, sigma2, n, method, confidence) -> MeasureEstimate:
    if not (0.0 < confidence < 1.0):
        raise DomainError("confidence must lie in (0, 1)")
    sigma2 = max(float(sigma2), 0.0)
    se = math.sqrt(sigma2 / n)
    z = float(special.ndtri(0.5 + confidence / 2.0))
    return MeasureEstimate(measure, p, float(est), se, (est - z * se, est + z * se), n, method, confidence, sigma2)


def _plugin_sigma2(measure: str, x: np.ndarray, p: float) -> float:
    n = x.size
    ddof = 1 if n > 1 else 0
    if measure == "tvar-up":
        return float(np.var(np.maximum(x - _q_hat(x, p), 0.0), ddof=ddof)) / (1.0 - p) ** 2
    if measure == "tvar-down":
        return float(np.var(np.maximum(_q_hat(x, p) - x, 0.0), ddof=ddof)) / p ** 2
    if measure == "lorenz":
        return float(np.mean(lorenz_influence(x, p) ** 2))
    return float(np.mean(gini_influence(x, p) ** 2))


def _estimate(measure, data, p, confidence, variance, B, seed, threads):
    p = _level(p)
    x = _sorted(data)
    est = _POINT[measure](x, p)
    if variance == "plugin":
        sigma2 = _plugin_sigma2(measure, x, p)
    elif variance == "bootstrap":
        sigma2 = bootstrap_variance(x, measure, p, B=B, seed=seed, threads=threads)
    else:
        raise DomainError(f"unknown variance method {variance!r}")
    return _finish(measure, p, est, sigma2, x.size, variance, confidence)


def tvar_up(data, p: float, *, confidence: float = 0.95, variance: str = "plugin",
            B: int = 1000, seed: int = 0, threads: int | None = None):
    """Upside TVaR: (1/(1-p)) * integral of F^{-1} over [p, 1].

    Returns a float for a Distribution and a MeasureEstimate for data.
    """
    if isinstance(data, Distribution):
        p = _level(p)
        return data.quantile_integral(p, 1.0) / (1.0 - p)
    return _estimate("tvar-up", data, p, confidence, variance, B, seed, threads)


def tvar_down(data, p: float, *, confidence: float = 0.95, variance: str = "plugin",
              B: int = 1000, seed: int = 0, threads: int | None = None):
    """Downside TVaR: (1/p) * integral of F^{-1} over [0, p]."""
    if isinstance(data, Distribution):
        p = _level(p)
        return data.quantile_integral(0.0, p) / p
    return _estimate("tvar-down", data, p, confidence, variance, B, seed, threads)


def _warn_if_signed(x: np.ndarray, measure: str) -> None:
    if x[0] < 0:
        warnings.warn(f"{measure}: sample has negative values; the usual interpretation assumes X >= 0",
                      stacklevel=3)


def lorenz(data, p: float, *, confidence: float = 0.95, variance: str = "plugin",
           B: int = 1000, seed: int = 0, threads: int | None = None):
    """Lorenz curve LC(p) = (1/mu) * integral of F^{-1} over [0, p]."""
    if isinstance(data, Distribution):
        p = _level(p)
        return data.quantile_integral(0.0, p) / _dist_mean(data)
    x = _sorted(data)
    _warn_if_signed(x, "lorenz")
    return _estimate("lorenz", x, p, confidence, variance, B, seed, threads)


def gini_curve(data, p: float, *, confidence: float = 0.95, variance: str = "plugin",
               B: int = 1000, seed: int = 0, threads: int | None = None):
    """Gini curve GC(p) = 1 - LC(1-p) - LC(p)."""
    if isinstance(data, Distribution):
        p = _level(p)
        mu = _dist_mean(data)
        if data.continuous is False or not (
            quantile_continuity_check(data, p) and quantile_continuity_check(data, 1.0 - p)
        ):
            warnings.warn("quantile is not continuous at p or 1-p; the empirical Gini curve "
                          "is not asymptotically normal there", stacklevel=2)
        return 1.0 - (data.quantile_integral(0.0, 1.0 - p) + data.quantile_integral(0.0, p)) / mu
    x = _sorted(data)
    _warn_if_signed(x, "gini")
    return _estimate("gini", x, p, confidence, variance, B, seed, threads)


# ---------------------------------------------------------------- bootstrap
def bootstrap_variance(data, measure, p: float, B: int = 1000, seed: int = 0,
                       threads: int | None = None) -> float:
    """n times the variance of B nonparametric bootstrap replicates.

    ``measure`` is one of MEASURES or a callable ``f(x, p) -> float``.
    Replicate b draws from its own stream (seed, b), so the result does not
    depend on ``threads``.
    """
    if B < 100:
        raise DomainError("bootstrap needs B >= 100")
    p = _level(p)
    fn = _POINT.get(measure) if isinstance(measure, str) else measure
    if fn is None:
        raise DomainError(f"unknown measure {measure!r}")
    x = data.values if isinstance(data, Sample) else np.asarray(data, dtype=float).ravel()
    n = x.size
    exp = _rng.experiment_id(_rng.BOOTSTRAP)

    def one(b: int) -> float:
        rng = _rng.stream(seed, exp, b)
        return fn(x[rng.integers(0, n, size=n)], p)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = np.fromiter(pool.map(one, range(B)), dtype=float, count=B)
    else:
        reps = np.fromiter((one(b) for b in range(B)), dtype=float, count=B)
    return float(np.var(reps, ddof=1) * n)


# ------------------------------------------------------- population variances
def upper_sigma2(dist: Distribution, p: float) -> float:
    """Var((X - F^{-1}(p))^+), the asymptotic variance of the empirical upper layer."""
    p = _level(p)
    q = dist.quantile(p)
    ppf = dist._ppf
    m1 = dist.quantile_integral(p, 1.0) - (1.0 - p) * q
    m2 = quad_unit(lambda u: (ppf(u) - q) ** 2, p, 1.0)
    return m2 - m1 * m1


def lower_sigma2(dist: Distribution, p: float) -> float:
    """Var((F^{-1}(p) - X)^+), the asymptotic variance of the empirical lower layer."""
    p = _level(p)
    q = dist.quantile(p)
    ppf = dist._ppf
    m1 = p * q - dist.quantile_integral(0.0, p)
    m2 = quad_unit(lambda u: (q - ppf(u)) ** 2, 0.0, p)
    return m2 - m1 * m1


def plugin_upper_sigma2(data, p: float) -> float:
    """Plug-in Var((X - X_{ceil(np):n})^+), estimating upper_sigma2."""
    p = _level(p)
    x = _sorted(data)
    return float(np.var(np.maximum(x - _q_hat(x, p), 0.0), ddof=1 if x.size > 1 else 0))


def plugin_lower_sigma2(data, p: float) -> float:
    """Plug-in Var((X_{ceil(np):n} - X)^+), estimating lower_sigma2."""
    p = _level(p)
    x = _sorted(data)
    return float(np.var(np.maximum(_q_hat(x, p) - x, 0.0), ddof=1 if x.size > 1 else 0))
