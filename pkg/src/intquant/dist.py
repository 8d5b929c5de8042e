"""Cumulative distribution functions and their left-continuous inverses.

Every distribution exposes the same small algebra:

* ``cdf(x)`` (right-continuous) and ``cdf_left(x)`` (the left limit F(x-)),
* ``quantile(u) = inf{x : F(x) >= u}`` with ``quantile(0)`` the right-hand limit,
* ``quantile_integral(a, b)``, the integral of the quantile over [a, b],
* ``lower_partial(b)``, the integral of F over (-inf, b], i.e. E(b - X)^+,
* ``upper_partial(a)``, the integral of 1 - F over [a, inf), i.e. E(X - a)^+.

The quantile-side and cdf-side integrals are computed by independent routes
(u-cells versus x-cells for step functions, separate closed forms for the
parametric families) so that identities relating them are real checks.
"""
from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError, UnboundedQuantileError

MASS_TOL = 1e-12
DEFAULT_EPS_GRID = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def ceil_np(n: int, u):
    """ceil(n*u), with products within rounding error of an integer k taken as k.

    A level such as 0.4 is stored as 0.400000000000000022..., so a literal
    ceiling of 5 * 0.4 would give 3 instead of 2.
    """
    arr = np.asarray(u, dtype=float)
    prod = n * arr
    near = np.rint(prod)
    k = np.where(np.abs(prod - near) <= 1e-12 * max(1.0, float(n)), near, np.ceil(prod)).astype(np.int64)
    return int(k) if np.ndim(u) == 0 else k


def _check_prob(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"probability outside [0, 1]: {u!r}")
    return arr


def _check_interval(a: float, b: float) -> tuple[float, float]:
    a, b = float(a), float(b)
    if not (0.0 <= a <= b <= 1.0):
        raise DomainError(f"need 0 <= a <= b <= 1, got ({a}, {b})")
    return a, b


def _clip(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # np.clip carries noticeable per-call overhead on tiny arrays
    return np.minimum(np.maximum(x, lo), hi)


def _scalar_or_array(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


class Distribution(ABC):
    """Common interface for step and parametric distributions."""

    #: True when the cdf has no jumps.
    continuous: bool = True

    # ------------------------------------------------------------------ raw
    @abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray: ...

    def _cdf_left(self, x: np.ndarray) -> np.ndarray:
        return self._cdf(x)

    @abstractmethod
    def _ppf(self, u: np.ndarray) -> np.ndarray:
        """Quantile for u in [0, 1]; may return +-inf at the endpoints."""

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]:
        """(F^{-1}(0), F^{-1}(1)) as limits, possibly infinite."""

    def describe(self) -> dict:
        raise NotImplementedError

    # --------------------------------------------------------------- public
    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        return _scalar_or_array(x, self._cdf(arr))

    def cdf_left(self, x):
        arr = np.asarray(x, dtype=float)
        return _scalar_or_array(x, self._cdf_left(arr))

    def quantile(self, u):
        if isinstance(u, float) and 0.0 < u < 1.0:
            return float(self._ppf(np.asarray(u)))
        arr = _check_prob(u)
        lo, hi = self.support
        if math.isinf(hi) and np.any(arr == 1.0):
            raise UnboundedQuantileError("quantile at u=1 is +inf for unbounded support")
        if math.isinf(lo) and np.any(arr == 0.0):
            raise UnboundedQuantileError("quantile at u=0 is -inf for unbounded support")
        return _scalar_or_array(u, self._ppf(arr))

    def pdf(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no density")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._ppf(rng.random(size))

    @property
    def mean(self) -> float:
        return self.quantile_integral(0.0, 1.0)

    def quantile_integral(self, a: float, b: float) -> float:
        """Integral of F^{-1} over [a, b] (adaptive quadrature fallback)."""
        a, b = _check_interval(a, b)
        if a == b:
            return 0.0
        return quad_unit(self._ppf, a, b)

    def lower_partial(self, b: float) -> float:
        """Integral of F over (-inf, b]; equals E(b - X)^+."""
        fb = float(self._cdf(np.asarray(b, dtype=float)))
        if fb == 0.0:
            return 0.0
        return b * fb - self.quantile_integral(0.0, fb)

    def upper_partial(self, a: float) -> float:
        """Integral of 1 - F over [a, inf); equals E(X - a)^+."""
        fa = float(self._cdf(np.asarray(a, dtype=float)))
        if fa == 1.0:
            return 0.0
        return self.quantile_integral(fa, 1.0) - a * (1.0 - fa)

    def cdf_integral(self, a: float, b: float, level: float = 0.0) -> float:
        """Oriented integral of F(x) - level over x from a to b (finite limits)."""
        if a > b:
            return -self.cdf_integral(b, a, level)
        if a == b:
            return 0.0
        return self.lower_partial(b) - self.lower_partial(a) - level * (b - a)


def quad_unit(ppf, a: float, b: float, rel_tol: float = 1e-10, breaks=()) -> float:
    """Quadrature of a function of u on [a, b] within [0, 1], with dyadic
    splits towards the endpoints where quantile functions blow up.

    ``breaks`` lists extra points (jumps or kinks) to split at.
    """
    lo_u, hi_u = np.finfo(float).tiny, 1.0 - 2.0 ** -53
    f = lambda u: float(ppf(np.asarray(min(max(u, lo_u), hi_u))))
    points = [a, b] + [t for t in breaks if a < t < b]
    for j in range(1, 40):
        for t in (2.0 ** -j, 1.0 - 2.0 ** -j):
            if a < t < b:
                points.append(t)
    points = sorted(set(points))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(points[:-1], points[1:]):
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=rel_tol, limit=200)
            total += val
    # contribution of the unresolved end pieces
    tail = 0.0
    if a == 0.0:
        t = points[1]
        tail += abs(f(t / 2.0)) * t
    if b == 1.0:
        t = 1.0 - points[-2]
        tail += abs(f(1.0 - t / 2.0)) * t
    if not math.isfinite(total) or tail > 1e-6 * max(1.0, abs(total)):
        raise DivergenceError("quantile integral does not converge")
    return total


# ====================================================================== step
class StepCDF(Distribution):
    """Finite-support distribution given by atoms and masses."""

    continuous = False

    def __init__(self, atoms: Sequence[float], masses: Sequence[float]):
        x = np.asarray(atoms, dtype=float).ravel()
        w = np.asarray(masses, dtype=float).ravel()
        if x.size == 0 or x.size != w.size:
            raise DomainError("atoms and masses must be non-empty and of equal length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise DomainError("atoms and masses must be finite")
        if np.any(w < 0):
            raise DomainError("masses must be non-negative")
        total = w.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"masses sum to {total!r}, not 1")
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        ux, inv = np.unique(x, return_inverse=True)
        uw = np.zeros(ux.size)
        np.add.at(uw, inv, w)
        keep = uw > 0
        ux, uw = ux[keep], uw[keep]
        uw = uw / uw.sum()
        cum = np.cumsum(uw)
        cum[-1] = 1.0
        self._init(ux, uw, cum, None, None)

    def _init(self, atoms, masses, cum, counts_cum, n):
        self._atoms = atoms
        self._masses = masses
        self._cum = cum
        self._counts_cum = counts_cum
        self._n = n
        # F equals _cell_vals[j] on [_cell_left[j], _cell_right[j])
        self._cell_left = np.concatenate(([-math.inf], atoms))
        self._cell_right = np.concatenate((atoms, [math.inf]))
        self._cell_vals = np.concatenate(([0.0], cum))
        self._cum_prev = np.concatenate(([0.0], cum[:-1]))
        for arr in (atoms, masses, cum):
            arr.setflags(write=False)

    @classmethod
    def from_sample(cls, values) -> "StepCDF":
        """Empirical cdf; masses are exact multiples of 1/n."""
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise DomainError("empty sample")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample contains non-finite values")
        ux, counts = np.unique(v, return_counts=True)
        n = v.size
        ccum = np.cumsum(counts)
        obj = cls.__new__(cls)
        obj._init(ux, counts / n, ccum / n, ccum, n)
        return obj

    @property
    def atoms(self) -> np.ndarray:
        return self._atoms

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def support(self) -> tuple[float, float]:
        return float(self._atoms[0]), float(self._atoms[-1])

    def describe(self) -> dict:
        return {"dist": "step", "atoms": self._atoms.tolist(), "masses": self._masses.tolist()}

    def _cdf(self, x):
        idx = np.searchsorted(self._atoms, x, side="right")
        return np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])

    def _cdf_left(self, x):
        idx = np.searchsorted(self._atoms, x, side="left")
        return np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])

    def _ppf(self, u):
        if self._counts_cum is not None:
            k = np.maximum(ceil_np(self._n, u), 1)
            idx = np.searchsorted(self._counts_cum, k, side="left")
        else:
            idx = np.searchsorted(self._cum, u, side="left")
        return self._atoms[np.minimum(idx, self._atoms.size - 1)]

    def pdf(self, x):
        raise NotImplementedError("step distributions have no density")

    def quantile_integral(self, a: float, b: float) -> float:
        a, b = _check_interval(a, b)
        widths = _clip(self._cum, a, b) - _clip(self._cum_prev, a, b)
        return float(np.dot(self._atoms, widths))

    def cdf_integral(self, a: float, b: float, level: float = 0.0) -> float:
        if a > b:
            return -self.cdf_integral(b, a, level)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError("cdf_integral needs finite limits")
        widths = _clip(self._cell_right, a, b) - _clip(self._cell_left, a, b)
        return float(np.dot(self._cell_vals - level, widths))

    def lower_partial(self, b: float) -> float:
        x0 = self._atoms[0]
        if b <= x0:
            return 0.0
        return self.cdf_integral(x0, b)

    def upper_partial(self, a: float) -> float:
        xk = self._atoms[-1]
        if a >= xk:
            return 0.0
        return -self.cdf_integral(a, xk, level=1.0)

    @property
    def mean(self) -> float:
        return float(np.dot(self._atoms, self._masses))

    def sample(self, rng, size):
        return self._ppf(rng.random(size))

    def __repr__(self) -> str:
        return f"StepCDF(k={self._atoms.size})"


# ================================================================ parametric
class Uniform(Distribution):
    def __init__(self, a: float = 0.0, b: float = 1.0):
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise DomainError(f"Uniform needs finite a < b, got ({a}, {b})")
        self.a, self.b = float(a), float(b)

    @property
    def support(self):
        return self.a, self.b

    def describe(self):
        return {"dist": "uniform", "a": self.a, "b": self.b}

    def _cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _ppf(self, u):
        return self.a + (self.b - self.a) * u

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)
        return _scalar_or_array(x, out)

    def quantile_integral(self, a, b):
        a, b = _check_interval(a, b)
        return self.a * (b - a) + (self.b - self.a) * (b * b - a * a) / 2.0

    def lower_partial(self, b):
        w = self.b - self.a
        if b <= self.a:
            return 0.0
        if b <= self.b:
            return (b - self.a) ** 2 / (2.0 * w)
        return w / 2.0 + (b - self.b)

    def upper_partial(self, a):
        w = self.b - self.a
        if a >= self.b:
            return 0.0
        if a >= self.a:
            return (self.b - a) ** 2 / (2.0 * w)
        return w / 2.0 + (self.a - a)

    def __repr__(self):
        return f"Uniform({self.a:g}, {self.b:g})"


class ParetoI(Distribution):
    """F(x) = 1 - (x0/x)^alpha for x >= x0."""

    def __init__(self, x0: float = 1.0, alpha: float = 1.0):
        if not (x0 > 0 and alpha > 0 and math.isfinite(x0) and math.isfinite(alpha)):
            raise DomainError("ParetoI needs x0 > 0 and alpha > 0")
        self.x0, self.alpha = float(x0), float(alpha)

    @property
    def support(self):
        return self.x0, math.inf

    def describe(self):
        return {"dist": "pareto1", "x0": self.x0, "alpha": self.alpha}

    def _cdf(self, x):
        with np.errstate(divide="ignore"):
            r = np.where(x > self.x0, self.x0 / np.maximum(x, self.x0), 1.0)
        return 1.0 - r ** self.alpha

    def _ppf(self, u):
        with np.errstate(divide="ignore"):
            return self.x0 * (1.0 - u) ** (-1.0 / self.alpha)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, self.x0)
        out = np.where(x >= self.x0, self.alpha * self.x0 ** self.alpha / xs ** (self.alpha + 1), 0.0)
        return _scalar_or_array(x, out)

    def _antideriv(self, u: float) -> float:
        # G(u) with G' = F^{-1}; G(1) finite only for alpha > 1
        if self.alpha == 1.0:
            return -self.x0 * math.log1p(-u) if u < 1.0 else math.inf
        e = 1.0 - 1.0 / self.alpha
        if u == 1.0:
            return self.x0 / e if e > 0 else math.inf
        return -self.x0 * (1.0 - u) ** e / e

    def quantile_integral(self, a, b):
        a, b = _check_interval(a, b)
        if a == b:
            return 0.0
        if b == 1.0 and self.alpha <= 1.0:
            raise DivergenceError(f"ParetoI(alpha={self.alpha}) has no finite mean")
        if b == 1.0:
            e = 1.0 - 1.0 / self.alpha
            return self.x0 * (1.0 - a) ** e / e
        if self.alpha == 1.0:
            return self.x0 * (math.log1p(-a) - math.log1p(-b))
        return self._antideriv(b) - self._antideriv(a)

    def lower_partial(self, b):
        if b <= self.x0:
            return 0.0
        x0, al = self.x0, self.alpha
        if al == 1.0:
            return (b - x0) - x0 * math.log(b / x0)
        return (b - x0) - x0 ** al * (x0 ** (1 - al) - b ** (1 - al)) / (al - 1)

    def upper_partial(self, a):
        x0, al = self.x0, self.alpha
        if al <= 1.0:
            raise DivergenceError(f"ParetoI(alpha={al}) has no finite mean")
        if a <= x0:
            return (x0 - a) + x0 / (al - 1)
        return x0 ** al * a ** (1 - al) / (al - 1)

    def __repr__(self):
        return f"ParetoI({self.x0:g}, {self.alpha:g})"


class GappedUniform(Distribution):
    """Uniform(0,2) with the mass on (1-a, 1+a] pushed outwards.

    Z = (1-a)V on {V <= 1} and 2a + (1-a)V on {V > 1} with V ~ Uniform(0,2).
    At a = 1 this is the two-point law on {0, 2}.
    """

    def __init__(self, a: float = 0.5):
        if not (0.0 <= a <= 1.0):
            raise DomainError(f"gap half-width must lie in [0, 1], got {a}")
        self.a = float(a)
        self._step = StepCDF([0.0, 2.0], [0.5, 0.5]) if self.a == 1.0 else None
        self.continuous = self._step is None

    @property
    def support(self):
        return 0.0, 2.0

    def describe(self):
        return {"dist": "gapped", "a": self.a}

    def _cdf(self, x):
        if self._step is not None:
            return self._step._cdf(x)
        s = 2.0 * (1.0 - self.a)
        lo = np.clip(x, 0.0, 1.0 - self.a) / s
        hi = (np.clip(x, 1.0 + self.a, 2.0) - (1.0 + self.a)) / s
        return lo + hi

    def _cdf_left(self, x):
        if self._step is not None:
            return self._step._cdf_left(x)
        return self._cdf(x)

    def _ppf(self, u):
        if self._step is not None:
            return self._step._ppf(u)
        return 2.0 * (1.0 - self.a) * u + 2.0 * self.a * (u > 0.5)

    def pdf(self, x):
        if self._step is not None:
            raise NotImplementedError("a=1 gapped law has no density")
        x = np.asarray(x, dtype=float)
        inside = ((x >= 0) & (x <= 1 - self.a)) | ((x > 1 + self.a) & (x <= 2))
        return _scalar_or_array(x, np.where(inside, 1.0 / (2.0 * (1.0 - self.a)), 0.0))

    def quantile_integral(self, a, b):
        a, b = _check_interval(a, b)
        if self._step is not None:
            return self._step.quantile_integral(a, b)
        jump = max(0.0, b - max(a, 0.5))
        return (1.0 - self.a) * (b * b - a * a) + 2.0 * self.a * jump

    def lower_partial(self, b):
        if self._step is not None:
            return self._step.lower_partial(b)
        g = self.a
        if b <= 0.0:
            return 0.0
        if b <= 1.0 - g:
            return b * b / (4.0 * (1.0 - g))
        base = (1.0 - g) / 4.0
        if b <= 1.0 + g:
            return base + (b - (1.0 - g)) / 2.0
        base += g
        if b <= 2.0:
            t = b - (1.0 + g)
            return base + t / 2.0 + t * t / (4.0 * (1.0 - g))
        return 1.0 + (b - 2.0)

    def upper_partial(self, a):
        if self._step is not None:
            return self._step.upper_partial(a)
        # lower_partial(x) - upper_partial(x) = x - mean, mean = 1
        return self.lower_partial(a) - (a - 1.0)

    @property
    def mean(self):
        return 1.0

    def __repr__(self):
        return f"GappedUniform({self.a:g})"


class Normal(Distribution):
    def __init__(self, mu: float = 0.0, sigma: float = 1.0):
        if not (sigma > 0 and math.isfinite(mu) and math.isfinite(sigma)):
            raise DomainError("Normal needs finite mu and sigma > 0")
        self.mu, self.sigma = float(mu), float(sigma)

    @property
    def support(self):
        return -math.inf, math.inf

    def describe(self):
        return {"dist": "normal", "mu": self.mu, "sigma": self.sigma}

    def _cdf(self, x):
        return special.ndtr((x - self.mu) / self.sigma)

    def _ppf(self, u):
        return self.mu + self.sigma * special.ndtri(u)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return _scalar_or_array(x, np.exp(-0.5 * z * z) * _INV_SQRT_2PI / self.sigma)

    @staticmethod
    def _phi_at(u: float) -> float:
        if u <= 0.0 or u >= 1.0:
            return 0.0
        z = float(special.ndtri(u))
        return math.exp(-0.5 * z * z) * _INV_SQRT_2PI

    def quantile_integral(self, a, b):
        a, b = _check_interval(a, b)
        return self.mu * (b - a) - self.sigma * (self._phi_at(b) - self._phi_at(a))

    def lower_partial(self, b):
        z = (b - self.mu) / self.sigma
        return self.sigma * (z * special.ndtr(z) + math.exp(-0.5 * z * z) * _INV_SQRT_2PI)

    def upper_partial(self, a):
        z = (a - self.mu) / self.sigma
        return self.sigma * (math.exp(-0.5 * z * z) * _INV_SQRT_2PI - z * special.ndtr(-z))

    @property
    def mean(self):
        return self.mu

    def __repr__(self):
        return f"Normal({self.mu:g}, {self.sigma:g})"


class Logistic(Distribution):
    def __init__(self, mu: float = 0.0, s: float = 1.0):
        if not (s > 0 and math.isfinite(mu) and math.isfinite(s)):
            raise DomainError("Logistic needs finite mu and s > 0")
        self.mu, self.s = float(mu), float(s)

    @property
    def support(self):
        return -math.inf, math.inf

    def describe(self):
        return {"dist": "logistic", "mu": self.mu, "s": self.s}

    def _cdf(self, x):
        return special.expit((x - self.mu) / self.s)

    def _ppf(self, u):
        return self.mu + self.s * special.logit(u)

    def pdf(self, x):
        t = (np.asarray(x, dtype=float) - self.mu) / self.s
        e = special.expit(t)
        return _scalar_or_array(x, e * (1.0 - e) / self.s)

    @staticmethod
    def _ent(u: float) -> float:
        return float(special.xlogy(u, u) + special.xlogy(1.0 - u, 1.0 - u))

    def quantile_integral(self, a, b):
        a, b = _check_interval(a, b)
        return self.mu * (b - a) + self.s * (self._ent(b) - self._ent(a))

    def lower_partial(self, b):
        return self.s * float(np.logaddexp(0.0, (b - self.mu) / self.s))

    def upper_partial(self, a):
        return self.s * float(np.logaddexp(0.0, -(a - self.mu) / self.s))

    @property
    def mean(self):
        return self.mu

    def __repr__(self):
        return f"Logistic({self.mu:g}, {self.s:g})"


class Mixture(Distribution):
    """Finite mixture sum_i w_i F_i; quantiles by bisection."""

    def __init__(self, components: Sequence[Distribution], weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if len(components) == 0 or len(components) != w.size:
            raise DomainError("need one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > MASS_TOL:
            raise DomainError("mixture weights must be non-negative and sum to 1")
        keep = w > 0
        self.components = tuple(c for c, k in zip(components, keep) if k)
        self.weights = w[keep] / w[keep].sum()
        self.continuous = all(c.continuous for c in self.components)

    @classmethod
    def contaminated(cls, base: Distribution, contamination: Distribution, delta: float) -> "Mixture":
        """(1 - delta) * base + delta * contamination."""
        if not (0.0 <= delta <= 1.0):
            raise DomainError("delta must lie in [0, 1]")
        return cls([base, contamination], [1.0 - delta, delta])

    @property
    def support(self):
        lows, highs = zip(*(c.support for c in self.components))
        return min(lows), max(highs)

    def describe(self):
        return {
            "dist": "mixture",
            "components": [c.describe() for c in self.components],
            "weights": self.weights.tolist(),
        }

    def _cdf(self, x):
        return sum(w * c._cdf(x) for w, c in zip(self.weights, self.components))

    def _cdf_left(self, x):
        return sum(w * c._cdf_left(x) for w, c in zip(self.weights, self.components))

    def pdf(self, x):
        return sum(w * c.pdf(x) for w, c in zip(self.weights, self.components))

    def _ppf(self, u):
        u = np.asarray(u, dtype=float)
        shape = u.shape
        u = u.ravel()
        qs = np.array([c._ppf(u) for c in self.components])
        lo = qs.min(axis=0)
        hi = qs.max(axis=0)
        out = hi.copy()
        inner = (u > 0) & (u < 1) & (hi > lo)
        if np.any(inner):
            uu, a, b = u[inner], lo[inner], hi[inner]
            # invariant: F(a-) <= u and F(b) >= u; answer in [a, b]
            ok_a = self._cdf(a) >= uu
            for _ in range(200):
                mid = 0.5 * (a + b)
                go_left = self._cdf(mid) >= uu
                b = np.where(go_left, mid, b)
                a = np.where(go_left, a, mid)
                if np.all(b - a <= 4 * np.spacing(np.maximum(np.abs(a), np.abs(b)))):
                    break
            out[inner] = np.where(ok_a, lo[inner], b)
        return out.reshape(shape)

    def lower_partial(self, b):
        return float(sum(w * c.lower_partial(b) for w, c in zip(self.weights, self.components)))

    def upper_partial(self, a):
        return float(sum(w * c.upper_partial(a) for w, c in zip(self.weights, self.components)))

    @property
    def mean(self):
        return float(sum(w * c.mean for w, c in zip(self.weights, self.components)))

    def sample(self, rng, size):
        which = rng.choice(len(self.components), size=size, p=self.weights)
        out = np.empty(size)
        for i, c in enumerate(self.components):
            idx = which == i
            out[idx] = c.sample(rng, int(idx.sum()))
        return out

    def __repr__(self):
        return f"Mixture({list(self.components)}, {self.weights.tolist()})"


# ==================================================================== sample
class Sample:
    """Immutable observation vector with a cached sorted view."""

    def __init__(self, values):
        v = np.array(values, dtype=float).ravel()
        if v.size == 0:
            raise DomainError("empty sample")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample contains non-finite values")
        v.setflags(write=False)
        s = np.sort(v)
        s.setflags(write=False)
        self._values = v
        self._sorted = s
        self._ecdf: StepCDF | None = None

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def sorted(self) -> np.ndarray:
        return self._sorted

    @property
    def n(self) -> int:
        return self._values.size

    def __len__(self) -> int:
        return self.n

    @property
    def mean(self) -> float:
        return float(self._values.mean())

    def ecdf(self) -> StepCDF:
        if self._ecdf is None:
            self._ecdf = StepCDF.from_sample(self._values)
        return self._ecdf

    def __repr__(self):
        return f"Sample(n={self.n})"


def as_sample(data) -> Sample:
    return data if isinstance(data, Sample) else Sample(data)


# ================================================================ functions
def eval_cdf(dist, x):
    if isinstance(dist, Sample):
        dist = dist.ecdf()
    return dist.cdf(x)


def eval_quantile(dist, u):
    if isinstance(dist, Sample):
        dist = dist.ecdf()
    return dist.quantile(u)


def ecdf_quantile(sample, u):
    """Empirical quantile X_{ceil(nu):n}; u = 0 gives the sample minimum."""
    s = as_sample(sample)
    arr = _check_prob(u)
    k = np.maximum(ceil_np(s.n, arr), 1)
    return _scalar_or_array(u, s.sorted[k - 1])


def sup_distance(F: Distribution, G: Distribution, grid_size: int = 8193) -> float:
    """sup_x |F(x) - G(x)|.

    Exact when at least one argument is a StepCDF: between consecutive atoms
    the step cdf is constant and the other cdf is monotone, so the supremum
    is attained at an atom or approached at a left limit.  For two
    parametric cdfs a quantile-based grid is used, which is approximate.
    """
    if isinstance(G, StepCDF) and not isinstance(F, StepCDF):
        F, G = G, F
    if isinstance(F, StepCDF):
        x = F.atoms
        if isinstance(G, StepCDF):
            pts = np.union1d(x, G.atoms)
            return float(np.max(np.abs(F._cdf(pts) - G._cdf(pts))))
        # F equals vals[j] on the cell between atoms j-1 and j
        vals = np.concatenate(([0.0], F._cum))
        g_right = np.concatenate((G._cdf_left(x), [1.0]))
        g_left = np.concatenate(([0.0], G._cdf(x)))
        return float(max(np.max(np.abs(vals - g_right)), np.max(np.abs(vals - g_left))))
    u = np.linspace(0.0, 1.0, grid_size)
    pts = []
    for d in (F, G):
        lo, hi = d.support
        uu = np.clip(u, 1e-12 if math.isinf(lo) else 0.0, 1 - 1e-12 if math.isinf(hi) else 1.0)
        pts.append(d._ppf(uu))
    pts = np.unique(np.concatenate(pts))
    diff = max(
        np.max(np.abs(F._cdf(pts) - G._cdf(pts))),
        np.max(np.abs(F._cdf_left(pts) - G._cdf_left(pts))),
    )
    return float(diff)


def quantile_continuity_check(dist: Distribution, p: float, eps_grid=DEFAULT_EPS_GRID) -> bool:
    """Finite-grid check of F(F^{-1}(p) - eps) < p < F(F^{-1}(p) + eps)."""
    if not (0.0 < p < 1.0):
        raise DomainError("p must lie in (0, 1)")
    eps = np.asarray(eps_grid, dtype=float)
    if eps.size == 0 or np.any(eps <= 0):
        raise DomainError("eps_grid must be a non-empty positive sequence")
    q = float(dist.quantile(p))
    below = dist._cdf(q - eps)
    above = dist._cdf(q + eps)
    return bool(np.all(below < p) and np.all(above > p))


_FAMILIES = {
    "uniform": (Uniform, ("a", "b")),
    "pareto1": (ParetoI, ("x0", "alpha")),
    "pareto": (ParetoI, ("x0", "alpha")),
    "gapped": (GappedUniform, ("a",)),
    "normal": (Normal, ("mu", "sigma")),
    "logistic": (Logistic, ("mu", "s")),
}


def make_dist(spec) -> Distribution:
    """Build a distribution from ``describe()`` output or a string like
    ``"uniform:0,2"``, ``"pareto:1,3"``, ``"gapped:0.5"``, ``"normal:0,1"``."""
    if isinstance(spec, Distribution):
        return spec
    if isinstance(spec, str):
        name, _, args = spec.strip().partition(":")
        name = name.lower()
        if name not in _FAMILIES:
            raise DomainError(f"unknown distribution {name!r}; choose from {sorted(_FAMILIES)}")
        cls, _ = _FAMILIES[name]
        try:
            vals = [float(v) for v in args.split(",")] if args else []
        except ValueError:
            raise DomainError(f"bad distribution parameters in {spec!r}") from None
        return cls(*vals)
    if isinstance(spec, dict):
        spec = dict(spec)
        name = str(spec.pop("dist", "")).lower()
        if name == "step":
            return StepCDF(spec["atoms"], spec["masses"])
        if name == "mixture":
            return Mixture([make_dist(c) for c in spec["components"]], spec["weights"])
        if name not in _FAMILIES:
            raise DomainError(f"unknown distribution {name!r}")
        cls, params = _FAMILIES[name]
        extra = set(spec) - set(params)
        if extra:
            raise DomainError(f"unexpected parameters {sorted(extra)} for {name}")
        return cls(**{k: float(v) for k, v in spec.items()})
    raise DomainError(f"cannot build a distribution from {spec!r}")
