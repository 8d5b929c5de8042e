"""Layer integrals of quantile functions, their empirical estimators, and
the remainder-term decompositions linking quantile-side and cdf-side
integrals."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .dist import Distribution, Sample, StepCDF, ceil_np, sup_distance
from .errors import DomainError

KINDS = ("upper", "lower", "middle", "full")


@dataclass(frozen=True)
class LayerSpec:
    """Which part of (0, 1) to integrate the quantile over.

    ``upper(p)`` is [p, 1], ``lower(p)`` is [0, p], ``middle(p1, p2)`` is
    [p1, p2] with 0 < p1 < p2 < 1, and ``full`` is [0, 1].
    """

    kind: str
    p1: float | None = None
    p2: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("upper", "lower"):
            p = self.p1
            if p is None or not (0.0 < p < 1.0):
                raise DomainError(f"{self.kind} layer needs p in (0, 1), got {p!r}")
            if self.p2 is not None:
                raise DomainError(f"{self.kind} layer takes a single level")
        elif self.kind == "middle":
            p1, p2 = self.p1, self.p2
            if p1 is None or p2 is None:
                raise DomainError("middle layer needs p1 and p2")
            if p1 <= 0.0:
                raise DomainError("middle layer needs p1 > 0; use LayerSpec.lower(p2) for [0, p2]")
            if p2 >= 1.0:
                raise DomainError("middle layer needs p2 < 1; use LayerSpec.upper(p1) for [p1, 1]")
            if not p1 < p2:
                raise DomainError(f"middle layer needs p1 < p2, got ({p1}, {p2})")
        elif self.p1 is not None or self.p2 is not None:
            raise DomainError("full layer takes no levels")

    @classmethod
    def upper(cls, p: float) -> "LayerSpec":
        return cls("upper", float(p))

    @classmethod
    def lower(cls, p: float) -> "LayerSpec":
        return cls("lower", float(p))

    @classmethod
    def middle(cls, p1: float, p2: float) -> "LayerSpec":
        return cls("middle", float(p1), float(p2))

    @classmethod
    def full(cls) -> "LayerSpec":
        return cls("full")

    @classmethod
    def parse(cls, text: str) -> "LayerSpec":
        """Parse ``upper:0.5``, ``lower:0.25``, ``middle:0.25,0.75`` or ``full``."""
        kind, _, rest = text.strip().partition(":")
        try:
            levels = [float(t) for t in rest.split(",")] if rest else []
        except ValueError:
            raise DomainError(f"cannot parse layer {text!r}") from None
        if kind == "full" and not levels:
            return cls.full()
        if kind in ("upper", "lower") and len(levels) == 1:
            return cls(kind, levels[0])
        if kind == "middle" and len(levels) == 2:
            return cls.middle(*levels)
        raise DomainError(f"cannot parse layer {text!r}")

    @property
    def bounds(self) -> tuple[float, float]:
        if self.kind == "upper":
            return self.p1, 1.0
        if self.kind == "lower":
            return 0.0, self.p1
        if self.kind == "middle":
            return self.p1, self.p2
        return 0.0, 1.0

    def __str__(self) -> str:
        if self.kind == "full":
            return "full"
        if self.kind == "middle":
            return f"middle:{self.p1:g},{self.p2:g}"
        return f"{self.kind}:{self.p1:g}"


@dataclass(frozen=True)
class DecompositionReport:
    kind: str
    lhs: float
    cdf_side: float
    rem_p1: float
    rem_p2: float
    residual: float


# ----------------------------------------------------------- population
def layer_integral(dist, spec: LayerSpec) -> float:
    """Integral of the quantile function over the layer.

    A Sample (or raw array) is treated through its empirical quantile.
    """
    if not isinstance(dist, Distribution):
        return empirical_layer(dist, spec)
    return dist.quantile_integral(*spec.bounds)


# ------------------------------------------------------------ empirical
def _values(data) -> tuple[np.ndarray, bool]:
    if isinstance(data, Sample):
        return data.sorted, True
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("empty sample")
    return arr, False


def _check_level(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return float(p)


def empirical_upper(data, p: float) -> float:
    """(1/n) sum_{i>k} X_{i:n} + (k/n - p) X_{k:n} with k = ceil(np)."""
    p = _check_level(p)
    x, is_sorted = _values(data)
    n = x.size
    k = ceil_np(n, p)
    if not is_sorted:
        x = np.partition(x, k - 1)
    return float(x[k:].sum() / n + (k / n - p) * x[k - 1])


def empirical_lower(data, p: float) -> float:
    """(1/n) sum_{i<=k} X_{i:n} - (k/n - p) X_{k:n} with k = ceil(np)."""
    p = _check_level(p)
    x, is_sorted = _values(data)
    n = x.size
    k = ceil_np(n, p)
    if not is_sorted:
        x = np.partition(x, k - 1)
    return float(x[:k].sum() / n - (k / n - p) * x[k - 1])


def empirical_middle(data, p1: float, p2: float) -> float:
    """Trimmed-mean form of the integral of the empirical quantile over [p1, p2]."""
    spec = LayerSpec.middle(p1, p2)
    p1, p2 = spec.p1, spec.p2
    x, is_sorted = _values(data)
    n = x.size
    k1, k2 = ceil_np(n, p1), ceil_np(n, p2)
    if not is_sorted:
        x = np.partition(x, sorted({k1 - 1, k2 - 1}))
    return float(x[k1:k2].sum() / n - (k2 / n - p2) * x[k2 - 1] + (k1 / n - p1) * x[k1 - 1])


def empirical_layer(data, spec: LayerSpec) -> float:
    if spec.kind == "upper":
        return empirical_upper(data, spec.p1)
    if spec.kind == "lower":
        return empirical_lower(data, spec.p1)
    if spec.kind == "middle":
        return empirical_middle(data, spec.p1, spec.p2)
    x, _ = _values(data)
    return float(x.mean())


# ------------------------------------------------------------ remainder
def remainder(p: float, F: Distribution, G: Distribution) -> float:
    """Rem(p; F, G): oriented integral of G(x) - p from G^{-1}(p) to F^{-1}(p)."""
    p = _check_level(p)
    a = G.quantile(p)
    b = F.quantile(p)
    return G.cdf_integral(a, b, level=p)


def cdf_difference_integral(F: Distribution, G: Distribution, lo: float, hi: float) -> float:
    """Integral of F - G over [lo, hi]; either limit may be infinite."""
    if lo > hi:
        return -cdf_difference_integral(F, G, hi, lo)
    if math.isinf(lo) and math.isinf(hi):
        c = F.quantile(0.5)
        return cdf_difference_integral(F, G, lo, c) + cdf_difference_integral(F, G, c, hi)
    if math.isinf(lo):
        return F.lower_partial(hi) - G.lower_partial(hi)
    if math.isinf(hi):
        return G.upper_partial(lo) - F.upper_partial(lo)
    return F.cdf_integral(lo, hi) - G.cdf_integral(lo, hi)


def remainder_bounds(p: float, F: Distribution, G: Distribution, sup: float | None = None) -> tuple[float, float, float]:
    """(Rem, integral of G - F between the p-quantiles, |quantile gap| * sup|F - G|).

    The three numbers are non-decreasing.  ``sup`` may carry a precomputed
    sup-distance when many levels are checked for the same pair.
    """
    a, b = G.quantile(p), F.quantile(p)
    rem = remainder(p, F, G)
    mid = G.cdf_integral(a, b) - F.cdf_integral(a, b)
    if sup is None:
        sup = sup_distance(F, G)
    outer = abs(b - a) * sup
    return rem, mid, outer


def verify_decomposition(spec: LayerSpec, F: Distribution, G: Distribution) -> DecompositionReport:
    """Evaluate both sides of the layer identity for the pair (F, G)."""
    lo, hi = spec.bounds
    lhs = G.quantile_integral(lo, hi) - F.quantile_integral(lo, hi)
    r1 = r2 = 0.0
    if spec.kind == "upper":
        c = F.quantile(spec.p1)
        cdf_side = cdf_difference_integral(F, G, c, math.inf)
        r1 = remainder(spec.p1, F, G)
        rhs = cdf_side - r1
    elif spec.kind == "lower":
        c = F.quantile(spec.p1)
        cdf_side = cdf_difference_integral(F, G, -math.inf, c)
        r1 = remainder(spec.p1, F, G)
        rhs = cdf_side + r1
    elif spec.kind == "middle":
        c1, c2 = F.quantile(spec.p1), F.quantile(spec.p2)
        cdf_side = cdf_difference_integral(F, G, c1, c2)
        r1 = remainder(spec.p1, F, G)
        r2 = remainder(spec.p2, F, G)
        rhs = cdf_side + r2 - r1
    else:
        cdf_side = cdf_difference_integral(F, G, -math.inf, math.inf)
        rhs = cdf_side
    return DecompositionReport(spec.kind, lhs, cdf_side, r1, r2, lhs - rhs)


# ----------------------------------------------------------------- fuzz
def random_step_cdf(rng: np.random.Generator, max_atoms: int = 20, low: float = -5.0, high: float = 5.0) -> StepCDF:
    """Random step cdf with 1..max_atoms atoms in [low, high] and Dirichlet masses."""
    k = int(rng.integers(1, max_atoms + 1))
    atoms = rng.uniform(low, high, size=k)
    # occasionally reuse atoms to exercise tie merging
    if k > 2 and rng.random() < 0.2:
        atoms[-1] = atoms[0]
    masses = rng.dirichlet(np.ones(k))
    return StepCDF(atoms, masses)


@dataclass
class FuzzSummary:
    pairs: int
    checks: int
    max_residual: dict = field(default_factory=dict)
    min_remainder: float = math.inf
    bound_violations: int = 0
    negative_remainders: int = 0
    elapsed: float = 0.0

    @property
    def worst_residual(self) -> float:
        return max(self.max_residual.values(), default=0.0)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.worst_residual <= tol and self.negative_remainders == 0 and self.bound_violations == 0

    def to_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "checks": self.checks,
            "max_residual": dict(self.max_residual),
            "worst_residual": self.worst_residual,
            "min_remainder": self.min_remainder,
            "negative_remainders": self.negative_remainders,
            "bound_violations": self.bound_violations,
            "elapsed_s": self.elapsed,
        }


def fuzz_identities(n_pairs: int = 1000, seed: int = 0, extra_levels: int = 4) -> FuzzSummary:
    """Check every layer identity and the remainder bounds on random step-cdf pairs.

    The level grid for each pair mixes a fixed grid, random levels, and the
    cumulative masses of both cdfs (so flat stretches and jumps are hit
    exactly).
    """
    t0 = time.perf_counter()
    base = np.round(np.arange(0.05, 1.0, 0.1), 10)
    summ = FuzzSummary(pairs=n_pairs, checks=0, max_residual={k: 0.0 for k in KINDS})
    for r in range(n_pairs):
        rng = _rng.stream(seed, _rng.experiment_id(_rng.FUZZ), r)
        F = random_step_cdf(rng)
        G = random_step_cdf(rng)
        cums = np.concatenate((F._cum[:-1], G._cum[:-1]))
        levels = np.unique(np.concatenate((base, rng.random(extra_levels), cums)))
        levels = [float(v) for v in levels if 0.0 < v < 1.0]
        reports = [verify_decomposition(LayerSpec.full(), F, G)]
        sup = sup_distance(F, G)
        for p in levels:
            reports.append(verify_decomposition(LayerSpec.upper(p), F, G))
            reports.append(verify_decomposition(LayerSpec.lower(p), F, G))
            rem, mid, outer = remainder_bounds(p, F, G, sup)
            slack = 1e-12 * (1.0 + abs(mid))
            if rem < 0.0:
                summ.negative_remainders += 1
            if rem > mid + slack or mid > outer + slack:
                summ.bound_violations += 1
            summ.min_remainder = min(summ.min_remainder, rem)
        for p1, p2 in zip(levels[:-1], levels[1:]):
            reports.append(verify_decomposition(LayerSpec.middle(p1, p2), F, G))
        for rep in reports:
            summ.max_residual[rep.kind] = max(summ.max_residual[rep.kind], abs(rep.residual))
        summ.checks += len(reports)
    summ.elapsed = time.perf_counter() - t0
    return summ
