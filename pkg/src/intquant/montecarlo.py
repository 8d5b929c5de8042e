"""Seeded Monte Carlo experiments around the empirical layer integrals.

Every replicate draws from its own counter-based stream
``(seed, experiment_id(tag, n), r)``, so reports depend only on the
configuration, never on thread count or scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from . import _rng
from .dist import Distribution, GappedUniform, Uniform, ceil_np, make_dist
from .errors import DomainError
from .layers import LayerSpec, empirical_upper, layer_integral

EXPERIMENTS = ("bias", "normality", "median-gap", "vervaat")
KS_CRIT_1PCT = 1.63  # asymptotic 1% critical value of sqrt(m) * KS


# ------------------------------------------------------------------ helpers
def ks_vs_standard_normal(values) -> float:
    """sup_x |F_m(x) - Phi(x)| for the empirical cdf F_m of ``values``."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    m = v.size
    if m == 0:
        raise DomainError("KS statistic needs at least one value")
    phi = special.ndtr(v)
    # ties: F_m jumps once per distinct value, so compare at the last copy
    hi = np.searchsorted(v, v, side="right") / m
    lo = np.searchsorted(v, v, side="left") / m
    return float(max(np.max(hi - phi), np.max(phi - lo)))


def ks_critical(m: int, level_constant: float = KS_CRIT_1PCT) -> float:
    return level_constant / math.sqrt(m)


def _map_replicates(fn: Callable[[int], float], m: int, threads: int | None = None) -> np.ndarray:
    """fn(0..m-1) collected in replicate order."""
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(fn, range(m), chunksize=64), dtype=float, count=m)
    return np.fromiter((fn(r) for r in range(m)), dtype=float, count=m)


def gapped_sigma2(a: float) -> float:
    """Var((Z - (1-a))^+) for the gapped uniform Z: (29a^2 + 14a + 5)/48."""
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"a must lie in [0, 1], got {a}")
    return (29.0 * a * a + 14.0 * a + 5.0) / 48.0


def asymptotic_upper_bias(dist: Distribution, p: float, n: int) -> float:
    """Leading term -p(1-p) / (2 n f(F^{-1}(p))) of the upper-layer bias."""
    try:
        f = float(dist.pdf(dist.quantile(p)))
    except NotImplementedError:
        return math.nan
    return -p * (1.0 - p) / (2.0 * n * f) if f > 0 else math.nan


def median_gap_probability(n: int, allow_odd: bool = False) -> tuple[float, float]:
    """(P(Z_{n/2:n} > 3/2), P(Z_{n/2:n} < 1/2)) for the gapped uniform with a = 1/2.

    Even n: 1/2 -/+ C(n, n/2) / 2^(n+1).  Odd n gives (1/2, 1/2) and is only
    accepted with ``allow_odd``.
    """
    n = int(n)
    if n < 2:
        raise DomainError("n must be >= 2")
    if n % 2:
        if not allow_odd:
            raise DomainError("median_gap_probability needs even n (pass allow_odd for the odd branch)")
        return 0.5, 0.5
    if n > 1000:
        raise DomainError("n must be <= 1000")
    log_c = math.lgamma(n + 1) - 2.0 * math.lgamma(n / 2 + 1)
    half = 0.5 * math.exp(log_c - n * math.log(2.0))
    return 0.5 - half, 0.5 + half


def vervaat_path(u, grid, k=None) -> np.ndarray:
    """n V_n(p) on ``grid`` for one uniform sample ``u``.

    Evaluated as sum_{j<i<=k}(U_i - U_k)/n + (p - U_k)(j/n - p) with
    k = ceil(np) and j = #{U_i <= p}; every term is small, so the result
    carries no cancellation from O(1) partial sums.  ``k`` may be passed
    precomputed when many paths share one grid.
    """
    us = np.sort(np.asarray(u, dtype=float))
    n = us.size
    p = np.asarray(grid, dtype=float)
    k = np.atleast_1d(ceil_np(n, p) if k is None else np.asarray(k))
    j = np.searchsorted(us, p, side="right")
    uk = np.where(k > 0, us[np.maximum(k - 1, 0)], 0.0)
    # only the |k - j| = O(sqrt(n)) order statistics between p and U_k enter
    inner = np.array([np.sign(ki - ji) * (us[min(ji, ki):max(ji, ki)] - u_k).sum()
                      for ki, ji, u_k in zip(k, j, uk)])
    return inner + n * (p - uk) * (j / n - p)


# ----------------------------------------------------------------- config
@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dist: dict = field(default_factory=lambda: {"dist": "uniform", "a": 0.0, "b": 2.0})
    p: float = 0.75
    n: tuple = (40, 100, 200, 500, 1000)
    m: int = 10_000
    seed: int = 0
    grid: int = 101
    keep_replicates: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        object.__setattr__(self, "n", tuple(int(v) for v in np.atleast_1d(self.n)))
        if isinstance(self.dist, (str, Distribution)):
            object.__setattr__(self, "dist", make_dist(self.dist).describe())
        if self.m < 1:
            raise DomainError("m must be >= 1")
        if not self.n or min(self.n) < 2:
            raise DomainError("every n must be >= 2")
        if not (0.0 < self.p < 1.0):
            raise DomainError("p must lie in (0, 1)")
        if self.grid < 2:
            raise DomainError("grid needs at least 2 points")

    @property
    def distribution(self) -> Distribution:
        return make_dist(self.dist)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "dist": self.dist, "p": self.p, "n": list(self.n),
                "m": self.m, "seed": self.seed, "grid": self.grid,
                "keep_replicates": self.keep_replicates, "out": self.out}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


PRESETS = {
    "table1-desk": ExperimentConfig("bias", "uniform:0,2", p=0.75, n=(40, 100, 200, 500, 1000), m=10_000),
    "sim2-desk": ExperimentConfig("normality", "uniform:0,2", p=0.5, n=(20_000,), m=2000),
    "sim3-desk": ExperimentConfig("normality", "gapped:0.5", p=0.5, n=(20_000,), m=2000),
    "vervaat": ExperimentConfig("vervaat", "uniform:0,1", p=0.5, n=(10_000,), m=2000, grid=101),
    "median-gap": ExperimentConfig("median-gap", "gapped:0.5", p=0.5, n=(2, 10, 100), m=50_000),
    # original sizes
    "sim2-full": ExperimentConfig("normality", "uniform:0,2", p=0.5, n=(100_000,), m=10_000),
    "sim3-full": ExperimentConfig("normality", "gapped:0.5", p=0.5, n=(100_000,), m=10_000),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]


# ----------------------------------------------------------------- report
@dataclass
class ExperimentReport:
    config: dict
    rows: list
    replicates: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"config": self.config, "rows": self.rows, "extra": self.extra}
        if self.replicates is not None:
            out["replicates"] = self.replicates
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        d = json.loads(text)
        return cls(d["config"], d["rows"], d.get("replicates"), d.get("extra", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows)
        return buf.getvalue()

    def to_dat(self) -> str:
        """Two-column text: (grid, mean path) for Vervaat, else a histogram of replicates."""
        if "grid" in self.extra:
            pairs = zip(self.extra["grid"], self.extra["mean_path"])
        elif self.replicates:
            vals = np.asarray(next(iter(self.replicates.values())), dtype=float)
            dens, edges = np.histogram(vals, bins=50, density=True)
            pairs = zip(0.5 * (edges[1:] + edges[:-1]), dens)
        else:
            raise DomainError("no per-replicate data to write; rerun with keep_replicates")
        return "".join(f"{x:.10g} {y:.10g}\n" for x, y in pairs)

    def write(self, path, fmt: str = "json") -> Path:
        path = Path(path)
        text = {"json": self.to_json, "csv": self.to_csv, "dat": self.to_dat}[fmt]()
        path.write_text(text)
        return path


def _row_stats(vals: np.ndarray) -> dict:
    m = vals.size
    sd = float(vals.std(ddof=1)) if m > 1 else 0.0
    return {"mean": float(vals.mean()), "median": float(np.median(vals)), "sd": sd,
            "se": sd / math.sqrt(m)}


# -------------------------------------------------------------- experiments
def run_bias_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Individual biases B_n(r) = empirical upper integral - population value."""
    dist = cfg.distribution
    pop = layer_integral(dist, LayerSpec.upper(cfg.p))
    rows, reps = [], {}
    for n in cfg.n:
        exp = _rng.experiment_id(_rng.BIAS, n)

        def one(r: int, n=n, exp=exp) -> float:
            return empirical_upper(dist.sample(_rng.stream(cfg.seed, exp, r), n), cfg.p) - pop

        vals = _map_replicates(one, cfg.m, threads)
        rows.append({"n": n, **_row_stats(vals), "asymptotic": asymptotic_upper_bias(dist, cfg.p, n)})
        if cfg.keep_replicates:
            reps[str(n)] = vals.tolist()
    return ExperimentReport(cfg.to_dict(), rows, reps if cfg.keep_replicates else None,
                            {"population": pop})


def normality_sigma2(dist: Distribution, p: float) -> float:
    """Asymptotic variance of the empirical upper layer at p."""
    if isinstance(dist, GappedUniform) and p == 0.5:
        return gapped_sigma2(dist.a)
    if isinstance(dist, Uniform) and (dist.a, dist.b, p) == (0.0, 2.0, 0.5):
        return gapped_sigma2(0.0)
    from .risk import upper_sigma2

    return upper_sigma2(dist, p)


def run_normality_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Standardised Delta_n = sqrt(n)(empirical - population)/sigma and its KS distance to N(0,1)."""
    odd = [n for n in cfg.n if n % 2]
    if odd:
        raise DomainError(f"normality experiment needs even n, got {odd}")
    dist = cfg.distribution
    pop = layer_integral(dist, LayerSpec.upper(cfg.p))
    sigma2 = normality_sigma2(dist, cfg.p)
    sigma = math.sqrt(sigma2)
    crit = ks_critical(cfg.m)
    rows, reps = [], {}
    for n in cfg.n:
        exp = _rng.experiment_id(_rng.NORMALITY, n)
        scale = math.sqrt(n) / sigma

        def one(r: int, n=n, exp=exp, scale=scale) -> float:
            return scale * (empirical_upper(dist.sample(_rng.stream(cfg.seed, exp, r), n), cfg.p) - pop)

        vals = _map_replicates(one, cfg.m, threads)
        ks = ks_vs_standard_normal(vals)
        rows.append({"n": n, **_row_stats(vals), "ks": ks, "ks_crit_1pct": crit, "normal_at_1pct": ks < crit})
        if cfg.keep_replicates:
            reps[str(n)] = vals.tolist()
    return ExperimentReport(cfg.to_dict(), rows, reps if cfg.keep_replicates else None,
                            {"population": pop, "sigma2": sigma2})


def run_median_gap_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Exact vs simulated P(Z_{n/2:n} > 3/2) and P(Z_{n/2:n} < 1/2), Z gapped with a = 1/2."""
    dist = GappedUniform(0.5)
    rows = []
    for n in cfg.n:
        exact_gt, exact_lt = median_gap_probability(n)
        exp = _rng.experiment_id(_rng.MEDIAN_GAP, n)
        k = n // 2

        def one(r: int, n=n, exp=exp, k=k) -> float:
            z = dist.sample(_rng.stream(cfg.seed, exp, r), n)
            return float(np.partition(z, k - 1)[k - 1])

        med = _map_replicates(one, cfg.m, threads)
        gt, lt = float(np.mean(med > 1.5)), float(np.mean(med < 0.5))
        rows.append({"n": n, "exact_gt": exact_gt, "exact_lt": exact_lt, "mc_gt": gt, "mc_lt": lt,
                     "se_gt": math.sqrt(exact_gt * (1 - exact_gt) / cfg.m),
                     "se_lt": math.sqrt(exact_lt * (1 - exact_lt) / cfg.m)})
    return ExperimentReport(cfg.to_dict(), rows)


def vervaat_paths(n: int, grid, m: int = 1, seed: int = 0, threads: int | None = None) -> tuple[np.ndarray, dict]:
    """m paths of n V_n(p) on ``grid`` plus a summary."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any((grid < 0) | (grid > 1)):
        raise DomainError("grid must be a non-empty subset of [0, 1]")
    exp = _rng.experiment_id(_rng.VERVAAT, n)
    k = ceil_np(n, grid)

    def one(r: int) -> np.ndarray:
        return vervaat_path(_rng.stream(seed, exp, r).random(n), grid, k)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            paths = np.vstack(list(pool.map(one, range(m))))
    else:
        paths = np.vstack([one(r) for r in range(m)])
    summary = {
        "n": n,
        "m": m,
        "min_value": float(paths.min()),
        "mean_path": paths.mean(axis=0).tolist(),
        "limit_mean": (grid * (1 - grid) / 2).tolist(),
    }
    return paths, summary


def run_vervaat_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    grid = np.linspace(0.0, 1.0, cfg.grid)
    rows, extra = [], {}
    for n in cfg.n:
        paths, summ = vervaat_paths(n, grid, cfg.m, cfg.seed, threads)
        i = int(np.argmin(np.abs(grid - cfg.p)))
        mean_p = float(paths[:, i].mean())
        rows.append({"n": n, "p": float(grid[i]), "mean": mean_p,
                     "limit": float(grid[i] * (1 - grid[i]) / 2), "min_value": summ["min_value"],
                     "max_abs_boundary": float(np.max(np.abs(paths[:, [0, -1]])))})
        extra = {"grid": grid.tolist(), "mean_path": summ["mean_path"]}
    return ExperimentReport(cfg.to_dict(), rows, None, extra)


_RUNNERS = {
    "bias": run_bias_experiment,
    "normality": run_normality_experiment,
    "median-gap": run_median_gap_experiment,
    "vervaat": run_vervaat_experiment,
}


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    return _RUNNERS[cfg.experiment](cfg, threads)
