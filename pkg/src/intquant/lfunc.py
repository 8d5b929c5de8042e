"""L-functionals: integrals of the quantile function against a weight.

A weight is stored through a partition 0 = a_0 < ... < a_K = 1 and, on each
cell [a_{k-1}, a_k), a pair (w_k1, w_k2) of non-decreasing right-continuous
functions with w = w_k1 - w_k2 there.  With that representation an
L-integral can be rewritten entirely through layer integrals of the
quantile function (``l_integral_layered``), which is the route used for
inference; ``l_integral_direct`` is the plain quadrature reference.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .dist import Distribution, StepCDF, quad_unit
from .errors import DivergenceError, DomainError

Fn = Callable[[np.ndarray], np.ndarray]


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class WeightPiece:
    """w = w1 - w2 on [lo, hi); w1, w2 non-decreasing and right-continuous there."""

    lo: float
    hi: float
    w1: Fn
    w2: Fn
    inv1: Fn | None = None
    inv2: Fn | None = None


class WeightFunction:
    """Piecewise monotone weight w on (0, 1) in the two-function form."""

    def __init__(self, pieces: Sequence[WeightPiece], name: str = "custom",
                 kw: Callable[[float], float] | None = None, breaks: Sequence[float] = (),
                 domination_c: float | None = None):
        if not pieces:
            raise DomainError("a weight needs at least one piece")
        if pieces[0].lo != 0.0 or pieces[-1].hi != 1.0:
            raise DomainError("pieces must cover [0, 1)")
        for left, right in zip(pieces[:-1], pieces[1:]):
            if left.hi != right.lo:
                raise DomainError("pieces must be contiguous")
        for pc in pieces:
            if not pc.lo < pc.hi:
                raise DomainError("empty piece in partition")
        self.pieces = tuple(pieces)
        self.name = name
        self._kw = kw
        self.breaks = tuple(sorted(set(breaks) | {pc.lo for pc in pieces[1:]}))
        self.domination_c = domination_c

    @property
    def K(self) -> int:
        return len(self.pieces)

    @property
    def partition(self) -> tuple[float, ...]:
        return (0.0,) + tuple(pc.hi for pc in self.pieces)

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        out = np.zeros_like(u_arr)
        for pc in self.pieces:
            m = (u_arr >= pc.lo) & (u_arr < pc.hi)
            if pc.hi == 1.0:
                m |= u_arr == 1.0
            if np.any(m):
                uu = u_arr[m]
                out[m] = np.asarray(pc.w1(uu), dtype=float) - np.asarray(pc.w2(uu), dtype=float)
        return float(out) if u_arr.ndim == 0 else out

    def kw(self, t: float) -> float:
        """K_w(t), the integral of w over [0, t]."""
        if not (0.0 <= t <= 1.0):
            raise DomainError("K_w needs t in [0, 1]")
        if self._kw is not None:
            return float(self._kw(t))
        if t == 0.0:
            return 0.0
        return quad_unit(self, 0.0, t, breaks=self.breaks)

    def __repr__(self):
        return f"WeightFunction({self.name}, K={self.K})"


# ----------------------------------------------------------------- inverses
def _left(fn: Fn, x: float, toward: float) -> float:
    return float(fn(np.asarray(np.nextafter(x, toward))))


def monotone_inverse(fn: Fn, lo: float, hi: float, x: float, tol: float = 1e-13) -> float:
    """inf{u in [lo, hi) : fn(u) >= x}, with inf of the empty set = hi."""
    if float(fn(np.asarray(lo))) >= x:
        return lo
    if _left(fn, hi, lo) < x:
        return hi
    a, b = lo, hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if float(fn(np.asarray(m))) >= x:
            b = m
        else:
            a = m
    return b


# -------------------------------------------------------------- evaluation
def _check_dist(dist) -> Distribution:
    if not isinstance(dist, Distribution):
        dist = StepCDF.from_sample(dist)
    return dist


def l_integral_direct(dist, w: WeightFunction) -> float:
    """Quadrature of F^{-1}(u) w(u) over (0, 1).

    Step distributions are integrated cell by cell in u, using K_w on each
    cell.  Otherwise adaptive quadrature with dyadic splits near 0 and 1
    guards against integrable endpoint singularities and flags divergence.
    """
    dist = _check_dist(dist)
    if isinstance(dist, StepCDF):
        edges = np.concatenate(([0.0], dist._cum))
        kvals = np.array([w.kw(float(t)) for t in edges])
        return float(np.dot(dist.atoms, np.diff(kvals)))
    ppf = dist._ppf
    breaks = list(w.breaks)
    if not dist.continuous:
        breaks += [float(dist.cdf(x)) for x in _jump_points(dist)]
    return quad_unit(lambda u: ppf(u) * w(u), 0.0, 1.0, rel_tol=1e-10, breaks=breaks)


def _jump_points(dist) -> list[float]:
    if isinstance(dist, StepCDF):
        return list(dist.atoms)
    sub = getattr(dist, "_step", None)
    if isinstance(sub, StepCDF):
        return list(sub.atoms)
    out = []
    for c in getattr(dist, "components", ()):
        out += _jump_points(c)
    return out


def _quad_x(fn: Callable[[float], float], lo: float, hi: float, breaks: Sequence[float]) -> float:
    """Integral over x in [lo, hi] (limits may be infinite)."""
    if not lo < hi:
        return 0.0
    pts = sorted({p for p in breaks if lo < p < hi and math.isfinite(p)})
    # keep infinite tails out of the finite chunks
    if math.isinf(lo) or math.isinf(hi):
        anchor = pts or [0.0 if (math.isinf(lo) and math.isinf(hi)) else (hi - 1.0 if math.isinf(lo) else lo + 1.0)]
        pts = sorted(set(pts) | {anchor[0]})
    nodes = [lo] + pts + [hi]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(nodes[:-1], nodes[1:]):
            if a == b:
                continue
            val, _ = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
            total += val
    if not math.isfinite(total):
        raise DivergenceError("outer integral diverges")
    return total


def _layered_monotone(dist: Distribution, g: Fn, ginv: Fn | None, a: float, b: float) -> float:
    """Integral of F^{-1} g over [a, b) for non-decreasing right-continuous g,
    written through layer integrals Q(s, t) = integral of F^{-1} over [s, t]:

        - int_{g(a)}^{0} Q(a, b ^ g^{-1}(x)) dx + int_0^{g(b-)} Q(a v g^{-1}(x), b) dx
    """
    Q = dist.quantile_integral
    ga = float(g(np.asarray(a)))
    gb = _left(g, b, a)
    if ga == gb:  # constant on the piece
        return ga * Q(a, b) if ga != 0.0 else 0.0

    def inv(x: float) -> float:
        if ginv is not None:
            return min(max(float(ginv(np.asarray(x))), a), b)
        return monotone_inverse(g, a, b, x)

    # probe values of g serve as x-breakpoints so jumps of g get bracketed
    probe = np.linspace(a, b, 65)[1:-1]
    gv = np.asarray(g(probe), dtype=float)
    brk = [float(v) for v in gv if math.isfinite(v)]
    if isinstance(dist, StepCDF):
        # Q(s, t) has kinks where t crosses a cumulative mass, i.e. at x = g(cum_j)
        cum = dist._cum[(dist._cum > a) & (dist._cum < b)]
        if cum.size:
            brk += [float(v) for v in np.asarray(g(cum), dtype=float) if math.isfinite(v)]

    total = 0.0
    if ga < 0.0:
        top = min(0.0, gb)
        total -= _quad_x(lambda x: Q(a, min(b, inv(x))), ga, top, brk)
        if gb < 0.0:
            total -= (0.0 - gb) * Q(a, b)
    if gb > 0.0:
        bottom = max(0.0, ga)
        if ga > 0.0:
            total += ga * Q(a, b)
        total += _quad_x(lambda x: Q(max(a, inv(x)), b), bottom, gb, brk)
    return total


def l_integral_layered(dist, w: WeightFunction) -> float:
    """L-integral evaluated piece by piece through the layer-integral representation."""
    dist = _check_dist(dist)
    total = 0.0
    for pc in w.pieces:
        total += _layered_monotone(dist, pc.w1, pc.inv1, pc.lo, pc.hi)
        total -= _layered_monotone(dist, pc.w2, pc.inv2, pc.lo, pc.hi)
    return total


def kw_identity_check(F, G, w: WeightFunction) -> float:
    """Residual of  int (G^{-1} - F^{-1}) w du  =  int (K_w(F(x)) - K_w(G(x))) dx."""
    F, G = _check_dist(F), _check_dist(G)
    lhs = l_integral_direct(G, w) - l_integral_direct(F, w)
    if isinstance(F, StepCDF) and isinstance(G, StepCDF):
        x = np.union1d(F.atoms, G.atoms)
        fk = np.array([w.kw(float(t)) for t in F._cdf(x[:-1])])
        gk = np.array([w.kw(float(t)) for t in G._cdf(x[:-1])])
        rhs = float(np.dot(fk - gk, np.diff(x)))
    else:
        pts = set()
        for d in (F, G):
            lo, hi = d.support
            for u in (0.0, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0):
                if (u == 0.0 and math.isinf(lo)) or (u == 1.0 and math.isinf(hi)):
                    continue
                pts.add(float(d.quantile(u)))
            pts.update(_jump_points(d))
        lo = min(F.support[0], G.support[0])
        hi = max(F.support[1], G.support[1])
        fn = lambda x: w.kw(float(F.cdf(x))) - w.kw(float(G.cdf(x)))
        rhs = _quad_x(fn, lo, hi, sorted(pts))
    return lhs - rhs


# ---------------------------------------------------------------- (C_w) check
def domination_constant(w: WeightFunction, eps: float = 1e-3, n: int = 2000) -> float:
    """Smallest c with max(|w_k1|, |w_k2|) <= c |w| on the boundary grids
    (0, eps] for the first piece and [1 - eps, 1) for the last; inf if none."""
    first, last = w.pieces[0], w.pieces[-1]
    lo_grid = np.unique(np.concatenate((np.geomspace(1e-12, eps, n // 2), np.linspace(0, eps, n // 2)[1:])))
    hi_grid = 1.0 - lo_grid
    c = 0.0
    for pc, grid in ((first, lo_grid[lo_grid < first.hi]), (last, hi_grid[hi_grid >= last.lo])):
        if grid.size == 0:
            continue
        a1 = np.abs(np.asarray(pc.w1(grid), dtype=float))
        a2 = np.abs(np.asarray(pc.w2(grid), dtype=float))
        top = np.maximum(a1, a2)
        bottom = np.abs(np.asarray(w(grid), dtype=float))
        zero = bottom == 0.0
        if np.any(top[zero] > 0.0):
            return math.inf
        if np.any(~zero):
            c = max(c, float(np.max(top[~zero] / bottom[~zero])))
    return c


def check_monotone(w: WeightFunction, n: int = 10_000, tol: float = 0.0) -> bool:
    """All piece functions non-decreasing on an n-point grid of their cell."""
    for pc in w.pieces:
        u = np.linspace(pc.lo, pc.hi, n, endpoint=False)
        for fn in (pc.w1, pc.w2):
            v = np.asarray(fn(u), dtype=float)
            if np.any(np.diff(v) < -tol):
                return False
    return True


# ------------------------------------------------------------ partition reduction
def _shifted(fn: Fn, s: float) -> Fn:
    return lambda u: np.asarray(fn(u), dtype=float) + s


def _glue(funcs: Sequence[Fn], cuts: Sequence[float]) -> Fn:
    """Piecewise function: funcs[j] on [cuts[j], cuts[j+1])."""
    inner = np.asarray(cuts[1:-1], dtype=float)

    def g(u):
        u_arr = np.asarray(u, dtype=float)
        flat_u = np.atleast_1d(u_arr)
        idx = np.searchsorted(inner, flat_u, side="right")
        res = np.empty(flat_u.shape)
        for j, fn in enumerate(funcs):
            m = idx == j
            if np.any(m):
                res[m] = np.asarray(fn(flat_u[m]), dtype=float)
        return res.reshape(u_arr.shape)

    return g


def reduce_partition(w: WeightFunction) -> WeightFunction:
    """Rewrite a K >= 3 representation with K = 2.

    Pieces 1..K-1 are merged into one piece on [0, a_{K-1}); piece k is
    lifted by S_k = c_2 + ... + c_k so both merged functions stay
    non-decreasing across the cut points.  The shift c_k is the smallest
    value that does this,

        c_k = max(w_{k-1,1}(a_{k-1}-) - w_{k1}(a_{k-1}),
                  w_{k-1,2}(a_{k-1}-) - w_{k2}(a_{k-1})).

    The last piece is kept as is, so the behaviour near 0 and 1 (and hence
    the domination bounds) is unchanged.
    """
    if w.K <= 2:
        return w
    head = w.pieces[:-1]
    shifts = [0.0]
    for prev, cur in zip(head[:-1], head[1:]):
        cut = cur.lo
        c1 = _left(prev.w1, cut, prev.lo) - float(cur.w1(np.asarray(cut)))
        c2 = _left(prev.w2, cut, prev.lo) - float(cur.w2(np.asarray(cut)))
        shifts.append(shifts[-1] + max(c1, c2))
    cuts = [pc.lo for pc in head] + [head[-1].hi]
    w1 = _glue([_shifted(pc.w1, s) for pc, s in zip(head, shifts)], cuts)
    w2 = _glue([_shifted(pc.w2, s) for pc, s in zip(head, shifts)], cuts)
    merged = WeightPiece(0.0, head[-1].hi, w1, w2)
    return WeightFunction([merged, w.pieces[-1]], name=f"{w.name}/reduced", kw=w._kw,
                          breaks=w.breaks, domination_c=w.domination_c)


# ---------------------------------------------------------------- builtin weights
def constant(c: float = 1.0) -> WeightFunction:
    c = float(c)
    f = lambda u: np.full_like(np.asarray(u, dtype=float), c)
    if c >= 0:
        pc = WeightPiece(0.0, 1.0, f, _zero)
    else:
        pc = WeightPiece(0.0, 1.0, _zero, lambda u: -f(u))
    return WeightFunction([pc], "constant", kw=lambda t: c * t, domination_c=1.0)


def normal_scale() -> WeightFunction:
    """w(u) = Phi^{-1}(u)."""
    pc = WeightPiece(0.0, 1.0, special.ndtri, _zero, inv1=special.ndtr)
    kw = lambda t: 0.0 if t in (0.0, 1.0) else -math.exp(-0.5 * float(special.ndtri(t)) ** 2) / math.sqrt(2 * math.pi)
    return WeightFunction([pc], "normal-scale", kw=kw, domination_c=1.0)


def logistic_location(split: str = "direct") -> WeightFunction:
    """w(u) = 6u(1-u) with a two-piece split at 1/2.

    ``split="direct"`` uses (w, 0) and (0, -w); ``split="polynomial"`` uses
    (6u, 6u^2) and (-6(1-u)^2, -6(1-u)).
    """
    w = lambda u: 6.0 * np.asarray(u) * (1.0 - np.asarray(u))
    if split == "direct":
        pieces = [WeightPiece(0.0, 0.5, w, _zero), WeightPiece(0.5, 1.0, _zero, lambda u: -w(u))]
        c = 1.0
    elif split == "polynomial":
        pieces = [
            WeightPiece(0.0, 0.5, lambda u: 6.0 * np.asarray(u), lambda u: 6.0 * np.asarray(u) ** 2),
            WeightPiece(0.5, 1.0, lambda u: -6.0 * (1.0 - np.asarray(u)) ** 2, lambda u: -6.0 * (1.0 - np.asarray(u))),
        ]
        c = 2.0
    else:
        raise DomainError(f"unknown split {split!r}")
    return WeightFunction(pieces, "logistic", kw=lambda t: 3 * t * t - 2 * t ** 3, domination_c=c)


def gmd() -> WeightFunction:
    """Gini mean difference, w(u) = 4u - 2."""
    f = lambda u: 4.0 * np.asarray(u, dtype=float) - 2.0
    pc = WeightPiece(0.0, 1.0, f, _zero, inv1=lambda x: (np.asarray(x) + 2.0) / 4.0)
    return WeightFunction([pc], "gmd", kw=lambda t: 2 * t * t - 2 * t, domination_c=1.0)


def _tail_weight(p: float, name: str, slope: float, offset: float, kw) -> WeightFunction:
    # w(u) = 1{p <= u < 1} (offset + slope * u)
    lin = lambda u: offset + slope * np.asarray(u, dtype=float)
    if slope >= 0:
        tail = WeightPiece(p, 1.0, lin, _zero)
    else:
        tail = WeightPiece(p, 1.0, _zero, lambda u: -lin(u))
    if p == 0.0:
        return WeightFunction([WeightPiece(0.0, 1.0, tail.w1, tail.w2)], name, kw=kw, domination_c=1.0)
    head = WeightPiece(0.0, p, _zero, _zero)
    return WeightFunction([head, tail], name, kw=kw, breaks=(p,), domination_c=1.0)


def tail_gini(p: float) -> WeightFunction:
    """w(u) = 1{p <= u < 1} (4u - 2(1+p)) / (1-p)^2."""
    if not (0.0 <= p < 1.0):
        raise DomainError("tail_gini needs p in [0, 1)")
    d = (1.0 - p) ** 2

    def kw(t):
        if t <= p:
            return 0.0
        return (2.0 * (t * t - p * p) - 2.0 * (1.0 + p) * (t - p)) / d

    return _tail_weight(p, f"tail-gini({p:g})", 4.0 / d, -2.0 * (1.0 + p) / d, kw)


def gini_shortfall(p: float, lam: float) -> WeightFunction:
    """w(u) = 1{p <= u < 1} (1 - p + 4 lam (u - (1+p)/2)) / (1-p)^2."""
    if not (0.0 <= p < 1.0):
        raise DomainError("gini_shortfall needs p in [0, 1)")
    if lam < 0:
        raise DomainError("gini_shortfall needs lam >= 0")
    d = (1.0 - p) ** 2

    def kw(t):
        if t <= p:
            return 0.0
        return ((1.0 - p) * (t - p) + 4.0 * lam * ((t * t - p * p) / 2.0 - (1.0 + p) / 2.0 * (t - p))) / d

    slope = 4.0 * lam / d
    offset = (1.0 - p - 2.0 * lam * (1.0 + p)) / d
    return _tail_weight(p, f"gini-shortfall({p:g},{lam:g})", slope, offset, kw)


def tvar_up_weight(p: float) -> WeightFunction:
    """w(u) = 1{p <= u < 1} / (1-p); the L-integral is the upside TVaR."""
    return gini_shortfall(p, 0.0)


BUILTINS = {
    "constant": constant,
    "normal-scale": normal_scale,
    "logistic": logistic_location,
    "gmd": gmd,
    "tail-gini": tail_gini,
    "gini-shortfall": gini_shortfall,
}


def builtin(name: str, **params) -> WeightFunction:
    key = name.replace("_", "-")
    if key not in BUILTINS:
        raise DomainError(f"unknown weight {name!r}; choose from {sorted(BUILTINS)}")
    try:
        return BUILTINS[key](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for weight {name!r}: {exc}") from None
