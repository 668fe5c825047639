"""Piecewise-constant functions on the half line and their weighted functionals.

A :class:`GridFunction` is constant on each half-open cell ``(t_i, t_{i+1}]``
and equal to ``tail_value`` beyond the last breakpoint.  Every integral
against ``x**(2 lam) dx`` is then a finite sum of closed-form cell masses,
so norms, averages, medians and mean oscillations carry no quadrature
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfiniteNormError, InvalidArgumentError
from .measure import Interval, check_lambda, measure_between, radius_for_measure

__all__ = [
    "GridFunction",
    "MedianValue",
    "CMOConditions",
    "lp_norm",
    "translate",
    "weighted_integral",
    "interval_average",
    "median",
    "median_oscillation",
    "oscillation",
    "oscillations",
    "interval_averages",
    "lebesgue_integral",
    "bmo_norm_estimate",
    "dyadic_intervals",
    "cmo_conditions",
]

# cap on the number of (interval, cell) pieces materialized at once
_PIECE_BUDGET = 4_000_000


def check_p(p):
    p = float(p)
    if not (1.0 < p < math.inf):
        raise InvalidArgumentError(f"p must lie in (1, inf), got {p!r}")
    return p


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Step function with ``values[i]`` on ``(breakpoints[i], breakpoints[i+1]]``.

    The first breakpoint is always 0; a representation starting later is
    padded with a zero cell on construction.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    tail_value: float = 0.0

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).ravel()
        vals = np.array(self.values, dtype=float).ravel()
        if len(bp) < 2 or len(vals) != len(bp) - 1:
            raise InvalidArgumentError("need len(values) == len(breakpoints) - 1 >= 1")
        if bp[0] < 0 or np.any(np.diff(bp) <= 0) or not np.all(np.isfinite(bp)):
            raise InvalidArgumentError("breakpoints must be finite, nonnegative and strictly increasing")
        if not np.all(np.isfinite(vals)) or not math.isfinite(self.tail_value):
            raise InvalidArgumentError("values must be finite")
        if bp[0] > 0:
            bp = np.concatenate([[0.0], bp])
            vals = np.concatenate([[0.0], vals])
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail_value", float(self.tail_value))

    # construction helpers

    @classmethod
    def constant(cls, c: float, support: float = 1.0) -> "GridFunction":
        return cls([0.0, support], [c], tail_value=c)

    @classmethod
    def indicator(cls, lo: float, hi: float) -> "GridFunction":
        """``chi_(lo, hi)``."""
        if lo <= 0:
            return cls([0.0, hi], [1.0])
        return cls([0.0, lo, hi], [0.0, 1.0])

    @classmethod
    def from_function(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        breakpoints,
        tail_value: float = 0.0,
    ) -> "GridFunction":
        """Rasterize ``func`` by its value at each cell midpoint."""
        bp = np.asarray(breakpoints, dtype=float)
        mid = 0.5 * (bp[:-1] + bp[1:])
        return cls(bp, np.asarray(func(mid), dtype=float), tail_value)

    # basic properties

    @property
    def support_bound(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_cells(self) -> int:
        return len(self.values)

    def cell_masses(self, lam: float) -> np.ndarray:
        return measure_between(self.breakpoints[:-1], self.breakpoints[1:], lam)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="left") - 1
        ext = np.concatenate([self.values, [self.tail_value]])
        out = ext[np.clip(idx, 0, len(ext) - 1)]
        return float(out) if out.ndim == 0 else out

    # algebra on merged partitions

    def on_breakpoints(self, bp: np.ndarray) -> np.ndarray:
        """Values on the cells of a refinement ``bp`` of this partition."""
        return self(0.5 * (bp[:-1] + bp[1:]))

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            bp = np.union1d(self.breakpoints, other.breakpoints)
            return GridFunction(
                bp,
                op(self.on_breakpoints(bp), other.on_breakpoints(bp)),
                op(self.tail_value, other.tail_value),
            )
        c = float(other)
        return GridFunction(self.breakpoints, op(self.values, c), op(self.tail_value, c))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.breakpoints, -self.values, -self.tail_value)

    def apply(self, func) -> "GridFunction":
        """Compose with a scalar function cellwise."""
        return GridFunction(self.breakpoints, func(self.values), float(func(self.tail_value)))

    def compress(self) -> "GridFunction":
        """Merge adjacent cells that carry the same value."""
        keep = np.concatenate([[True], self.values[1:] != self.values[:-1]])
        bp = np.concatenate([self.breakpoints[:-1][keep], [self.breakpoints[-1]]])
        return GridFunction(bp, self.values[keep], self.tail_value)

    def pieces(self, lo: float, hi: float):
        """Cells of ``(lo, hi)`` as ``(a, b, value)`` arrays, tail included."""
        a, b, v, _ = _pieces(self, np.array([lo], dtype=float), np.array([hi], dtype=float))
        return a, b, v


def _pieces(f: GridFunction, lo: np.ndarray, hi: np.ndarray):
    """Ragged decomposition of many intervals into constant pieces.

    Returns ``(a, b, value, owner)`` where ``owner`` is the interval index
    of each piece.  The tail counts as one extra cell extending to infinity.
    """
    ext_bp = np.concatenate([f.breakpoints, [np.inf]])
    ext_val = np.concatenate([f.values, [f.tail_value]])
    lo = np.maximum(lo, 0.0)
    first = np.searchsorted(ext_bp, lo, side="right") - 1
    last = np.searchsorted(ext_bp, hi, side="left") - 1
    last = np.maximum(last, first)
    counts = last - first + 1
    owner = np.repeat(np.arange(len(lo)), counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    cell = first[owner] + np.arange(owner.size) - offsets[owner]
    a = np.maximum(ext_bp[cell], lo[owner])
    b = np.minimum(ext_bp[cell + 1], hi[owner])
    return a, b, ext_val[cell], owner


def _weighted_means(a, b, v, owner, n, lam):
    """Per-interval weighted means of piece values and the interval masses.

    The mean is formed as the first piece value plus the mean deviation
    from it, so an interval on which ``f`` is constant gets that constant
    exactly and hence zero oscillation.
    """
    mass = measure_between(a, b, lam)
    total = np.bincount(owner, weights=mass, minlength=n)
    first = np.searchsorted(owner, np.arange(n))
    ref = v[np.minimum(first, len(v) - 1)]
    safe = np.where(total > 0, total, 1.0)
    mean = ref + np.bincount(owner, weights=mass * (v - ref[owner]), minlength=n) / safe
    return mean, total, mass


def _chunks(f: GridFunction, lo: np.ndarray, hi: np.ndarray):
    """Split interval arrays so each chunk stays within the piece budget."""
    first = np.searchsorted(f.breakpoints, lo, side="right")
    last = np.searchsorted(f.breakpoints, hi, side="left")
    cost = np.cumsum(last - first + 2)
    start = 0
    while start < len(lo):
        base = cost[start - 1] if start else 0
        stop = int(np.searchsorted(cost, base + _PIECE_BUDGET, side="right"))
        stop = max(stop, start + 1)
        yield slice(start, stop)
        start = stop


def lp_norm(f: GridFunction, p: float, lam: float, lower: float = 0.0) -> float:
    """``(int_lower^inf |f|^p x^(2 lam) dx)^(1/p)``.

    Raises :class:`InfiniteNormError` when the tail value is nonzero.
    """
    p = check_p(p)
    lam = check_lambda(lam)
    if f.tail_value != 0.0:
        raise InfiniteNormError("function has a nonzero tail; its L^p norm is infinite")
    if lower >= f.support_bound:
        return 0.0
    a, b, v = f.pieces(lower, f.support_bound)
    mass = measure_between(a, b, lam)
    return float(np.sum(np.abs(v) ** p * mass) ** (1.0 / p))


def translate(f: GridFunction, y: float) -> GridFunction:
    """Exact representation of ``x -> f(x + y)``."""
    y = float(y)
    if not y > 0:
        raise InvalidArgumentError(f"shift must be positive, got {y!r}")
    bp = f.breakpoints - y
    if bp[-1] <= 0:
        return GridFunction([0.0, 1.0], [f.tail_value], f.tail_value)
    first = int(np.searchsorted(bp, 0.0, side="right")) - 1
    new_bp = np.concatenate([[0.0], bp[first + 1:]])
    return GridFunction(new_bp, f.values[first:], f.tail_value)


def weighted_integral(f: GridFunction, I: Interval, lam: float) -> float:
    """``int_I f dm_lam``."""
    lam = check_lambda(lam)
    a, b, v = f.pieces(I.lo, I.hi)
    return float(np.sum(v * measure_between(a, b, lam)))


def interval_average(f: GridFunction, I: Interval, lam: float) -> float:
    """Weighted average ``f_{I, lam}``."""
    lam = check_lambda(lam)
    a, b, v = f.pieces(I.lo, I.hi)
    mean, _, _ = _weighted_means(a, b, v, np.zeros(len(a), dtype=int), 1, lam)
    return float(mean[0])


@dataclass(frozen=True)
class MedianValue:
    """Weighted median ``alpha`` with the masses strictly above and below it.

    ``total_mass`` is the sum of the cell masses the median was computed
    from, so the half-mass inequalities can be checked without rounding
    mismatch against a separately evaluated closed form.
    """

    alpha: float
    above_mass: float
    below_mass: float
    total_mass: float


def median(f: GridFunction, I: Interval, lam: float) -> MedianValue:
    """Smallest minimizer of ``c -> int_I |f - c| dm_lam``.

    The minimizers form ``[a, b]`` where ``a`` is the smallest value with
    ``m({f > a}) <= m(I) / 2``; ``a`` is always one of the cell values.
    """
    lam = check_lambda(lam)
    a, b, v = f.pieces(I.lo, I.hi)
    mass = measure_between(a, b, lam)
    levels, inverse = np.unique(v, return_inverse=True)
    per_level = np.bincount(inverse, weights=mass, minlength=len(levels))
    total = float(per_level.sum())
    # mass strictly above / below each level, summed directly from the tail ends
    above = np.concatenate([np.cumsum(per_level[::-1])[::-1][1:], [0.0]])
    below = np.concatenate([[0.0], np.cumsum(per_level)[:-1]])
    i = int(np.argmax(above <= 0.5 * total))
    return MedianValue(float(levels[i]), float(above[i]), float(below[i]), total)


def median_oscillation(f: GridFunction, I: Interval, lam: float) -> float:
    """``(1 / m(I)) int_I |f - alpha_I(f)| dm_lam``."""
    med = median(f, I, lam)
    a, b, v = f.pieces(I.lo, I.hi)
    mass = measure_between(a, b, lam)
    return float(np.sum(np.abs(v - med.alpha) * mass) / np.sum(mass))


def interval_averages(f: GridFunction, lo, hi, lam: float) -> np.ndarray:
    """Weighted averages of ``f`` over many intervals ``(lo_i, hi_i)``."""
    lam = check_lambda(lam)
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    out = np.empty(len(lo))
    for sl in _chunks(f, lo, hi):
        a, b, v, owner = _pieces(f, lo[sl], hi[sl])
        out[sl], _, _ = _weighted_means(a, b, v, owner, sl.stop - sl.start, lam)
    return out


def lebesgue_integral(f: GridFunction, lo, hi) -> np.ndarray:
    """Unweighted integrals ``int_lo^hi f(x) dx`` for many intervals."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    a, b, v, owner = _pieces(f, lo, hi)
    return np.bincount(owner, weights=(b - a) * v, minlength=len(lo))


def oscillations(f: GridFunction, lo, hi, lam: float) -> np.ndarray:
    """Mean oscillations ``M_lam(f, (lo_i, hi_i))`` for many intervals at once."""
    lam = check_lambda(lam)
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    out = np.empty(len(lo))
    for sl in _chunks(f, lo, hi):
        a, b, v, owner = _pieces(f, lo[sl], hi[sl])
        n = sl.stop - sl.start
        avg, total, mass = _weighted_means(a, b, v, owner, n, lam)
        # intervals below floating resolution sit inside one cell
        safe = np.where(total > 0, total, 1.0)
        dev = np.bincount(owner, weights=mass * np.abs(v - avg[owner]), minlength=n)
        out[sl] = np.where(total > 0, dev / safe, 0.0)
    return out


def oscillation(f: GridFunction, I: Interval, lam: float) -> float:
    """``M_lam(f, I) = (1 / m(I)) int_I |f - f_{I, lam}| dm_lam``."""
    return float(oscillations(f, [I.lo], [I.hi], lam)[0])


def bmo_norm_estimate(f: GridFunction, family: Sequence[Interval], lam: float) -> float:
    """Max of the mean oscillation over a finite family; a lower bound of the BMO norm."""
    if len(family) == 0:
        raise InvalidArgumentError("interval family must be nonempty")
    lo = np.array([I.lo for I in family])
    hi = np.array([I.hi for I in family])
    return float(np.max(oscillations(f, lo, hi, lam)))


def dyadic_intervals(lo: float, hi: float, depth: int, shifted: bool = True):
    """Dyadic subintervals of ``(lo, hi)`` down to ``depth`` halvings.

    With ``shifted`` the lattice translated by half a cell is added at each
    level (cells that would leave ``(lo, hi)`` are dropped).  Returns
    ``(lo, hi)`` endpoint arrays.
    """
    los, his = [], []
    for d in range(depth + 1):
        w = (hi - lo) / 2 ** d
        left = lo + w * np.arange(2 ** d)
        los.append(left)
        his.append(left + w)
        if shifted and d > 0:
            left = lo + w * (np.arange(2 ** d - 1) + 0.5)
            los.append(left)
            his.append(left + w)
    return np.concatenate(los), np.concatenate(his)


@dataclass(frozen=True)
class CMOConditions:
    """Finite-family surrogates of the three vanishing-oscillation conditions.

    ``cond_i[k]`` is the largest oscillation found over intervals of mass
    ``small_scales[k]``, ``cond_ii[k]`` the same for ``large_scales[k]`` and
    ``cond_iii[k]`` the largest oscillation over intervals inside
    ``[R_list[k], inf)``.
    """

    small_scales: np.ndarray
    large_scales: np.ndarray
    R_list: np.ndarray
    cond_i: np.ndarray
    cond_ii: np.ndarray
    cond_iii: np.ndarray


def _centers(f: GridFunction, depth: int, reach: float) -> np.ndarray:
    """Dyadic and midpoint-shifted lattice on ``(0, 2 S]`` plus a geometric ladder."""
    S = f.support_bound
    h = S / 2 ** depth
    lattice = h * np.arange(1, 2 ** (depth + 1) + 1)
    shifted = lattice - 0.5 * h
    top = max(4 * S, reach)
    geo = np.exp2(np.arange(math.floor(4 * math.log2(h / 4)), math.ceil(4 * math.log2(top)) + 1) / 4)
    return np.unique(np.concatenate([lattice, shifted, geo, f.breakpoints[1:]]))


def _fixed_mass_sup(f, centers, a, lam):
    r = radius_for_measure(centers, np.full_like(centers, a), lam)
    lo = np.maximum(centers - r, 0.0)
    hi = centers + r
    return float(np.max(oscillations(f, lo, hi, lam)))


def cmo_conditions(
    f: GridFunction,
    lam: float,
    scales,
    R_list,
    depth: int,
    large_scales=None,
) -> CMOConditions:
    """Evaluate the three vanishing-oscillation functionals on finite families.

    Parameters
    ----------
    scales : ascending masses ``a`` for condition (i).
    R_list : left edges for condition (iii).
    depth : dyadic depth of the center lattice and of the annulus subdivisions.
    large_scales : masses for condition (ii); defaults to ``1 / scales`` so
        that index ``k`` moves both conditions toward their limits together.

    All values are maxima over finite families and hence lower estimates
    of the corresponding suprema.
    """
    lam = check_lambda(lam)
    scales = np.asarray(scales, dtype=float)
    if np.any(np.diff(scales) < 0) or np.any(scales <= 0):
        raise InvalidArgumentError("scales must be positive and ascending")
    large = 1.0 / scales if large_scales is None else np.asarray(large_scales, dtype=float)
    R_arr = np.asarray(R_list, dtype=float)
    if np.any(R_arr <= 0):
        raise InvalidArgumentError("R_list entries must be positive")
    k = 2 * lam + 1
    reach = 2.0 * (k * max(float(large.max(initial=0.0)), float(scales.max(initial=0.0)))) ** (1 / k)
    centers = _centers(f, depth, reach)

    cond_i = np.array([_fixed_mass_sup(f, centers, a, lam) for a in scales])
    cond_ii = np.array([_fixed_mass_sup(f, centers, a, lam) for a in large])

    cond_iii = []
    S = f.support_bound
    for R in R_arr:
        los, his = [], []
        m = 0
        # annuli beyond 2S only see the constant tail
        while R * 2 ** m < 2 * S or m == 0:
            base = R * 2 ** m
            lo_, hi_ = dyadic_intervals(base, 2 * base, depth)
            los += [lo_, [base]]
            his += [hi_, [4 * base]]
            lo_, hi_ = dyadic_intervals(1.5 * base, 3 * base, depth, shifted=False)
            los.append(lo_)
            his.append(hi_)
            m += 1
        cond_iii.append(float(np.max(oscillations(f, np.concatenate(los), np.concatenate(his), lam))))
    return CMOConditions(scales, large, R_arr, cond_i, cond_ii, np.array(cond_iii))
