"""Explicit constructions: commutator test functions and the CMO approximant.

* :func:`build_test_function` and :func:`lemma52_profile` build the
  mean-zero test function adapted to a symbol on an interval and measure
  the annular ``L^p`` mass of its commutator image.
* :func:`build_dyadic_family`, :func:`build_g_eps` and :func:`mollify`
  build the cellwise-average approximant of a function on a dyadic family
  whose cells grow with distance from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._quadrature import gauss_legendre
from .errors import ConfigurationError, DegenerateSymbolError, InvalidArgumentError
from .funcspace import GridFunction, check_p, interval_averages, median
from .kernel import KernelConfig
from .measure import Interval, check_lambda, dilate, measure, measure_between
from .operators import TruncationSpec, commutator_apply

__all__ = [
    "TestFunctionParams",
    "TestFunctionParts",
    "ApproximationParams",
    "DyadicFamily",
    "build_test_function",
    "adapted_test_function",
    "lemma52_profile",
    "build_dyadic_family",
    "build_g_eps",
    "choose_m_eps",
    "mollify",
    "bump_cdf",
]

MAX_FAMILY_CELLS = 2 ** 20


# commutator test functions


@dataclass(frozen=True)
class TestFunctionParams:
    """Interval, exponent and the dyadic annulus range ``k_min..k_max``."""

    __test__ = False

    I_j: Interval
    p: float
    lam: float
    k_min: int = 3
    k_max: int = 8

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))
        object.__setattr__(self, "lam", check_lambda(self.lam))
        if self.k_min < 2 or self.k_max < self.k_min:
            raise InvalidArgumentError("need 2 <= k_min <= k_max")


@dataclass(frozen=True)
class TestFunctionParts:
    """The test function with the median and balancing constant it was built from."""

    __test__ = False

    f: GridFunction
    alpha: float
    a: float
    mass_above: float
    mass_below: float
    mass_interval: float


def adapted_test_function(b: GridFunction, params: TestFunctionParams) -> TestFunctionParts:
    """Build ``m(I)**(-1/p) (chi_{b > alpha} - chi_{b < alpha} - a chi_I)`` on ``I``.

    ``alpha`` is the weighted median of ``b`` on ``I`` and ``a`` makes the
    ``dm_lam`` integral vanish.
    """
    I, lam, p = params.I_j, params.lam, params.p
    med = median(b, I, lam)
    a_, c_, v = b.pieces(I.lo, I.hi)
    mass = measure_between(a_, c_, lam)
    above = float(np.sum(mass[v > med.alpha]))
    below = float(np.sum(mass[v < med.alpha]))
    total = float(np.sum(mass))
    if above + below == 0.0:
        raise DegenerateSymbolError(f"symbol is constant on ({I.lo}, {I.hi})")
    a = (above - below) / total
    vals = (np.sign(v - med.alpha) - a) * total ** (-1.0 / p)
    bp = np.concatenate([a_, [c_[-1]]])
    f = GridFunction(bp, vals)
    return TestFunctionParts(f, med.alpha, a, above, below, total)


def build_test_function(b: GridFunction, params: TestFunctionParams) -> GridFunction:
    return adapted_test_function(b, params).f


def _annulus_integral(b, f, lo, hi, spec, lam, p, cfg, panels, order):
    """``int_lo^hi |[b, R] f|^p dm_lam`` by composite Gauss-Legendre in ``y``.

    The range is cut at the breakpoints of ``b`` so the integrand is smooth
    on every panel.
    """
    cuts = b.breakpoints[(b.breakpoints > lo) & (b.breakpoints < hi)]
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1), cuts]))
    gx, gw = gauss_legendre(order)
    total = 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        ys = a + (c - a) * gx
        vals = np.array([commutator_apply(b, f, y, spec, lam, cfg) for y in ys])
        total += (c - a) * float(np.sum(gw * np.abs(vals) ** p * ys ** (2 * lam)))
    return total


def lemma52_profile(
    b: GridFunction,
    params: TestFunctionParams,
    spec: TruncationSpec,
    cfg: KernelConfig | None = None,
    test_function: GridFunction | None = None,
    panels: int = 4,
    order: int = 8,
):
    """Normalized annular masses of ``[b, R] f_j`` for ``k`` in ``k_min..k_max``.

    Returns ``(k, lower_ratio, upper_ratio)`` triples.  ``lower_ratio`` is the
    ``L^p`` mass on ``(x + 2^k r, x + 2^(k+1) r)`` and ``upper_ratio`` the
    mass on ``2^(k+1) I \\ 2^k I``, both divided by
    ``(m(I) / m(2^k I))**(p - 1)``.  A prebuilt ``test_function`` can be
    supplied, which allows symbols that are constant on ``I``.
    """
    I, lam, p = params.I_j, params.lam, params.p
    f = build_test_function(b, params) if test_function is None else test_function
    if spec.X_max < I.hi:
        raise InvalidArgumentError("truncation domain must contain the interval")
    x, r = I.orig_center, I.orig_radius
    mI = measure(I, lam)
    out = []
    for k in range(params.k_min, params.k_max + 1):
        big = dilate(I, 2 ** k)
        bigger = dilate(I, 2 ** (k + 1))
        norm = (mI / measure(big, lam)) ** (p - 1)
        wide_spec = TruncationSpec(spec.eps, max(spec.X_max, bigger.hi))
        lower = _annulus_integral(b, f, x + 2 ** k * r, x + 2 ** (k + 1) * r, wide_spec, lam, p, cfg, panels, order)
        # 2^(k+1) I minus 2^k I: a right piece and possibly a left piece
        upper = _annulus_integral(b, f, big.hi, bigger.hi, wide_spec, lam, p, cfg, panels, order)
        if bigger.lo < big.lo:
            upper += _annulus_integral(b, f, bigger.lo, big.lo, wide_spec, lam, p, cfg, panels, order)
        out.append((k, lower / norm, upper / norm))
    return out


# the dyadic family and the CMO approximant


@dataclass(frozen=True)
class ApproximationParams:
    """Scale selections ``i < ... j < m`` and the family depth bound."""

    i_eps: int
    j_eps: int
    k_eps: int
    m_eps: int
    depth: int | None = None
    mollifier_width: float = 0.125

    def __post_init__(self):
        if self.i_eps < 0 or self.k_eps < 0:
            raise InvalidArgumentError("i_eps and k_eps must be nonnegative")
        if not self.j_eps > self.k_eps:
            raise InvalidArgumentError("need j_eps > k_eps")
        if not self.m_eps > self.j_eps:
            raise InvalidArgumentError("need m_eps > j_eps")
        if self.depth is not None and self.depth < self.m_eps:
            raise InvalidArgumentError("depth bound must reach m_eps")
        if not self.mollifier_width > 0:
            raise InvalidArgumentError("mollifier width must be positive")

    @property
    def depth_bound(self) -> int:
        return self.m_eps + 2 if self.depth is None else self.depth


@dataclass(frozen=True)
class DyadicFamily:
    """Ordered cells ``(lo, hi]`` covering ``(0, 2**depth_bound]``.

    ``level[c]`` is ``j`` for cells of ``R_j`` and ``m`` for cells of the
    annulus ``(2**(m-1), 2**m]``.
    """

    lo: np.ndarray
    hi: np.ndarray
    level: np.ndarray
    i_eps: int
    j_eps: int
    floor_term: int

    @property
    def K(self) -> int:
        """Dilation exponent ``j + floor(2 lam (j + 1)) + 2 + i``."""
        return self.j_eps + self.floor_term + 2 + self.i_eps

    def __len__(self):
        return len(self.lo)

    def locate(self, x):
        """Index of the cell owning each point ``x`` in ``(0, hi[-1]]``."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0) or np.any(x > self.hi[-1]):
            raise InvalidArgumentError("points must lie in the covered range")
        return np.searchsorted(self.hi, x, side="left")

    def cells(self):
        return [Interval.from_endpoints(a, b) for a, b in zip(self.lo, self.hi)]

    def masses(self, lam: float) -> np.ndarray:
        return measure_between(self.lo, self.hi, lam)

    def annulus(self, m: int) -> np.ndarray:
        return np.nonzero(self.level == m)[0]

    def check_claims(self, lam: float):
        """Verify the family's size claims in exact dyadic arithmetic.

        Returns a dict of booleans:

        * ``small``: cells of ``R_j`` and the first two cells of the next
          annulus have mass at most ``2**-i``;
        * ``dilation_length``: ``2**K I`` has length ``2**m`` for every cell
          of annulus ``m``;
        * ``dilation_inside``: ``2**K I`` lies in ``R_{m+1}``;
        * ``large``: where ``2 lam (m - j - 2) >= 2``, every cell of
          annulus ``m`` has mass at least ``2**(m - i - j)`` (vacuous
          otherwise);
        * ``monotone``: cell masses are nondecreasing along the list.

        Endpoints are dyadic rationals of modest bit length, so lengths
        and containments are exact in binary floating point.  The mass
        bounds are checked on every cell in floating point and, at the
        extremal cells (the largest small cell and the first cell of each
        annulus), in rational arithmetic when ``2 lam`` is an integer.
        """
        lam = check_lambda(lam)
        i, j = self.i_eps, self.j_eps
        masses = self.masses(lam)
        monotone = bool(np.all(np.diff(masses) >= -1e-15 * masses[1:]))
        exact = float(2 * lam).is_integer()

        def exact_mass(c):
            k = int(2 * lam) + 1
            a, b = Fraction(self.lo[c]), Fraction(self.hi[c])
            return (b ** k - a ** k) / k

        small_idx = np.concatenate([self.annulus(j), self.annulus(j + 1)[:2]])
        small = bool(np.all(masses[small_idx] <= 2.0 ** -i))
        if exact:
            small &= all(exact_mass(c) <= Fraction(1, 2 ** i) for c in small_idx[-3:])

        ring = self.level > j
        m = self.level[ring]
        center = 0.5 * (self.lo[ring] + self.hi[ring])
        radius = 0.5 * (self.hi[ring] - self.lo[ring])
        lo = np.maximum(center - 2.0 ** self.K * radius, 0.0)
        hi = center + 2.0 ** self.K * radius
        length_ok = bool(np.all(hi - lo == 2.0 ** m))
        inside_ok = bool(np.all(hi <= 2.0 ** (m + 1)))

        large_ok = True
        for mm in range(j + 1, int(self.level.max()) + 1):
            if 2 * lam * (mm - j - 2) < 2:
                continue
            idx = self.annulus(mm)
            need = 2.0 ** (mm - i - j)
            large_ok &= bool(np.all(masses[idx] >= need))
            if exact:
                large_ok &= exact_mass(idx[0]) >= Fraction(2) ** (mm - i - j)
        return {
            "small": small,
            "dilation_length": length_ok,
            "dilation_inside": inside_ok,
            "large": large_ok,
            "monotone": monotone,
        }


def build_dyadic_family(params: ApproximationParams, lam: float) -> DyadicFamily:
    """The family: equal cells on ``R_j``, then equal cells per annulus.

    ``R_j = (0, 2**j]`` is cut into ``2**(j + i + 2 + F)`` cells and each
    annulus ``(2**(m-1), 2**m]``, ``j < m <= depth_bound``, into
    ``2**(j + i + 1 + F)`` cells, where ``F = floor(2 lam (j + 1))``.
    """
    lam = check_lambda(lam)
    i, j = params.i_eps, params.j_eps
    F = math.floor(2 * lam * (j + 1))
    depth = params.depth_bound
    n_core = 2 ** (j + i + 2 + F)
    n_ring = 2 ** (j + i + 1 + F)
    total = n_core + (depth - j) * n_ring
    if total > MAX_FAMILY_CELLS:
        raise ConfigurationError(f"dyadic family would have {total} cells (cap {MAX_FAMILY_CELLS})")
    w = 2.0 ** (-i - 2 - F)
    los = [w * np.arange(n_core)]
    levels = [np.full(n_core, j)]
    for m in range(j + 1, depth + 1):
        wm = 2.0 ** (-i - 2 - F + m - j)
        los.append(2.0 ** (m - 1) + wm * np.arange(n_ring))
        levels.append(np.full(n_ring, m))
    lo = np.concatenate(los)
    hi = np.concatenate([lo[1:], [2.0 ** depth]])
    return DyadicFamily(lo, hi, np.concatenate(levels), i, j, F)


def build_g_eps(f: GridFunction, params: ApproximationParams, lam: float):
    """Cellwise averages on ``R_m`` capped by the last annulus average outside.

    Returns ``(g, h)`` with ``h = g - c`` where ``c`` is the weighted average
    of ``f`` on ``(2**(m-1), 2**m]``; ``h`` vanishes beyond ``2**m``.
    """
    lam = check_lambda(lam)
    fam = build_dyadic_family(params, lam)
    m = params.m_eps
    top = 2.0 ** m
    keep = fam.hi <= top
    lo, hi = fam.lo[keep], fam.hi[keep]
    avg = interval_averages(f, lo, hi, lam)
    c = float(interval_averages(f, [top / 2], [top], lam)[0])
    bp = np.concatenate([[0.0], hi])
    g = GridFunction(bp, avg, tail_value=c)
    h = GridFunction(bp, avg - c, tail_value=0.0)
    return g, h


def choose_m_eps(f: GridFunction, params: ApproximationParams, lam: float, eps: float, m_cap: int = 40) -> int:
    """Smallest ``m > j`` whose annulus cell averages spread by less than ``eps``.

    This is the measurable surrogate for the scale selection of the
    approximant: beyond such ``m`` the capped constant is within ``eps`` of
    every cell average on the last annulus.
    """
    lam = check_lambda(lam)
    i, j = params.i_eps, params.j_eps
    F = math.floor(2 * lam * (j + 1))
    n_ring = 2 ** (j + i + 1 + F)
    for m in range(j + 1, m_cap + 1):
        edges = 2.0 ** (m - 1) + 2.0 ** (-i - 2 - F + m - j) * np.arange(n_ring + 1)
        avg = interval_averages(f, edges[:-1], edges[1:], lam)
        if float(avg.max() - avg.min()) < eps:
            return m
    raise ConfigurationError(f"no m <= {m_cap} brings the annulus spread below {eps}")


# mollification with the standard bump

_BUMP_ORDER = 96


@lru_cache(maxsize=1)
def _bump_norm():
    x, w = gauss_legendre(_BUMP_ORDER)
    s = 2 * x - 1
    return float(2 * np.sum(w * np.exp(-1.0 / (1.0 - s * s))))


def bump_cdf(u):
    """``(Omega(u), Psi(u))``: the bump's distribution function and its antiderivative.

    ``Omega(u) = int_-1^u omega`` and ``Psi(u) = int_-1^u Omega = int_-1^u (u - s) omega(s) ds``;
    ``Psi(u) = u`` for ``u >= 1``.
    """
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, -1.0, 1.0)
    x, w = gauss_legendre(_BUMP_ORDER)
    half = 0.5 * (uc + 1.0)
    s = -1.0 + 2.0 * half[..., None] * x
    with np.errstate(divide="ignore", over="ignore"):
        dens = np.where(np.abs(s) < 1, np.exp(-1.0 / (1.0 - s * s)), 0.0) / _bump_norm()
    omega = 2.0 * half * np.sum(w * dens, axis=-1)
    psi = 2.0 * half * np.sum(w * (uc[..., None] - s) * dens, axis=-1)
    psi = np.where(u >= 1.0, u, psi)
    omega = np.where(u >= 1.0, 1.0, omega)
    return omega, psi


_MOLLIFY_BUDGET = 20_000_000
_MOLLIFY_CHUNK = 100_000


def mollify(h: GridFunction, t: float) -> GridFunction:
    """Convolution with ``omega_t(x) = omega(x / t) / t`` restricted to ``(0, inf)``.

    ``h`` is extended by 0 to the negative axis.  The output lives on the
    union of ``h``'s breakpoints with a uniform grid of step ``t / 8`` up to
    ``support + t`` and carries the exact cell averages of the
    convolution, so its Lebesgue integral over ``(0, inf)`` equals that of
    the convolution.

    Raises :class:`ConfigurationError` when ``h`` has so many jumps per
    window of width ``2 t`` that the exact evaluation would exceed
    ``_MOLLIFY_BUDGET`` jump-point pairs.
    """
    t = float(t)
    if not t > 0:
        raise InvalidArgumentError(f"mollifier width must be positive, got {t!r}")
    if h.tail_value != 0.0:
        raise InvalidArgumentError("mollify needs a compactly supported function")
    S = h.support_bound
    grid = np.arange(0.0, S + t, t / 8)
    bp = np.union1d(np.append(grid[grid < S + t], S + t), h.breakpoints)
    # h as a sum of jumps J_c at points p_c; the antiderivative of the
    # convolution is G(x) = sum_c J_c t Psi((x - p_c) / t)
    ext = np.concatenate([[0.0], h.values, [0.0]])
    jumps = np.diff(ext)
    pts = h.breakpoints
    nz = jumps != 0
    jumps, pts = jumps[nz], pts[nz]
    full = np.searchsorted(pts, bp - t, side="right")
    stop = np.searchsorted(pts, bp + t, side="left")
    counts = stop - full
    if int(counts.sum()) > _MOLLIFY_BUDGET:
        raise ConfigurationError(
            f"mollifying would need {int(counts.sum())} jump evaluations (budget {_MOLLIFY_BUDGET})"
        )
    # jumps left of x - t are fully felt: Psi(u) = u there
    cumJ = np.concatenate([[0.0], np.cumsum(jumps)])
    cumJp = np.concatenate([[0.0], np.cumsum(jumps * pts)])
    G = bp * cumJ[full] - cumJp[full]
    ends = np.cumsum(counts)
    start = 0
    while start < len(bp):
        base = ends[start - 1] if start else 0
        stop_i = int(np.searchsorted(ends, base + _MOLLIFY_CHUNK, side="right"))
        stop_i = max(stop_i, start + 1)
        sl = slice(start, stop_i)
        c = counts[sl]
        owner = np.repeat(np.arange(start, stop_i), c)
        offsets = np.concatenate([[0], np.cumsum(c)[:-1]])
        idx = full[owner] + np.arange(owner.size) - offsets[owner - start]
        _, psi = bump_cdf((bp[owner] - pts[idx]) / t)
        G[sl] += np.bincount(owner - start, weights=jumps[idx] * t * psi, minlength=stop_i - start)
        start = stop_i
    return GridFunction(bp, np.diff(G) / np.diff(bp))
