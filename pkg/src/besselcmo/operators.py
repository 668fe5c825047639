"""Truncated Riesz transforms, the commutator ``[b, R]`` and its discretization.

All integrals ``int R(x, y) g(y) dm_lam(y)`` over ``|x - y| > eps`` are
split into pieces on which ``g`` is constant.  Pieces are further graded
at ``x +- eps * 2**j`` so that every piece is no longer than its distance
to ``x``; the kernel is then smooth on each piece and a fixed Gauss rule
of moderate order is accurate.  A piece touching the origin uses the
Gauss-Jacobi rule for the weight ``y**(2 lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from ._quadrature import gauss_legendre
from .errors import AssemblyError, InvalidArgumentError, NumericalError
from .funcspace import GridFunction
from .kernel import KernelConfig, kernel_batch, kernel_eval
from .measure import check_lambda, measure_between

__all__ = [
    "TruncationSpec",
    "OperatorMatrix",
    "riesz_truncated",
    "riesz_maximal",
    "commutator_apply",
    "discretize_commutator",
    "geometric_grid",
    "singular_values",
]

DEFAULT_ORDER = 8


@dataclass(frozen=True)
class TruncationSpec:
    """Truncation radius ``eps`` and domain bound ``X_max``."""

    eps: float
    X_max: float

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.X_max) and self.X_max > self.eps):
            raise InvalidArgumentError(f"need 0 < eps < X_max, got eps={self.eps!r}, X_max={self.X_max!r}")


@lru_cache(maxsize=None)
def _jacobi_rule(order, lam):
    """Nodes on ``[0, 1]`` and weights for ``int_0^1 g(y) y**(2 lam) dy``."""
    t, w = roots_jacobi(order, 0.0, 2.0 * lam)
    x = 0.5 * (t + 1.0)
    w = w * 0.5 ** (2.0 * lam + 1.0)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _graded_cuts(x, eps, lo, hi):
    """Cut points ``x +- eps * 2**j`` inside ``(lo, hi)``, plus ``x +- eps``."""
    span = max(hi - x, x - lo, eps)
    j = np.arange(int(math.ceil(math.log2(span / eps))) + 2)
    steps = eps * 2.0 ** j
    pts = np.concatenate([x - steps, x + steps])
    return pts[(pts > lo) & (pts < hi)]


def _pieces_for_point(x, eps, X_max, partition):
    """Endpoints of the graded pieces of ``(0, X_max] minus (x - eps, x + eps)``."""
    cuts = np.concatenate([partition[(partition > 0) & (partition < X_max)], _graded_cuts(x, eps, 0.0, X_max)])
    pts = np.unique(np.concatenate([[0.0, X_max], cuts]))
    a, b = pts[:-1], pts[1:]
    keep = (b <= x - eps * (1 - 1e-15)) | (a >= x + eps * (1 - 1e-15))
    return a[keep], b[keep]


def _rule(a, b, lam, order):
    """Gauss nodes ``y`` and weights (including ``y**(2 lam)``) on pieces ``(a, b)``.

    Returns ``(y, w, piece)`` with ``piece`` the owning piece of each node.
    """
    gx, gw = gauss_legendre(order)
    jx, jw = _jacobi_rule(order, lam)
    width = b - a
    origin = a == 0.0
    y = np.where(origin[:, None], b[:, None] * jx[None, :], a[:, None] + width[:, None] * gx[None, :])
    w = np.where(
        origin[:, None],
        b[:, None] ** (2 * lam + 1) * jw[None, :],
        width[:, None] * gw[None, :] * y ** (2 * lam),
    )
    piece = np.repeat(np.arange(len(a)), order)
    return y.ravel(), w.ravel(), piece


def _kernel_values(x, y, lam, method, cfg):
    if method == "batch":
        return kernel_batch(x, y, lam)
    if method == "adaptive":
        return np.array([kernel_eval(x, yy, lam, cfg).value for yy in y])
    raise InvalidArgumentError(f"unknown kernel method {method!r}")


def _check_point(x, f):
    x = float(x)
    if not x > 0:
        raise InvalidArgumentError(f"evaluation point must be positive, got {x!r}")
    if f.tail_value != 0.0:
        raise InvalidArgumentError("input function must have a zero tail")
    return x


def riesz_truncated(
    f: GridFunction,
    x: float,
    spec: TruncationSpec,
    lam: float,
    cfg: KernelConfig | None = None,
    order: int = DEFAULT_ORDER,
    method: str = "batch",
) -> float:
    """``int_{|x - y| > eps, y <= X_max} R(x, y) f(y) dm_lam(y)``.

    ``method="batch"`` uses the fixed graded kernel rule; ``"adaptive"``
    calls :func:`kernel_eval` at every node with ``cfg``.
    """
    lam = check_lambda(lam)
    x = _check_point(x, f)
    a, b = _pieces_for_point(x, spec.eps, spec.X_max, f.breakpoints)
    if len(a) == 0:
        return 0.0
    y, w, piece = _rule(a, b, lam, order)
    vals = f(0.5 * (a + b))[piece]
    nz = vals != 0
    if not np.any(nz):
        return 0.0
    k = _kernel_values(x, y[nz], lam, method, cfg)
    return float(np.sum(w[nz] * k * vals[nz]))


def riesz_maximal(
    f: GridFunction,
    x: float,
    t_grid,
    lam: float,
    cfg: KernelConfig | None = None,
    order: int = DEFAULT_ORDER,
) -> float:
    """``max_t |T_t f(x)|`` over ``t_grid``; a lower estimate of the maximal transform."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0):
        raise InvalidArgumentError("t_grid must be a nonempty list of positive radii")
    X = f.support_bound
    best = 0.0
    for t in t_grid:
        if t >= X + x:
            continue
        spec = TruncationSpec(float(t), max(X, float(t) * (1 + 1e-12)))
        best = max(best, abs(riesz_truncated(f, x, spec, lam, cfg, order)))
    return best


def commutator_apply(
    b: GridFunction,
    f: GridFunction,
    x: float,
    spec: TruncationSpec,
    lam: float,
    cfg: KernelConfig | None = None,
    order: int = DEFAULT_ORDER,
    method: str = "batch",
) -> float:
    """``int_{|x - y| > eps} R(x, y) (b(x) - b(y)) f(y) dm_lam(y)``.

    This is ``b(x) T_eps f(x) - T_eps(b f)(x)`` evaluated as one integral
    over the merged partition of ``b`` and ``f``.
    """
    lam = check_lambda(lam)
    x = _check_point(x, f)
    partition = np.union1d(b.breakpoints, f.breakpoints)
    a, c = _pieces_for_point(x, spec.eps, spec.X_max, partition)
    if len(a) == 0:
        return 0.0
    mid = 0.5 * (a + c)
    weight = ((b(x) - b(mid)) * f(mid))
    y, w, piece = _rule(a, c, lam, order)
    vals = weight[piece]
    nz = vals != 0
    if not np.any(nz):
        return 0.0
    k = _kernel_values(x, y[nz], lam, method, cfg)
    return float(np.sum(w[nz] * k * vals[nz]))


def geometric_grid(n: int, X_max: float, x_min: float | None = None) -> np.ndarray:
    """Breakpoints ``[0, x_min, ..., X_max]`` with ``n`` cells, log-uniform above ``x_min``.

    The default ``x_min = X_max / 2**24`` spans about seven decades, so
    dilation-invariant operators such as the commutator with ``log x`` show
    a broad band of singular values rather than a few.
    """
    if n < 2:
        raise InvalidArgumentError("need at least two cells")
    x_min = X_max / 2 ** 24 if x_min is None else float(x_min)
    if not 0 < x_min < X_max:
        raise InvalidArgumentError("need 0 < x_min < X_max")
    return np.concatenate([[0.0], np.geomspace(x_min, X_max, n)])


@dataclass(frozen=True)
class OperatorMatrix:
    """Collocation matrix of a kernel-integral operator on a cell grid.

    ``entries[i, j]`` is the contribution of a unit value on cell ``j`` to
    the output at ``points[i]``; the cell masses are folded into the column.
    """

    breakpoints: np.ndarray
    points: np.ndarray
    masses: np.ndarray
    entries: np.ndarray
    lam: float
    eps: float

    @property
    def n(self) -> int:
        return len(self.points)

    def apply(self, f_values) -> np.ndarray:
        return self.entries @ np.asarray(f_values, dtype=float)

    def weighted(self) -> np.ndarray:
        """``D**(1/2) M D**(-1/2)``: the matrix in discrete ``L^2(dm_lam)`` coordinates."""
        s = np.sqrt(self.masses)
        return self.entries * s[:, None] / s[None, :]

    def to_rows(self):
        """``(row, col, value)`` triples in row-major order."""
        i, j = np.indices(self.entries.shape)
        return zip(i.ravel().tolist(), j.ravel().tolist(), self.entries.ravel().tolist())


def discretize_commutator(
    b: GridFunction,
    n: int,
    X_max: float,
    spec: TruncationSpec | None,
    lam: float,
    cfg: KernelConfig | None = None,
    order: int = DEFAULT_ORDER,
    x_min: float | None = None,
    rows_per_batch: int = 16,
) -> OperatorMatrix:
    """Assemble the ``n x n`` collocation matrix of ``f -> [b, R] f``.

    Collocation points are the cell midpoints of :func:`geometric_grid`;
    ``spec.eps`` defaults to half the smallest cell width.  Entry ``(i, j)``
    is ``int_{cell j, |x_i - y| > eps} R(x_i, y) (b(x_i) - b(y)) dm_lam(y)``.
    """
    lam = check_lambda(lam)
    bp = geometric_grid(n, X_max, x_min)
    if spec is None:
        spec = TruncationSpec(0.5 * float(np.min(np.diff(bp))), X_max)
    eps = spec.eps
    points = 0.5 * (bp[:-1] + bp[1:])
    masses = measure_between(bp[:-1], bp[1:], lam)
    partition = np.union1d(bp, b.breakpoints[b.breakpoints < X_max])
    bx = b(points)
    M = np.zeros((n, n))
    for start in range(0, n, rows_per_batch):
        rows = range(start, min(n, start + rows_per_batch))
        xs, ys, ws, targets = [], [], [], []
        for i in rows:
            a, c = _pieces_for_point(points[i], eps, X_max, partition)
            mid = 0.5 * (a + c)
            diff = bx[i] - b(mid)
            nz = diff != 0
            a, c, mid, diff = a[nz], c[nz], mid[nz], diff[nz]
            if len(a) == 0:
                continue
            y, w, piece = _rule(a, c, lam, order)
            col = np.searchsorted(bp, mid[piece], side="left") - 1
            xs.append(np.full(len(y), points[i]))
            ys.append(y)
            ws.append(w * diff[piece])
            targets.append(i * n + col)
        if not xs:
            continue
        k = kernel_batch(np.concatenate(xs), np.concatenate(ys), lam)
        contrib = k * np.concatenate(ws)
        flat = np.bincount(np.concatenate(targets), weights=contrib, minlength=n * n)
        M += flat.reshape(n, n)
    bad = ~np.isfinite(M)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise AssemblyError(f"non-finite entry at cell pair ({i}, {j})")
    return OperatorMatrix(bp, points, masses, M, lam, eps)


def singular_values(M: OperatorMatrix, k: int) -> np.ndarray:
    """Top ``k`` singular values in the discrete ``L^2(dm_lam)`` geometry."""
    if not 1 <= k <= M.n:
        raise InvalidArgumentError(f"k must lie in [1, {M.n}], got {k!r}")
    try:
        s = np.linalg.svd(M.weighted(), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular value decomposition failed: {exc}") from exc
    return s[:k]
