"""Frechet-Kolmogorov functionals on finite families in ``L^p(dm_lam)``.

A finite probe can falsify relative compactness but never certify it: the
functionals below are maxima over finitely many members and shifts, i.e.
lower estimates of the suprema in the criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .funcspace import (
    GridFunction,
    check_p,
    interval_averages,
    lebesgue_integral,
    lp_norm,
    translate,
)
from .measure import check_lambda
from .operators import OperatorMatrix, singular_values

__all__ = [
    "FamilyProbe",
    "CompactnessReport",
    "fk_uniform_bound",
    "fk_tail",
    "fk_modulus",
    "fk_projection",
    "compactness_probe",
    "image_family",
    "unit_probes",
]


@dataclass(frozen=True)
class FamilyProbe:
    """A finite family of zero-tail step functions viewed in ``L^p(dm_lam)``."""

    members: Sequence[GridFunction]
    p: float
    lam: float

    def __post_init__(self):
        if len(self.members) == 0:
            raise InvalidArgumentError("probe family must be nonempty")
        if any(f.tail_value != 0.0 for f in self.members):
            raise InvalidArgumentError("probe members must have zero tails")
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "p", check_p(self.p))
        object.__setattr__(self, "lam", check_lambda(self.lam))


@dataclass(frozen=True)
class CompactnessReport:
    uniform_bound: float
    tail_profile: list = field(default_factory=list)
    modulus_profile: list = field(default_factory=list)
    sv_profile: list | None = None


def fk_uniform_bound(F: FamilyProbe) -> float:
    """``max_f ||f||_p``."""
    return max(lp_norm(f, F.p, F.lam) for f in F.members)


def fk_tail(F: FamilyProbe, M: float) -> float:
    """``max_f (int_M^inf |f|^p dm_lam)^(1/p)``."""
    if not M > 0:
        raise InvalidArgumentError(f"M must be positive, got {M!r}")
    return max(lp_norm(f, F.p, F.lam, lower=M) for f in F.members)


def fk_modulus(F: FamilyProbe, rho: float, probe_shifts: int = 8) -> float:
    """``max_f max_y ||f(. + y) - f||_p`` over ``y = rho k / probe_shifts``."""
    if not rho > 0 or probe_shifts < 1:
        raise InvalidArgumentError("need rho > 0 and probe_shifts >= 1")
    shifts = rho * np.arange(1, probe_shifts + 1) / probe_shifts
    return max(lp_norm(translate(f, y) - f, F.p, F.lam) for f in F.members for y in shifts)


def fk_projection(f: GridFunction, rho: float, N: int, lam: float) -> GridFunction:
    """The finite-rank projection onto cells ``((j-1) rho, j rho]``, ``j <= N``.

    The first cell carries the ``dm_lam``-weighted average, the others the
    plain Lebesgue average; the function vanishes beyond ``N rho``.
    """
    lam = check_lambda(lam)
    if not rho > 0 or N < 1:
        raise InvalidArgumentError("need rho > 0 and N >= 1")
    bp = rho * np.arange(N + 1, dtype=float)
    vals = lebesgue_integral(f, bp[:-1], bp[1:]) / rho
    vals[0] = interval_averages(f, [0.0], [rho], lam)[0]
    return GridFunction(bp, vals)


def compactness_probe(
    image: FamilyProbe,
    M_list,
    rho_list,
    sv_source: OperatorMatrix | None = None,
    k: int = 0,
    probe_shifts: int = 8,
) -> CompactnessReport:
    """Tail and modulus profiles of ``image`` plus optional singular values."""
    M_list = [float(M) for M in M_list]
    rho_list = [float(r) for r in rho_list]
    if not M_list or not rho_list:
        raise InvalidArgumentError("M_list and rho_list must be nonempty")
    tails = [(M, fk_tail(image, M)) for M in sorted(M_list)]
    moduli = [(r, fk_modulus(image, r, probe_shifts)) for r in sorted(rho_list, reverse=True)]
    sv = None
    if sv_source is not None:
        sv = singular_values(sv_source, k or sv_source.n).tolist()
    return CompactnessReport(fk_uniform_bound(image), tails, moduli, sv)


def unit_probes(breakpoints, lam: float, p: float, count: int, seed: int = 0) -> list:
    """Random ``L^p``-normalized indicators of unions of grid cells.

    Each probe is the normalized indicator of a run of consecutive cells,
    with run positions and lengths drawn from ``numpy.random.default_rng``.
    """
    rng = np.random.default_rng(seed)
    bp = np.asarray(breakpoints, dtype=float)
    n = len(bp) - 1
    out = []
    for _ in range(count):
        length = int(rng.integers(1, max(2, n // 8)))
        start = int(rng.integers(0, n - length + 1))
        vals = np.zeros(n)
        vals[start:start + length] = 1.0
        g = GridFunction(bp, vals)
        out.append(g * (1.0 / lp_norm(g, p, lam)))
    return out


def image_family(M: OperatorMatrix, probes: Sequence[GridFunction]) -> list:
    """Images ``M f`` of probes as step functions on the operator grid.

    Probes are sampled at the grid points; the image is constant on each
    grid cell and vanishes beyond the grid.
    """
    out = []
    for f in probes:
        out.append(GridFunction(M.breakpoints, M.apply(f(M.points))))
    return out
