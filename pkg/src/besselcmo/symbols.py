"""Named symbols used by the command line driver and the diagnostics.

* ``bump``: ``exp(1 - 1 / (1 - u**2))`` with ``u = x - 2`` on ``(1, 3)``; smooth,
  compactly supported, peak value 1.
* ``log``: ``log x``, unbounded at both ends of the half line but of
  bounded mean oscillation.
* ``step``: ``+1`` on ``(2, 3]`` and ``-1`` on ``(1, 2]``; bounded with jumps.

Each is rasterized by its value at cell midpoints.  Past the last
breakpoint ``log`` continues with the constant ``log(X)``; the others vanish.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .funcspace import GridFunction

__all__ = ["SYMBOLS", "bump", "rasterize_symbol"]


def bump(x, center: float = 2.0, halfwidth: float = 1.0):
    u = (np.asarray(x, dtype=float) - center) / halfwidth
    inside = np.abs(u) < 1
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - u * u, 1.0)), 0.0)


def _step(x):
    x = np.asarray(x, dtype=float)
    return np.where((x > 2) & (x <= 3), 1.0, 0.0) - np.where((x > 1) & (x <= 2), 1.0, 0.0)


SYMBOLS = {
    "bump": bump,
    "log": np.log,
    "step": _step,
}


def rasterize_symbol(name: str, breakpoints) -> GridFunction:
    """The named symbol on the cells of ``breakpoints``."""
    if name not in SYMBOLS:
        raise ConfigurationError(f"unknown symbol {name!r}; choose from {sorted(SYMBOLS)}")
    bp = np.asarray(breakpoints, dtype=float)
    tail = float(np.log(bp[-1])) if name == "log" else 0.0
    if name == "step":
        # cut exactly at the jumps
        bp = np.union1d(bp, [1.0, 2.0, 3.0])
    return GridFunction.from_function(SYMBOLS[name], bp, tail_value=tail)
