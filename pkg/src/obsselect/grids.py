"""Uniform quality grids with midpoint representatives, plus the scalar operators.

Every continuous quality domain is bucketed into d = ceil(1/eps) cells of width
eps. Values are represented by their cell midpoint; all downstream arithmetic
consumes representatives, which is what makes the additive error accounting of
the solvers work. Precision-valued domains are bucketed after a normalized,
truncated log transform so that multiplicative precision scales become uniform
cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


def lerp(x: float, y: float, c: float) -> float:
    """Linear interpolation c*x + (1-c)*y (a convex mix for c in [0, 1])."""
    return c * x + (1.0 - c) * y


def precision_join(x: float, y: float) -> float:
    """Harmonic combination x*y/(x+y); the precision after chaining two noisy stages.

    Defined as 0 when both arguments are 0. Symmetric, bounded by min(x, y),
    and monotone in each argument.
    """
    if x < 0.0 or y < 0.0:
        raise ValueError("precision_join requires non-negative arguments")
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y / (x + y)


def logbar(a: float, b: float, p: float) -> float:
    """Normalized log of p on [a, b], truncated to [0, 1] outside the range."""
    if not 0.0 < a < b:
        raise ValueError("logbar requires 0 < a < b")
    if p <= a:
        return 0.0
    if p >= b:
        return 1.0
    return (math.log(p) - math.log(a)) / (math.log(b) - math.log(a))


@dataclass(frozen=True)
class GridSpec:
    """One uniform discretization: step eps, d cells, midpoint representatives.

    With log_projection=(a, b) the grid lives in logbar-space: values are
    projected before bucketing and representatives are mapped back, so the cell
    midpoints are geometric rather than arithmetic.
    """

    eps: float
    log_projection: tuple[float, float] | None = None
    d: int = field(init=False)
    _reps: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must be in (0, 1)")
        # The 1e-9 nudge keeps float noise in 1/eps from adding a phantom cell
        # when 1/eps is mathematically an integer.
        d = math.ceil(1.0 / self.eps - 1e-9)
        object.__setattr__(self, "d", d)
        reps = []
        for k in range(d):
            if k == d - 1:
                # Top cell may be truncated by the domain edge at 1.
                mid = ((d - 1) * self.eps + min(d * self.eps, 1.0)) / 2.0
            else:
                mid = (k + 0.5) * self.eps
            reps.append(mid)
        if self.log_projection is not None:
            a, b = self.log_projection
            if not 0.0 < a < b:
                raise ValueError("log_projection requires 0 < a < b")
            reps = [a * (b / a) ** t for t in reps]
        object.__setattr__(self, "_reps", tuple(reps))

    def index(self, v: float) -> int:
        """Cell index of a value, clamped to 0..d-1."""
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"cannot discretize non-finite value {v!r}")
        if self.log_projection is not None:
            if v < 0.0:
                raise ValueError("log-projected grids require v >= 0")
            a, b = self.log_projection
            v = logbar(a, b, v)
        k = math.floor(v / self.eps)
        if k < 0:
            return 0
        if k >= self.d:
            return self.d - 1
        return k

    def representative(self, k: int) -> float:
        return self._reps[k]

    @property
    def representatives(self) -> tuple[float, ...]:
        return self._reps


def discretize(grid: GridSpec, v: float) -> int:
    """Cell index of v on the grid (clamping out-of-range values to the edge cells)."""
    return grid.index(v)


def equivalent(grid: GridSpec, u: float, v: float) -> bool:
    """True when two values land in the same grid cell."""
    return grid.index(u) == grid.index(v)
