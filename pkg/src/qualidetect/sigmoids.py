"""Sigmoid nonlinearities with exact calculus: values, derivatives, inverses.

Every shape in this module is a smooth, strictly increasing, saturating map
with S(0) = 0, steepest slope at the origin, and curvature opposing the sign
of the argument.  Those four properties are what the rest of the toolkit
relies on; ``validate`` checks them numerically on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


E_INV = math.exp(-1.0)

#: default grid used by validate(): symmetric half-width and point count
GRID_HALF_WIDTH = 10.0
GRID_POINTS = 4096


class RangeError(ValueError):
    """Requested value lies outside the open range of the sigmoid."""


def _finite(x, name="argument"):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


class Sigmoid:
    """Base class for the admissible saturating nonlinearities."""

    def eval(self, a: float) -> float:
        raise NotImplementedError

    def derivative(self, a: float, order: int = 1) -> float:
        raise NotImplementedError

    def inverse(self, y: float) -> float:
        raise NotImplementedError

    @property
    def range(self) -> tuple[float, float]:
        """Open interval of attainable values."""
        raise NotImplementedError

    def beta_c(self) -> float:
        """Critical feedback gain 1/S'(0) at which the nullcline folds appear."""
        return 1.0 / self.derivative(0.0, 1)

    def __call__(self, a: float) -> float:
        return self.eval(a)

    def _check_order(self, order):
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")

    def _check_range(self, y):
        y = _finite(y, "inverse argument")
        lo, hi = self.range
        if not (lo < y < hi):
            raise RangeError(f"value {y} outside open range ({lo}, {hi})")
        return y


@dataclass(frozen=True)
class Tanh(Sigmoid):
    """a -> c1 * tanh(c2 * a).  Odd, range (-c1, c1)."""

    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("tanh coefficients must be positive")

    def eval(self, a):
        a = _finite(a)
        return self.c1 * math.tanh(self.c2 * a)

    def derivative(self, a, order=1):
        a = _finite(a)
        self._check_order(order)
        th = math.tanh(self.c2 * a)
        sech2 = 1.0 - th * th
        if order == 1:
            return self.c1 * self.c2 * sech2
        return -2.0 * self.c1 * self.c2 * self.c2 * th * sech2

    def inverse(self, y):
        y = self._check_range(y)
        return math.atanh(y / self.c1) / self.c2

    @property
    def range(self):
        return (-self.c1, self.c1)


@dataclass(frozen=True)
class Logistic(Sigmoid):
    """a -> c1 / (1 + exp(-c2 a)) - c1/2.  Odd, range (-c1/2, c1/2).

    Evaluated through the identity sigma(z) - 1/2 = tanh(z/2)/2, which is
    overflow-free for any argument.
    """

    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("logistic coefficients must be positive")

    def eval(self, a):
        a = _finite(a)
        return 0.5 * self.c1 * math.tanh(0.5 * self.c2 * a)

    def derivative(self, a, order=1):
        a = _finite(a)
        self._check_order(order)
        th = math.tanh(0.5 * self.c2 * a)
        # sigma(1-sigma) = sech^2(z/2)/4 with z = c2*a
        s1ms = 0.25 * (1.0 - th * th)
        if order == 1:
            return self.c1 * self.c2 * s1ms
        # sigma(1-sigma)(1-2*sigma) = -sech^2(z/2)/4 * tanh(z/2)
        return -self.c1 * self.c2 * self.c2 * s1ms * th

    def inverse(self, y):
        y = self._check_range(y)
        return 2.0 * math.atanh(2.0 * y / self.c1) / self.c2

    @property
    def range(self):
        return (-0.5 * self.c1, 0.5 * self.c1)


@dataclass(frozen=True)
class Gompertz(Sigmoid):
    """a -> exp(-exp(-c1 a)) - exp(-1).  Not odd, range (-1/e, 1 - 1/e).

    The additive constant is pinned to exp(-1) so that the value at the
    origin is exactly zero for every c1.
    """

    c1: float = 1.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("gompertz coefficient must be positive")

    def eval(self, a):
        a = _finite(a)
        t = -self.c1 * a
        if t > 700.0:
            return -E_INV
        return math.exp(-math.exp(t)) - E_INV

    def derivative(self, a, order=1):
        a = _finite(a)
        self._check_order(order)
        t = -self.c1 * a
        if t > 700.0:
            return 0.0
        et = math.exp(t)
        core = self.c1 * math.exp(-et + t)
        if order == 1:
            return core
        return self.c1 * core * (et - 1.0)

    def inverse(self, y):
        y = self._check_range(y)
        if y == 0.0:
            return 0.0
        return -math.log(-math.log(y + E_INV)) / self.c1

    @property
    def range(self):
        return (-E_INV, 1.0 - E_INV)


@dataclass(frozen=True)
class SigmoidSum(Sigmoid):
    """Sum of admissible sigmoids; closed under all four shape properties."""

    components: tuple[Sigmoid, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("sum sigmoid needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))

    def eval(self, a):
        a = _finite(a)
        return sum(s.eval(a) for s in self.components)

    def derivative(self, a, order=1):
        a = _finite(a)
        self._check_order(order)
        return sum(s.derivative(a, order) for s in self.components)

    @property
    def range(self):
        los, his = zip(*(s.range for s in self.components))
        return (sum(los), sum(his))

    def inverse(self, y):
        y = self._check_range(y)
        if y == 0.0:
            return 0.0
        # bracket by doubling; float saturation guarantees termination
        a, b = -1.0, 1.0
        while self.eval(a) > y:
            a *= 2.0
        while self.eval(b) < y:
            b *= 2.0
        x = 0.5 * (a + b)
        for _ in range(200):
            f = self.eval(x) - y
            if abs(f) <= 1e-12:
                return x
            if f > 0.0:
                b = x
            else:
                a = x
            d = self.derivative(x, 1)
            if d > 0.0:
                xn = x - f / d
                if not (a < xn < b):
                    xn = 0.5 * (a + b)
            else:
                xn = 0.5 * (a + b)
            x = xn
        return x


@dataclass(frozen=True)
class ValidationReport:
    """Grid checks of the four shape properties."""

    zero_at_origin: bool
    strictly_increasing: bool
    slope_max_at_origin: bool
    curvature_opposes_sign: bool
    half_width: float
    n_points: int

    @property
    def ok(self) -> bool:
        return (self.zero_at_origin and self.strictly_increasing
                and self.slope_max_at_origin and self.curvature_opposes_sign)


def validate(s: Sigmoid, half_width: float = GRID_HALF_WIDTH,
             n: int = GRID_POINTS) -> ValidationReport:
    """Check the shape properties of ``s`` on a symmetric grid.

    Failures are reported, not raised.  The grid itself must cover at least
    [-10, 10] with 1000+ points.
    """
    if half_width < 10.0:
        raise ValueError("validation grid half-width must be >= 10")
    if n < 1000:
        raise ValueError("validation grid needs at least 1000 points")
    step = 2.0 * half_width / (n - 1)
    grid = [-half_width + i * step for i in range(n)]

    zero_ok = abs(s.eval(0.0)) <= 1e-12
    d0 = s.derivative(0.0, 1)
    mono_ok = True
    peak_ok = True
    curv_ok = True
    for a in grid:
        d1 = s.derivative(a, 1)
        if d1 <= 0.0:
            mono_ok = False
        if d1 > d0 + 1e-9:
            peak_ok = False
        if abs(a) >= 1e-6:
            d2 = s.derivative(a, 2)
            if a > 0 and d2 >= 0.0 or a < 0 and d2 <= 0.0:
                # second derivative must strictly oppose sign(a)
                curv_ok = False
    return ValidationReport(zero_ok, mono_ok, peak_ok, curv_ok, half_width, n)


#: the three shapes used throughout the bundled experiments
S1 = Tanh(1.0, 1.0)
S2 = Gompertz(1.0)
S3 = Logistic(1.0, 1.0)
