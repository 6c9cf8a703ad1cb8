"""Geometry of the slow flow: nullcline manifold, folds, and the detector's
steady-state surface.

The fast nullcline solves  x_f = S(beta*x_f + u - x_s)  for x_s, giving the
graph  x_s = phi(x_f) = -S^{-1}(x_f) + beta*x_f + u.  For beta above the
critical gain the graph is S-shaped with two folds where the layer dynamics
lose hyperbolicity; relaxation cycles then alternate slow drift along the
outer branches with horizontal fast jumps at the folds.

``beta_hat_star`` is the steady-state map of the online detector restricted
to the nullcline; its sign near the origin reproduces the sign of
beta - beta_c, which is the quantity the detector reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import DetectorParams, PlanarParams
from .sigmoids import RangeError, Sigmoid

BRANCH_LOWER = "lower"
BRANCH_MIDDLE = "middle"
BRANCH_UPPER = "upper"
BRANCH_SINGLE = "single"

_BISECT_GRID = 4096


def manifold_x_s(p: PlanarParams, x_f: float) -> float:
    """Slow coordinate of the fast nullcline at x_f: -S^{-1}(x_f) + beta*x_f + u."""
    return -p.sigmoid.inverse(x_f) + p.beta * x_f + p.u


def _interior(sig: Sigmoid, shrink: float = 1e-6):
    lo, hi = sig.range
    margin = shrink * (hi - lo)
    return lo + margin, hi - margin


def _check_interior(sig: Sigmoid, lo: float, hi: float):
    rlo, rhi = sig.range
    if not (rlo < lo < rhi and rlo < hi < rhi):
        raise RangeError(
            f"x_f range [{lo}, {hi}] not inside the open value range ({rlo}, {rhi})")
    if not hi > lo:
        raise ValueError("x_f range must have positive width")


@dataclass(frozen=True)
class ManifoldSample:
    """Sampled fast nullcline with branch labels."""

    x_f: np.ndarray
    x_s: np.ndarray
    branch: tuple[str, ...]


@dataclass(frozen=True)
class FoldPair:
    """The two fold points of the S-shaped nullcline (absent below beta_c)."""

    exists: bool
    x_plus: float = math.nan
    x_minus: float = math.nan
    x_s_plus: float = math.nan
    x_s_minus: float = math.nan


@dataclass(frozen=True)
class EstimateManifoldSample:
    """Nullcline lifted by the detector steady-state channel."""

    x_f: np.ndarray
    x_s: np.ndarray
    beta_hat: np.ndarray


@dataclass(frozen=True)
class SingularOrbit:
    """Zero-timescale-limit relaxation cycle: two branch arcs, two jumps.

    ``points`` is a closed polyline in the (x_f, x_s) plane; the first and
    last vertices coincide.
    """

    points: np.ndarray
    folds: FoldPair
    landing_plus: float
    landing_minus: float


@dataclass(frozen=True)
class CondSufResult:
    """Fold-wise values of 2*x^2 + S^{-1}(x)/x - (S^{-1})'(x) and their signs."""

    value_plus: float
    value_minus: float
    ok_plus: bool
    ok_minus: bool


def _bisect(f, a: float, b: float, width: float = 1e-13, max_iter: int = 200) -> float:
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ValueError("bisection bracket does not straddle a sign change")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if b - a <= width:
            return m
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def sample_critical_manifold(p: PlanarParams, x_f_range=None,
                             n: int = 400) -> ManifoldSample:
    """Sample the fast nullcline over an x_f interval inside the value range."""
    if n < 2:
        raise ValueError("need at least 2 sample points")
    if x_f_range is None:
        x_f_range = _interior(p.sigmoid, 1e-3)
    lo, hi = float(x_f_range[0]), float(x_f_range[1])
    _check_interior(p.sigmoid, lo, hi)
    xs_f = np.linspace(lo, hi, n)
    xs_s = np.array([manifold_x_s(p, x) for x in xs_f])
    folds = fold_points(p)
    if not folds.exists:
        branch = tuple(BRANCH_SINGLE for _ in xs_f)
    else:
        branch = tuple(
            BRANCH_LOWER if x < folds.x_minus
            else BRANCH_UPPER if x > folds.x_plus
            else BRANCH_MIDDLE
            for x in xs_f
        )
    return ManifoldSample(x_f=xs_f, x_s=xs_s, branch=branch)


def cubic_normal_form(beta: float, beta_c: float, u: float, x_f: float) -> float:
    """Slow coordinate of the reference cubic: -x_f^3 + (beta-beta_c)*x_f + u."""
    return -x_f ** 3 + (beta - beta_c) * x_f + u


def _layer_slope(p: PlanarParams, x: float) -> float:
    """-1 + beta * S'(S^{-1}(x)): layer linearization rate on the nullcline."""
    return -1.0 + p.beta * p.sigmoid.derivative(p.sigmoid.inverse(x), 1)


def fold_points(p: PlanarParams) -> FoldPair:
    """Locate the fold pair by bracketed bisection; absent for beta <= beta_c."""
    if p.beta <= p.sigmoid.beta_c():
        return FoldPair(exists=False)
    lo, hi = _interior(p.sigmoid, 1e-9)
    # one root on each side of the origin, where the slope is positive
    x_plus = _bisect(lambda x: _layer_slope(p, x), 0.0, hi)
    x_minus = _bisect(lambda x: _layer_slope(p, x), lo, 0.0)
    return FoldPair(exists=True, x_plus=x_plus, x_minus=x_minus,
                    x_s_plus=manifold_x_s(p, x_plus),
                    x_s_minus=manifold_x_s(p, x_minus))


def beta_hat_star(p: PlanarParams, x_f: float) -> float:
    """Detector steady state on the nullcline.

    (x_f^3 - S^{-1}(x_f) + beta*x_f) / x_f for x_f away from zero; the
    removable singularity at the origin is filled with the smooth limit
    beta - beta_c.
    """
    x_f = float(x_f)
    lo, hi = p.sigmoid.range
    if not (lo < x_f < hi):
        raise RangeError(f"x_f = {x_f} outside open value range ({lo}, {hi})")
    if abs(x_f) < 1e-4:
        return p.beta - p.sigmoid.beta_c()
    return x_f * x_f - p.sigmoid.inverse(x_f) / x_f + p.beta


def check_cond_suf(sigmoid: Sigmoid, beta: float) -> CondSufResult:
    """Evaluate the fold-side growth condition 2x^2 + S^{-1}(x)/x - (S^{-1})'(x) > 0.

    Requires the folds to exist (beta above the critical gain).
    """
    p = PlanarParams(beta=beta, eps=1e-3, u=0.0, sigmoid=sigmoid)
    folds = fold_points(p)
    if not folds.exists:
        raise ValueError("folds do not exist: beta must exceed the critical gain")

    def value(x):
        sinv = sigmoid.inverse(x)
        dsinv = 1.0 / sigmoid.derivative(sinv, 1)
        return 2.0 * x * x + sinv / x - dsinv

    vp, vm = value(folds.x_plus), value(folds.x_minus)
    return CondSufResult(value_plus=vp, value_minus=vm,
                         ok_plus=vp > 1e-12, ok_minus=vm > 1e-12)


def estimate_critical_manifold(p: PlanarParams, x_f_range=None,
                               n: int = 400) -> EstimateManifoldSample:
    """Sample the nullcline together with the detector steady-state channel.

    The (x_f, x_s) projection coincides pointwise with
    ``sample_critical_manifold``.
    """
    base = sample_critical_manifold(p, x_f_range, n)
    bh = np.array([beta_hat_star(p, x) for x in base.x_f])
    return EstimateManifoldSample(x_f=base.x_f, x_s=base.x_s, beta_hat=bh)


def layer_eigenvalues(p: PlanarParams, dp: DetectorParams,
                      x_f: float) -> tuple[float, float]:
    """Nonzero eigenvalues of the frozen-slow-variable linearization on the
    lifted nullcline: (-k*x_f^2, -1 + beta*S'(S^{-1}(x_f)))."""
    x_f = float(x_f)
    lo, hi = p.sigmoid.range
    if not (lo < x_f < hi):
        raise RangeError(f"x_f = {x_f} outside open value range ({lo}, {hi})")
    return (-dp.k * x_f * x_f, _layer_slope(p, x_f))


def singular_orbit(p: PlanarParams, n_arc: int = 400,
                   n_jump: int = 100) -> SingularOrbit:
    """Construct the limiting relaxation cycle as a closed polyline.

    Valid in the oscillatory gain window (beta_c, beta_c + 1): slow arcs run
    along the outer branches between the landing points and the folds; the
    folds launch horizontal jumps onto the opposite branch.
    """
    bc = p.sigmoid.beta_c()
    if not (bc < p.beta < bc + 1.0):
        raise ValueError(
            f"beta = {p.beta} outside the oscillatory window ({bc}, {bc + 1.0})")
    folds = fold_points(p)
    lo, hi = _interior(p.sigmoid, 1e-9)

    # landing points: same slow coordinate as the launching fold, opposite branch
    land_minus = _bisect(lambda x: manifold_x_s(p, x) - folds.x_s_plus,
                         lo, folds.x_minus)
    land_plus = _bisect(lambda x: manifold_x_s(p, x) - folds.x_s_minus,
                        folds.x_plus, hi)

    def arc(x_from, x_to, n):
        xs = np.linspace(x_from, x_to, n)
        return np.column_stack([xs, [manifold_x_s(p, x) for x in xs]])

    def jump(x_from, x_to, x_s, n):
        xs = np.linspace(x_from, x_to, n)
        return np.column_stack([xs, np.full(n, x_s)])

    upper = arc(land_plus, folds.x_plus, n_arc)
    upper[0, 1] = folds.x_s_minus          # close the landing seam exactly
    upper[-1, 1] = folds.x_s_plus
    jump_down = jump(folds.x_plus, land_minus, folds.x_s_plus, n_jump)
    lower = arc(land_minus, folds.x_minus, n_arc)
    lower[0, 1] = folds.x_s_plus
    lower[-1, 1] = folds.x_s_minus
    jump_up = jump(folds.x_minus, land_plus, folds.x_s_minus, n_jump)

    points = np.vstack([upper, jump_down[1:], lower[1:], jump_up[1:]])
    points[-1] = points[0]
    return SingularOrbit(points=points, folds=folds,
                         landing_plus=land_plus, landing_minus=land_minus)


def hausdorff_distance(a, b, chunk: int = 512) -> float:
    """Symmetric Hausdorff distance between two finite point sets (N, d)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance needs non-empty point sets")

    def directed(src, dst):
        worst = 0.0
        for i in range(0, len(src), chunk):
            block = src[i:i + chunk]
            d2 = ((block[:, None, :] - dst[None, :, :]) ** 2).sum(axis=2)
            worst = max(worst, float(np.sqrt(d2.min(axis=1)).max()))
        return worst

    return max(directed(a, b), directed(b, a))


def fixed_points(p: PlanarParams) -> list[tuple[float, float]]:
    """Equilibria of the plant: roots of x - S((beta-1)x + u) with x_s = x_f."""
    lo, hi = _interior(p.sigmoid, 1e-9)

    def f(x):
        return x - p.sigmoid.eval((p.beta - 1.0) * x + p.u)

    xs = np.linspace(lo, hi, _BISECT_GRID)
    vals = np.array([f(x) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            roots.append(xs[i])
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(_bisect(f, xs[i], xs[i + 1]))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    return [(r, r) for r in roots]


def fixed_point(p: PlanarParams) -> tuple[float, float]:
    """The unique equilibrium; raises if the gain admits several."""
    roots = fixed_points(p)
    if len(roots) != 1:
        raise ValueError(f"expected a unique equilibrium, found {len(roots)}")
    return roots[0]
