"""Fixed-step RK4 and adaptive Dormand-Prince 5(4) integration with recording.

States are plain tuples of floats; a RHS is any callable
``rhs(t, state) -> state-like``.  Both methods record on the same uniform
grid (every ``record_stride``-th step of width ``dt``), so trajectories from
the two methods are directly comparable sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when a RHS evaluation produces non-finite values."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"          # "rk4" | "dp45"
    dt: float = 0.01             # step (rk4) / recording grid spacing unit
    t_end: float = 100.0
    record_stride: int = 1
    rel_tol: float = 1e-9        # dp45 only
    abs_tol: float = 1e-12       # dp45 only
    blowup_threshold: float = 1e6

    def __post_init__(self):
        if self.method not in ("rk4", "dp45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.method == "rk4" and self.dt > 0.2:
            raise ValueError("rk4 step must be <= 0.2 for the fast subsystem")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.method == "dp45" and not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("adaptive tolerances must be positive")
        if not self.blowup_threshold > 0.0:
            raise ValueError("blowup threshold must be positive")


@dataclass
class Trajectory:
    """Recorded run: strictly increasing times, equal-length named channels."""

    times: np.ndarray
    channels: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def channel(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def sample_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self.times) else 0.0

    @property
    def termination(self) -> str:
        return self.metadata.get("termination", "completed")

    @property
    def diverged(self) -> bool:
        return self.termination == "diverged"

    def __len__(self) -> int:
        return len(self.times)


def _check_state(y, threshold):
    """Return 'ok', 'blowup', or raise on NaN."""
    for v in y:
        if v != v:
            raise IntegrationError("state became NaN during integration")
        if v > threshold or v < -threshold:
            return False
    return True


def integrate(rhs, y0, cfg: IntegratorConfig, channel_names,
              t0: float = 0.0, post_step=None, extra_channels=None,
              metadata=None) -> Trajectory:
    """Integrate ``rhs`` from ``y0`` and record named channels.

    ``post_step(y) -> y`` is applied after every accepted step (used for
    gating-variable clamps).  ``extra_channels`` maps names to
    ``fn(t, y) -> float`` evaluated at recording times only.  On blow-up the
    partial trajectory is returned with termination reason "diverged"; NaN
    raises IntegrationError.
    """
    y = tuple(float(v) for v in y0)
    if len(channel_names) != len(y):
        raise ValueError("channel_names must match the state dimension")
    for v in y:
        if not math.isfinite(v):
            raise ValueError("initial state must be finite")
    extra = dict(extra_channels) if extra_channels else {}

    rec_states: list[tuple[float, ...]] = []
    rec_steps: list[int] = []
    rec_extra = {name: [] for name in extra}

    def record(i, t, state):
        rec_steps.append(i)
        rec_states.append(state)
        for name, fn in extra.items():
            rec_extra[name].append(fn(t, state))

    record(0, t0, y)
    termination = "completed"
    threshold = cfg.blowup_threshold
    stride = cfg.record_stride
    n_steps = int(round(cfg.t_end / cfg.dt))

    try:
        if cfg.method == "rk4":
            dt = cfg.dt
            half = 0.5 * dt
            sixth = dt / 6.0
            for i in range(1, n_steps + 1):
                t = t0 + (i - 1) * dt
                k1 = rhs(t, y)
                k2 = rhs(t + half, tuple(a + half * b for a, b in zip(y, k1)))
                k3 = rhs(t + half, tuple(a + half * b for a, b in zip(y, k2)))
                k4 = rhs(t + dt, tuple(a + dt * b for a, b in zip(y, k3)))
                y = tuple(a + sixth * (b + 2.0 * (c + d) + e)
                          for a, b, c, d, e in zip(y, k1, k2, k3, k4))
                if post_step is not None:
                    y = post_step(y)
                if not _check_state(y, threshold):
                    termination = "diverged"
                    break
                if i % stride == 0 or i == n_steps:
                    record(i, t0 + i * dt, y)
        else:
            y, termination = _dp45(rhs, y, cfg, t0, post_step, record)
    except OverflowError as exc:
        raise IntegrationError(f"overflow in RHS evaluation: {exc}") from exc

    times = t0 + cfg.dt * np.asarray(rec_steps, dtype=float)
    data = np.asarray(rec_states, dtype=float)
    channels = {name: data[:, j].copy() for j, name in enumerate(channel_names)}
    for name, vals in rec_extra.items():
        channels[name] = np.asarray(vals, dtype=float)
    meta = dict(metadata) if metadata else {}
    meta.setdefault("termination", termination)
    meta.setdefault("t0", t0)
    meta.setdefault("config", cfg)
    return Trajectory(times=times, channels=channels, metadata=meta)


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def _dp45(rhs, y, cfg, t0, post_step, record):
    """Adaptive substeps between recording times; lands exactly on the grid."""
    dt_rec = cfg.dt * cfg.record_stride
    n_rec = int(round(cfg.t_end / dt_rec))
    rel, atol = cfg.rel_tol, cfg.abs_tol
    threshold = cfg.blowup_threshold
    dim = len(y)
    h = dt_rec / 10.0
    t = t0
    for j in range(1, n_rec + 1):
        t_target = t0 + j * dt_rec
        while t < t_target - 1e-12 * dt_rec:
            h = min(h, t_target - t)
            if h < 1e-14 * dt_rec:
                raise IntegrationError("adaptive step collapsed below resolution")
            ks = []
            for s in range(7):
                ys = tuple(
                    yv + h * sum(_DP_A[s][m] * ks[m][i] for m in range(s))
                    for i, yv in enumerate(y)
                )
                ks.append(rhs(t + _DP_C[s] * h, ys))
            y5 = tuple(yv + h * sum(_DP_B5[s] * ks[s][i] for s in range(7))
                       for i, yv in enumerate(y))
            y4 = tuple(yv + h * sum(_DP_B4[s] * ks[s][i] for s in range(7))
                       for i, yv in enumerate(y))
            err = 0.0
            for i in range(dim):
                scale = atol + rel * max(abs(y[i]), abs(y5[i]))
                e = (y5[i] - y4[i]) / scale
                err += e * e
            err = math.sqrt(err / dim)
            if err <= 1.0:
                t += h
                y = y5
                if post_step is not None:
                    y = post_step(y)
                if not _check_state(y, threshold):
                    return y, "diverged"
            grow = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            h *= min(5.0, max(0.2, grow))
        t = t_target
        record(j * cfg.record_stride, t, y)
    return y, "completed"


# ---------------------------------------------------------------------------
# piecewise feedback-gain schedules
# ---------------------------------------------------------------------------

class ScheduleError(ValueError):
    """Malformed gain schedule: gaps, overlaps, or bad segment bounds."""


@dataclass(frozen=True)
class BetaSchedule:
    """Contiguous piecewise-linear gain profile beta(t).

    Segments are (t_start, t_end, beta_start, beta_end) with beta linear on
    [t_start, t_end); constant segments have beta_end == beta_start.  Value
    jumps between consecutive segments are allowed.
    """

    segments: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        segs = tuple(tuple(float(v) for v in s) for s in self.segments)
        if not segs:
            raise ScheduleError("schedule needs at least one segment")
        for t0, t1, b0, b1 in segs:
            if not t1 > t0:
                raise ScheduleError(f"segment [{t0}, {t1}] has non-positive length")
        for (a0, a1, _, _), (b0s, _, _, _) in zip(segs, segs[1:]):
            if abs(b0s - a1) > 1e-12 * max(1.0, abs(a1)):
                raise ScheduleError(
                    f"segments are not contiguous at t = {a1} (next starts {b0s})")
        object.__setattr__(self, "segments", segs)

    @property
    def t_start(self) -> float:
        return self.segments[0][0]

    @property
    def t_end(self) -> float:
        return self.segments[-1][1]

    def __call__(self, t: float) -> float:
        segs = self.segments
        if t <= segs[0][0]:
            return segs[0][2]
        for t0, t1, b0, b1 in segs:
            if t < t1:
                if t <= t0:
                    return b0
                return b0 + (b1 - b0) * (t - t0) / (t1 - t0)
        t0, t1, b0, b1 = segs[-1]
        return b1

    def covers(self, t0: float, t1: float) -> bool:
        return self.t_start <= t0 + 1e-9 and self.t_end >= t1 - 1e-9


def integrate_piecewise_beta(p, dp, schedule: BetaSchedule, cfg: IntegratorConfig,
                             noise=None, y0=(0.3, 0.2, 0.0)) -> Trajectory:
    """Integrate the plant+detector cascade under a time-varying gain.

    The instantaneous gain is recorded as channel ``beta``.
    """
    from .models import make_cascade_rhs

    if not schedule.covers(0.0, cfg.t_end):
        raise ScheduleError(
            f"schedule [{schedule.t_start}, {schedule.t_end}] does not cover "
            f"[0, {cfg.t_end}]")
    rhs = make_cascade_rhs(p, dp, noise=noise, beta_fn=schedule)
    return integrate(rhs, y0, cfg, ("x_f", "x_s", "beta_hat"),
                     extra_channels={"beta": lambda t, y: schedule(t)},
                     metadata={"model": "cascade", "schedule": schedule.segments})
