"""Post-hoc trajectory analysis: excitation energy, regime classification,
jump detection, simple filters, and the detector contraction check.

All analysis runs on the tail of a recorded trajectory (default: the last
30%), after transients have been given time to settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import Trajectory

RESTING = "resting"
OSCILLATING = "oscillating"
UNDETERMINED = "undetermined"

#: regime thresholds on peak-to-peak amplitude of the fast channel
RESTING_AMPLITUDE = 1e-3
OSCILLATING_AMPLITUDE = 1e-1
#: dead band for the reported sign of the detector summary
SIGN_DEAD_BAND = 0.02


@dataclass(frozen=True)
class PEReport:
    """Sliding-window excitation energy of a signal.

    ``mu_min`` is the smallest value of the integral of y^2 over any window
    of length ``window`` starting on the sample grid.
    """

    window: float
    mu_min: float
    mu: float = 0.0

    @property
    def is_pe(self) -> bool:
        return self.mu_min >= self.mu


@dataclass(frozen=True)
class ActivityReport:
    """Classified regime of a finished run plus the detector summary."""

    label: str
    amplitude: float
    period: float | None = None
    beta_hat_summary: float | None = None
    beta_hat_sign: int | None = None


@dataclass(frozen=True)
class FilterSpec:
    """First-order low/high pass (time constant tau) or sliding mean (window)."""

    kind: str          # "lowpass" | "highpass" | "sliding_mean"
    tau: float

    def __post_init__(self):
        if self.kind not in ("lowpass", "highpass", "sliding_mean"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not self.tau > 0.0:
            raise ValueError("filter time constant must be positive")


def measure_pe(y, dt: float, window: float, mu: float = 0.0) -> PEReport:
    """Trapezoidal sliding-window energy; needs at least two windows of data."""
    y = np.asarray(y, dtype=float)
    if dt <= 0.0:
        raise ValueError("sample interval must be positive")
    duration = (len(y) - 1) * dt
    if duration < 2.0 * window:
        raise ValueError(
            f"signal duration {duration} is shorter than two windows ({2 * window})")
    n_w = int(round(window / dt))
    if n_w < 1:
        raise ValueError("window shorter than one sample interval")
    y2 = y * y
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (y2[1:] + y2[:-1]))])
    integrals = cum[n_w:] - cum[:-n_w]
    return PEReport(window=n_w * dt, mu_min=float(integrals.min()), mu=mu)


def _analysis_slice(traj: Trajectory, settle_fraction: float) -> slice:
    t = traj.times
    t_cut = t[-1] - settle_fraction * (t[-1] - t[0])
    start = int(np.searchsorted(t, t_cut))
    return slice(min(start, len(t) - 2), len(t))


def _default_channel(traj: Trajectory) -> str:
    for name in ("x_f", "V"):
        if name in traj.channels:
            return name
    return next(iter(traj.channels))


def _default_beta_channel(traj: Trajectory) -> str | None:
    for name in ("beta_hat", "g_na_hat"):
        if name in traj.channels:
            return name
    return None


def _upward_crossings(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Times where y crosses its mean upward, linearly interpolated."""
    ym = y - y.mean()
    below = ym[:-1] < 0.0
    above = ym[1:] >= 0.0
    idx = np.nonzero(below & above)[0]
    frac = -ym[idx] / (ym[idx + 1] - ym[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def classify_activity(traj: Trajectory, settle_fraction: float = 0.3,
                      channel: str | None = None,
                      beta_hat_channel: str | None = None) -> ActivityReport:
    """Label the tail of a run as resting / oscillating / undetermined.

    Resting: fast-channel peak-to-peak below 1e-3.  Oscillating: peak-to-peak
    at least 1e-1 with three or more mean-crossing cycles whose periods agree
    to within 10%.  Everything else is undetermined.  The detector summary is
    the terminal value when resting and the mean over the last full period
    when oscillating.
    """
    if traj.diverged:
        raise ValueError("cannot classify a diverged trajectory")
    channel = channel or _default_channel(traj)
    if beta_hat_channel is None:
        beta_hat_channel = _default_beta_channel(traj)
    sl = _analysis_slice(traj, settle_fraction)
    t = traj.times[sl]
    y = traj.channels[channel][sl]

    amplitude = float(y.max() - y.min())
    label = UNDETERMINED
    period = None
    if amplitude < RESTING_AMPLITUDE:
        label = RESTING
    elif amplitude >= OSCILLATING_AMPLITUDE:
        crossings = _upward_crossings(t, y)
        if len(crossings) >= 4:
            intervals = np.diff(crossings)
            mean_T = float(intervals.mean())
            if len(intervals) >= 3 and np.all(np.abs(intervals - mean_T)
                                              <= 0.1 * mean_T):
                label = OSCILLATING
                period = mean_T

    summary = None
    sign = None
    if beta_hat_channel is not None:
        bh_t = traj.times
        bh = traj.channels[beta_hat_channel]
        if label == OSCILLATING:
            mask = bh_t >= bh_t[-1] - period
            seg_t, seg = bh_t[mask], bh[mask]
            summary = float(np.trapz(seg, seg_t) / (seg_t[-1] - seg_t[0]))
        else:
            summary = float(bh[-1])
        if abs(summary) <= SIGN_DEAD_BAND:
            sign = 0
        else:
            sign = 1 if summary > 0 else -1
    return ActivityReport(label=label, amplitude=amplitude, period=period,
                          beta_hat_summary=summary, beta_hat_sign=sign)


def detect_jumps(traj: Trajectory, channel: str | None = None,
                 settle_fraction: float = 0.3, threshold_mult: float = 10.0,
                 merge_gap: int = 5) -> list[tuple[float, float]]:
    """Intervals where |dy/dt| exceeds ``threshold_mult`` times its median.

    Only meaningful for oscillating runs; anything else yields no intervals.
    """
    channel = channel or _default_channel(traj)
    report = classify_activity(traj, settle_fraction, channel=channel)
    if report.label != OSCILLATING:
        return []
    sl = _analysis_slice(traj, settle_fraction)
    t = traj.times[sl]
    y = traj.channels[channel][sl]
    speed = np.abs(np.gradient(y, t))
    threshold = threshold_mult * float(np.median(speed))
    mask = speed > threshold
    intervals: list[list[int]] = []
    run_start = None
    for i, hot in enumerate(mask):
        if hot and run_start is None:
            run_start = i
        elif not hot and run_start is not None:
            intervals.append([run_start, i - 1])
            run_start = None
    if run_start is not None:
        intervals.append([run_start, len(mask) - 1])
    merged: list[list[int]] = []
    for iv in intervals:
        if merged and iv[0] - merged[-1][1] < merge_gap:
            merged[-1][1] = iv[1]
        else:
            merged.append(iv)
    return [(float(t[i0]), float(t[i1])) for i0, i1 in merged]


def jump_time_fraction(traj: Trajectory, channel: str | None = None,
                       settle_fraction: float = 0.3) -> float:
    """Fraction of the analysis window spent inside detected jumps."""
    jumps = detect_jumps(traj, channel, settle_fraction)
    if not jumps:
        return 0.0
    sl = _analysis_slice(traj, settle_fraction)
    t = traj.times[sl]
    total = sum(t1 - t0 for t0, t1 in jumps)
    return total / float(t[-1] - t[0])


def apply_filter(y, dt: float, spec: FilterSpec) -> np.ndarray:
    """Run a first-order or sliding-mean filter over a uniformly sampled signal."""
    y = np.asarray(y, dtype=float)
    if dt <= 0.0:
        raise ValueError("sample interval must be positive")
    if spec.tau < 2.0 * dt:
        raise ValueError(
            f"filter constant {spec.tau} too small for sample interval {dt}")
    if spec.kind == "sliding_mean":
        n = max(1, int(round(spec.tau / dt)))
        half = n // 2
        cum = np.concatenate([[0.0], np.cumsum(y)])
        out = np.empty_like(y)
        for i in range(len(y)):
            a = max(0, i - half)
            b = min(len(y), i + half + 1)
            out[i] = (cum[b] - cum[a]) / (b - a)
        return out
    pole = math.exp(-dt / spec.tau)
    gain = 1.0 - pole
    low = np.empty_like(y)
    state = 0.0
    for i, v in enumerate(y):
        state = pole * state + gain * v
        low[i] = state
    if spec.kind == "lowpass":
        return low
    return y - low


@dataclass(frozen=True)
class IncrementalStabilityReport:
    """Contraction of two detector copies driven by the same measurements."""

    times: np.ndarray
    ratios: np.ndarray          # |bh1 - bh2|(t) / |bh1 - bh2|(0)
    decay_rate: float           # fitted exponent of the ratio curve
    pe: PEReport
    contracted: bool
    flag: str | None

    @property
    def final_ratio(self) -> float:
        return float(self.ratios[-1])


def _driven_detector(x_f: np.ndarray, x_s: np.ndarray, u: float, dt: float,
                     k: float, beta_hat0: float) -> np.ndarray:
    """RK4 integration of the detector along recorded plant channels."""
    n = len(x_f)
    out = np.empty(n)
    out[0] = bh = beta_hat0
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(n - 1):
        f0, f1 = x_f[i], x_f[i + 1]
        s0, s1 = x_s[i], x_s[i + 1]
        fm, sm = 0.5 * (f0 + f1), 0.5 * (s0 + s1)
        k1 = -k * f0 * (-f0 ** 3 + bh * f0 + u - s0)
        b2 = bh + half * k1
        k2 = -k * fm * (-fm ** 3 + b2 * fm + u - sm)
        b3 = bh + half * k2
        k3 = -k * fm * (-fm ** 3 + b3 * fm + u - sm)
        b4 = bh + dt * k3
        k4 = -k * f1 * (-f1 ** 3 + b4 * f1 + u - s1)
        bh = bh + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[i + 1] = bh
    return out


def check_incremental_stability(x_f, x_s, u: float, dt: float, k: float,
                                beta_hat0_pair: tuple[float, float] = (-2.0, 2.0),
                                pe_window: float = 100.0,
                                pe_mu: float = 1e-6,
                                n_grid: int = 40) -> IncrementalStabilityReport:
    """Drive two detector copies with identical channels and compare them.

    Under sufficient excitation of x_f the gap between the copies contracts
    exponentially; without excitation it cannot, and the report says so.
    """
    x_f = np.asarray(x_f, dtype=float)
    x_s = np.asarray(x_s, dtype=float)
    pe = measure_pe(x_f, dt, pe_window, pe_mu)
    b1 = _driven_detector(x_f, x_s, u, dt, k, beta_hat0_pair[0])
    b2 = _driven_detector(x_f, x_s, u, dt, k, beta_hat0_pair[1])
    gap = np.abs(b1 - b2)
    d0 = gap[0]
    t = dt * np.arange(len(x_f))
    idx = np.unique(np.geomspace(1, len(x_f) - 1, n_grid).astype(int))
    if d0 == 0.0:
        ratios = gap[idx]          # identical starts: gap stays exactly zero
        rate = 0.0
        contracted = False
    else:
        ratios = gap[idx] / d0
        after = t[idx] >= pe.window
        pts = idx[after] if after.any() else idx
        rs = gap[pts] / d0
        keep = rs > 0.0
        if keep.sum() >= 2:
            coef = np.polyfit(t[pts][keep], np.log(rs[keep]), 1)
            rate = float(coef[0])
        else:
            rate = -math.inf
        contracted = bool(ratios[-1] < 1.0
                          and np.all(np.diff(ratios) <= 1e-12))
    flag = None if pe.is_pe else "PE not satisfied; no contraction guarantee"
    return IncrementalStabilityReport(times=t[idx], ratios=ratios,
                                      decay_rate=rate, pe=pe,
                                      contracted=contracted, flag=flag)


def convergence_time(t, y, tol: float = 1e-2) -> float:
    """Time after which |y - y_final| stays within tol."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    dev = np.abs(y - y[-1])
    outside = np.nonzero(dev > tol)[0]
    if len(outside) == 0:
        return float(t[0])
    i = outside[-1]
    return float(t[min(i + 1, len(t) - 1)])
