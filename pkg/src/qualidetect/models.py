"""Right-hand sides of the simulated systems.

Three families live here:

* the planar slow-fast plant  xf' = -xf + S(beta*xf + u - xs),  xs' = eps*(xf - xs);
* the scalar online detector  bh' = -k*xf*(-xf^3 + bh*xf + u - xs), driven by
  (possibly noise-corrupted) measurements of the plant;
* the Hodgkin-Huxley membrane model with the same detector attached to the
  high-pass-centered voltage and a chosen slow gating signal.

All RHS functions are pure; ``make_*_rhs`` factories bind parameters into
closures with the ``rhs(t, state_tuple) -> derivative_tuple`` signature the
solver expects.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .sigmoids import Sigmoid, Tanh


@dataclass(frozen=True)
class NoiseSpec:
    """Deterministic disturbances: sinusoidal measurement noise, constant input bias.

    d_out corrupts what the detector sees of both plant states; d_in biases
    the input actually applied to the plant while the detector keeps using
    the nominal u.
    """

    d_out_amp: float = 0.0
    d_out_freq: float = 0.0
    d_in: float = 0.0

    def __post_init__(self):
        for v in (self.d_out_amp, self.d_out_freq, self.d_in):
            if not math.isfinite(v):
                raise ValueError("noise amplitudes must be finite")

    def d_out(self, t: float) -> float:
        return self.d_out_amp * math.sin(self.d_out_freq * t)


@dataclass(frozen=True)
class PlanarParams:
    """Parameters of the planar slow-fast plant."""

    beta: float
    eps: float = 1e-3
    u: float = -0.01
    sigmoid: Sigmoid = field(default_factory=Tanh)

    def __post_init__(self):
        for v in (self.beta, self.eps, self.u):
            if not math.isfinite(v):
                raise ValueError("plant parameters must be finite")
        if self.eps <= 0.0:
            raise ValueError("timescale ratio eps must be positive")
        if self.eps > 0.1:
            warnings.warn("eps > 0.1: system is not singularly perturbed",
                          stacklevel=2)


@dataclass(frozen=True)
class DetectorParams:
    """Gain of the online detector."""

    k: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ValueError("detector gain k must be positive")


def planar_rhs(p: PlanarParams, x_f: float, x_s: float, t: float = 0.0,
               noise: NoiseSpec | None = None) -> tuple[float, float]:
    """Plant derivative.  Noise enters only through the input bias d_in."""
    u_eff = p.u if noise is None else p.u + noise.d_in
    dxf = -x_f + p.sigmoid.eval(p.beta * x_f + u_eff - x_s)
    dxs = p.eps * (x_f - x_s)
    return dxf, dxs


def detector_rhs(dp: DetectorParams, beta_hat: float, x_f_meas: float,
                 x_s_meas: float, u: float) -> float:
    """Detector derivative from measured signals and the nominal input."""
    return -dp.k * x_f_meas * (-x_f_meas ** 3 + beta_hat * x_f_meas + u - x_s_meas)


def cascade_rhs(p: PlanarParams, dp: DetectorParams, x_f: float, x_s: float,
                beta_hat: float, t: float = 0.0,
                noise: NoiseSpec | None = None) -> tuple[float, float, float]:
    """Plant plus detector.  The detector sees x_f + d_out(t), x_s + d_out(t)."""
    dxf, dxs = planar_rhs(p, x_f, x_s, t, noise)
    if noise is None:
        dbh = detector_rhs(dp, beta_hat, x_f, x_s, p.u)
    else:
        d = noise.d_out(t)
        dbh = detector_rhs(dp, beta_hat, x_f + d, x_s + d, p.u)
    return dxf, dxs, dbh


def make_planar_rhs(p: PlanarParams, noise: NoiseSpec | None = None):
    """Bind parameters into rhs(t, (x_f, x_s))."""
    s_eval = p.sigmoid.eval
    beta, eps = p.beta, p.eps
    u_eff = p.u if noise is None else p.u + noise.d_in

    def rhs(t, y):
        x_f, x_s = y
        return (-x_f + s_eval(beta * x_f + u_eff - x_s), eps * (x_f - x_s))

    return rhs


def make_cascade_rhs(p: PlanarParams, dp: DetectorParams,
                     noise: NoiseSpec | None = None, beta_fn=None):
    """Bind parameters into rhs(t, (x_f, x_s, beta_hat)).

    ``beta_fn`` makes the plant gain time-varying (the detector never needs
    it).  Without noise the measured signals are the plant states.
    """
    s_eval = p.sigmoid.eval
    eps, u, k = p.eps, p.u, dp.k
    beta_const = p.beta

    if noise is None:
        def rhs(t, y):
            x_f, x_s, bh = y
            beta = beta_const if beta_fn is None else beta_fn(t)
            dxf = -x_f + s_eval(beta * x_f + u - x_s)
            dbh = -k * x_f * (-x_f ** 3 + bh * x_f + u - x_s)
            return (dxf, eps * (x_f - x_s), dbh)
    else:
        amp, freq, d_in = noise.d_out_amp, noise.d_out_freq, noise.d_in

        def rhs(t, y):
            x_f, x_s, bh = y
            beta = beta_const if beta_fn is None else beta_fn(t)
            dxf = -x_f + s_eval(beta * x_f + (u + d_in) - x_s)
            d = amp * math.sin(freq * t)
            xm, sm = x_f + d, x_s + d
            dbh = -k * xm * (-xm ** 3 + bh * xm + u - sm)
            return (dxf, eps * (x_f - x_s), dbh)

    return rhs


# ---------------------------------------------------------------------------
# Hodgkin-Huxley
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HHParams:
    """Hodgkin-Huxley membrane parameters plus the attached detector.

    Units: mV, ms, mS/cm^2, uF/cm^2, uA/cm^2.  Defaults are the standard
    modern-convention set; g_na is the swept ruling parameter.
    """

    g_na: float = 120.0
    g_k: float = 36.0
    g_l: float = 0.3
    v_na: float = 50.0
    v_k: float = -77.0
    v_l: float = -54.4
    c_m: float = 1.0
    i_app: float = 0.0
    k: float = 4.0
    tau_hp: float = 50.0
    slow_signal: str = "n"

    def __post_init__(self):
        if self.c_m <= 0.0:
            raise ValueError("membrane capacitance must be positive")
        for g in (self.g_na, self.g_k, self.g_l):
            if g < 0.0:
                raise ValueError("conductances must be non-negative")
        if self.k <= 0.0:
            raise ValueError("detector gain k must be positive")
        if self.tau_hp <= 0.0:
            raise ValueError("high-pass time constant must be positive")
        if self.slow_signal not in ("n", "m"):
            raise ValueError("slow_signal must be 'n' or 'm'")


def _ratefrac(num: float, z: float) -> float:
    """num * z / (1 - exp(-z)), with the removable singularity at z = 0."""
    if z <= -700.0:
        return 0.0
    denom = 1.0 - math.exp(-z)
    if abs(denom) < 1e-7:
        return num * (1.0 + 0.5 * z)
    return num * z / denom


def alpha_m(v: float) -> float:
    return _ratefrac(1.0, (v + 40.0) / 10.0)


def beta_m(v: float) -> float:
    return 4.0 * math.exp(-(v + 65.0) / 18.0)


def alpha_h(v: float) -> float:
    return 0.07 * math.exp(-(v + 65.0) / 20.0)


def beta_h(v: float) -> float:
    return 1.0 / (1.0 + math.exp(-(v + 35.0) / 10.0))


def alpha_n(v: float) -> float:
    return _ratefrac(0.1, (v + 55.0) / 10.0)


def beta_n(v: float) -> float:
    return 0.125 * math.exp(-(v + 65.0) / 80.0)


def gate_inf(alpha: float, beta: float) -> float:
    return alpha / (alpha + beta)


def hh_steady_gates(v: float) -> tuple[float, float, float]:
    """Gating steady states (m_inf, n_inf, h_inf) at a held voltage."""
    return (gate_inf(alpha_m(v), beta_m(v)),
            gate_inf(alpha_n(v), beta_n(v)),
            gate_inf(alpha_h(v), beta_h(v)))


#: state layout for the Hodgkin-Huxley cascade
HH_CHANNELS = ("V", "m", "n", "h", "g_na_hat", "hp_v", "hp_w")


def hh_initial_state(hp: HHParams, v0: float = -65.0) -> tuple[float, ...]:
    """Rest-like start: gates at steady state, detector at zero, filters primed."""
    m0, n0, h0 = hh_steady_gates(v0)
    w0 = n0 if hp.slow_signal == "n" else m0
    return (v0, m0, n0, h0, 0.0, v0, w0)


def hh_rhs(hp: HHParams, state: tuple[float, ...], t: float = 0.0) -> tuple[float, ...]:
    """Full membrane + detector derivative.

    The detector is fed the high-pass-centered voltage v_bar = V - hp_v and
    slow signal w_bar = w - hp_w, where the filter states track their inputs
    with time constant tau_hp.
    """
    v, m, n, h, ghat, hp_v, hp_w = state
    i_ion = (hp.g_k * n ** 4 * (v - hp.v_k)
             + hp.g_na * m ** 3 * h * (v - hp.v_na)
             + hp.g_l * (v - hp.v_l))
    dv = (hp.i_app - i_ion) / hp.c_m
    dm = alpha_m(v) * (1.0 - m) - beta_m(v) * m
    dn = alpha_n(v) * (1.0 - n) - beta_n(v) * n
    dh = alpha_h(v) * (1.0 - h) - beta_h(v) * h

    w = n if hp.slow_signal == "n" else m
    v_bar = v - hp_v
    w_bar = w - hp_w
    dghat = -hp.k * v_bar * (-v_bar ** 3 + ghat * v_bar + hp.i_app - w_bar)
    return (dv, dm, dn, dh, dghat, (v - hp_v) / hp.tau_hp, (w - hp_w) / hp.tau_hp)


def make_hh_rhs(hp: HHParams):
    """Bind parameters into rhs(t, state)."""

    def rhs(t, y):
        return hh_rhs(hp, y, t)

    return rhs


def hh_clamp(state: tuple[float, ...]) -> tuple[float, ...]:
    """Clamp the gating variables back into [0, 1] after a step."""
    v, m, n, h, ghat, hp_v, hp_w = state
    if m < 0.0:
        m = 0.0
    elif m > 1.0:
        m = 1.0
    if n < 0.0:
        n = 0.0
    elif n > 1.0:
        n = 1.0
    if h < 0.0:
        h = 0.0
    elif h > 1.0:
        h = 1.0
    return (v, m, n, h, ghat, hp_v, hp_w)
