"""Closed-form survival-probability and expectation-value predictors.

These are the fit targets of the characterization pipeline, first order in
the noise parameters.  Every predictor carries the measurement bit-flip
factor (1 - 2s): survival probabilities map through
p = (1 + (1 - 2s) v_z) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tnl.model import DeviceModel, NoiseParams1Q, PairParams, PsdModel, effective_detuning

__all__ = [
    "Prediction",
    "predict_m",
    "predict_t1",
    "predict_hahn",
    "predict_ramsey",
    "fttps_decay_rate",
    "predict_fttps",
    "predict_fpw",
    "predict_xt",
    "predict_cr",
    "predict_rb_rate",
    "rb_survival",
    "predict_cpmg",
    "predict_decay_power_fit_form",
]


@dataclass(frozen=True)
class Prediction:
    """Predicted values aligned with a sweep, plus the inputs that made them."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _spam(params: NoiseParams1Q) -> float:
    return 1.0 - 2.0 * params.s_meas


def _p_from_v(v, params):
    return 0.5 * (1.0 + _spam(params) * np.asarray(v, dtype=float))


def predict_m(params: NoiseParams1Q, dt: float) -> float:
    """SPAM circuit: leading order p = s, kept to first order in the rates."""
    decay = math.exp(-(0.75 * params.gamma + 0.5 * params.lambda_phi + params.nu_ctrl) * dt)
    return float(0.5 * (1.0 - _spam(params) * decay))


def predict_t1(params: NoiseParams1Q, taus) -> Prediction:
    """p = (1 + (1-2s)(1 - 2q(1 - e^{-gamma tau}))) / 2."""
    taus = np.asarray(taus, dtype=float)
    v = 1.0 - 2.0 * params.q_excited * (1.0 - np.exp(-params.gamma * taus))
    return Prediction(_p_from_v(v, params), {"family": "t1"})


def predict_hahn(params: NoiseParams1Q, taus) -> Prediction:
    """p = (1 + (1-2s) e^{-tau (gamma/2 + lambda)}) / 2."""
    taus = np.asarray(taus, dtype=float)
    v = np.exp(-params.alpha * taus)
    return Prediction(_p_from_v(v, params), {"family": "hahn"})


def predict_ramsey(
    params: NoiseParams1Q,
    taus,
    beta_eff: float | None = None,
    xi: float | None = None,
    device: DeviceModel | None = None,
    qubit: str | None = None,
) -> Prediction:
    """Free-induction decay with detuning and optional TLS beat.

    beta_eff defaults to the device effective detuning when a device and
    qubit are supplied, else to the bare beta_mean.  xi defaults to the
    first TLS attachment (0 when none).
    """
    taus = np.asarray(taus, dtype=float)
    if beta_eff is None:
        if device is not None and qubit is not None:
            beta_eff = effective_detuning(qubit, device)
        else:
            beta_eff = params.beta_mean
    if xi is None:
        xi = params.xi_tls or 0.0
        if device is not None and qubit is not None:
            tls = device.tls_couplings(qubit)
            xi = tls[0] if tls else xi
    v = np.exp(-params.alpha * taus) * np.cos(beta_eff * taus) * np.cos(xi * taus)
    return Prediction(_p_from_v(v, params), {"family": "ramsey", "beta_eff": beta_eff, "xi": xi})


def fttps_decay_rate(params: NoiseParams1Q, k, K: int) -> np.ndarray:
    """delta_k = gamma/2 + lambda + (gamma/2 - lambda + 2 nu) k / 2K."""
    k = np.asarray(k, dtype=float)
    base = 0.5 * params.gamma + params.lambda_phi
    slope = 0.5 * params.gamma - params.lambda_phi + 2.0 * params.nu_ctrl
    return base + slope * k / (2.0 * K)


def predict_fttps(
    params: NoiseParams1Q,
    K: int,
    ks,
    dt: float,
    beta_eff: float | None = None,
    xi: float | None = None,
) -> Prediction:
    """p_k = (1 + (1-2s) e^{-tau delta_k} cos(2 pi k eps)) / 2, tau = 2K dt.

    The k = 0 sequence is a fixed-duration Ramsey experiment and takes the
    cos(beta_eff tau) cos(xi tau) form.
    """
    ks = np.asarray(ks, dtype=int)
    tau = 2.0 * K * dt
    delta = fttps_decay_rate(params, ks, K)
    v = np.exp(-tau * delta) * np.cos(2.0 * math.pi * ks * params.epsilon_mean)
    if np.any(ks == 0):
        b = params.beta_mean if beta_eff is None else beta_eff
        x = (params.xi_tls or 0.0) if xi is None else xi
        v0 = math.exp(-params.alpha * tau) * math.cos(b * tau) * math.cos(x * tau)
        v = np.where(ks == 0, v0, v)
    return Prediction(_p_from_v(v, params), {"family": "fttps", "K": K, "tau": tau})


def predict_fpw(
    params: NoiseParams1Q,
    ds,
    dt: float,
    beta_eff: float | None = None,
    envelope: str = "gaussian",
) -> Prediction:
    """p = (1 + (1-2s) e^{-tau (3g/4 + l/2 + nu)} cos(c beta_eff tau)) / 2.

    c = 4/(3 pi) for Gaussian pulses and 2/pi for square pulses; tau = 2 d dt.
    The decay coefficient describes the early-time (driven-plane) envelope;
    past a quarter oscillation period the signal mixes into the x axis and
    softens toward 5g/8 + 3l/4 + nu/2.
    """
    ds = np.asarray(ds, dtype=float)
    taus = 2.0 * ds * dt
    if envelope == "gaussian":
        c = 4.0 / (3.0 * math.pi)
    elif envelope == "square":
        c = 2.0 / math.pi
    else:
        raise ValueError("envelope must be 'gaussian' or 'square'")
    b = params.beta_mean if beta_eff is None else beta_eff
    rate = 0.75 * params.gamma + 0.5 * params.lambda_phi + params.nu_ctrl
    v = np.exp(-taus * rate) * np.cos(c * b * taus)
    return Prediction(_p_from_v(v, params), {"family": "fpw", "envelope": envelope, "freq_coeff": c})


def predict_xt(
    params_m: NoiseParams1Q,
    params_s: NoiseParams1Q,
    j: float,
    taus,
) -> Prediction:
    """Joint-echo crosstalk prediction, Eq.-(17)-style.

    p = (1 + (1-2s_M) e^{-alpha_M tau} (cos(J tau) + (gamma_S / 2J) sin(J tau))) / 2
    with alpha_M = (gamma_M + gamma_S)/2 + lambda_M.  The J -> 0 limit is
    taken by series so the spectator term degrades to gamma_S tau / 2.
    """
    taus = np.asarray(taus, dtype=float)
    alpha_m = 0.5 * (params_m.gamma + params_s.gamma) + params_m.lambda_phi
    if abs(j) < 1e-12:
        osc = 1.0 + 0.5 * params_s.gamma * taus
    else:
        osc = np.cos(j * taus) + (params_s.gamma / (2.0 * j)) * np.sin(j * taus)
    v = np.exp(-alpha_m * taus) * osc
    return Prediction(_p_from_v(v, params_m), {"family": "xt", "j": j})


def predict_cr(
    params_target: NoiseParams1Q,
    pair: PairParams,
    tau_cr: float,
    ns,
    control_state: int,
) -> tuple:
    """(<Y>, <Z>) tracks of the target under n repeated ECR blocks.

    omega_cr = pi (1 + eps_zx) / (2 tau_cr); the decay is
    delta_cr = 2 gamma / 5 + lambda / 2 + nu (adopted as reported).  With
    the +Z.X Hamiltonian convention the control state selects the rotation
    rate omega_cr +- zeta and the sign of <Y>:
    <Y>_{0,1} = -+ e^{-delta tau} sin((omega_cr +- zeta) tau).
    """
    if control_state not in (0, 1):
        raise ValueError("control_state must be 0 or 1")
    ns = np.asarray(ns, dtype=float)
    taus = ns * tau_cr
    p = params_target
    delta = 0.4 * p.gamma + 0.5 * p.lambda_phi + p.nu_ctrl
    omega = math.pi * (1.0 + pair.epsilon_zx) / (2.0 * tau_cr)
    rate = omega + pair.zeta_x if control_state == 0 else omega - pair.zeta_x
    sign = -1.0 if control_state == 0 else 1.0
    amp = _spam(p) * np.exp(-delta * taus)
    y = Prediction(sign * amp * np.sin(rate * taus), {"family": "cr", "observable": "Y"})
    z = Prediction(amp * np.cos(rate * taus), {"family": "cr", "observable": "Z"})
    return y, z


def predict_rb_rate(params: NoiseParams1Q, dt: float) -> float:
    """EPC r = dt (gamma + lambda + nu) + (pi eps / 2)^2."""
    return float(
        dt * (params.gamma + params.lambda_phi + params.nu_ctrl)
        + (0.5 * math.pi * params.epsilon_mean) ** 2
    )


def rb_survival(lengths, r: float, s_meas: float = 0.0) -> np.ndarray:
    """RB decay model p(L) = (1 + (1-2s) e^{-rL}) / 2."""
    lengths = np.asarray(lengths, dtype=float)
    return 0.5 * (1.0 + (1.0 - 2.0 * s_meas) * np.exp(-r * lengths))


def predict_cpmg(
    params: NoiseParams1Q,
    psd: PsdModel | None,
    d: int,
    taus,
    t1: float,
    dt: float,
    beta_eff: float | None = None,
    xi: float | None = None,
) -> Prediction:
    """CPMG_d survival with the overlap-integral decay exponent.

    d >= 1: p = (1 + e^{-chi_d(tau) - tau/2T1}) / 2; d = 0 adds the Ramsey
    cosines.  chi is evaluated from the supplied PSD with the exact filter
    function of the sequence (cutoff pi/dt).
    """
    from tnl.stochastic import cpmg_overlap

    taus = np.asarray(taus, dtype=float)
    chi = np.zeros_like(taus)
    if psd is not None:
        chi = np.array([cpmg_overlap(psd, d, t, dt).chi if t > 0 else 0.0 for t in taus])
    v = np.exp(-chi - taus / (2.0 * t1))
    if d == 0:
        b = params.beta_mean if beta_eff is None else beta_eff
        x = (params.xi_tls or 0.0) if xi is None else xi
        v = v * np.cos(b * taus) * np.cos(x * taus)
    return Prediction(0.5 * (1.0 + v), {"family": "cpmg", "d": d})


def predict_decay_power_fit_form(
    taus,
    big_a: float,
    a: float,
    t2: float,
    tau_max: float = 50.0,
    oscillation: tuple | None = None,
) -> Prediction:
    """Ad-hoc decay-power form p = (1 + exp[-A (tau/tau_max)^a - tau/T2] ...)/2.

    `oscillation`, when given as (beta, xi), multiplies in the Ramsey
    cosines.  A is the normalized decay power sensed over tau_max; a its
    color exponent.
    """
    if big_a < 0 or a <= 0:
        raise ValueError("require A >= 0 and a > 0")
    taus = np.asarray(taus, dtype=float)
    v = np.exp(-big_a * (taus / tau_max) ** a - taus / t2)
    if oscillation is not None:
        beta, xi = oscillation
        v = v * np.cos(beta * taus) * np.cos(xi * taus)
    return Prediction(0.5 * (1.0 + v), {"family": "decay_power", "A": big_a, "a": a})
