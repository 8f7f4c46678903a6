"""Stationary-Gaussian noise trajectories, filter functions, overlaps.

Trajectory synthesis uses the Fourier spectral method: independent Gaussian
cosine/sine amplitudes with variance (2/pi) S(omega_j) d_omega per harmonic,
plus one Gaussian constant of variance (2/pi) Gamma for a DC delta weight.
This normalization makes white noise of density S0 reproduce the Ramsey
decay exp(-S0 tau) exactly, matching the overlap-integral convention
chi(tau) = (1/pi) int S(w) F(w, tau) dw + Gamma F(0, tau) / pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tnl.model import DeviceModel, PsdModel, TabulatedPsd, psd_eval
from tnl.sequences import PulseSequence, XRot, fttps_pulse_slots, cpmg_pulse_times

__all__ = [
    "NoiseTrajectory",
    "sample_trajectory",
    "sample_trajectory_batch",
    "FilterFunction",
    "dephasing_ff_from_times",
    "fttps_dephasing_ff",
    "cpmg_dephasing_ff",
    "control_ff",
    "OverlapResult",
    "overlap_integral",
    "cpmg_overlap",
    "simulate_averaged",
    "control_fttps_prediction",
    "isotropic_depolarization_p",
]


@dataclass(frozen=True)
class NoiseTrajectory:
    """One piecewise-constant noise realization sampled every dt_sample."""

    dt_sample: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))


def _synthesis_basis(psd: PsdModel, m: int, dt: float):
    """Harmonic frequencies, per-harmonic std devs, and the zero-bin std.

    The grid harmonics j >= 1 integrate to zero over the synthesis window,
    so the band [0, d_omega/2) must be carried by an explicit random
    constant; without it the window-integrated phase (what a Ramsey
    measures) would vanish identically.
    """
    domega = 2.0 * math.pi / (m * dt)
    n_harm = m // 2
    omegas = domega * np.arange(1, n_harm + 1)
    nyquist = omegas[-1] if n_harm else 0.5 * domega
    if isinstance(psd, TabulatedPsd):
        if psd.omega_grid[-1] < nyquist - 1e-9:
            raise ValueError("tabulated PSD does not cover the Nyquist range")
        w0 = min(max(0.25 * domega, psd.omega_grid[0]), psd.omega_grid[-1])
        s_zero = float(psd_eval(psd, w0))
    else:
        s_zero = float(psd_eval(psd, 0.25 * domega))
    sigma0 = math.sqrt(s_zero * (0.5 * domega) * 2.0 / math.pi)
    if n_harm == 0:
        return omegas, np.zeros(0), sigma0
    s_vals = np.asarray(psd_eval(psd, omegas), dtype=float)
    sigma = np.sqrt(2.0 * s_vals * domega / math.pi)
    return omegas, sigma, sigma0


def sample_trajectory_batch(
    psd: PsdModel | None,
    mean: float,
    duration: float,
    dt_sample: float,
    seed: int,
    n_traj: int,
) -> np.ndarray:
    """(n_traj, m) noise samples; trajectory i is reproducible on its own.

    Per-trajectory generators are derived from (seed, i), so the i-th
    realization does not depend on the batch size or threading.
    """
    if dt_sample <= 0:
        raise ValueError("dt_sample must be positive")
    m = max(1, int(math.ceil(duration / dt_sample - 1e-9)))
    out = np.full((n_traj, m), float(mean))
    if psd is None:
        return out
    omegas, sigma, sigma0 = _synthesis_basis(psd, m, dt_sample)
    t = (np.arange(m) + 0.5) * dt_sample
    cos_b = np.cos(np.outer(omegas, t))
    sin_b = np.sin(np.outer(omegas, t))
    dc_sigma = math.sqrt(2.0 * psd.dc_weight() / math.pi)
    n_harm = omegas.size
    for i in range(n_traj):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        if n_harm:
            a = rng.standard_normal(n_harm) * sigma
            b = rng.standard_normal(n_harm) * sigma
            out[i] += a @ cos_b + b @ sin_b
        out[i] += sigma0 * rng.standard_normal()
        if dc_sigma > 0.0:
            out[i] += dc_sigma * rng.standard_normal()
    return out


def sample_trajectory(
    psd: PsdModel | None,
    mean: float,
    duration: float,
    dt_sample: float,
    seed: int,
    index: int = 0,
) -> NoiseTrajectory:
    """Draw the index-th trajectory of the (seed,) family."""
    rows = sample_trajectory_batch(psd, mean, duration, dt_sample, seed, index + 1)
    return NoiseTrajectory(dt_sample, rows[index])


# ---------------------------------------------------------------------------
# filter functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterFunction:
    """Frequency response of a pulse sequence.

    dephasing families integrate the toggling function y(t) = +-1 flipped
    at each pi pulse (finite pulse width sweeps cos through the pulse);
    control families sum signed phases at the pulse centers.
    """

    family: str  # dephasing | control | control_robust
    tau: float
    pulse_times: tuple
    pulse_width: float = 0.0
    signs: tuple | None = None

    def values(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.family == "dephasing":
            out = np.abs(self._dephasing_transform(omega)) ** 2
        else:
            signs = np.array(self.signs if self.signs is not None else (1.0,) * len(self.pulse_times))
            phases = np.exp(-1j * np.outer(omega, np.array(self.pulse_times)))
            amp = 0.5 * math.pi * phases @ signs
            out = np.abs(amp) ** 2
        return out

    def at_zero(self) -> float:
        return float(self.values(np.array([0.0]))[0])

    def _dephasing_transform(self, omega: np.ndarray) -> np.ndarray:
        w = self.pulse_width
        # constant-sign segments between pulses
        edges = [0.0]
        for tc in self.pulse_times:
            edges += [tc - 0.5 * w, tc + 0.5 * w]
        edges.append(self.tau)
        edges = np.asarray(edges)
        total = np.zeros(omega.shape, dtype=complex)
        iw = 1j * omega
        small = np.abs(omega) < 1e-12
        iw_safe = np.where(small, 1.0, iw)
        sign = 1.0
        for n in range(len(self.pulse_times) + 1):
            t1, t2 = edges[2 * n], edges[2 * n + 1]
            if t2 > t1:
                seg = np.where(
                    small, t2 - t1, (np.exp(iw_safe * t2) - np.exp(iw_safe * t1)) / iw_safe
                )
                total += sign * seg
            if n < len(self.pulse_times) and w > 0.0:
                # cos sweep through the pulse: s cos(pi u / w), u in [0, w]
                a = math.pi / w
                t0 = edges[2 * n + 1]
                num = -iw * (1.0 + np.exp(iw * w))
                seg = num / (a**2 - omega**2) * np.exp(iw * t0)
                total += sign * seg
            sign = -sign
        return total

    def coherent_angle(self, mean: float) -> float:
        """Accumulated coherent rotation angle for a process of this mean."""
        if self.family == "dephasing":
            w = self.pulse_width
            t_int = 0.0
            edges = [0.0]
            for tc in self.pulse_times:
                edges += [tc - 0.5 * w, tc + 0.5 * w]
            edges.append(self.tau)
            sign = 1.0
            for n in range(len(self.pulse_times) + 1):
                t_int += sign * (edges[2 * n + 1] - edges[2 * n])
                sign = -sign
            return mean * t_int
        signs = self.signs if self.signs is not None else (1.0,) * len(self.pulse_times)
        return mean * math.pi * float(np.sum(signs))


def dephasing_ff_from_times(
    pulse_times, tau: float, width: float = 0.0, instantaneous: bool = False
) -> FilterFunction:
    return FilterFunction(
        "dephasing", tau, tuple(pulse_times), 0.0 if instantaneous else width
    )


def fttps_dephasing_ff(k: int, K: int, dt: float, instantaneous: bool = False) -> FilterFunction:
    """Dephasing FF of the k-th FTTPS over the N = 2K slot window."""
    slots = fttps_pulse_slots(k, K)
    centers = tuple((s + 0.5) * dt for s in slots)
    return dephasing_ff_from_times(centers, 2.0 * K * dt, width=dt, instantaneous=instantaneous)


def cpmg_dephasing_ff(d: int, tau: float, dt: float, instantaneous: bool = False) -> FilterFunction:
    """Dephasing FF of CPMG_d including the dt-wide pulse slots."""
    gaps = cpmg_pulse_times(d, tau)
    centers = tuple(g + (i + 0.5) * dt for i, g in enumerate(gaps))
    return dephasing_ff_from_times(centers, tau + d * dt, width=dt, instantaneous=instantaneous)


def control_ff(k: int, K: int, dt: float, robust: bool = False) -> FilterFunction:
    """Control FF of the k-th (R-)FTTPS from the pulse centers."""
    slots = fttps_pulse_slots(k, K)
    centers = tuple((s + 0.5) * dt for s in slots)
    signs = tuple((-1.0) ** i for i in range(len(centers))) if robust else None
    return FilterFunction(
        "control_robust" if robust else "control",
        2.0 * K * dt,
        centers,
        signs=signs,
    )


# ---------------------------------------------------------------------------
# overlap integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverlapResult:
    chi: float
    zeta: float


def overlap_integral(
    psd: PsdModel,
    ff: FilterFunction,
    tau: float | None = None,
    mean: float = 0.0,
    omega_cutoff: float | None = None,
    n_grid: int | None = None,
) -> OverlapResult:
    """chi = (1/pi) [ int_0^cutoff S F d_omega + Gamma F(0) ].

    The cutoff defaults to pi / pulse_width (one gate slot) or 64 pi / tau
    for instantaneous pulses.  zeta is the coherent angle of the process
    mean through the same sequence.
    """
    tau = ff.tau if tau is None else tau
    if omega_cutoff is None:
        if ff.pulse_width > 0.0:
            omega_cutoff = math.pi / ff.pulse_width
        else:
            omega_cutoff = 64.0 * math.pi / tau
    if n_grid is None:
        n_grid = int(min(60000, max(2000, 24 * omega_cutoff * tau / (2.0 * math.pi))))
    grid = np.linspace(0.0, omega_cutoff, n_grid)
    s_vals = np.asarray(psd_eval(psd, grid), dtype=float)
    f_vals = ff.values(grid)
    chi = float(np.trapz(s_vals * f_vals, grid) / math.pi)
    chi += psd.dc_weight() * ff.at_zero() / math.pi
    return OverlapResult(chi=max(chi, 0.0), zeta=ff.coherent_angle(mean))


def cpmg_overlap(psd: PsdModel, d: int, tau: float, dt: float) -> OverlapResult:
    """Decay exponent of CPMG_d (d = 0 is the Ramsey window)."""
    if d == 0:
        ff = dephasing_ff_from_times((), tau)
    else:
        ff = cpmg_dephasing_ff(d, tau, dt)
    return overlap_integral(psd, ff)


# ---------------------------------------------------------------------------
# noise-averaged simulation
# ---------------------------------------------------------------------------


def simulate_averaged(
    sequence: PulseSequence,
    device: DeviceModel,
    psd_beta: PsdModel | None = None,
    psd_eps: PsdModel | None = None,
    n_traj: int = 100,
    seed: int = 0,
    qubit: str | None = None,
    return_trajectories: bool = False,
):
    """Monte-Carlo noise average of a single-qubit sequence.

    Noise is piecewise constant over gate slots (sampling step = dt_gate).
    With no PSDs the result falls back to the deterministic engine.
    """
    from tnl.runner import run_bloch, run_bloch_trajectories, trajectory_sample_count

    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    qubit = qubit or sequence.register[0]
    if psd_beta is None and psd_eps is None:
        p = run_bloch(sequence, device, qubit).survival
        return np.full(n_traj, p) if return_trajectories else p
    n_samples = trajectory_sample_count(sequence, qubit)
    duration = n_samples * sequence.dt_gate
    beta = (
        None
        if psd_beta is None
        else sample_trajectory_batch(psd_beta, 0.0, duration, sequence.dt_gate, seed, n_traj)
    )
    eps = (
        None
        if psd_eps is None
        else sample_trajectory_batch(psd_eps, 0.0, duration, sequence.dt_gate, seed + 1, n_traj)
    )
    probs = run_bloch_trajectories(sequence, device, qubit, beta, eps, n_traj=n_traj)
    return probs if return_trajectories else float(probs.mean())


def control_fttps_prediction(
    psd_eps: PsdModel | None,
    eps_mean: float,
    k: int,
    K: int,
    dt: float,
    robust: bool = False,
) -> float:
    """Control-noise-only FTTPS survival (1 + e^{-chi_k} cos(2 pi k eps))/2.

    The coherent term oscillates with the accumulated mean over-rotation
    angle 2 pi k eps; the robust variant cancels it and suppresses the
    low-frequency overlap.
    """
    if k == 0:
        return 1.0  # no pulses: control noise cannot act
    ff = control_ff(k, K, dt, robust=robust)
    chi = 0.0
    if psd_eps is not None:
        chi = overlap_integral(psd_eps, ff, omega_cutoff=math.pi / dt).chi
    angle = 0.0 if robust else 2.0 * math.pi * k * eps_mean
    return float(0.5 * (1.0 + math.exp(-chi) * math.cos(angle)))


# ---------------------------------------------------------------------------
# isotropic-noise depolarization
# ---------------------------------------------------------------------------


def isotropic_depolarization_p(
    c_eta: float,
    tau: float,
    dt_sample: float,
    n_traj: int = 2000,
    seed: int = 0,
) -> float:
    """Measured depolarizing probability under isotropic white axis noise.

    c_eta is the total isotropic correlation strength: each axis carries
    <eta_i(t) eta_i(t')> = (c_eta / 3) delta(t - t'), and H = eta . sigma.
    The trajectory-averaged Bloch contraction yields p, to be compared
    with the channel value 4 c_eta tau / 3.
    """
    m = max(1, int(round(tau / dt_sample)))
    step = tau / m
    # white PSD level S0 = C/2 reproduces <eta eta> = C delta(t) per axis
    from tnl.model import WhitePsd

    psd = WhitePsd(0.5 * c_eta / 3.0)
    axes = [
        sample_trajectory_batch(psd, 0.0, tau, step, seed + j, n_traj) for j in range(3)
    ]
    r = np.tile(np.eye(3), (n_traj, 1, 1))
    for i in range(m):
        theta = np.stack([axes[0][:, i], axes[1][:, i], axes[2][:, i]], axis=1) * step
        r = _rodrigues(2.0 * theta) @ r
    contraction = np.trace(r.mean(axis=0)) / 3.0
    return float(1.0 - contraction)


def _rodrigues(angles: np.ndarray) -> np.ndarray:
    """Batch rotation matrices for rotation vectors (n, 3)."""
    phi = np.linalg.norm(angles, axis=1)
    small = phi < 1e-12
    axis = angles / np.where(small, 1.0, phi)[:, None]
    c, s = np.cos(phi), np.sin(phi)
    n = angles.shape[0]
    kx, ky, kz = axis[:, 0], axis[:, 1], axis[:, 2]
    kmat = np.zeros((n, 3, 3))
    kmat[:, 0, 1], kmat[:, 0, 2] = -kz, ky
    kmat[:, 1, 0], kmat[:, 1, 2] = kz, -kx
    kmat[:, 2, 0], kmat[:, 2, 1] = -ky, kx
    eye = np.tile(np.eye(3), (n, 1, 1))
    out = eye + s[:, None, None] * kmat + (1.0 - c)[:, None, None] * (kmat @ kmat)
    out[small] = np.eye(3)
    return out
