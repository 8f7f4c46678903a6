"""Lindblad master-equation propagation.

Two lanes:

* a single-qubit Bloch-vector lane with the exact free-evolution solution,
  the first-order perturbative driven-gate solution, and exact segment
  exponentials of the 3x3 Bloch generator (circuits are piecewise-constant
  generators, so each segment is propagated by one matrix exponential);

* a general dense density-matrix lane that exponentiates the vectorized
  Lindbladian for n-body problems (data qubits + spectators + TLSs,
  cross-resonance dynamics).

Bloch conventions: rho = (I + v . sigma)/2, U = exp(-i theta sigma_mu / 2)
rotates v right-handedly about axis mu by theta.

Equilibrium convention: the free-evolution fixed point of v_z is 2q - 1,
i.e. the inhomogeneous Bloch term is c = (0, 0, gamma (2q - 1)).  The T1
circuit (X - idle - X - measure) then decays to a ground-state probability
of 1 - q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from tnl.model import DeviceModel, NoiseParams1Q, PairParams

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "BlochState",
    "DensityState",
    "identity_map",
    "x_gate_map",
    "x_gate_exact_map",
    "bloch_generator",
    "virtual_z_map",
    "propagate_identity",
    "propagate_x_gate",
    "gaussian_envelope_angles",
    "gaussian_gate_map",
    "propagate_gaussian_pulse",
    "compose_affine",
    "lindblad_superoperator",
    "propagate_general",
    "gad_dissipators",
    "build_cr_hamiltonian",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# lowering / raising in energy: |0> is the ground state
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def _cosc(x):
    # (1 - cos x)/x, smooth at 0
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    out = np.where(small, x / 2.0, (1.0 - np.cos(x)) / np.where(small, 1.0, x))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BlochState:
    """Single-qubit state as a Bloch vector."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).copy()
        if v.shape != (3,):
            raise ValueError("Bloch vector must have 3 components")
        if np.linalg.norm(v) > 1.0 + 1e-9:
            raise ValueError("Bloch vector lies outside the unit ball")
        object.__setattr__(self, "v", v)

    @staticmethod
    def ground() -> "BlochState":
        return BlochState(np.array([0.0, 0.0, 1.0]))

    def survival_probability(self, s_meas: float = 0.0) -> float:
        """Ground-state probability after the measurement bit-flip channel."""
        return 0.5 * (1.0 + (1.0 - 2.0 * s_meas) * self.v[2])


@dataclass(frozen=True)
class DensityState:
    """Dense multi-qubit density matrix (data qubits + spectators + TLSs)."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex).copy()
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("rho must be square")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def validate(self, tol_herm=1e-10, tol_trace=1e-10, tol_eig=1e-8) -> "DensityState":
        if np.linalg.norm(self.rho - self.rho.conj().T) > tol_herm:
            raise ValueError("rho is not Hermitian")
        if abs(np.trace(self.rho).real - 1.0) > tol_trace:
            raise ValueError("rho is not trace one")
        if np.linalg.eigvalsh(self.rho).min() < -tol_eig:
            raise ValueError("rho has a negative eigenvalue")
        return self

    @staticmethod
    def from_statevector(psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return DensityState(np.outer(psi, psi.conj()))


# ---------------------------------------------------------------------------
# Single-qubit Bloch maps
# ---------------------------------------------------------------------------


def identity_map(params: NoiseParams1Q, tau: float, beta: float | None = None):
    """Exact affine Bloch map (M, u) for free evolution of duration tau.

    The transverse block decays at alpha = gamma/2 + lambda while rotating
    at the detuning; v_z relaxes to 2q - 1 at rate gamma.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    b = params.beta_mean if beta is None else beta
    a = params.alpha
    ea = math.exp(-a * tau)
    eg = math.exp(-params.gamma * tau)
    cb, sb = math.cos(b * tau), math.sin(b * tau)
    m = np.array(
        [
            [ea * cb, -ea * sb, 0.0],
            [ea * sb, ea * cb, 0.0],
            [0.0, 0.0, eg],
        ]
    )
    u = np.array([0.0, 0.0, (1.0 - eg) * (2.0 * params.q_excited - 1.0)])
    return m, u


def x_gate_map(
    params: NoiseParams1Q,
    theta: float,
    dt: float,
    beta: float | None = None,
    eps: float | None = None,
):
    """First-order affine Bloch map (L, u) for a driven x-rotation.

    Perturbative solution about the ideal rotation, first order in the
    noise parameters.  Requires alpha != 0 and omega != 0.
    """
    if theta == 0.0:
        raise ValueError("theta = 0 breaks invertibility; use identity_map")
    b = params.beta_mean if beta is None else beta
    e = params.epsilon_mean if eps is None else eps
    omega = (1.0 + e) * theta / dt
    a = params.alpha
    mu = a + params.nu_ctrl
    eta = params.gamma + params.nu_ctrl
    tau = dt
    wt = omega * tau
    c, s = math.cos(wt), math.sin(wt)
    snc, csc = float(_sinc(wt)), float(_cosc(wt))
    edec = math.exp(-0.5 * (mu + eta) * tau)
    dd = 0.5 * (mu - eta) * tau
    ll = np.array(
        [
            [math.exp(-a * tau), -b * tau * snc, b * tau * csc],
            [b * tau * snc, edec * c - dd * snc, -edec * s],
            [b * tau * csc, edec * s, edec * c + dd * snc],
        ]
    )
    u = params.gamma * tau * (2.0 * params.q_excited - 1.0) * np.array([0.0, -csc, snc])
    return ll, u


def bloch_generator(
    params: NoiseParams1Q,
    theta: float,
    dt: float,
    beta: float | None = None,
    eps: float | None = None,
):
    """Bloch generator (G, c) of dv/dt = G v + c for one constant segment.

    theta = 0 denotes free evolution, for which the control bit-flip rate
    nu is inactive.
    """
    b = params.beta_mean if beta is None else beta
    e = params.epsilon_mean if eps is None else eps
    driven = theta != 0.0
    omega = (1.0 + e) * theta / dt if driven else 0.0
    nu = params.nu_ctrl if driven else 0.0
    a = params.alpha
    g = np.array(
        [
            [-a, -b, 0.0],
            [b, -(a + nu), -omega],
            [0.0, omega, -(params.gamma + nu)],
        ]
    )
    c = np.array([0.0, 0.0, params.gamma * (2.0 * params.q_excited - 1.0)])
    return g, c


def _affine_from_generator(g: np.ndarray, c: np.ndarray, tau: float):
    # Augmented exponential: exp(tau [[G, c], [0, 0]]) = [[M, u], [0, 1]],
    # valid even when G is singular.
    w = np.zeros((4, 4))
    w[:3, :3] = g
    w[:3, 3] = c
    ew = expm(w * tau)
    return ew[:3, :3], ew[:3, 3]


def x_gate_exact_map(
    params: NoiseParams1Q,
    theta: float,
    dt: float,
    beta: float | None = None,
    eps: float | None = None,
):
    """Exact affine Bloch map for one driven segment via the 3x3 exponential."""
    g, c = bloch_generator(params, theta, dt, beta=beta, eps=eps)
    return _affine_from_generator(g, c, dt)


def virtual_z_map(angle: float) -> np.ndarray:
    """Instantaneous, noiseless frame rotation about z by `angle`."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def propagate_identity(state: BlochState, params: NoiseParams1Q, tau: float) -> BlochState:
    m, u = identity_map(params, tau)
    return BlochState(m @ state.v + u)


def propagate_x_gate(state: BlochState, params: NoiseParams1Q, theta: float, dt: float) -> BlochState:
    ll, u = x_gate_map(params, theta, dt)
    return BlochState(ll @ state.v + u)


def compose_affine(maps):
    """Compose affine maps applied left to right: maps[0] acts first."""
    m = np.eye(3)
    u = np.zeros(3)
    for mi, ui in maps:
        m = mi @ m
        u = mi @ u + ui
    return m, u


# ---------------------------------------------------------------------------
# Gaussian pulse envelope
# ---------------------------------------------------------------------------


def gaussian_envelope_angles(theta: float, dt: float, n_steps: int = 160) -> np.ndarray:
    """Per-step rotation angles for a Gaussian pulse of total angle theta.

    Envelope A exp(-(t - dt/2)^2 / 2 sigma^2) + B with sigma = dt/4 and B
    chosen so the pulse starts and ends at zero.  The discrete angles are
    normalized so they sum exactly to theta.
    """
    if n_steps < 16:
        raise ValueError("n_steps must be at least 16")
    sigma = dt / 4.0
    t = (np.arange(n_steps) + 0.5) * dt / n_steps
    env = np.exp(-((t - dt / 2.0) ** 2) / (2.0 * sigma**2)) - math.exp(-2.0)
    angles = env * (dt / n_steps)
    return angles * (theta / angles.sum())


def gaussian_gate_map(
    params: NoiseParams1Q,
    theta: float,
    dt: float,
    n_steps: int = 160,
    beta: float | None = None,
    eps: float | None = None,
    exact: bool = False,
):
    """Affine Bloch map of a Gaussian-envelope gate, Trotterized in n_steps."""
    angles = gaussian_envelope_angles(theta, dt, n_steps)
    sub = dt / n_steps
    maker = x_gate_exact_map if exact else x_gate_map
    maps = [maker(params, th, sub, beta=beta, eps=eps) for th in angles]
    return compose_affine(maps)


def propagate_gaussian_pulse(
    state: BlochState,
    params: NoiseParams1Q,
    theta: float,
    dt: float,
    n_steps: int = 160,
) -> BlochState:
    m, u = gaussian_gate_map(params, theta, dt, n_steps)
    return BlochState(m @ state.v + u)


# ---------------------------------------------------------------------------
# General density-matrix lane
# ---------------------------------------------------------------------------


def lindblad_superoperator(hamiltonian: np.ndarray, dissipators) -> np.ndarray:
    """Vectorized Lindbladian under row-major vec(rho) = rho.ravel().

    dissipators is an iterable of (rate, jump_operator) with rate >= 0.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    d = h.shape[0]
    if h.shape != (d, d):
        raise ValueError("hamiltonian must be square")
    if np.linalg.norm(h - h.conj().T) > 1e-9 * max(1.0, np.linalg.norm(h)):
        raise ValueError("hamiltonian must be Hermitian")
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, op in dissipators:
        if rate < 0:
            raise ValueError("dissipator rates must be nonnegative")
        if rate == 0.0:
            continue
        op = np.asarray(op, dtype=complex)
        if op.shape != (d, d):
            raise ValueError("jump operator dimension mismatch")
        opd_op = op.conj().T @ op
        sup += rate * (
            np.kron(op, op.conj())
            - 0.5 * (np.kron(opd_op, eye) + np.kron(eye, opd_op.T))
        )
    return sup


def propagate_general(
    state: DensityState,
    hamiltonian: np.ndarray,
    dissipators,
    tau: float,
    steps: int = 1,
) -> DensityState:
    """Propagate rho through one piecewise-constant Lindblad segment.

    The segment exponential is exact; `steps` subdivides it only for
    callers that sweep time-dependent envelopes by re-invoking per step.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if tau == 0.0:
        return state
    d = state.dim
    if np.asarray(hamiltonian).shape != (d, d):
        raise ValueError("hamiltonian dimension mismatch with state")
    sup = lindblad_superoperator(hamiltonian, dissipators)
    prop = expm(sup * (tau / steps))
    vec = state.rho.ravel()
    for _ in range(steps):
        vec = prop @ vec
    rho = vec.reshape(d, d)
    # re-hermitize against roundoff drift
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return DensityState(rho)


def gad_dissipators(params: NoiseParams1Q):
    """GAD jump operators: decay |1>->|0> at q*gamma, excitation at (1-q)*gamma.

    Detailed balance pins the excited-state population at 1 - q, matching
    the Bloch fixed point v_z = 2q - 1.
    """
    return [
        (params.q_excited * params.gamma, SIGMA_MINUS),
        ((1.0 - params.q_excited) * params.gamma, SIGMA_PLUS),
    ]


def build_cr_hamiltonian(pair: PairParams, device: DeviceModel) -> np.ndarray:
    """Effective ECR Hamiltonian on (control, target), 4x4.

    (1 + eps_zx) * pi/(4 tau_cr) * Z.X  +  beta_t/2 * I.Z
    + zeta/2 * I.X  +  J/2 * Z.Z
    """
    wzx = (1.0 + pair.epsilon_zx) * math.pi / (4.0 * device.tau_cr)
    eye = np.eye(2, dtype=complex)
    h = wzx * np.kron(SIGMA_Z, SIGMA_X)
    h += 0.5 * pair.beta_target * np.kron(eye, SIGMA_Z)
    h += 0.5 * pair.zeta_x * np.kron(eye, SIGMA_X)
    h += 0.5 * pair.j_zz * np.kron(SIGMA_Z, SIGMA_Z)
    return h
