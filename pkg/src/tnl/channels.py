"""Composite Kraus-channel approximation of the noise model.

Each gate slot is propagated by an ideal control map followed by a chain
of independently acting noise channels, in the fixed order

    GAD -> dephasing -> control -> ZZ,

with the measurement bit-flip channel last before readout.  Dephasing and
control channels reduce the stochastic processes to a drift unitary plus a
Pauli-mixing Kraus pair whose coherence factor is exp(-chi); the decay
exponents combine a DC delta weight through the slot's zero-frequency
filter value with a white floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from tnl import lme
from tnl.lme import SIGMA_X, SIGMA_Z, DensityState, build_cr_hamiltonian
from tnl.model import DeviceModel, PairParams, PsdModel, decompose_dc_white
from tnl.runner import MeasurementResult, _readout, _Space
from tnl.sequences import Ecr, Idle, Measure, PulseSequence, VirtualZ, XRot

__all__ = [
    "KrausChannel",
    "ChannelStep",
    "ChannelProgram",
    "gad_channel",
    "dephasing_channel",
    "control_channel",
    "bitflip_channel",
    "zz_unitary",
    "cr_channel",
    "measurement_channel",
    "run_channel_program",
    "run_channels",
    "channel_lme_trace_distances",
    "trace_distance",
]


@dataclass(frozen=True)
class KrausChannel:
    """Operator-sum map on one or two sites, completeness-checked."""

    operators: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(e, dtype=complex) for e in self.operators)
        object.__setattr__(self, "operators", ops)
        d = ops[0].shape[0]
        total = sum(e.conj().T @ e for e in ops)
        if np.linalg.norm(total - np.eye(d)) > 1e-10:
            raise ValueError(f"channel {self.label!r} is not trace preserving")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class ChannelStep:
    """One program entry: a Kraus channel or a unitary on target sites."""

    payload: object  # KrausChannel or ndarray unitary
    sites: tuple
    label: str = ""


@dataclass(frozen=True)
class ChannelProgram:
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __add__(self, other: "ChannelProgram") -> "ChannelProgram":
        return ChannelProgram(self.steps + other.steps)


# ---------------------------------------------------------------------------
# channel constructors
# ---------------------------------------------------------------------------


def gad_channel(gamma: float, q: float, tau: float, label: str = "gad") -> KrausChannel:
    """Generalized amplitude damping with jump probability 1 - e^{-gamma tau}.

    Equilibrium excited-state population is 1 - q, matching the Bloch
    fixed point v_z = 2q - 1; q = 1 damps to |0><0|.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    p_gamma = 1.0 - math.exp(-gamma * tau)
    sq, s1q = math.sqrt(q), math.sqrt(1.0 - q)
    r = math.sqrt(1.0 - p_gamma)
    e0 = sq * np.array([[1.0, 0.0], [0.0, r]])
    e1 = math.sqrt(p_gamma) * sq * np.array([[0.0, 1.0], [0.0, 0.0]])
    e2 = s1q * np.array([[r, 0.0], [0.0, 1.0]])
    e3 = math.sqrt(p_gamma) * s1q * np.array([[0.0, 0.0], [1.0, 0.0]])
    return KrausChannel((e0, e1, e2, e3), label)


def _pauli_mix_pair(chi: float, pauli: np.ndarray, label: str) -> KrausChannel:
    # (1 - p) rho + p P rho P with 1 - 2p = e^{-chi}: coherences scale e^{-chi}
    p = 0.5 * (1.0 - math.exp(-max(chi, 0.0)))
    return KrausChannel(
        (math.sqrt(1.0 - p) * np.eye(2), math.sqrt(p) * pauli), label
    )


def _chi_from_psd(psd: PsdModel | None, ff_zero: float, white_scale: float) -> float:
    """Gamma F(0, tau)/pi plus the white-floor contribution.

    white_scale converts a flat density S0 into chi (tau for dephasing,
    the squared pulse area over 4 tau for amplitude noise).
    """
    gamma_dc, s_white = decompose_dc_white(psd)
    return gamma_dc * ff_zero / math.pi + s_white * white_scale


def dephasing_channel(
    psd_beta: PsdModel | None,
    beta_mean: float,
    ff_zero: float,
    tau: float,
    lambda_phi: float = 0.0,
) -> ChannelProgram:
    """Drift U = e^{-i beta tau Z/2} plus a Z-mixing pair with 1-2p = e^{-chi}.

    chi = Gamma_beta F(0, tau)/pi + S_u tau + lambda tau; ff_zero is the
    zero-frequency value of the slot's dephasing filter function.
    """
    u = expm(-0.5j * beta_mean * tau * SIGMA_Z)
    chi = lambda_phi * tau + _chi_from_psd(psd_beta, ff_zero, white_scale=tau)
    return ChannelProgram(
        (
            ChannelStep(u, (0,), "dephasing-drift"),
            ChannelStep(_pauli_mix_pair(chi, SIGMA_Z, "dephasing"), (0,), "dephasing"),
        )
    )


def control_channel(
    psd_eps: PsdModel | None,
    eps_mean: float,
    ff_zero: float,
    tau: float,
    theta: float = math.pi,
) -> ChannelProgram:
    """Over-rotation drift U = e^{-i theta eps/2 X} plus an X-mixing pair.

    Applied only to driven slots; theta is the slot's intended rotation
    angle (pi for an X gate).  The white control floor enters through the
    squared pulse area theta^2 / (4 tau).
    """
    u = expm(-0.5j * theta * eps_mean * SIGMA_X)
    chi = _chi_from_psd(psd_eps, ff_zero, white_scale=theta**2 / (4.0 * tau))
    return ChannelProgram(
        (
            ChannelStep(u, (0,), "control-drift"),
            ChannelStep(_pauli_mix_pair(chi, SIGMA_X, "control"), (0,), "control"),
        )
    )


def bitflip_channel(rate: float, tau: float, label: str = "ctrl-bitflip") -> KrausChannel:
    """White control dissipation: X-mixing with 1 - 2p = e^{-rate tau}."""
    return _pauli_mix_pair(rate * tau, SIGMA_X, label)


_PAULIS = (np.eye(2, dtype=complex), SIGMA_X, np.array([[0, -1j], [1j, 0]]), SIGMA_Z)


def channel_from_affine(m: np.ndarray, u: np.ndarray, label: str = "affine") -> KrausChannel:
    """Kraus form of the qubit channel with Bloch action v -> M v + u.

    Built through the Choi matrix; tiny negative Choi eigenvalues from
    first-order truncation are clipped and trace preservation restored.
    """
    t = np.zeros((4, 4))
    t[0, 0] = 1.0
    t[1:, 0] = u
    t[1:, 1:] = m
    # Choi = (1/4) sum_ab T_ab (sigma_b^T kron sigma_a), column-stacking vec
    choi = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            if t[a, b] != 0.0:
                choi += 0.5 * t[a, b] * np.kron(_PAULIS[b].T, _PAULIS[a])
    vals, vecs = np.linalg.eigh(choi)
    if vals.min() < -1e-6:
        raise ValueError(f"affine map {label!r} is not completely positive")
    ops = []
    for lam, v in zip(vals, vecs.T):
        if lam > 1e-14:
            ops.append(math.sqrt(lam) * v.reshape(2, 2, order="F"))
    total = sum(e.conj().T @ e for e in ops)
    # restore exact trace preservation after clipping
    w = np.linalg.inv(_sqrtm_psd(total))
    ops = [e @ w for e in ops]
    return KrausChannel(tuple(ops), label)


def _sqrtm_psd(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(a)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def driven_slot_noise_channel(params, theta: float, tau: float, label: str = "driven-noise") -> KrausChannel:
    """Exact first-order incoherent map of one driven slot.

    Transverse rate alpha on x, driven-plane rates (mu + eta)/2 -+ the
    sinc asymmetry on y/z, and the relaxation pump rotated into the
    toggling frame: u = gamma tau (2q-1) (0, -cosc, sinc).
    """
    a = params.alpha
    mu = a + params.nu_ctrl
    eta = params.gamma + params.nu_ctrl
    wt = abs(theta)
    snc = math.sin(wt) / wt if wt else 1.0
    csc = (1.0 - math.cos(wt)) / wt if wt else 0.0
    edec = math.exp(-0.5 * (mu + eta) * tau)
    dd = 0.5 * (mu - eta) * tau
    m = np.diag([math.exp(-a * tau), edec - dd * snc, edec + dd * snc])
    pump = params.gamma * tau * (2.0 * params.q_excited - 1.0)
    u = np.array([0.0, -pump * csc, pump * snc])
    return channel_from_affine(m, u, label)


def zz_unitary(device: DeviceModel, space: _Space, tau: float, skip_pair=None) -> np.ndarray:
    """Diagonal unitary from the crosstalk and TLS Hamiltonians over tau."""
    dim = 2**space.nsites
    diag = np.zeros(dim)
    known = set(space.register) | set(space.spectators)
    for (qa, qb), pp in device.couplings:
        if {qa, qb} == set(skip_pair or ()):
            continue
        if qa in known and qb in known and pp.j_zz != 0.0:
            za = np.real(np.diag(space.op("z", qa)))
            zb = np.real(np.diag(space.op("z", qb)))
            diag += 0.5 * pp.j_zz * za * zb
    for i, (owner, xi) in enumerate(space.tls):
        za = np.real(np.diag(space.op("z", owner)))
        zt = np.real(np.diag(space.op("z", f"tls{i}")))
        diag += 0.5 * xi * za * zt
    return np.diag(np.exp(-1j * diag * tau))


def cr_channel(
    pair: PairParams,
    device: DeviceModel,
    control: str | None = None,
    target: str | None = None,
) -> ChannelProgram:
    """ECR block: U_CR = exp(-i H_CR tau_cr) then local noise on both qubits.

    Single-qubit GAD and dephasing act on control (site 0) and target
    (site 1) for tau_cr; the target is driven through the ZX term, so its
    control bit-flip rate applies too.  No two-qubit dissipators.
    """
    if control is None or target is None:
        for (qa, qb), pp in device.couplings:
            if pp is pair or pp == pair:
                control, target = qa, qb
                break
        else:
            raise ValueError("pair is not registered in the device")
    tau = device.tau_cr
    u = expm(-1j * build_cr_hamiltonian(pair, device) * tau)
    steps = [ChannelStep(u, (0, 1), "cr-unitary")]
    for site, q in ((0, control), (1, target)):
        p = device.params(q)
        steps.append(ChannelStep(gad_channel(p.gamma, p.q_excited, tau), (site,), "gad"))
        # the pair's own detuning lives inside H_CR; only the incoherent part here
        ff0 = _slot_ff_zero_dephasing(0.5 * math.pi if site == 1 else None, tau)
        for st in dephasing_channel(p.psd_beta, 0.0, ff0, tau, p.lambda_phi).steps:
            steps.append(ChannelStep(st.payload, (site,), st.label))
    p_t = device.params(target)
    if p_t.nu_ctrl > 0.0:
        steps.append(ChannelStep(bitflip_channel(p_t.nu_ctrl, tau), (1,), "ctrl-bitflip"))
    return ChannelProgram(tuple(steps))


def measurement_channel(s_list) -> ChannelProgram:
    """Per-qubit measurement bit-flip maps composed in qubit order."""
    steps = []
    for j, s in enumerate(s_list):
        if not 0.0 <= s <= 1.0:
            raise ValueError("measurement error probability must lie in [0, 1]")
        ch = KrausChannel(
            (math.sqrt(1.0 - s) * np.eye(2), math.sqrt(s) * SIGMA_X), f"meas-flip-q{j}"
        )
        steps.append(ChannelStep(ch, (j,), f"meas-flip-q{j}"))
    return ChannelProgram(tuple(steps))


# ---------------------------------------------------------------------------
# program execution
# ---------------------------------------------------------------------------


def _embed_1q(op: np.ndarray, site: int, nsites: int) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for j in range(nsites):
        out = np.kron(out, op if j == site else np.eye(2, dtype=complex))
    return out


def _embed_op(op: np.ndarray, sites, nsites: int) -> np.ndarray:
    if len(sites) == 1:
        return _embed_1q(op, sites[0], nsites)
    if len(sites) == 2:
        from tnl.runner import _embed_two

        return _embed_two(op, sites[0], sites[1], nsites)
    raise ValueError("channels act on one or two sites")


def run_channel_program(
    program: ChannelProgram,
    initial: DensityState,
    nsites: int | None = None,
) -> DensityState:
    """Apply the program steps in order to a density matrix."""
    rho = initial.rho
    dim = rho.shape[0]
    if nsites is None:
        nsites = int(round(math.log2(dim)))
    if 2**nsites != dim:
        raise ValueError("state dimension is not a power of two")
    for step in program.steps:
        if isinstance(step.payload, KrausChannel):
            full_ops = [
                _embed_op(e, step.sites, nsites) for e in step.payload.operators
            ]
            rho = sum(e @ rho @ e.conj().T for e in full_ops)
        else:
            u = np.asarray(step.payload, dtype=complex)
            if u.shape[0] != dim:
                u = _embed_op(u, step.sites, nsites)
            rho = u @ rho @ u.conj().T
    return DensityState(0.5 * (rho + rho.conj().T))


# ---------------------------------------------------------------------------
# circuit-level channel engine
# ---------------------------------------------------------------------------


def _slot_ff_zero_dephasing(theta: float | None, tau: float) -> float:
    """F_beta(0, tau) of one slot: |integral of cos Theta(t)|^2.

    Free evolution gives tau^2; a square pulse of angle theta gives
    (tau sin(theta)/theta)^2.
    """
    if theta is None or theta == 0.0:
        return tau * tau
    return (tau * math.sin(theta) / theta) ** 2


def _slot_drift_dephasing(beta: float, theta: float | None, tau: float) -> np.ndarray:
    """Static-detuning drift of one slot, noise-after-control ordering.

    Idle slots give the plain e^{-i beta tau Z/2}; driven square-pulse
    slots carry the first-order toggling weights, sinc(theta) on Z and
    -cosc(theta) on Y.
    """
    if theta is None or theta == 0.0:
        return expm(-0.5j * beta * tau * SIGMA_Z)
    snc = math.sin(theta) / theta
    csc = (1.0 - math.cos(theta)) / theta
    gen = snc * SIGMA_Z - csc * np.array([[0.0, -1.0j], [1.0j, 0.0]])
    return expm(-0.5j * beta * tau * gen)


def _moment_program(moment, space: _Space, device: DeviceModel) -> ChannelProgram:
    dt = device.dt_gate
    tau = moment.duration(dt, device.tau_cr)
    steps = []
    driven: dict = {}  # qubit -> ("x", angle) | ("ecr", None)
    skip_pair = None
    # ideal control first
    for op in moment.ops:
        if isinstance(op, XRot):
            u = expm(-0.5j * op.angle * SIGMA_X)
            steps.append(ChannelStep(u, (space.index[op.qubit],), "xrot"))
            driven[op.qubit] = ("x", op.angle)
        elif isinstance(op, Ecr):
            pair = device.coupling(op.control, op.target)
            if pair is None:
                raise ValueError(f"no coupling declared for {(op.control, op.target)}")
            u = expm(-1j * build_cr_hamiltonian(pair, device) * device.tau_cr)
            steps.append(
                ChannelStep(u, (space.index[op.control], space.index[op.target]), "ecr")
            )
            skip_pair = (op.control, op.target)
            driven[op.target] = ("ecr", None)
    # noise channels per register qubit: GAD -> dephasing -> control
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    for q in space.register:
        p = device.params(q)
        site = (space.index[q],)
        kind, theta = driven.get(q, (None, None))
        beta = 0.0 if skip_pair and q in skip_pair else p.beta_mean
        theta_eff = 0.5 * math.pi if kind == "ecr" else theta
        ff0 = _slot_ff_zero_dephasing(theta_eff, tau)
        if beta != 0.0:
            steps.append(
                ChannelStep(_slot_drift_dephasing(beta, theta_eff, tau), site, "dephasing-drift")
            )
        chi_psd = _chi_from_psd(p.psd_beta, ff0, white_scale=tau)
        if kind == "x":
            # faithful one-slot reduction of relaxation, dephasing and
            # control dissipation under the drive, pump included
            steps.append(
                ChannelStep(driven_slot_noise_channel(p, theta, tau), site, "driven-noise")
            )
            if chi_psd > 0.0:
                steps.append(ChannelStep(_pauli_mix_pair(0.5 * chi_psd, SIGMA_Z, "dephasing"), site, "dephasing"))
                steps.append(ChannelStep(_pauli_mix_pair(0.5 * chi_psd, sy, "dephasing-y"), site, "dephasing-y"))
            ctrl = control_channel(p.psd_epsilon, p.epsilon_mean, (theta / 2.0) ** 2, tau, theta)
            for st in ctrl.steps:
                steps.append(ChannelStep(st.payload, site, st.label))
        else:
            steps.append(ChannelStep(gad_channel(p.gamma, p.q_excited, tau), site, "gad"))
            chi = p.lambda_phi * tau + chi_psd
            if kind is None:
                steps.append(ChannelStep(_pauli_mix_pair(chi, SIGMA_Z, "dephasing"), site, "dephasing"))
            else:
                # the ECR drive precesses the target's dephasing operator;
                # its own over-rotation eps_zx lives inside H_CR
                steps.append(ChannelStep(_pauli_mix_pair(0.5 * chi, SIGMA_Z, "dephasing"), site, "dephasing"))
                steps.append(ChannelStep(_pauli_mix_pair(0.5 * chi, sy, "dephasing-y"), site, "dephasing-y"))
                if p.nu_ctrl > 0.0:
                    steps.append(ChannelStep(bitflip_channel(p.nu_ctrl, tau), site, "ctrl-bitflip"))
    # ZZ couplings and TLS phases, exact
    uzz = zz_unitary(device, space, tau, skip_pair=skip_pair)
    if not np.allclose(np.diag(uzz), 1.0):
        steps.append(ChannelStep(uzz, tuple(range(space.nsites)), "zz"))
    return ChannelProgram(tuple(steps))


def run_channels(seq: PulseSequence, device: DeviceModel) -> MeasurementResult:
    """Propagate a sequence through the composite channel engine."""
    res = _run_channels_states(seq, device, collect=False)
    return res


def _run_channels_states(seq: PulseSequence, device: DeviceModel, collect: bool):
    space = _Space(seq, device)
    rho = space.initial_state()
    states = []
    measured = []
    for moment in seq.moments:
        dur = moment.duration(device.dt_gate, device.tau_cr)
        if dur == 0.0:
            for op in moment.ops:
                if isinstance(op, VirtualZ):
                    u = expm(-0.5j * op.angle * space.op("z", op.qubit))
                    rho = u @ rho @ u.conj().T
                elif isinstance(op, Measure):
                    measured.append(op.qubit)
            continue
        for op in moment.ops:
            if isinstance(op, XRot) and op.envelope != "square":
                raise ValueError("channel engine supports square-pulse slots only")
        prog = _moment_program(moment, space, device)
        rho = run_channel_program(prog, DensityState(rho), space.nsites).rho
        if collect:
            states.append(rho.copy())
    if not measured:
        if collect:
            return states
        raise ValueError("sequence has no measurement")
    prog = ChannelProgram(
        tuple(
            ChannelStep(
                KrausChannel(
                    (
                        math.sqrt(1.0 - device.params(q).s_meas) * np.eye(2),
                        math.sqrt(device.params(q).s_meas) * SIGMA_X,
                    ),
                    "meas",
                ),
                (space.index[q],),
                "meas",
            )
            for q in measured
        )
    )
    rho = run_channel_program(prog, DensityState(rho), space.nsites).rho
    if collect:
        return states
    return MeasurementResult(tuple(measured), _readout(rho, space, measured))


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """T = (1/2) ||rho_a - rho_b||_1."""
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho_a - rho_b)).sum())


def channel_lme_trace_distances(seq: PulseSequence, device: DeviceModel) -> np.ndarray:
    """Trace distance between channel and LME states after every timed slot."""
    from tnl.runner import _moment_generator

    space = _Space(seq, device)
    rho_ch = space.initial_state()
    rho_lm = rho_ch.copy()
    cache = {}
    out = []
    for moment in seq.moments:
        dur = moment.duration(device.dt_gate, device.tau_cr)
        if dur == 0.0:
            for op in moment.ops:
                if isinstance(op, VirtualZ):
                    u = expm(-0.5j * op.angle * space.op("z", op.qubit))
                    rho_ch = u @ rho_ch @ u.conj().T
                    rho_lm = u @ rho_lm @ u.conj().T
            continue
        prog = _moment_program(moment, space, device)
        rho_ch = run_channel_program(prog, DensityState(rho_ch), space.nsites).rho
        key = (moment.ops, round(dur, 12))
        if key not in cache:
            h, diss, _ = _moment_generator(moment, space, device, seq)
            cache[key] = expm(lme.lindblad_superoperator(h, diss) * dur)
        dim = rho_lm.shape[0]
        rho_lm = (cache[key] @ rho_lm.ravel()).reshape(dim, dim)
        rho_lm = 0.5 * (rho_lm + rho_lm.conj().T)
        out.append(trace_distance(rho_ch, rho_lm))
    return np.asarray(out)
