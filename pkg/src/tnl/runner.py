"""Executes pulse sequences on the model engines.

Three lanes share the same moment walk:

* ``run_bloch``: exact single-qubit Bloch propagation (one matrix
  exponential per distinct segment, cached);
* ``run_bloch_trajectories``: the same walk vectorized over stochastic
  noise trajectories, with exact idle maps and first-order gate maps;
* ``run_density``: dense multi-qubit Lindblad propagation covering
  spectator qubits, TLSs, ZZ couplings and ECR blocks.

Spectator qubits carry no local noise and no dissipation; TLSs start in
|+> and couple through (xi/2) Z.Z terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from tnl import lme
from tnl.lme import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    build_cr_hamiltonian,
)
from tnl.model import DeviceModel, effective_detuning
from tnl.sequences import Ecr, Idle, Measure, Moment, PulseSequence, VirtualZ, XRot

__all__ = [
    "MeasurementResult",
    "run_bloch",
    "run_bloch_trajectories",
    "trajectory_sample_count",
    "run_density",
]


@dataclass(frozen=True)
class MeasurementResult:
    """Readout distribution over the measured qubits, SPAM included."""

    measured: tuple
    bit_probs: dict

    @property
    def survival(self) -> float:
        return self.bit_probs.get("0" * len(self.measured), 0.0)

    def expectation(self, qubits=None) -> float:
        """Parity expectation over `qubits` (default: all measured)."""
        sel = self.measured if qubits is None else tuple(qubits)
        idx = [self.measured.index(q) for q in sel]
        out = 0.0
        for bits, p in self.bit_probs.items():
            sign = (-1) ** sum(int(bits[i]) for i in idx)
            out += sign * p
        return out


# ---------------------------------------------------------------------------
# exact single-qubit Bloch lane
# ---------------------------------------------------------------------------


def run_bloch(seq: PulseSequence, device: DeviceModel, qubit: str | None = None) -> MeasurementResult:
    """Propagate a single-qubit sequence with exact segment exponentials.

    Couplings to idle neighbors enter as the effective detuning; a TLS
    attachment requires the density lane and raises here.
    """
    if qubit is None:
        if len(seq.register) != 1:
            raise ValueError("run_bloch handles single-qubit sequences")
        qubit = seq.register[0]
    params = device.params(qubit)
    if device.tls_couplings(qubit):
        raise ValueError("qubit has TLS attachments; use run_density")
    beta = effective_detuning(qubit, device)
    dt = device.dt_gate
    cache: dict = {}
    v = np.array([0.0, 0.0, 1.0])
    for moment in seq.moments:
        for op in moment.ops:
            if isinstance(op, Ecr):
                raise ValueError("ECR requires the density lane")
            if op.qubit != qubit:
                continue
            if isinstance(op, Idle):
                m, u = lme.identity_map(params, op.duration, beta=beta)
                v = m @ v + u
            elif isinstance(op, VirtualZ):
                v = lme.virtual_z_map(op.angle) @ v
            elif isinstance(op, XRot):
                key = (op.angle, op.envelope)
                if key not in cache:
                    if op.envelope == "gaussian":
                        cache[key] = lme.gaussian_gate_map(
                            params, op.angle, dt, beta=beta, exact=True
                        )
                    else:
                        cache[key] = lme.x_gate_exact_map(params, op.angle, dt, beta=beta)
                m, u = cache[key]
                v = m @ v + u
            elif isinstance(op, Measure):
                p0 = 0.5 * (1.0 + (1.0 - 2.0 * params.s_meas) * v[2])
                p0 = min(1.0, max(0.0, p0))
                return MeasurementResult((qubit,), {"0": p0, "1": 1.0 - p0})
    raise ValueError("sequence has no measurement")


# ---------------------------------------------------------------------------
# vectorized trajectory lane
# ---------------------------------------------------------------------------


def _timed_segments(seq: PulseSequence, qubit: str):
    """(kind, op, duration, n_samples) per timed moment, sampled at dt_gate."""
    dt = seq.dt_gate
    segs = []
    for moment in seq.moments:
        dur = moment.duration(dt, seq.tau_cr)
        op_q = next((op for op in moment.ops if getattr(op, "qubit", None) == qubit), None)
        if dur == 0.0:
            if isinstance(op_q, VirtualZ):
                segs.append(("vz", op_q, 0.0, 0))
            elif isinstance(op_q, Measure):
                segs.append(("measure", op_q, 0.0, 0))
            continue
        n = max(1, int(round(dur / dt)))
        if isinstance(op_q, XRot):
            segs.append(("gate", op_q, dur, n))
        else:
            segs.append(("idle", op_q, dur, n))
    return segs


def trajectory_sample_count(seq: PulseSequence, qubit: str | None = None) -> int:
    """Number of dt-sized noise samples a trajectory must supply."""
    qubit = qubit or seq.register[0]
    return sum(n for _, _, _, n in _timed_segments(seq, qubit))


def _x_gate_map_vec(params, theta, dt, beta, eps):
    """Vectorized first-order gate map over trajectory arrays beta, eps."""
    omega = (1.0 + eps) * theta / dt
    a = params.alpha
    mu = a + params.nu_ctrl
    eta = params.gamma + params.nu_ctrl
    wt = omega * dt
    c, s = np.cos(wt), np.sin(wt)
    snc = np.sinc(wt / np.pi)
    csc = np.where(np.abs(wt) < 1e-8, wt / 2.0, (1.0 - c) / np.where(np.abs(wt) < 1e-8, 1.0, wt))
    ea = math.exp(-a * dt)
    edec = math.exp(-0.5 * (mu + eta) * dt)
    dd = 0.5 * (mu - eta) * dt
    n = beta.shape[0]
    ll = np.empty((n, 3, 3))
    ll[:, 0, 0] = ea
    ll[:, 0, 1] = -beta * dt * snc
    ll[:, 0, 2] = beta * dt * csc
    ll[:, 1, 0] = beta * dt * snc
    ll[:, 1, 1] = edec * c - dd * snc
    ll[:, 1, 2] = -edec * s
    ll[:, 2, 0] = beta * dt * csc
    ll[:, 2, 1] = edec * s
    ll[:, 2, 2] = edec * c + dd * snc
    u = np.zeros((n, 3))
    pump = params.gamma * dt * (2.0 * params.q_excited - 1.0)
    u[:, 1] = -pump * csc
    u[:, 2] = pump * snc
    return ll, u


def run_bloch_trajectories(
    seq: PulseSequence,
    device: DeviceModel,
    qubit: str | None = None,
    beta_samples: np.ndarray | None = None,
    eps_samples: np.ndarray | None = None,
    n_traj: int | None = None,
) -> np.ndarray:
    """Survival probabilities, one per trajectory.

    beta_samples / eps_samples have shape (n_traj, n_samples) and hold the
    stochastic deviations from the process means; the static means come
    from the device parameters.  Idle stretches are composed exactly from
    the piecewise-constant samples; gates use the first-order map.
    """
    qubit = qubit or seq.register[0]
    params = device.params(qubit)
    beta0 = effective_detuning(qubit, device)
    dt = seq.dt_gate
    segs = _timed_segments(seq, qubit)
    total = sum(n for _, _, _, n in segs)
    if n_traj is None:
        for arr in (beta_samples, eps_samples):
            if arr is not None:
                n_traj = arr.shape[0]
                break
        else:
            raise ValueError("supply n_traj or at least one sample array")
    zeros = np.zeros((n_traj, total))
    b = zeros if beta_samples is None else np.asarray(beta_samples)
    e = zeros if eps_samples is None else np.asarray(eps_samples)
    if b.shape[1] < total or e.shape[1] < total:
        raise ValueError(f"trajectories provide fewer than {total} samples")

    v = np.tile(np.array([0.0, 0.0, 1.0]), (n_traj, 1))
    cursor = 0
    a = params.alpha
    for kind, op, dur, n in segs:
        if kind == "vz":
            v = v @ lme.virtual_z_map(op.angle).T
        elif kind == "measure":
            p0 = 0.5 * (1.0 + (1.0 - 2.0 * params.s_meas) * v[:, 2])
            return np.clip(p0, 0.0, 1.0)
        elif kind == "idle":
            step = dur / n
            phase = (beta0 + b[:, cursor : cursor + n]).sum(axis=1) * step
            cursor += n
            ea, eg = math.exp(-a * dur), math.exp(-params.gamma * dur)
            cph, sph = np.cos(phase), np.sin(phase)
            x = ea * (cph * v[:, 0] - sph * v[:, 1])
            y = ea * (sph * v[:, 0] + cph * v[:, 1])
            z = eg * v[:, 2] + (1.0 - eg) * (2.0 * params.q_excited - 1.0)
            v = np.stack([x, y, z], axis=1)
        else:  # gate
            step = dur / n
            theta_step = op.angle / n
            for j in range(n):
                ll, u = _x_gate_map_vec(
                    params,
                    theta_step,
                    step,
                    beta0 + b[:, cursor],
                    params.epsilon_mean + e[:, cursor],
                )
                v = np.einsum("nij,nj->ni", ll, v) + u
                cursor += 1
    raise ValueError("sequence has no measurement")


# ---------------------------------------------------------------------------
# dense multi-qubit lane
# ---------------------------------------------------------------------------


def _embed(op: np.ndarray, site: int, nsites: int) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for j in range(nsites):
        out = np.kron(out, op if j == site else np.eye(2, dtype=complex))
    return out


class _Space:
    """Qubit register + spectators + TLSs, with cached embeddings."""

    def __init__(self, seq: PulseSequence, device: DeviceModel, include_spectators=True):
        self.register = tuple(seq.register)
        spect = []
        if include_spectators:
            for q in self.register:
                for nb in device.neighbors(q):
                    if nb not in self.register and nb not in spect:
                        spect.append(nb)
        self.spectators = tuple(spect)
        self.tls = []  # (owner qubit, xi)
        for q in self.register:
            for xi in device.tls_couplings(q):
                self.tls.append((q, xi))
        self.sites = list(self.register) + list(self.spectators) + [
            f"tls{i}" for i in range(len(self.tls))
        ]
        self.nsites = len(self.sites)
        self.index = {s: i for i, s in enumerate(self.sites)}
        self._emb = {}

    def op(self, name: str, site) -> np.ndarray:
        key = (name, site)
        if key not in self._emb:
            base = {"x": SIGMA_X, "z": SIGMA_Z, "sm": SIGMA_MINUS, "sp": SIGMA_PLUS}[name]
            self._emb[key] = _embed(base, self.index[site], self.nsites)
        return self._emb[key]

    def initial_state(self) -> np.ndarray:
        ket0 = np.array([1.0, 0.0], dtype=complex)
        plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
        psi = np.array([1.0 + 0.0j])
        nq = len(self.register) + len(self.spectators)
        for j in range(self.nsites):
            psi = np.kron(psi, ket0 if j < nq else plus)
        return np.outer(psi, psi.conj())


def _static_hamiltonian(space: _Space, device: DeviceModel, skip_pair=None, skip_beta=()):
    """Always-on detunings, ZZ couplings, and TLS couplings."""
    dim = 2**space.nsites
    h = np.zeros((dim, dim), dtype=complex)
    for q in space.register:
        if q in skip_beta:
            continue
        h += 0.5 * device.params(q).beta_mean * space.op("z", q)
    known = set(space.register) | set(space.spectators)
    for (qa, qb), pp in device.couplings:
        if {qa, qb} == set(skip_pair or ()):
            continue
        if qa in known and qb in known:
            h += 0.5 * pp.j_zz * space.op("z", qa) @ space.op("z", qb)
    for i, (owner, xi) in enumerate(space.tls):
        h += 0.5 * xi * space.op("z", owner) @ space.op("z", f"tls{i}")
    return h


def _moment_generator(moment: Moment, space: _Space, device: DeviceModel, seq: PulseSequence):
    """(hamiltonian, dissipators, duration) of one timed moment."""
    dt = device.dt_gate
    duration = moment.duration(dt, device.tau_cr)
    driven = set()
    skip_pair = None
    skip_beta = set()
    dim = 2**space.nsites
    h_drive = np.zeros((dim, dim), dtype=complex)
    for op in moment.ops:
        if isinstance(op, XRot):
            p = device.params(op.qubit)
            h_drive += (
                0.5 * (1.0 + p.epsilon_mean) * (op.angle / dt) * space.op("x", op.qubit)
            )
            driven.add(op.qubit)
        elif isinstance(op, Ecr):
            pair = device.coupling(op.control, op.target)
            if pair is None:
                raise ValueError(f"no coupling declared for {(op.control, op.target)}")
            hcr = build_cr_hamiltonian(pair, device)
            c, t = space.index[op.control], space.index[op.target]
            h_drive += _embed_two(hcr, c, t, space.nsites)
            # the effective ECR Hamiltonian already carries the pair's
            # detuning and ZZ terms
            skip_pair = (op.control, op.target)
            skip_beta |= {op.control, op.target}
            driven.add(op.target)
    h = h_drive + _static_hamiltonian(space, device, skip_pair, skip_beta)
    dissipators = []
    for q in space.register:
        p = device.params(q)
        dissipators += [
            (p.q_excited * p.gamma, space.op("sm", q)),
            ((1.0 - p.q_excited) * p.gamma, space.op("sp", q)),
            (p.lambda_phi, space.op("z", q) / math.sqrt(2.0)),
        ]
        if q in driven and p.nu_ctrl > 0:
            dissipators.append((p.nu_ctrl, space.op("x", q) / math.sqrt(2.0)))
    return h, dissipators, duration


def _embed_two(op4: np.ndarray, site_a: int, site_b: int, nsites: int) -> np.ndarray:
    """Embed a two-site operator given on (a, b) ordering into the full space."""
    dim = 2**nsites
    out = np.zeros((dim, dim), dtype=complex)
    pauli_like = np.zeros((2, 2, 2, 2), dtype=complex)
    for ia in range(2):
        for ja in range(2):
            for ib in range(2):
                for jb in range(2):
                    pauli_like[ia, ja, ib, jb] = op4[2 * ia + ib, 2 * ja + jb]
    for ia in range(2):
        for ja in range(2):
            ea = np.zeros((2, 2), dtype=complex)
            ea[ia, ja] = 1.0
            for ib in range(2):
                for jb in range(2):
                    if pauli_like[ia, ja, ib, jb] == 0.0:
                        continue
                    eb = np.zeros((2, 2), dtype=complex)
                    eb[ib, jb] = 1.0
                    term = np.array([[1.0 + 0.0j]])
                    for s in range(nsites):
                        if s == site_a:
                            term = np.kron(term, ea)
                        elif s == site_b:
                            term = np.kron(term, eb)
                        else:
                            term = np.kron(term, np.eye(2, dtype=complex))
                    out += pauli_like[ia, ja, ib, jb] * term
    return out


def _apply_unitary(rho, u):
    return u @ rho @ u.conj().T


def _spam_channel(rho, space: _Space, device: DeviceModel, qubits):
    for q in qubits:
        s = device.params(q).s_meas
        if s > 0.0:
            x = space.op("x", q)
            rho = (1.0 - s) * rho + s * (x @ rho @ x)
    return rho


def _readout(rho, space: _Space, measured):
    """Diagonal readout distribution over the measured qubits."""
    nsites = space.nsites
    probs = np.real(np.diag(rho)).clip(min=0.0)
    probs = probs / probs.sum()
    idx = [space.index[q] for q in measured]
    out = {}
    for basis, p in enumerate(probs):
        bits = "".join(str((basis >> (nsites - 1 - i)) & 1) for i in idx)
        out[bits] = out.get(bits, 0.0) + float(p)
    return out


def run_density(
    seq: PulseSequence,
    device: DeviceModel,
    include_spectators: bool = True,
) -> MeasurementResult:
    """Dense Lindblad propagation of a multi-qubit sequence.

    Distinct timed moments are exponentiated once and cached, so long
    sequences built from repeated slots cost one 4^n x 4^n exponential per
    distinct slot.
    """
    space = _Space(seq, device, include_spectators)
    rho = space.initial_state()
    cache = {}
    measured = []
    for moment in seq.moments:
        dur = moment.duration(device.dt_gate, device.tau_cr)
        if dur == 0.0:
            for op in moment.ops:
                if isinstance(op, VirtualZ):
                    ang = op.angle
                    u = expm(-0.5j * ang * space.op("z", op.qubit))
                    rho = _apply_unitary(rho, u)
                elif isinstance(op, Measure):
                    measured.append(op.qubit)
            continue
        gaussian = [op for op in moment.ops if isinstance(op, XRot) and op.envelope == "gaussian"]
        if gaussian:
            rho = _run_gaussian_moment(rho, moment, space, device)
            continue
        key = (moment.ops, round(dur, 12))
        if key not in cache:
            h, diss, _ = _moment_generator(moment, space, device, seq)
            cache[key] = expm(lme.lindblad_superoperator(h, diss) * dur)
        dim = rho.shape[0]
        rho = (cache[key] @ rho.ravel()).reshape(dim, dim)
        rho = 0.5 * (rho + rho.conj().T)
    if not measured:
        raise ValueError("sequence has no measurement")
    rho = _spam_channel(rho, space, device, measured)
    return MeasurementResult(tuple(measured), _readout(rho, space, measured))


def _run_gaussian_moment(rho, moment, space: _Space, device: DeviceModel, n_steps: int = 160):
    """Trotterized propagation of a moment with Gaussian-envelope drives."""
    dt = device.dt_gate
    angles = {
        op.qubit: lme.gaussian_envelope_angles(op.angle, dt, n_steps)
        for op in moment.ops
        if isinstance(op, XRot)
    }
    sub = dt / n_steps
    dim = rho.shape[0]
    h_static = _static_hamiltonian(space, device)
    dissipators = []
    for q in space.register:
        p = device.params(q)
        dissipators += [
            (p.q_excited * p.gamma, space.op("sm", q)),
            ((1.0 - p.q_excited) * p.gamma, space.op("sp", q)),
            (p.lambda_phi, space.op("z", q) / math.sqrt(2.0)),
        ]
        if q in angles and p.nu_ctrl > 0:
            dissipators.append((p.nu_ctrl, space.op("x", q) / math.sqrt(2.0)))
    for j in range(n_steps):
        h = h_static.copy()
        for q, a in angles.items():
            p = device.params(q)
            h += 0.5 * (1.0 + p.epsilon_mean) * (float(a[j]) / sub) * space.op("x", q)
        prop = expm(lme.lindblad_superoperator(h, dissipators) * sub)
        rho = (prop @ rho.ravel()).reshape(dim, dim)
    return 0.5 * (rho + rho.conj().T)
