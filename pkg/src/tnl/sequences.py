"""Pulse-sequence constructors for every experiment family.

Circuits are written in terms of native gates: timed x-rotations (angle
+-pi/2 or pi, square envelope unless stated), instantaneous virtual
z-rotations, timed ECR blocks, idles, and terminal measurements.

A sequence is an ordered tuple of moments; ops inside one moment run
simultaneously on disjoint qubits.  Virtual-Z ops always occupy their own
zero-duration moment so ordering against neighboring pulses is explicit.
Qubits without an op in a timed moment idle for the moment duration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from tnl.cliffords import clifford_index, clifford_native_ops, clifford_unitaries, inverse_index

__all__ = [
    "Idle",
    "XRot",
    "VirtualZ",
    "Ecr",
    "Measure",
    "Moment",
    "PulseSequence",
    "SweepSpec",
    "build_m",
    "build_t1",
    "build_hahn_echo",
    "build_ramsey",
    "build_fttps",
    "fttps_pulse_slots",
    "build_fpw",
    "build_xt",
    "build_cr",
    "build_cpmg",
    "cpmg_pulse_times",
    "build_rb",
    "build_xy4_dd",
    "build_vqe_h2",
    "VQE_OBSERVABLES",
]

DT_DEFAULT = 0.035
TAU_CR_DEFAULT = 0.576


@dataclass(frozen=True)
class Idle:
    qubit: str
    duration: float


@dataclass(frozen=True)
class XRot:
    qubit: str
    angle: float
    envelope: str = "square"  # or "gaussian"


@dataclass(frozen=True)
class VirtualZ:
    qubit: str
    angle: float


@dataclass(frozen=True)
class Ecr:
    control: str
    target: str


@dataclass(frozen=True)
class Measure:
    qubit: str


@dataclass(frozen=True)
class Moment:
    ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        seen = set()
        for op in self.ops:
            qs = (op.control, op.target) if isinstance(op, Ecr) else (op.qubit,)
            for q in qs:
                if q in seen:
                    raise ValueError(f"two simultaneous ops on qubit {q!r}")
                seen.add(q)

    def qubits(self) -> tuple:
        out = []
        for op in self.ops:
            out += [op.control, op.target] if isinstance(op, Ecr) else [op.qubit]
        return tuple(out)

    def duration(self, dt_gate: float, tau_cr: float) -> float:
        d = 0.0
        for op in self.ops:
            if isinstance(op, Idle):
                d = max(d, op.duration)
            elif isinstance(op, XRot):
                d = max(d, dt_gate)
            elif isinstance(op, Ecr):
                d = max(d, tau_cr)
        return d


@dataclass(frozen=True)
class PulseSequence:
    """Timed schedule of operations on a labeled qubit register."""

    register: tuple
    moments: tuple
    dt_gate: float = DT_DEFAULT
    tau_cr: float = TAU_CR_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "register", tuple(self.register))
        object.__setattr__(self, "moments", tuple(self.moments))
        reg = set(self.register)
        for m in self.moments:
            if not set(m.qubits()) <= reg:
                raise ValueError("moment references a qubit outside the register")

    @property
    def total_duration(self) -> float:
        return sum(m.duration(self.dt_gate, self.tau_cr) for m in self.moments)

    @property
    def measured_qubits(self) -> tuple:
        out = []
        for m in self.moments:
            out += [op.qubit for op in m.ops if isinstance(op, Measure)]
        return tuple(out)

    # -- dump format for golden-file tests ----------------------------------

    def to_json(self) -> str:
        def op_dict(op):
            if isinstance(op, Idle):
                return {"type": "idle", "qubit": op.qubit, "duration": op.duration}
            if isinstance(op, XRot):
                return {"type": "xrot", "qubit": op.qubit, "angle": op.angle, "envelope": op.envelope}
            if isinstance(op, VirtualZ):
                return {"type": "vz", "qubit": op.qubit, "angle": op.angle}
            if isinstance(op, Ecr):
                return {"type": "ecr", "control": op.control, "target": op.target}
            return {"type": "measure", "qubit": op.qubit}

        return json.dumps(
            {
                "register": list(self.register),
                "dt_gate": self.dt_gate,
                "tau_cr": self.tau_cr,
                "moments": [[op_dict(op) for op in m.ops] for m in self.moments],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "PulseSequence":
        d = json.loads(text)

        def op_of(o):
            t = o["type"]
            if t == "idle":
                return Idle(o["qubit"], o["duration"])
            if t == "xrot":
                return XRot(o["qubit"], o["angle"], o.get("envelope", "square"))
            if t == "vz":
                return VirtualZ(o["qubit"], o["angle"])
            if t == "ecr":
                return Ecr(o["control"], o["target"])
            if t == "measure":
                return Measure(o["qubit"])
            raise ValueError(f"unknown op type {t!r}")

        return PulseSequence(
            tuple(d["register"]),
            tuple(Moment(tuple(op_of(o) for o in ops)) for ops in d["moments"]),
            dt_gate=d.get("dt_gate", DT_DEFAULT),
            tau_cr=d.get("tau_cr", TAU_CR_DEFAULT),
        )


@dataclass(frozen=True)
class SweepSpec:
    """A sweep of one experiment family: kind, swept values, fixed knobs."""

    kind: str
    sweep_values: tuple
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = tuple(self.sweep_values)
        if not vals:
            raise ValueError("sweep_values must be nonempty")
        object.__setattr__(self, "sweep_values", vals)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _seq(qubits, moments, dt, tau_cr=TAU_CR_DEFAULT):
    return PulseSequence(tuple(qubits), tuple(moments), dt_gate=dt, tau_cr=tau_cr)


def _m(*ops):
    return Moment(tuple(ops))


def _ry_moments(qubit, angle):
    # Ry(angle) = Rz(pi/2) Rx(angle) Rz(-pi/2), time ordered right to left
    return [
        _m(VirtualZ(qubit, -0.5 * math.pi)),
        _m(XRot(qubit, angle)),
        _m(VirtualZ(qubit, 0.5 * math.pi)),
    ]


def _basis_change_moments(qubit, pauli):
    """Rotate `pauli` onto Z ahead of a computational-basis measurement."""
    if pauli == "Z":
        return []
    if pauli == "X":
        return _ry_moments(qubit, -0.5 * math.pi)
    if pauli == "Y":
        return [_m(XRot(qubit, 0.5 * math.pi))]
    raise ValueError(f"unknown observable {pauli!r}")


# ---------------------------------------------------------------------------
# single-qubit characterization families
# ---------------------------------------------------------------------------


def build_m(qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """SPAM circuit: prepare |1> with an X gate and measure."""
    return _seq([qubit], [_m(XRot(qubit, math.pi)), _m(Measure(qubit))], dt)


def build_t1(tau: float, qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """X . Idle(tau) . X . Measure."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    moments = [_m(XRot(qubit, math.pi))]
    if tau > 0:
        moments.append(_m(Idle(qubit, tau)))
    moments += [_m(XRot(qubit, math.pi)), _m(Measure(qubit))]
    return _seq([qubit], moments, dt)


def build_hahn_echo(tau: float, qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """sqrtX . Idle(tau/2) . X . Idle(tau/2) . sqrtX-dagger . Measure."""
    return build_cpmg(1, tau, qubit=qubit, dt=dt)


def build_ramsey(tau: float, qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """sqrtX . Idle(tau) . sqrtX-dagger . Measure."""
    return build_cpmg(0, tau, qubit=qubit, dt=dt)


def fttps_pulse_slots(k: int, K: int) -> tuple:
    """Slot indices (0-based, out of N = 2K) carrying the 2k X pulses."""
    if not 0 <= k < K:
        raise ValueError("require 0 <= k < K")
    if k == 0:
        return ()
    return tuple(int(math.floor((2 * l + 1) * K / (2 * k))) for l in range(2 * k))


def build_fttps(
    k: int,
    K: int,
    robust: bool = False,
    qubit: str = "q0",
    dt: float = DT_DEFAULT,
) -> PulseSequence:
    """k-th fixed-total-time pulse sequence out of K, with N = 2K gate slots.

    The k = 0 sequence is a fixed-duration Ramsey experiment.  The robust
    variant alternates the sign of every other pulse (-X = Z.X.Z), making
    the sequence insensitive to coherent and low-frequency control noise.
    """
    slots = set(fttps_pulse_slots(k, K))
    moments = [_m(XRot(qubit, 0.5 * math.pi))]
    pulse_idx = 0
    for slot in range(2 * K):
        if slot in slots:
            flip = robust and (pulse_idx % 2 == 1)
            if flip:
                moments.append(_m(VirtualZ(qubit, math.pi)))
            moments.append(_m(XRot(qubit, math.pi)))
            if flip:
                moments.append(_m(VirtualZ(qubit, math.pi)))
            pulse_idx += 1
        else:
            moments.append(_m(Idle(qubit, dt)))
    moments += [_m(XRot(qubit, -0.5 * math.pi)), _m(Measure(qubit))]
    return _seq([qubit], moments, dt)


def build_fpw(
    d: int,
    qubit: str = "q0",
    dt: float = DT_DEFAULT,
    envelope: str = "square",
) -> PulseSequence:
    """Finite-pulse-width amplification circuit (X Z X Z)^d."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    moments = []
    for _ in range(d):
        moments += [
            _m(XRot(qubit, math.pi, envelope)),
            _m(VirtualZ(qubit, math.pi)),
            _m(XRot(qubit, math.pi, envelope)),
            _m(VirtualZ(qubit, math.pi)),
        ]
    moments.append(_m(Measure(qubit)))
    return _seq([qubit], moments, dt)


def build_cpmg(d: int, tau: float, qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """CPMG with d echo pulses centered on d equal sub-intervals of tau.

    d = 0 is a Ramsey experiment, d = 1 a Hahn echo.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    moments = [_m(XRot(qubit, 0.5 * math.pi))]
    if d == 0:
        if tau > 0:
            moments.append(_m(Idle(qubit, tau)))
    else:
        half = 0.5 * tau / d
        gaps = [half] + [2.0 * half] * (d - 1) + [half]
        for i, gap in enumerate(gaps):
            if gap > 0:
                moments.append(_m(Idle(qubit, gap)))
            if i < d:
                moments.append(_m(XRot(qubit, math.pi)))
    # the closing pulse sign depends on the echo parity so the noiseless
    # circuit composes to the identity
    closing = -0.5 * math.pi if d % 2 == 0 else 0.5 * math.pi
    moments += [_m(XRot(qubit, closing)), _m(Measure(qubit))]
    return _seq([qubit], moments, dt)


def cpmg_pulse_times(d: int, tau: float) -> tuple:
    """Echo-pulse centers (2i - 1) tau / 2d of the free-evolution window."""
    return tuple((2 * i - 1) * tau / (2 * d) for i in range(1, d + 1)) if d else ()


# ---------------------------------------------------------------------------
# randomized benchmarking
# ---------------------------------------------------------------------------


def build_rb(length: int, seed: int, qubit: str = "q0", dt: float = DT_DEFAULT) -> PulseSequence:
    """length random Cliffords followed by the exact inverse, then measure."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    draw = rng.integers(0, 24, size=length)
    unitaries = clifford_unitaries()
    total = np.eye(2, dtype=complex)
    moments = []
    for i in draw:
        total = unitaries[i] @ total
        for kind, angle in clifford_native_ops(int(i)):
            moments.append(_m(VirtualZ(qubit, angle) if kind == "z" else XRot(qubit, angle)))
    inv = inverse_index(clifford_index(total))
    for kind, angle in clifford_native_ops(inv):
        moments.append(_m(VirtualZ(qubit, angle) if kind == "z" else XRot(qubit, angle)))
    moments.append(_m(Measure(qubit)))
    return _seq([qubit], moments, dt)


# ---------------------------------------------------------------------------
# two-qubit families
# ---------------------------------------------------------------------------


def build_xt(
    tau: float,
    measured: str = "qm",
    spectator: str = "qs",
    dt: float = DT_DEFAULT,
) -> PulseSequence:
    """Joint Hahn-echo crosstalk circuit; only `measured` is read out."""
    if measured == spectator:
        raise ValueError("measured and spectator must differ")
    qs = (measured, spectator)
    moments = [_m(*(XRot(q, 0.5 * math.pi) for q in qs))]
    if tau > 0:
        moments.append(_m(*(Idle(q, 0.5 * tau) for q in qs)))
    moments.append(_m(*(XRot(q, math.pi) for q in qs)))
    if tau > 0:
        moments.append(_m(*(Idle(q, 0.5 * tau) for q in qs)))
    # single echo: closing +pi/2 pulses complete the identity
    moments.append(_m(*(XRot(q, 0.5 * math.pi) for q in qs)))
    moments.append(_m(Measure(measured)))
    return _seq(qs, moments, dt)


def build_cr(
    n: int,
    control_state: int,
    observable: str,
    control: str = "qc",
    target: str = "qt",
    dt: float = DT_DEFAULT,
    tau_cr: float = TAU_CR_DEFAULT,
) -> PulseSequence:
    """n repeated ECR blocks; measure `observable` on the target qubit."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if control_state not in (0, 1):
        raise ValueError("control_state must be 0 or 1")
    moments = []
    if control_state == 1:
        moments.append(_m(XRot(control, math.pi)))
    moments += [_m(Ecr(control, target)) for _ in range(n)]
    moments += _basis_change_moments(target, observable)
    moments.append(_m(Measure(target)))
    return _seq((control, target), moments, dt, tau_cr=tau_cr)


# ---------------------------------------------------------------------------
# multi-qubit dynamical decoupling
# ---------------------------------------------------------------------------

_PREP = {"0": None, "1": "x", "+": "sy"}


def _prep_moments(qubits, init, invert=False):
    kind = _PREP[init]
    if kind is None:
        return []
    if kind == "x":
        return [_m(*(XRot(q, math.pi) for q in qubits))]
    # sqrt(Y) prep Ry(pi/2) = Rz(pi/2) Rx(pi/2) Rz(-pi/2); the inverse only
    # negates the x-rotation
    x = 0.5 * math.pi if not invert else -0.5 * math.pi
    return [
        _m(*(VirtualZ(q, -0.5 * math.pi) for q in qubits)),
        _m(*(XRot(q, x) for q in qubits)),
        _m(*(VirtualZ(q, 0.5 * math.pi) for q in qubits)),
    ]


def build_xy4_dd(
    kind: str,
    main: str,
    spectators,
    init: str,
    n_cycles: int,
    dt: float = DT_DEFAULT,
) -> PulseSequence:
    """XY4 decoupling with zero inter-pulse delay (cycle time 4 dt).

    Type 1 decouples the spectators while the main qubit evolves freely;
    Type 2 reverses the roles.  Y pulses are compiled as X followed by a
    virtual Z_pi.  All qubits are prepared in `init` ("0", "1" or "+") and
    the inverse preparation precedes measurement of the main qubit.
    """
    spectators = tuple(spectators)
    if main in spectators:
        raise ValueError("spectators must be disjoint from main")
    if kind not in ("Type1", "Type2"):
        raise ValueError("kind must be 'Type1' or 'Type2'")
    if n_cycles < 0:
        raise ValueError("n_cycles must be nonnegative")
    qubits = (main,) + spectators
    driven = spectators if kind == "Type1" else (main,)

    moments = list(_prep_moments(qubits, init))
    for _ in range(n_cycles):
        # undriven party idles implicitly for each pulse duration
        for pulse in ("X", "Y", "X", "Y"):
            moments.append(_m(*(XRot(q, math.pi) for q in driven)))
            if pulse == "Y":
                moments.append(_m(*(VirtualZ(q, math.pi) for q in driven)))
    moments += _prep_moments(qubits, init, invert=True)
    moments.append(_m(Measure(main)))
    return _seq(qubits, moments, dt)


# ---------------------------------------------------------------------------
# VQE ansatz for H2
# ---------------------------------------------------------------------------

VQE_OBSERVABLES = ("ZI", "IZ", "ZZ", "XX", "YY")


def _cnot_moments(control, target):
    # CNOT = (Rz(-pi/2) on control) (Rx(-pi/2) on target) . ECR, up to phase
    return [
        _m(Ecr(control, target)),
        _m(VirtualZ(control, -0.5 * math.pi)),
        _m(XRot(target, -0.5 * math.pi)),
    ]


def build_vqe_h2(
    theta: float,
    observable: str,
    qubit_a: str = "q0",
    qubit_b: str = "q1",
    dt: float = DT_DEFAULT,
    tau_cr: float = TAU_CR_DEFAULT,
) -> PulseSequence:
    """Two-qubit H2 ansatz exp(-i theta X.Y)|01> plus measurement rotations.

    The parameterized block is compiled with two CNOTs (each one ECR plus
    local corrections) around a virtual Rz(2 theta) on qubit B.
    """
    if observable not in VQE_OBSERVABLES:
        raise ValueError(f"observable must be one of {VQE_OBSERVABLES}")
    a, b = qubit_a, qubit_b
    moments = [_m(XRot(b, math.pi))]  # |01>
    # V maps X_a -> Z_a (Ry(-pi/2)) and Y_b -> Z_b (Rx(pi/2))
    moments += _ry_moments(a, -0.5 * math.pi)
    moments.append(_m(XRot(b, 0.5 * math.pi)))
    moments += _cnot_moments(a, b)
    moments.append(_m(VirtualZ(b, 2.0 * theta)))
    moments += _cnot_moments(a, b)
    moments += _ry_moments(a, 0.5 * math.pi)
    moments.append(_m(XRot(b, -0.5 * math.pi)))
    # measurement basis rotations
    pa, pb = observable[0], observable[1]
    if pa != "I":
        moments += _basis_change_moments(a, pa)
    if pb != "I":
        moments += _basis_change_moments(b, pb)
    moments += [_m(Measure(a)), _m(Measure(b))]
    return _seq((a, b), moments, dt, tau_cr=tau_cr)
