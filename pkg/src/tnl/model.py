"""Domain types shared by every other module.

Holds the learned noise parameters (single-qubit and pair), the power
spectral density models of the stochastic noise processes, the device
topology, and the unit conventions.

All types are immutable value objects and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "UnitConvention",
    "UNITS",
    "PsdModel",
    "WhitePsd",
    "DcPsd",
    "LorentzianPsd",
    "TabulatedPsd",
    "SumPsd",
    "psd_eval",
    "psd_from_dict",
    "NoiseParams1Q",
    "PairParams",
    "DeviceModel",
    "effective_detuning",
]


@dataclass(frozen=True)
class UnitConvention:
    """Fixed unit system of the toolkit.

    Every oscillation symbol (detunings, TLS and crosstalk couplings,
    angular frequencies) is an angular frequency in rad/us, so the
    analytic formulas are evaluated with their trigonometric arguments
    exactly as written, e.g. cos(beta * tau) with tau in us.  Rates in
    1/us are numerically equal to MHz.
    """

    time_unit: str = "us"
    rate_unit: str = "1/us"
    frequency_unit: str = "rad/us"


UNITS = UnitConvention()


# ---------------------------------------------------------------------------
# Power spectral densities
# ---------------------------------------------------------------------------


class PsdModel:
    """One-sided power spectral density of a stationary Gaussian process.

    The process is fully specified by its mean (stored separately, e.g. in
    :class:`NoiseParams1Q`) and this PSD.  The normalization is fixed by the
    overlap-integral convention chi(tau) = (1/pi) * int_0^inf S(w) F(w, tau) dw,
    which makes white noise of density S0 produce a Ramsey decay exp(-S0 tau).
    """

    def value(self, omega):
        """Pointwise S(omega) for omega >= 0.  Vectorized over arrays."""
        raise NotImplementedError

    def dc_weight(self) -> float:
        """Total delta weight concentrated at omega = 0 (Gamma)."""
        return 0.0

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class WhitePsd(PsdModel):
    """Flat spectrum S(omega) = s0 (units: us)."""

    s0: float

    def __post_init__(self):
        if self.s0 < 0:
            raise ValueError("white PSD level must be nonnegative")

    def value(self, omega):
        return np.broadcast_to(float(self.s0), np.shape(omega)).copy() if np.ndim(omega) else float(self.s0)

    def to_dict(self) -> dict:
        return {"type": "white", "s0": self.s0}


@dataclass(frozen=True)
class DcPsd(PsdModel):
    """Quasistatic (DC) noise: S(omega) = gamma_var * delta(omega).

    The delta weight is consumed only by overlap integrals, as
    Gamma * F(0, tau) / pi, and by quasistatic trajectory sampling (one
    Gaussian constant per trajectory).  Pointwise evaluation returns 0.
    """

    gamma_var: float

    def __post_init__(self):
        if self.gamma_var < 0:
            raise ValueError("DC delta weight must be nonnegative")

    def value(self, omega):
        return np.zeros(np.shape(omega)) if np.ndim(omega) else 0.0

    def dc_weight(self) -> float:
        return float(self.gamma_var)

    def to_dict(self) -> dict:
        return {"type": "dc", "gamma_var": self.gamma_var}


@dataclass(frozen=True)
class LorentzianPsd(PsdModel):
    """Lorentzian-like colored spectrum S(w) = s0 / (1 + (w/omega_max)^alpha)."""

    s0: float
    omega_max: float
    alpha: float

    def __post_init__(self):
        if self.s0 < 0:
            raise ValueError("s0 must be nonnegative")
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        out = self.s0 / (1.0 + (w / self.omega_max) ** self.alpha)
        return out if np.ndim(omega) else float(out)

    def to_dict(self) -> dict:
        return {"type": "lorentzian", "s0": self.s0, "omega_max": self.omega_max, "alpha": self.alpha}


@dataclass(frozen=True)
class TabulatedPsd(PsdModel):
    """PSD sampled on an explicit frequency grid, linearly interpolated.

    Queries outside the grid raise; tabulated spectra are not extrapolated.
    """

    omega_grid: tuple
    s_values: tuple

    def __post_init__(self):
        w = np.asarray(self.omega_grid, dtype=float)
        s = np.asarray(self.s_values, dtype=float)
        if w.ndim != 1 or w.size < 2 or w.size != s.size:
            raise ValueError("omega_grid and s_values must be 1-d and of equal length >= 2")
        if np.any(np.diff(w) <= 0):
            raise ValueError("omega_grid must be strictly increasing")
        if np.any(s < 0):
            raise ValueError("s_values must be nonnegative")
        object.__setattr__(self, "omega_grid", tuple(float(x) for x in w))
        object.__setattr__(self, "s_values", tuple(float(x) for x in s))

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        lo, hi = self.omega_grid[0], self.omega_grid[-1]
        if np.any(w < lo - 1e-12) or np.any(w > hi + 1e-12):
            raise ValueError(
                f"tabulated PSD queried at omega outside grid [{lo}, {hi}]"
            )
        out = np.interp(w, self.omega_grid, self.s_values)
        return out if np.ndim(omega) else float(out)

    def to_dict(self) -> dict:
        return {"type": "tabulated", "omega": list(self.omega_grid), "s": list(self.s_values)}


@dataclass(frozen=True)
class SumPsd(PsdModel):
    """Sum of component spectra (e.g. DC component plus white floor)."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not all(isinstance(p, PsdModel) for p in self.parts):
            raise TypeError("SumPsd parts must be PsdModel instances")

    def value(self, omega):
        if not self.parts:
            return np.zeros(np.shape(omega)) if np.ndim(omega) else 0.0
        vals = [p.value(omega) for p in self.parts]
        out = np.sum(vals, axis=0)
        return out if np.ndim(omega) else float(out)

    def dc_weight(self) -> float:
        return float(sum(p.dc_weight() for p in self.parts))

    def to_dict(self) -> dict:
        return {"type": "sum", "parts": [p.to_dict() for p in self.parts]}


def psd_eval(model: PsdModel, omega):
    """Evaluate the continuous part of a PSD at omega (rad/us), omega >= 0.

    DC components contribute only through their delta weight (see
    :meth:`PsdModel.dc_weight`) and evaluate to 0 pointwise.
    """
    if np.any(np.asarray(omega) < 0):
        raise ValueError("psd_eval requires omega >= 0")
    return model.value(omega)


def decompose_dc_white(psd: PsdModel | None) -> tuple:
    """(Gamma, S_white) of a PSD built solely from DC and white parts.

    The composite-channel reduction consumes only this decomposition;
    colored components (Lorentzian, tabulated) raise.
    """
    if psd is None:
        return 0.0, 0.0
    if isinstance(psd, DcPsd):
        return psd.gamma_var, 0.0
    if isinstance(psd, WhitePsd):
        return 0.0, psd.s0
    if isinstance(psd, SumPsd):
        g, s = 0.0, 0.0
        for part in psd.parts:
            gp, sp = decompose_dc_white(part)
            g, s = g + gp, s + sp
        return g, s
    raise ValueError(
        f"{type(psd).__name__} has no DC + white decomposition; "
        "use the stochastic engine for colored spectra"
    )


def psd_from_dict(d: Mapping) -> PsdModel:
    """Inverse of ``PsdModel.to_dict`` for every variant."""
    kind = d["type"]
    if kind == "white":
        return WhitePsd(float(d["s0"]))
    if kind == "dc":
        return DcPsd(float(d["gamma_var"]))
    if kind == "lorentzian":
        return LorentzianPsd(float(d["s0"]), float(d["omega_max"]), float(d["alpha"]))
    if kind == "tabulated":
        return TabulatedPsd(tuple(d["omega"]), tuple(d["s"]))
    if kind == "sum":
        return SumPsd(tuple(psd_from_dict(p) for p in d["parts"]))
    raise ValueError(f"unknown PSD type {kind!r}")


# ---------------------------------------------------------------------------
# Noise parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseParams1Q:
    """Single-qubit noise model parameters.

    gamma        relaxation rate 1/T1 (1/us)
    q_excited    equilibrium excited-state probability, in [0, 1]
    lambda_phi   pure-dephasing rate 1/T_phi (1/us)
    beta_mean    static detuning (rad/us); the mean of the dephasing process
                 when psd_beta is present
    epsilon_mean fractional x-rotation over-rotation (dimensionless)
    nu_ctrl      control bit-flip rate, active only while driving (1/us)
    s_meas       measurement bit-flip probability, in [0, 1]
    xi_tls       optional TLS coupling (rad/us); None when no TLS is attached
    psd_beta     optional PSD of the dephasing fluctuations
    psd_epsilon  optional PSD of the control-amplitude fluctuations
    """

    gamma: float
    q_excited: float = 1.0
    lambda_phi: float = 0.0
    beta_mean: float = 0.0
    epsilon_mean: float = 0.0
    nu_ctrl: float = 0.0
    s_meas: float = 0.0
    xi_tls: float | None = None
    psd_beta: PsdModel | None = None
    psd_epsilon: PsdModel | None = None

    def __post_init__(self):
        # alpha = gamma/2 + lambda must be nonzero for the perturbative
        # driven-gate solution to exist, which requires gamma > 0.
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.lambda_phi < 0 or self.nu_ctrl < 0:
            raise ValueError("lambda_phi and nu_ctrl must be nonnegative")
        if not 0.0 <= self.q_excited <= 1.0:
            raise ValueError("q_excited must lie in [0, 1]")
        if not 0.0 <= self.s_meas <= 1.0:
            raise ValueError("s_meas must lie in [0, 1]")

    @property
    def alpha(self) -> float:
        """Transverse decay rate gamma/2 + lambda (1/us)."""
        return 0.5 * self.gamma + self.lambda_phi

    def replace(self, **kw) -> "NoiseParams1Q":
        from dataclasses import replace

        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "q_excited": self.q_excited,
            "lambda_phi": self.lambda_phi,
            "beta_mean": self.beta_mean,
            "epsilon_mean": self.epsilon_mean,
            "nu_ctrl": self.nu_ctrl,
            "s_meas": self.s_meas,
            "xi_tls": self.xi_tls,
            "psd_beta": None if self.psd_beta is None else self.psd_beta.to_dict(),
            "psd_epsilon": None if self.psd_epsilon is None else self.psd_epsilon.to_dict(),
        }

    @staticmethod
    def from_dict(d: Mapping) -> "NoiseParams1Q":
        return NoiseParams1Q(
            gamma=float(d["gamma"]),
            q_excited=float(d.get("q_excited", 1.0)),
            lambda_phi=float(d.get("lambda_phi", 0.0)),
            beta_mean=float(d.get("beta_mean", 0.0)),
            epsilon_mean=float(d.get("epsilon_mean", 0.0)),
            nu_ctrl=float(d.get("nu_ctrl", 0.0)),
            s_meas=float(d.get("s_meas", 0.0)),
            xi_tls=None if d.get("xi_tls") is None else float(d["xi_tls"]),
            psd_beta=None if d.get("psd_beta") is None else psd_from_dict(d["psd_beta"]),
            psd_epsilon=None if d.get("psd_epsilon") is None else psd_from_dict(d["psd_epsilon"]),
        )


@dataclass(frozen=True)
class PairParams:
    """Two-qubit model parameters for a coupled (control, target) pair.

    j_zz         residual ZZ crosstalk strength (rad/us), one value per
                 unordered pair
    epsilon_zx   fractional over-rotation of the ECR ZX term (dimensionless)
    zeta_x       residual target x-rotation rate during ECR (rad/us)
    beta_target  target detuning during ECR (rad/us)
    """

    j_zz: float = 0.0
    epsilon_zx: float = 0.0
    zeta_x: float = 0.0
    beta_target: float = 0.0

    def to_dict(self) -> dict:
        return {
            "j_zz": self.j_zz,
            "epsilon_zx": self.epsilon_zx,
            "zeta_x": self.zeta_x,
            "beta_target": self.beta_target,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "PairParams":
        return PairParams(
            j_zz=float(d.get("j_zz", 0.0)),
            epsilon_zx=float(d.get("epsilon_zx", 0.0)),
            zeta_x=float(d.get("zeta_x", 0.0)),
            beta_target=float(d.get("beta_target", 0.0)),
        )


def _pair_key(a: str, b: str) -> tuple:
    if a == b:
        raise ValueError("a coupling must join two distinct qubits")
    return tuple(sorted((a, b)))


@dataclass(frozen=True)
class DeviceModel:
    """Device topology plus learned parameters for every qubit and pair.

    qubits           ordered (label, NoiseParams1Q) pairs
    couplings        unordered qubit pair -> PairParams
    tls_attachments  qubit label -> tuple of TLS coupling strengths xi (rad/us);
                     each TLS is a two-level system initialized in |+>
    dt_gate          single-qubit gate duration delta-t (us)
    tau_cr           ECR gate duration (us), larger than dt_gate
    """

    qubits: tuple
    couplings: tuple = ()
    tls_attachments: tuple = ()
    dt_gate: float = 0.035
    tau_cr: float = 0.576

    def __post_init__(self):
        qubits = tuple((str(l), p) for l, p in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        labels = [l for l, _ in qubits]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate qubit labels")
        known = set(labels)
        couplings = []
        seen = set()
        for pair, pp in self.couplings:
            key = _pair_key(*pair)
            if key in seen:
                raise ValueError(f"coupling {key} declared twice")
            if not set(key) <= known:
                raise ValueError(f"coupling {key} references undeclared qubits")
            seen.add(key)
            couplings.append((key, pp))
        object.__setattr__(self, "couplings", tuple(couplings))
        tls = []
        for label, xis in self.tls_attachments:
            if label not in known:
                raise ValueError(f"TLS attachment references undeclared qubit {label!r}")
            tls.append((label, tuple(float(x) for x in xis)))
        object.__setattr__(self, "tls_attachments", tuple(tls))
        if self.dt_gate <= 0:
            raise ValueError("dt_gate must be positive")
        if self.tau_cr <= self.dt_gate:
            raise ValueError("tau_cr must exceed dt_gate")

    # -- lookups ------------------------------------------------------------

    @property
    def labels(self) -> tuple:
        return tuple(l for l, _ in self.qubits)

    def params(self, label: str) -> NoiseParams1Q:
        for l, p in self.qubits:
            if l == label:
                return p
        raise KeyError(f"unknown qubit {label!r}")

    def coupling(self, a: str, b: str) -> PairParams | None:
        key = _pair_key(a, b)
        for pair, pp in self.couplings:
            if pair == key:
                return pp
        return None

    def neighbors(self, label: str) -> tuple:
        out = []
        for (a, b), _ in self.couplings:
            if a == label:
                out.append(b)
            elif b == label:
                out.append(a)
        return tuple(out)

    def tls_couplings(self, label: str) -> tuple:
        for l, xis in self.tls_attachments:
            if l == label:
                return xis
        return ()

    def with_qubit(self, label: str, params: NoiseParams1Q) -> "DeviceModel":
        qubits = tuple((l, params if l == label else p) for l, p in self.qubits)
        return DeviceModel(qubits, self.couplings, self.tls_attachments, self.dt_gate, self.tau_cr)

    def with_coupling(self, a: str, b: str, pp: PairParams) -> "DeviceModel":
        key = _pair_key(a, b)
        rest = tuple(c for c in self.couplings if c[0] != key)
        return DeviceModel(self.qubits, rest + ((key, pp),), self.tls_attachments, self.dt_gate, self.tau_cr)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": "tnl-device-1",
            "dt_gate": self.dt_gate,
            "tau_cr": self.tau_cr,
            "qubits": [{"label": l, **p.to_dict()} for l, p in self.qubits],
            "couplings": [
                {"pair": list(pair), **pp.to_dict()} for pair, pp in self.couplings
            ],
            "tls_attachments": {l: list(xis) for l, xis in self.tls_attachments},
        }

    @staticmethod
    def from_dict(d: Mapping) -> "DeviceModel":
        if d.get("schema", "tnl-device-1") != "tnl-device-1":
            raise ValueError(f"unsupported device schema {d.get('schema')!r}")
        qubits = tuple(
            (q["label"], NoiseParams1Q.from_dict(q)) for q in d.get("qubits", [])
        )
        couplings = tuple(
            (tuple(c["pair"]), PairParams.from_dict(c)) for c in d.get("couplings", [])
        )
        tls = tuple((l, tuple(x)) for l, x in d.get("tls_attachments", {}).items())
        return DeviceModel(
            qubits,
            couplings,
            tls,
            dt_gate=float(d.get("dt_gate", 0.035)),
            tau_cr=float(d.get("tau_cr", 0.576)),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "DeviceModel":
        with open(path) as fh:
            return DeviceModel.from_dict(json.load(fh))


def effective_detuning(label: str, device: DeviceModel) -> float:
    """Effective detuning beta_eff = beta + sum of couplings to neighbors.

    A neighbor held in |0> shifts the qubit frequency by its full coupling
    strength J under the (J/2) Z.Z convention, so the free-evolution
    oscillation runs at beta_eff.
    """
    p = device.params(label)
    return p.beta_mean + sum(
        device.coupling(label, nb).j_zz for nb in device.neighbors(label)
    )
