"""Single-qubit Clifford group and its compilation to native gates.

The 24 Cliffords are compiled to {virtual-Z, X, sqrt(X)}: the four diagonal
elements become virtual-Z only, the four equatorial pi-rotations become
Z.X.Z (one physical pulse), and the remaining sixteen use the two-pulse
Euler form Z.sqrtX.Z.sqrtX.Z.  This yields 1.5 physical pulses per Clifford
on average.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = ["clifford_unitaries", "clifford_native_ops", "clifford_index", "inverse_index"]

_Z_ANGLES = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


def _rz(a):
    return np.array([[np.exp(-0.5j * a), 0], [0, np.exp(0.5j * a)]])


def _rx(a):
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _canon(u: np.ndarray) -> bytes:
    """Phase-fixed, rounded fingerprint of a 2x2 unitary."""
    flat = u.ravel()
    k = np.argmax(np.abs(flat) > 1e-6)
    u = u * (np.conj(flat[k]) / abs(flat[k]))
    return (np.round(u, 9) + 0.0).tobytes()  # +0.0 folds -0.0 into +0.0


def _native_matrix(ops) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for kind, angle in ops:
        u = (_rz(angle) if kind == "z" else _rx(angle)) @ u
    return u


@lru_cache(maxsize=1)
def _tables():
    # enumerate the group by closure under generators
    gens = [_rz(0.5 * math.pi), _rx(0.5 * math.pi)]
    elems = [np.eye(2, dtype=complex)]
    keys = {_canon(elems[0])}
    frontier = [elems[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                k = _canon(w)
                if k not in keys:
                    keys.add(k)
                    elems.append(w)
                    nxt.append(w)
        frontier = nxt
    assert len(elems) == 24

    # compile: prefer virtual-only, then single-X, then the two-pulse Euler form
    def find(u):
        for a in _Z_ANGLES:
            if _canon(_rz(a)) == _canon(u):
                return [("z", a)]
        for a in _Z_ANGLES:
            for b in _Z_ANGLES:
                ops = [("z", b), ("x", math.pi), ("z", a)]
                if _canon(_native_matrix(ops)) == _canon(u):
                    return ops
        for a in _Z_ANGLES:
            for b in _Z_ANGLES:
                for c in _Z_ANGLES:
                    ops = [
                        ("z", c),
                        ("x", 0.5 * math.pi),
                        ("z", b),
                        ("x", 0.5 * math.pi),
                        ("z", a),
                    ]
                    if _canon(_native_matrix(ops)) == _canon(u):
                        return ops
        raise RuntimeError("Clifford element not reachable")  # pragma: no cover

    compiled = [tuple(find(u)) for u in elems]
    index = {_canon(u): i for i, u in enumerate(elems)}
    inverse = [index[_canon(u.conj().T)] for u in elems]
    return tuple(elems), tuple(compiled), index, tuple(inverse)


def clifford_unitaries():
    """The 24 group elements as 2x2 unitaries (global phase unspecified)."""
    return _tables()[0]


def clifford_native_ops(i: int):
    """Native-gate decomposition of element i, time ordered, as (kind, angle).

    kind is "z" (virtual) or "x" (physical pulse); zero-angle z entries are
    omitted.
    """
    ops = _tables()[1][i]
    return tuple(op for op in ops if not (op[0] == "z" and op[1] == 0.0))


def clifford_index(u: np.ndarray) -> int:
    """Group index of a unitary (up to global phase)."""
    return _tables()[2][_canon(u)]


def inverse_index(i: int) -> int:
    return _tables()[3][i]
