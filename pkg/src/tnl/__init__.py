"""Transmon noise lab.

Noise-model engine and characterization toolkit for fixed-frequency
transmons: Lindblad propagation of characterization circuits, analytic
survival-probability predictors, stochastic-trajectory and filter-function
machinery for noise spectroscopy, composite Kraus-channel simulation, and
the fitting pipeline that learns the per-qubit / per-pair model parameters
from measured counts.

Units convention: time in microseconds, rates in 1/us (numerically MHz),
and every symbol appearing inside a trigonometric argument (detunings,
couplings, angular frequencies) in rad/us.
"""

from tnl.model import (
    UNITS,
    DcPsd,
    DeviceModel,
    LorentzianPsd,
    NoiseParams1Q,
    PairParams,
    PsdModel,
    SumPsd,
    TabulatedPsd,
    UnitConvention,
    WhitePsd,
    effective_detuning,
    psd_eval,
)

__all__ = [
    "UNITS",
    "DcPsd",
    "DeviceModel",
    "LorentzianPsd",
    "NoiseParams1Q",
    "PairParams",
    "PsdModel",
    "SumPsd",
    "TabulatedPsd",
    "UnitConvention",
    "WhitePsd",
    "effective_detuning",
    "psd_eval",
]

__version__ = "0.1.0"
