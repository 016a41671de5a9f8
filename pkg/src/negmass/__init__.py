"""
Linear-response toolkit for a Kerr circuit whose driven idler mode acts as a
negative-mass reservoir for a photon-pressure coupled RF circuit.

Angular frequencies (rad/s) are used throughout; files and the command line
use ordinary frequencies in Hz.
"""

from .params import (
    TWO_PI,
    BathOccupations,
    CircuitParams,
    DriveState,
    ParameterError,
    PumpConfig,
    UnstableWorkingPointError,
    circuit_from_hz,
)
from .spectra import Spectrum

__version__ = "0.1.0"

__all__ = [
    "TWO_PI", "BathOccupations", "CircuitParams", "DriveState", "ParameterError",
    "PumpConfig", "Spectrum", "UnstableWorkingPointError", "circuit_from_hz",
]
