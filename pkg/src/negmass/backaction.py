"""
Dynamical backaction, hybridised eigenfrequencies and coupling regimes.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .params import CircuitParams, DriveState, PumpConfig


class Regime(str, enum.Enum):
    WEAK = "weakCoupling"
    NORMAL_MODE_SPLIT = "normalModeSplit"
    STRONG = "strongCoupling"


class AboveSplittingError(ValueError):
    """Effective linewidths are undefined above normal-mode splitting."""


@dataclass(frozen=True)
class HybridizedModes:
    """Complex eigenfrequencies of the coupled RF/HF system (pump frame).

    ``Gamma_eff`` and ``kappa_eff`` are twice the imaginary parts of the two
    roots (smaller first). Below splitting they are the effective RF and HF
    linewidths; above it they coincide at ``(kappa + Gamma0)/2``.
    """

    omega_plus: complex
    omega_minus: complex
    Gamma_eff: float
    kappa_eff: float
    regime: Regime
    splitting: float
    nms_radicand: float

    @property
    def roots(self):
        return (self.omega_minus, self.omega_plus)


def backaction_rates(Delta, Omega, gain, g_minus, kappa):
    """Weak-coupling optical damping and frequency shift of the RF mode.

    Returns ``(Gamma_pp, delta_Omega0)`` with
    ``Gamma_pp = -G |g|^2 kappa / (kappa^2/4 + (Delta + Omega)^2)`` and
    ``delta_Omega0 = G |g|^2 (Delta + Omega) / (kappa^2/4 + (Delta + Omega)^2)``.
    No check is made that the coupling is actually weak.
    """
    g2 = abs(g_minus) ** 2
    s = np.asarray(Delta + Omega, dtype=float)
    lor = 0.25 * kappa * kappa + s * s
    return -gain * g2 * kappa / lor, gain * g2 * s / lor


def _nms_radicand(kappa, Gamma0, gain, g2):
    # positive => weak coupling (real linewidth split)
    return (0.25 * (kappa - Gamma0)) ** 2 + gain * g2


def nms_threshold(kappa, Gamma0, gain):
    """``|g_-|`` at the onset of normal-mode splitting (``G < 0`` only)."""
    if gain >= 0:
        return math.inf
    return 0.25 * abs(kappa - Gamma0) / math.sqrt(-gain)


def _classify(kappa, Gamma0, gain, g2):
    rad = _nms_radicand(kappa, Gamma0, gain, g2)
    if rad > 0:
        return Regime.WEAK, rad
    half_split = math.sqrt(-rad)
    if half_split > 0.25 * (kappa + Gamma0):
        return Regime.STRONG, rad
    return Regime.NORMAL_MODE_SPLIT, rad


def eigenfrequencies(params: CircuitParams, drive: DriveState,
                     pump: PumpConfig) -> HybridizedModes:
    """Roots of the inverse effective RF susceptibility.

    ``-Omega0 - delta/2 + i(kappa + Gamma0)/4
    +- sqrt(-G |g|^2 - ((kappa - Gamma0 + 2 i delta)/4)^2)`` with
    ``kappa = drive.kappa_driven``. The regime is classified from the
    resonant-pump radicand, i.e. as a property of the coupling strength.
    """
    return modes_from_rates(drive.kappa_driven, params.Gamma0, drive.gain, pump.g2,
                            params.Omega0, pump.delta)


def modes_from_rates(kappa, Gamma0, gain, g2, Omega0=0.0, delta=0.0) -> HybridizedModes:
    """:func:`eigenfrequencies` in terms of bare numbers (``g2 = |g_-|^2``)."""
    centre = complex(-Omega0 - 0.5 * delta, 0.25 * (kappa + Gamma0))
    root = cmath.sqrt(-gain * g2 - (0.25 * (kappa - Gamma0 + 2j * delta)) ** 2)
    a, b = sorted((centre + root, centre - root), key=lambda z: (z.real, z.imag))
    regime, rad = _classify(kappa, Gamma0, gain, g2)
    widths = sorted((2.0 * a.imag, 2.0 * b.imag))
    return HybridizedModes(
        omega_plus=b, omega_minus=a,
        Gamma_eff=widths[0], kappa_eff=widths[1],
        regime=regime, splitting=abs(b.real - a.real), nms_radicand=rad,
    )


def effective_linewidths(params: CircuitParams, drive: DriveState, g_minus):
    """Effective RF and HF linewidths for a resonant pump below splitting.

    ``(kappa + Gamma0)/2 -+ sqrt(((kappa - Gamma0)/2)^2 + 4 G |g|^2)``.
    """
    kappa = drive.kappa_driven
    Gamma0 = params.Gamma0
    rad = (0.5 * (kappa - Gamma0)) ** 2 + 4.0 * drive.gain * abs(g_minus) ** 2
    if rad < 0:
        raise AboveSplittingError(
            "coupling is above normal-mode splitting; use eigenfrequencies()"
        )
    root = math.sqrt(rad)
    mean = 0.5 * (kappa + Gamma0)
    return mean - root, mean + root
