"""
Susceptibilities of the driven Kerr circuit and the coupled RF circuit.

All functions are pure and vectorise over the frequency argument. Frequency
conventions:

* ``Omega`` in the coupled-system functions is the offset from the pump,
  ``omega - omega_p``; the RF resonance sits near ``Omega = -Omega0``.
* ``nu`` in :func:`chi_kerr_dressed` is the offset from the drive,
  ``omega - omega_d``; the idler sits at ``nu = +Omega_i``.
"""

from __future__ import annotations

import enum

import numpy as np

from .params import CircuitParams, DriveState, PumpConfig

SINGULARITY_RTOL = 1e-12


class SingularityError(ArithmeticError):
    """A susceptibility pole was hit; the working point is unstable."""


class SusceptibilityKind(enum.Enum):
    MECHANICAL = "mechanical"
    GENERALIZED = "generalized"
    PUMP_FRAME_0 = "pumpFrame0"
    PUMP_FRAME_CONJ_2 = "pumpFrameConj2"
    RF_CONJ = "rfConj"
    KERR_DRESSED = "kerrDressed"
    HF_EFFECTIVE = "hfEffective"
    RF_EFFECTIVE = "rfEffective"
    HF_EFFECTIVE_FACTORED = "hfEffectiveFactored"


def chi_mechanical(omega, omega0, kappa, mass):
    """Mass-spring susceptibility ``1/(2 m omega0) / (kappa/2 + i(omega - omega0))``.

    A negative ``mass`` is allowed and flips the sign of the response.
    """
    if mass == 0:
        raise ValueError("mass must be non-zero")
    if omega0 <= 0 or kappa <= 0:
        raise ValueError("omega0 and kappa must be positive")
    omega = np.asarray(omega, dtype=float)
    return 1.0 / (2.0 * mass * omega0) / (0.5 * kappa + 1j * (omega - omega0))


def chi_generalized(Omega, detuning, kappa, gain):
    """Generalised cavity susceptibility ``G / (kappa/2 + i(detuning + Omega))``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    Omega = np.asarray(Omega, dtype=float)
    return gain / (0.5 * kappa + 1j * (detuning + Omega))


def chi_pump_frame(Omega, Delta_p, kerr, n_d, kappa, conjugate_shifted=False,
                   Omega_dp=0.0):
    """Bare Kerr-shifted cavity susceptibilities in the pump frame.

    Returns ``chi_p0 = 1/(kappa/2 + i(Delta_p - 2 K n_d + Omega))`` or, with
    ``conjugate_shifted``, the mirrored component
    ``1/(kappa/2 - i(Delta_p - 2 K n_d - Omega + 2 Omega_dp))``.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if n_d < 0:
        raise ValueError("n_d must be non-negative")
    Omega = np.asarray(Omega, dtype=float)
    shifted = Delta_p - 2.0 * kerr * n_d
    if conjugate_shifted:
        return 1.0 / (0.5 * kappa - 1j * (shifted - Omega + 2.0 * Omega_dp))
    return 1.0 / (0.5 * kappa + 1j * (shifted + Omega))


def chi_kerr_dressed(nu, drive: DriveState, params: CircuitParams):
    """Drive-dressed HF susceptibility ``chi_p / (1 - K^2 n_d^2 chi_p chibar_p)``.

    ``nu`` is the probe offset from the drive. Near ``nu = Omega_i`` this is
    approximately ``drive.gain / (kappa/2 + i(nu - Omega_i))``.
    """
    kappa = drive.kappa_driven
    x = params.kerr * drive.n_d
    inv_p0 = 1.0 / chi_pump_frame(nu, drive.Delta_d, params.kerr, drive.n_d, kappa)
    inv_p2 = 1.0 / chi_pump_frame(nu, drive.Delta_d, params.kerr, drive.n_d, kappa,
                                  conjugate_shifted=True)
    denom = inv_p0 * inv_p2 - x * x
    if np.any(np.abs(denom) < SINGULARITY_RTOL * (0.5 * kappa) ** 2):
        raise SingularityError("dressed susceptibility pole: unstable working point")
    return inv_p2 / denom


def chi_rf_bare(Omega, Omega0, Gamma0):
    """Conjugate RF susceptibility ``1/(Gamma0/2 + i(Omega + Omega0))``."""
    Omega = np.asarray(Omega, dtype=float)
    return 1.0 / (0.5 * Gamma0 + 1j * (Omega + Omega0))


def _pump_chi_G(Omega, params, drive, pump):
    return chi_generalized(Omega, params.Omega0 + pump.delta, drive.kappa_driven,
                           drive.gain)


def chi_rf_effective(Omega, params: CircuitParams, drive: DriveState,
                     pump: PumpConfig):
    """Pump-modified RF susceptibility.

    ``1 / (Gamma0/2 + i(Omega + Omega0) - |g_-|^2 chi_G(Omega))`` with
    ``chi_G`` detuned by ``Omega0 + delta``.
    """
    chi_G = _pump_chi_G(Omega, params, drive, pump)
    Omega = np.asarray(Omega, dtype=float)
    return 1.0 / (0.5 * params.Gamma0 + 1j * (Omega + params.Omega0) - pump.g2 * chi_G)


def chi_hf_effective(Omega, params: CircuitParams, drive: DriveState,
                     pump: PumpConfig):
    """Pump-modified HF susceptibility ``chi_G / (1 - |g_-|^2 chi_G chibar_0)``."""
    chi_G = _pump_chi_G(Omega, params, drive, pump)
    chi0 = chi_rf_bare(Omega, params.Omega0, params.Gamma0)
    return chi_G / (1.0 - pump.g2 * chi_G * chi0)


def chi_hf_effective_factored(Omega, gain, Gamma0, Gamma_eff, kappa_eff, Omega0):
    """Pole-factored form of :func:`chi_hf_effective` for a resonant pump.

    Valid below normal-mode splitting, where both effective linewidths are
    real.
    """
    Omega = np.asarray(Omega, dtype=float)
    s = 1j * (Omega + Omega0)
    return gain * (0.5 * Gamma0 + s) / ((0.5 * Gamma_eff + s) * (0.5 * kappa_eff + s))


def evaluate(kind: SusceptibilityKind, Omega, params: CircuitParams,
             drive: DriveState, pump: PumpConfig | None = None):
    """Evaluate any member of the family at a working point.

    ``Omega`` is pump-frame for every kind except ``KERR_DRESSED`` (drive
    frame) and ``MECHANICAL`` (absolute frequency, unit mass).
    """
    kind = SusceptibilityKind(kind)
    if pump is None:
        pump = PumpConfig.from_coupling(params, drive, 0.0)
    Delta_p = pump.omega_p - params.omega_c
    Omega_dp = drive.omega_d - pump.omega_p
    if kind is SusceptibilityKind.MECHANICAL:
        return chi_mechanical(Omega, drive.omega0, drive.kappa_driven, 1.0)
    if kind is SusceptibilityKind.GENERALIZED:
        return _pump_chi_G(Omega, params, drive, pump)
    if kind is SusceptibilityKind.PUMP_FRAME_0:
        return chi_pump_frame(Omega, Delta_p, params.kerr, drive.n_d, drive.kappa_driven)
    if kind is SusceptibilityKind.PUMP_FRAME_CONJ_2:
        return chi_pump_frame(Omega, Delta_p, params.kerr, drive.n_d, drive.kappa_driven,
                              conjugate_shifted=True, Omega_dp=Omega_dp)
    if kind is SusceptibilityKind.RF_CONJ:
        return chi_rf_bare(Omega, params.Omega0, params.Gamma0)
    if kind is SusceptibilityKind.KERR_DRESSED:
        return chi_kerr_dressed(Omega, drive, params)
    if kind is SusceptibilityKind.HF_EFFECTIVE:
        return chi_hf_effective(Omega, params, drive, pump)
    if kind is SusceptibilityKind.RF_EFFECTIVE:
        return chi_rf_effective(Omega, params, drive, pump)
    # HF_EFFECTIVE_FACTORED
    from .backaction import effective_linewidths

    Gamma_eff, kappa_eff = effective_linewidths(params, drive, pump.g_minus)
    return chi_hf_effective_factored(Omega, drive.gain, params.Gamma0, Gamma_eff,
                                     kappa_eff, params.Omega0)
