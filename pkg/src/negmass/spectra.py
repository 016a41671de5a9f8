"""
Forward synthesis of measurable spectra.

Spectra live on grids of absolute ordinary frequencies (Hz) and store complex
reflection coefficients or real PSDs in units of quanta. Conversion to dB is
left to the output layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .params import (
    TWO_PI,
    BathOccupations,
    CircuitParams,
    DriveState,
    PumpConfig,
    as_jsonable,
)
from .susceptibility import (
    chi_generalized,
    chi_hf_effective,
    chi_pump_frame,
    chi_rf_bare,
)
from .kerr import two_mode_reflection

REFLECTION = "reflection"
PSD = "psd"
KINDS = (REFLECTION, PSD)


class SpectrumError(ValueError):
    """Spectrum data violating its invariants."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Frequency grid (Hz) with reflection or PSD values."""

    grid: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpectrumError(f"unknown spectrum kind {self.kind!r}")
        grid = np.array(self.grid, dtype=float).ravel()
        dtype = complex if self.kind == REFLECTION else float
        values = np.array(self.values, dtype=dtype).ravel()
        if grid.shape != values.shape:
            raise SpectrumError("grid and values differ in length")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise SpectrumError("spectrum contains NaN or Inf")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            bad = int(np.argmin(np.diff(grid) > 0)) + 1
            raise SpectrumError(f"grid not strictly increasing at index {bad}")
        if self.kind == PSD and np.any(values < 0):
            raise SpectrumError("PSD values must be non-negative")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.grid.size

    @property
    def omega(self) -> np.ndarray:
        """Grid in angular units."""
        return TWO_PI * self.grid


def symmetric_grid(center_hz, linewidth_hz, n_points=2001, span=8.0):
    """``n_points`` evenly spaced frequencies covering ``center +- span * linewidth``."""
    if n_points < 2 or linewidth_hz <= 0 or span <= 0:
        raise ValueError("need n_points >= 2 and positive linewidth and span")
    return np.linspace(center_hz - span * linewidth_hz,
                       center_hz + span * linewidth_hz, int(n_points))


def to_db(s11):
    return 20.0 * np.log10(np.abs(s11))


def _meta(**objs):
    return as_jsonable(objs)


def s11_single_mode(grid_hz, omega0, kappa, kappa_e, gain) -> Spectrum:
    """Reflection of a single generalised mode, ``1 - kappa_e chi_G``."""
    omega = TWO_PI * np.asarray(grid_hz, dtype=float)
    values = 1.0 - kappa_e * chi_generalized(omega - omega0, 0.0, kappa, gain)
    meta = {"model": "s11-single", "omega0": omega0 / TWO_PI, "kappa": kappa / TWO_PI,
            "kappaE": kappa_e / TWO_PI, "gainG": gain}
    return Spectrum(grid_hz, values, REFLECTION, meta)


def s11_two_mode(grid_hz, omega_d, Omega_i, kappa, kappa_e, gain) -> Spectrum:
    """Reflection of the driven cavity showing both signal and idler modes."""
    omega = TWO_PI * np.asarray(grid_hz, dtype=float)
    values = two_mode_reflection(omega, omega_d, Omega_i, kappa, kappa_e, gain)
    meta = {"model": "s11-two-mode", "omegaD": omega_d / TWO_PI,
            "OmegaI": Omega_i / TWO_PI, "kappa": kappa / TWO_PI,
            "kappaE": kappa_e / TWO_PI, "gainG": gain}
    return Spectrum(grid_hz, values, REFLECTION, meta)


def pump_frame(grid_hz, pump: PumpConfig):
    """Offsets ``omega - omega_p`` (rad/s) for an absolute grid in Hz."""
    return TWO_PI * np.asarray(grid_hz, dtype=float) - pump.omega_p


def s11_coupled_values(Omega, params: CircuitParams, drive: DriveState,
                       pump: PumpConfig):
    """``1 - kappa_e chi_G / (1 - |g|^2 chi_G chibar_0)`` at pump-frame offsets."""
    return 1.0 - params.kappa_e * chi_hf_effective(Omega, params, drive, pump)


def s11_coupled(grid_hz, params: CircuitParams, drive: DriveState,
                pump: PumpConfig) -> Spectrum:
    """Probe reflection around the idler with the sideband pump on."""
    values = s11_coupled_values(pump_frame(grid_hz, pump), params, drive, pump)
    return Spectrum(grid_hz, values, REFLECTION,
                    {"model": "s11-coupled",
                     **_meta(circuit=params, drive=drive, pump=pump)})


def mirror_susceptibility(Omega, params: CircuitParams, drive: DriveState,
                          pump: PumpConfig):
    """The mirrored Kerr component ``chibar_p2`` at pump-frame offsets."""
    return chi_pump_frame(Omega, pump.omega_p - params.omega_c, params.kerr, drive.n_d,
                          drive.kappa_driven, conjugate_shifted=True,
                          Omega_dp=drive.omega_d - pump.omega_p)


def psd_output_values(Omega, params: CircuitParams, drive: DriveState,
                      pump: PumpConfig, baths: BathOccupations):
    """HF output PSD in quanta for a cold HF bath, at pump-frame offsets.

    ``1/2 + n_add + kappa_e |g|^2 |chi_G^eff|^2 |chibar_0|^2 Gamma0 (n_RF + 1)
    + kappa_e kappa K^2 n_d^2 |chibar_p2|^2 |chi_G^eff|^2``
    """
    kappa = drive.kappa_driven
    chi_eff2 = np.abs(chi_hf_effective(Omega, params, drive, pump)) ** 2
    chi0_2 = np.abs(chi_rf_bare(Omega, params.Omega0, params.Gamma0)) ** 2
    mirror2 = np.abs(mirror_susceptibility(Omega, params, drive, pump)) ** 2
    x2 = (params.kerr * drive.n_d) ** 2
    rf_term = params.kappa_e * pump.g2 * chi_eff2 * chi0_2 * params.Gamma0 * (baths.n_th_rf + 1.0)
    hf_term = params.kappa_e * kappa * x2 * mirror2 * chi_eff2
    return 0.5 + baths.n_add + rf_term + hf_term


def psd_output_quanta(grid_hz, params: CircuitParams, drive: DriveState,
                      pump: PumpConfig, baths: BathOccupations) -> Spectrum:
    """HF output PSD (quanta) on an absolute grid near the idler."""
    values = psd_output_values(pump_frame(grid_hz, pump), params, drive, pump, baths)
    return Spectrum(grid_hz, values, PSD,
                    {"model": "psd",
                     **_meta(circuit=params, drive=drive, pump=pump, baths=baths)})
