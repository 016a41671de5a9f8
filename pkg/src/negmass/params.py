"""
Physical parameters of the two-circuit photon-pressure device.

Everything is stored in angular units (rad/s). Conversion from and to
ordinary frequencies (Hz) happens only in :func:`circuit_from_hz`,
:meth:`CircuitParams.to_hz` and the JSON helpers at the bottom of this module.

Naming
------
``Omega0, Gamma0``
    resonance frequency and total linewidth of the low-frequency (RF) circuit
``omega_c, kappa``
    undriven resonance frequency and total linewidth of the high-frequency
    (HF) Kerr circuit
``g0``
    single-photon photon-pressure coupling
``kerr``
    HF Kerr constant (signed)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Invalid or inconsistent physical parameters."""


class UnstableWorkingPointError(ValueError):
    """The requested drive working point is dynamically unstable."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


# JSON key -> attribute name
_CIRCUIT_KEYS = {
    "Omega0": "Omega0",
    "Gamma0": "Gamma0",
    "GammaE": "Gamma_e",
    "GammaI": "Gamma_i",
    "omegaC": "omega_c",
    "kappa": "kappa",
    "kappaE": "kappa_e",
    "kappaI": "kappa_i",
    "g0": "g0",
    "Kerr": "kerr",
}
_CIRCUIT_REQUIRED = ("Omega0", "Gamma0", "omegaC", "kappa", "kappaE", "g0", "Kerr")


@dataclass(frozen=True)
class CircuitParams:
    """Static device constants of both circuits, angular units."""

    Omega0: float
    Gamma0: float
    Gamma_e: float
    Gamma_i: float
    omega_c: float
    kappa: float
    kappa_e: float
    kappa_i: float
    g0: float
    kerr: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _finite(f.name, getattr(self, f.name)))
        if self.Omega0 <= 0 or self.omega_c <= 0:
            raise ParameterError("resonance frequencies must be positive")
        if self.Gamma0 <= 0 or self.kappa <= 0:
            raise ParameterError("total linewidths must be positive")
        for name in ("Gamma_e", "Gamma_i", "kappa_e", "kappa_i"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        _check_sum("Gamma0", self.Gamma0, self.Gamma_e, self.Gamma_i)
        _check_sum("kappa", self.kappa, self.kappa_e, self.kappa_i)
        if self.kappa >= self.Omega0:
            raise ParameterError(
                "kappa must be smaller than Omega0 (sideband-resolved regime), "
                f"got kappa={self.kappa:.6g}, Omega0={self.Omega0:.6g} rad/s"
            )

    @classmethod
    def from_totals(cls, *, Omega0, Gamma0, omega_c, kappa, kappa_e, g0, kerr,
                    Gamma_e=0.0) -> "CircuitParams":
        """Build from total linewidths; the internal parts are the remainders."""
        return cls(
            Omega0=Omega0, Gamma0=Gamma0, Gamma_e=Gamma_e, Gamma_i=Gamma0 - Gamma_e,
            omega_c=omega_c, kappa=kappa, kappa_e=kappa_e, kappa_i=kappa - kappa_e,
            g0=g0, kerr=kerr,
        )

    def to_hz(self) -> dict[str, float]:
        """Ordinary-frequency dictionary with the JSON key names."""
        return {key: getattr(self, attr) / TWO_PI for key, attr in _CIRCUIT_KEYS.items()}

    def with_kappa(self, kappa: float) -> "CircuitParams":
        """Copy with a different total HF linewidth (external part kept)."""
        return replace(self, kappa=kappa, kappa_i=kappa - self.kappa_e)


def _check_sum(total_name, total, a, b):
    if not math.isclose(a + b, total, rel_tol=1e-12, abs_tol=0.0):
        raise ParameterError(
            f"partial linewidths of {total_name} do not add up: {a} + {b} != {total}"
        )


def circuit_from_hz(values: Mapping[str, float]) -> CircuitParams:
    """Create :class:`CircuitParams` from ordinary frequencies in Hz.

    Required keys are ``Omega0, Gamma0, omegaC, kappa, kappaE, g0, Kerr``.
    ``GammaE`` defaults to 0 (RF feedline undriven), ``GammaI`` and ``kappaI``
    default to the remainder of the totals. Unknown keys are rejected.
    """
    unknown = set(values) - set(_CIRCUIT_KEYS)
    if unknown:
        raise ParameterError(f"unknown circuit keys: {sorted(unknown)}")
    missing = [k for k in _CIRCUIT_REQUIRED if k not in values]
    if missing:
        raise ParameterError(f"missing circuit keys: {missing}")
    hz = {k: _finite(k, v) for k, v in values.items()}
    Gamma0 = hz["Gamma0"]
    Gamma_e = hz.get("GammaE", 0.0)
    Gamma_i = hz.get("GammaI", Gamma0 - Gamma_e)
    kappa = hz["kappa"]
    kappa_e = hz["kappaE"]
    kappa_i = hz.get("kappaI", kappa - kappa_e)
    if kappa <= 0 or Gamma0 <= 0:
        raise ParameterError("total linewidths must be positive")
    return CircuitParams(
        Omega0=TWO_PI * hz["Omega0"],
        Gamma0=TWO_PI * Gamma0,
        Gamma_e=TWO_PI * Gamma_e,
        Gamma_i=TWO_PI * Gamma_i,
        omega_c=TWO_PI * hz["omegaC"],
        kappa=TWO_PI * kappa,
        kappa_e=TWO_PI * kappa_e,
        kappa_i=TWO_PI * kappa_i,
        g0=TWO_PI * hz["g0"],
        kerr=TWO_PI * hz["Kerr"],
    )


#: Device constants of the reference device, ordinary frequencies in Hz.
REFERENCE_DEVICE_HZ = {
    "Omega0": 452e6,
    "Gamma0": 45e3,
    "omegaC": 7.211e9,
    "kappa": 420e3,
    "kappaE": 85e3,
    "g0": 175e3,
    "Kerr": -5e3,
}


@dataclass(frozen=True)
class DriveState:
    """Strong-drive working point of the Kerr circuit.

    Build it with :func:`negmass.kerr.drive_from_working_point`,
    :func:`negmass.kerr.drive_from_gain` or :func:`negmass.kerr.undriven`;
    those keep ``Omega_i`` and ``gain`` consistent with ``(Delta_d, n_d)``.
    """

    omega_d: float
    Delta_d: float
    n_d: float
    Omega_i: float
    gain: float
    kappa_driven: float
    omega0: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _finite(f.name, getattr(self, f.name)))
        if self.n_d < 0:
            raise ParameterError("n_d must be non-negative")
        if self.Omega_i < 0:
            raise ParameterError("Omega_i must be non-negative")
        if self.kappa_driven <= 0:
            raise ParameterError("kappa_driven must be positive")

    @property
    def kerr_shift(self) -> float:
        """Idler offset divided by driven linewidth, a validity indicator."""
        return self.Omega_i / self.kappa_driven


@dataclass(frozen=True)
class PumpConfig:
    """Photon-pressure sideband pump near the blue idler sideband.

    ``delta`` is the detuning from ``omega0 + Omega0``; ``g_minus`` the complex
    multi-photon coupling; ``n_minus = |g_minus|^2 / g0^2``.
    """

    omega_p: float
    delta: float
    g_minus: complex
    n_minus: float

    def __post_init__(self):
        object.__setattr__(self, "omega_p", _finite("omega_p", self.omega_p))
        object.__setattr__(self, "delta", _finite("delta", self.delta))
        object.__setattr__(self, "n_minus", _finite("n_minus", self.n_minus))
        g = complex(self.g_minus)
        if not (math.isfinite(g.real) and math.isfinite(g.imag)):
            raise ParameterError("g_minus must be finite")
        object.__setattr__(self, "g_minus", g)
        if self.n_minus < 0:
            raise ParameterError("n_minus must be non-negative")

    @classmethod
    def from_photon_number(cls, params: CircuitParams, drive: DriveState,
                           n_minus: float, delta: float = 0.0,
                           phase: float = 0.0) -> "PumpConfig":
        g = math.sqrt(n_minus) * params.g0 * complex(math.cos(phase), math.sin(phase))
        return cls(drive.omega0 + params.Omega0 + delta, delta, g, n_minus)

    @classmethod
    def from_coupling(cls, params: CircuitParams, drive: DriveState,
                      g_minus: complex, delta: float = 0.0) -> "PumpConfig":
        n_minus = abs(g_minus) ** 2 / params.g0 ** 2
        return cls(drive.omega0 + params.Omega0 + delta, delta, g_minus, n_minus)

    @property
    def g2(self) -> float:
        return abs(self.g_minus) ** 2


@dataclass(frozen=True)
class BathOccupations:
    """Thermal bath occupations (quanta) of both circuits plus amplifier noise.

    ``n_th_rf`` and ``n_th_hf`` are the linewidth-weighted averages of the
    internal and external baths; use :meth:`from_partials` or :meth:`thermal`
    rather than filling them in by hand.
    """

    n_th_rf: float
    n_e_rf: float
    n_i_rf: float
    n_th_hf: float
    n_e_hf: float
    n_i_hf: float
    n_add: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = _finite(f.name, getattr(self, f.name))
            if value < 0:
                raise ParameterError(f"{f.name} must be non-negative")
            object.__setattr__(self, f.name, value)

    @classmethod
    def from_partials(cls, params: CircuitParams, *, n_e_rf=0.0, n_i_rf=0.0,
                      n_e_hf=0.0, n_i_hf=0.0, n_add=0.0) -> "BathOccupations":
        n_th_rf = (params.Gamma_i * n_i_rf + params.Gamma_e * n_e_rf) / params.Gamma0
        n_th_hf = (params.kappa_i * n_i_hf + params.kappa_e * n_e_hf) / params.kappa
        return cls(n_th_rf, n_e_rf, n_i_rf, n_th_hf, n_e_hf, n_i_hf, n_add)

    @classmethod
    def thermal(cls, n_th_rf: float = 0.0, n_th_hf: float = 0.0,
                n_add: float = 0.0) -> "BathOccupations":
        """Internal and external baths at the same occupation."""
        return cls(n_th_rf, n_th_rf, n_th_rf, n_th_hf, n_th_hf, n_th_hf, n_add)


def as_jsonable(obj: Any) -> Any:
    """Recursively turn parameter objects into JSON-friendly data (Hz units)."""
    if isinstance(obj, CircuitParams):
        return obj.to_hz()
    if isinstance(obj, DriveState):
        return {
            "omegaD": obj.omega_d / TWO_PI, "DeltaD": obj.Delta_d / TWO_PI,
            "nD": obj.n_d, "OmegaI": obj.Omega_i / TWO_PI, "gainG": obj.gain,
            "kappaDriven": obj.kappa_driven / TWO_PI, "omega0": obj.omega0 / TWO_PI,
        }
    if isinstance(obj, PumpConfig):
        return {
            "omegaP": obj.omega_p / TWO_PI, "delta": obj.delta / TWO_PI,
            "gMinus": abs(obj.g_minus) / TWO_PI,
            "gMinusPhase": math.atan2(obj.g_minus.imag, obj.g_minus.real),
            "nMinus": obj.n_minus,
        }
    if isinstance(obj, BathOccupations):
        return {
            "nThRF": obj.n_th_rf, "nERF": obj.n_e_rf, "nIRF": obj.n_i_rf,
            "nThHF": obj.n_th_hf, "nEHF": obj.n_e_hf, "nIHF": obj.n_i_hf,
            "nAdd": obj.n_add,
        }
    if isinstance(obj, dict):
        return {k: as_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj
