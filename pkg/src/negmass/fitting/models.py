"""
Fit models with closed-form derivatives.

Each model maps angular frequencies and a parameter dict to model values and
to a dict of partial derivatives with respect to the natural parameters.
Centre frequencies are handled as offsets from a reference ``omega_ref``
chosen by the caller (the mean of the grid) to keep ``omega - omega0``
free of cancellation.
"""

from __future__ import annotations

import numpy as np

# parameter transforms used by the optimiser
LOG = "log"
LINEAR = "linear"

# unit tags for reporting
FREQ = "frequency"      # rad/s, reported in Hz
FREQ2 = "frequency^2"   # (rad/s)^2, reported in Hz^2
TIME = "time"           # s
NUMBER = "dimensionless"


class Model:
    name: str = ""
    kind: str = "reflection"
    params: dict[str, tuple[str, str]] = {}  # name -> (transform, unit)
    default_free: tuple[str, ...] = ()
    centre: str | None = None

    def core(self, omega, p):
        raise NotImplementedError

    def core_jacobian(self, omega, p):
        raise NotImplementedError


class SingleModeS11(Model):
    """``1 - kappa_e G / (kappa/2 + i(omega - omega0))``."""

    name = "s11-single"
    params = {
        "omega0": (LINEAR, FREQ),
        "kappa": (LOG, FREQ),
        "kappa_e": (LOG, FREQ),
        "gain": (LINEAR, NUMBER),
    }
    default_free = ("omega0", "kappa", "gain")
    centre = "omega0"

    def core(self, omega, p):
        D = 0.5 * p["kappa"] + 1j * (omega - p["omega0"])
        return 1.0 - p["kappa_e"] * p["gain"] / D

    def core_jacobian(self, omega, p):
        D = 0.5 * p["kappa"] + 1j * (omega - p["omega0"])
        kg = p["kappa_e"] * p["gain"]
        return {
            "omega0": -1j * kg / D**2,
            "kappa": 0.5 * kg / D**2,
            "kappa_e": -p["gain"] / D,
            "gain": -p["kappa_e"] / D,
        }


class TwoModeS11(Model):
    """Signal and idler resonances at ``omega_d -+ Omega_i`` weighted ``1 - G`` and ``G``."""

    name = "s11-two-mode"
    params = {
        "omega_d": (LINEAR, FREQ),
        "Omega_i": (LOG, FREQ),
        "kappa": (LOG, FREQ),
        "kappa_e": (LOG, FREQ),
        "gain": (LINEAR, NUMBER),
    }
    default_free = ("Omega_i", "kappa", "kappa_e", "gain")
    centre = "omega_d"

    def _chis(self, omega, p):
        nu = omega - p["omega_d"]
        chi_s = 1.0 / (0.5 * p["kappa"] + 1j * (nu + p["Omega_i"]))
        chi_i = 1.0 / (0.5 * p["kappa"] + 1j * (nu - p["Omega_i"]))
        return chi_s, chi_i

    def core(self, omega, p):
        chi_s, chi_i = self._chis(omega, p)
        ke, G = p["kappa_e"], p["gain"]
        return 1.0 - ke * (1.0 - G) * chi_s - ke * G * chi_i

    def core_jacobian(self, omega, p):
        chi_s, chi_i = self._chis(omega, p)
        ke, G = p["kappa_e"], p["gain"]
        ws, wi = ke * (1.0 - G), ke * G
        s2, i2 = chi_s**2, chi_i**2
        return {
            "omega_d": -ws * 1j * s2 - wi * 1j * i2,
            "Omega_i": ws * 1j * s2 - wi * 1j * i2,
            "kappa": 0.5 * (ws * s2 + wi * i2),
            "kappa_e": -(1.0 - G) * chi_s - G * chi_i,
            "gain": ke * chi_s - ke * chi_i,
        }


class CoupledFactoredS11(Model):
    """Resonant-pump reflection with both effective linewidths as parameters.

    ``1 - kappa_e G (Gamma0/2 + iz) / ((Gamma_eff/2 + iz)(kappa_eff/2 + iz))``
    with ``z = omega - omega0``.
    """

    name = "s11-coupled"
    params = {
        "omega0": (LINEAR, FREQ),
        "gain": (LINEAR, NUMBER),
        "kappa_e": (LOG, FREQ),
        "Gamma0": (LOG, FREQ),
        "Gamma_eff": (LOG, FREQ),
        "kappa_eff": (LOG, FREQ),
    }
    default_free = ("omega0", "gain", "Gamma_eff", "kappa_eff")
    centre = "omega0"

    def _parts(self, omega, p):
        iz = 1j * (omega - p["omega0"])
        N = 0.5 * p["Gamma0"] + iz
        A = 0.5 * p["Gamma_eff"] + iz
        B = 0.5 * p["kappa_eff"] + iz
        return N, A, B, p["gain"] * N / (A * B)

    def core(self, omega, p):
        return 1.0 - p["kappa_e"] * self._parts(omega, p)[3]

    def core_jacobian(self, omega, p):
        N, A, B, chi = self._parts(omega, p)
        ke = p["kappa_e"]
        return {
            "omega0": -ke * chi * (-1j) * (1.0 / N - 1.0 / A - 1.0 / B),
            "gain": -ke * N / (A * B),
            "kappa_e": -chi,
            "Gamma0": -ke * p["gain"] / (2.0 * A * B),
            "Gamma_eff": ke * chi / (2.0 * A),
            "kappa_eff": ke * chi / (2.0 * B),
        }


class PsdCooling(Model):
    """HF output PSD in quanta, times an overall gain calibration ``scale``.

    ``scale [1/2 + n_add + kappa_e g2 |chi_eff|^2 |chibar_0|^2 Gamma0 (n_th_rf + 1)
    + kappa_e kappa kerr_nd^2 |chibar_p2|^2 |chi_eff|^2]``

    ``g2`` is ``|g_-|^2`` and is allowed through zero so that a featureless
    spectrum can be fitted. ``mirror_detuning`` places the mirrored Kerr
    component: ``chibar_p2 = 1/(kappa/2 + i(z + mirror_detuning))``.
    """

    name = "psd-cooling"
    kind = "psd"
    params = {
        "omega0": (LINEAR, FREQ),
        "g2": (LINEAR, FREQ2),
        "n_th_rf": (LINEAR, NUMBER),
        "n_add": (LINEAR, NUMBER),
        "scale": (LOG, NUMBER),
        "gain": (LINEAR, NUMBER),
        "kappa": (LOG, FREQ),
        "kappa_e": (LOG, FREQ),
        "Gamma0": (LOG, FREQ),
        "delta": (LINEAR, FREQ),
        "kerr_nd": (LINEAR, FREQ),
        "mirror_detuning": (LINEAR, FREQ),
    }
    default_free = ("g2", "n_th_rf", "n_add", "scale")
    centre = "omega0"

    def _parts(self, omega, p):
        z = omega - p["omega0"]
        DG = 0.5 * p["kappa"] + 1j * z
        chi_G = p["gain"] / DG
        chi0 = 1.0 / (0.5 * p["Gamma0"] + 1j * (z - p["delta"]))
        Q = 1.0 - p["g2"] * chi_G * chi0
        chi_eff = chi_G / Q
        mirror = 1.0 / (0.5 * p["kappa"] + 1j * (z + p["mirror_detuning"]))
        return z, DG, chi_G, chi0, Q, chi_eff, mirror

    def _terms(self, p, chi_eff, chi0, mirror):
        ce2 = np.abs(chi_eff) ** 2
        c02 = np.abs(chi0) ** 2
        m2 = np.abs(mirror) ** 2
        rf_unit = p["kappa_e"] * ce2 * c02 * p["Gamma0"]
        rf = p["g2"] * rf_unit * (p["n_th_rf"] + 1.0)
        hf = p["kappa_e"] * p["kappa"] * p["kerr_nd"] ** 2 * m2 * ce2
        return ce2, c02, m2, rf_unit, rf, hf

    def core(self, omega, p):
        _, _, _, chi0, _, chi_eff, mirror = self._parts(omega, p)
        *_, rf, hf = self._terms(p, chi_eff, chi0, mirror)
        return p["scale"] * (0.5 + p["n_add"] + rf + hf)

    def core_jacobian(self, omega, p):
        z, DG, chi_G, chi0, Q, chi_eff, mirror = self._parts(omega, p)
        ce2, c02, m2, rf_unit, rf, hf = self._terms(p, chi_eff, chi0, mirror)
        s = p["scale"]
        g2 = p["g2"]
        ke, kappa, G0 = p["kappa_e"], p["kappa"], p["Gamma0"]
        n1 = p["n_th_rf"] + 1.0
        x2 = p["kerr_nd"] ** 2

        def d_abs2(c, dc):
            return 2.0 * np.real(np.conj(c) * dc)

        # d|chi_eff|^2 given derivatives of chi_G and chi0
        def d_ce2(dchiG, dchi0):
            dchi = dchiG / Q + chi_G * g2 * (dchiG * chi0 + chi_G * dchi0) / Q**2
            return d_abs2(chi_eff, dchi)

        zero = np.zeros_like(z)
        # wrt z (omega0 = -d/dz)
        dG_dz = -1j * chi_G / DG
        d0_dz = -1j * chi0**2
        dce2_dz = d_ce2(dG_dz, d0_dz)
        dc02_dz = d_abs2(chi0, d0_dz)
        dm2_dz = d_abs2(mirror, -1j * mirror**2)
        dS_dz = s * (ke * g2 * G0 * n1 * (dce2_dz * c02 + ce2 * dc02_dz)
                     + ke * kappa * x2 * (dm2_dz * ce2 + m2 * dce2_dz))

        def dS_from(dce2, dc02=zero, dm2=zero):
            return s * (ke * g2 * G0 * n1 * (dce2 * c02 + ce2 * dc02)
                        + ke * kappa * x2 * (dm2 * ce2 + m2 * dce2))

        dce2_dg2 = d_abs2(chi_eff, chi_eff**2 * chi0)
        dce2_dgain = d_ce2(1.0 / DG, zero)
        dce2_dkappa = d_ce2(-0.5 * chi_G / DG, zero)
        dm2_dkappa = d_abs2(mirror, -0.5 * mirror**2)
        dc0_dG0 = -0.5 * chi0**2
        dce2_dG0 = d_ce2(zero, dc0_dG0)
        dc02_dG0 = d_abs2(chi0, dc0_dG0)
        dc0_ddelta = 1j * chi0**2
        dce2_ddelta = d_ce2(zero, dc0_ddelta)
        dc02_ddelta = d_abs2(chi0, dc0_ddelta)

        return {
            "omega0": -dS_dz,
            "g2": s * rf_unit * n1 + dS_from(dce2_dg2),
            "n_th_rf": s * g2 * rf_unit,
            "n_add": s * np.ones_like(z),
            "scale": 0.5 + p["n_add"] + rf + hf,
            "gain": dS_from(dce2_dgain),
            "kappa": dS_from(dce2_dkappa, dm2=dm2_dkappa) + s * hf / kappa,
            "kappa_e": s * (rf + hf) / ke,
            "Gamma0": dS_from(dce2_dG0, dc02=dc02_dG0) + s * rf / G0,
            "delta": dS_from(dce2_ddelta, dc02=dc02_ddelta),
            "kerr_nd": s * 2.0 * ke * kappa * p["kerr_nd"] * m2 * ce2,
            "mirror_detuning": dS_from(zero, dm2=d_abs2(mirror, -1j * mirror**2)),
        }


MODELS = {m.name: m for m in (SingleModeS11(), TwoModeS11(), CoupledFactoredS11(),
                              PsdCooling())}
# aliases matching the model tags used in reports
MODELS["singleModeS11"] = MODELS["s11-single"]
MODELS["twoModeS11"] = MODELS["s11-two-mode"]
MODELS["coupledS11factored"] = MODELS["s11-coupled"]
MODELS["psdCooling"] = MODELS["psd-cooling"]

# nuisance terms of the reflection models: complex scale and electrical delay
NUISANCE = {
    "scale_re": (LINEAR, NUMBER),
    "scale_im": (LINEAR, NUMBER),
    "delay": (LINEAR, TIME),
}


def get_model(name) -> Model:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from "
                         f"{sorted(k for k in MODELS if '-' in k)}") from None


def evaluate(model: Model, omega, p, omega_ref=0.0, nuisance=False):
    """Model values including the nuisance factor for reflection models."""
    core = model.core(omega, p)
    if not nuisance:
        return core
    a = p["scale_re"] + 1j * p["scale_im"]
    return a * np.exp(-1j * p["delay"] * (omega - omega_ref)) * core


def jacobian(model: Model, omega, p, names, omega_ref=0.0, nuisance=False):
    """Derivatives of :func:`evaluate` with respect to ``names`` (natural units)."""
    cj = model.core_jacobian(omega, p)
    if not nuisance:
        return {n: cj[n] for n in names}
    a = p["scale_re"] + 1j * p["scale_im"]
    phase = np.exp(-1j * p["delay"] * (omega - omega_ref))
    core = model.core(omega, p)
    out = {}
    for n in names:
        if n == "scale_re":
            out[n] = phase * core
        elif n == "scale_im":
            out[n] = 1j * phase * core
        elif n == "delay":
            out[n] = -1j * (omega - omega_ref) * a * phase * core
        else:
            out[n] = a * phase * cj[n]
    return out
