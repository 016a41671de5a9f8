"""
Independent checks of the reduced single-mode model.

* :func:`solve_full_linear_response` solves the coupled equations for the
  intracavity component ``c0``, its four-wave-mixing mirror ``c2^dag`` and
  the RF field ``b0^dag`` without eliminating anything.
* :func:`psd_intracavity_closed_form` and :func:`integrate_occupations`
  integrate the intracavity spectra numerically, to be compared with the
  closed forms in :mod:`negmass.cooling`.
* :func:`psd_output_general` is the output PSD with finite HF bath
  occupations.
"""

from __future__ import annotations

import math

import numpy as np

from .backaction import eigenfrequencies
from .cooling import final_occupations
from .params import TWO_PI, BathOccupations, CircuitParams, DriveState, PumpConfig
from .spectra import mirror_susceptibility, s11_coupled_values
from .susceptibility import (
    SingularityError,
    chi_generalized,
    chi_hf_effective,
    chi_pump_frame,
    chi_rf_bare,
    chi_rf_effective,
)

QUAD_SPAN = 40.0
QUAD_ATOL = 1e-6


def solve_full_linear_response(Omega, params: CircuitParams, drive: DriveState,
                               pump: PumpConfig, inputs=(1.0, 0.0, 0.0), g_plus=0.0):
    """Solve the three coupled field equations at pump-frame offsets ``Omega``.

    Parameters
    ----------
    inputs : sequence of 3 complex
        ``(c_in0, c_in2^dag, b_in^dag)``: probe at the signal frequency, probe
        at the mirror frequency and RF feedline input.
    g_plus : complex
        Coupling through the mirror tone; zero in the resonant approximation
        and only used for sensitivity studies.

    Returns
    -------
    ndarray, shape (3,) or (n, 3)
        ``(c0, c2^dag, b0^dag)`` for each frequency.
    """
    Omega = np.asarray(Omega, dtype=float)
    scalar = Omega.ndim == 0
    Om = np.atleast_1d(Omega)
    kappa = drive.kappa_driven
    Delta_p = pump.omega_p - params.omega_c
    Omega_dp = drive.omega_d - pump.omega_p
    x = params.kerr * drive.n_d
    g = pump.g_minus
    inv_p0 = 1.0 / chi_pump_frame(Om, Delta_p, params.kerr, drive.n_d, kappa)
    inv_p2 = 1.0 / chi_pump_frame(Om, Delta_p, params.kerr, drive.n_d, kappa,
                                  conjugate_shifted=True, Omega_dp=Omega_dp)
    inv_b = 1.0 / chi_rf_bare(Om, params.Omega0, params.Gamma0)

    n = Om.size
    A = np.zeros((n, 3, 3), dtype=complex)
    A[:, 0, 0] = inv_p0
    A[:, 0, 1] = -1j * x
    A[:, 0, 2] = 1j * g
    A[:, 1, 0] = 1j * x
    A[:, 1, 1] = inv_p2
    A[:, 1, 2] = -1j * np.conj(g_plus)
    A[:, 2, 0] = -1j * np.conj(g)
    A[:, 2, 2] = inv_b

    c_in0, c_in2, b_in = inputs
    rhs = np.empty((n, 3), dtype=complex)
    rhs[:, 0] = 1j * math.sqrt(params.kappa_e) * c_in0
    rhs[:, 1] = -1j * math.sqrt(params.kappa_e) * c_in2
    rhs[:, 2] = -1j * math.sqrt(params.Gamma_e) * b_in

    det = np.linalg.det(A)
    scale = np.abs(inv_p0 * inv_p2 * inv_b)
    if np.any(np.abs(det) < 1e-12 * scale):
        raise SingularityError("full linear system is singular: unstable working point")
    sol = np.linalg.solve(A, rhs[..., None])[..., 0]
    return sol[0] if scalar else sol


def full_reflection(Omega, params, drive, pump, g_plus=0.0):
    """Probe reflection ``1 + i sqrt(kappa_e) c0`` from the unreduced solve."""
    c0 = solve_full_linear_response(Omega, params, drive, pump, (1.0, 0.0, 0.0),
                                    g_plus)[..., 0]
    return 1.0 + 1j * math.sqrt(params.kappa_e) * c0


def coupling_correction(Omega, params, drive, pump, g_plus):
    """``|K n_d chibar_p2 g_+^* / g_-|``, the coupling dropped by the reduction."""
    if pump.g2 == 0:
        return np.zeros_like(np.asarray(Omega, dtype=float)) if g_plus == 0 else np.inf
    mirror = mirror_susceptibility(Omega, params, drive, pump)
    return np.abs(params.kerr * drive.n_d * mirror * np.conj(g_plus) / pump.g_minus)


def psd_intracavity_closed_form(Omega, params: CircuitParams, drive: DriveState,
                                pump: PumpConfig, baths: BathOccupations):
    """Intracavity HF and RF spectra ``(S_n^HF, S_n^RF)`` (quanta * s)."""
    kappa = drive.kappa_driven
    gain = drive.gain
    g2 = pump.g2
    n_rf = baths.n_th_rf
    n_hf = baths.n_th_hf
    r = (gain - 1.0) / gain
    chi_G = chi_generalized(Omega, params.Omega0 + pump.delta, kappa, gain)
    chi0 = chi_rf_bare(Omega, params.Omega0, params.Gamma0)
    chi_G_eff2 = np.abs(chi_hf_effective(Omega, params, drive, pump)) ** 2
    chi0_eff2 = np.abs(chi_rf_effective(Omega, params, drive, pump)) ** 2
    s_hf = (params.Gamma0 * g2 * chi_G_eff2 * np.abs(chi0) ** 2 * (n_rf + 1.0)
            + kappa * chi_G_eff2 * (n_hf + r * (n_hf + 1.0)))
    s_rf = (params.Gamma0 * chi0_eff2 * n_rf
            + kappa * g2 * chi0_eff2 * np.abs(chi_G) ** 2 * (n_hf + 1.0 + r * n_hf))
    return s_hf, s_rf


def psd_output_general(Omega, params: CircuitParams, drive: DriveState,
                       pump: PumpConfig, baths: BathOccupations):
    """HF output PSD (quanta) with finite internal and external HF baths.

    Excludes amplifier noise; for cold HF baths it equals
    :func:`negmass.spectra.psd_output_values` minus ``n_add``.
    """
    kappa = drive.kappa_driven
    ke = params.kappa_e
    ki = kappa - ke
    n_e = baths.n_e_hf
    n_i = baths.n_i_hf
    chi_eff2 = np.abs(chi_hf_effective(Omega, params, drive, pump)) ** 2
    chi0_2 = np.abs(chi_rf_bare(Omega, params.Omega0, params.Gamma0)) ** 2
    mirror = (params.kerr * drive.n_d) ** 2 * np.abs(
        mirror_susceptibility(Omega, params, drive, pump)) ** 2 * chi_eff2
    return (0.5 + n_e
            + ke * pump.g2 * chi_eff2 * chi0_2 * params.Gamma0 * (baths.n_th_rf + n_e + 1.0)
            + ke * ki * chi_eff2 * (n_i - n_e)
            + ke * ki * mirror * (n_e + n_i + 1.0)
            + ke * ke * mirror * (2.0 * n_e + 1.0))


def adaptive_simpson(f, a, b, atol=1e-8, initial_panels=64, max_rounds=60):
    """Integrate a vectorised ``f`` over ``[a, b]`` by adaptive Simpson.

    Panels are refined breadth-first until each satisfies the Richardson
    criterion ``|S2 - S1| <= 15 tol_panel`` where the panel tolerance is
    ``atol`` weighted by the panel width.
    """
    if not b > a:
        raise ValueError("need b > a")
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    f_lo, f_mid, f_hi = f(lo), f(mid), f(hi)
    whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi)
    total = 0.0
    width = b - a
    for _ in range(max_rounds):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        f_lm, f_rm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid)
        right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi)
        err = left + right - whole
        tol = atol * (hi - lo) / width
        done = np.abs(err) <= 15.0 * tol
        total += np.sum((left + right + err / 15.0)[done])
        keep = ~done
        if not np.any(keep):
            return float(total)
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        f_lo, f_mid, f_hi = f_lo[keep], f_mid[keep], f_hi[keep]
        lm, rm, f_lm, f_rm = lm[keep], rm[keep], f_lm[keep], f_rm[keep]
        left, right = left[keep], right[keep]
        lo, mid, hi, f_lo, f_mid, f_hi, whole = (
            np.concatenate([lo, mid]), np.concatenate([lm, rm]), np.concatenate([mid, hi]),
            np.concatenate([f_lo, f_mid]), np.concatenate([f_lm, f_rm]),
            np.concatenate([f_mid, f_hi]), np.concatenate([left, right]),
        )
    raise RuntimeError("adaptive Simpson did not converge")


def integrate_occupations(params, drive, pump, baths, span=QUAD_SPAN, atol=QUAD_ATOL):
    """Occupations ``(1/2pi) int S_n dOmega`` of the HF and RF modes.

    The integration window is ``-Omega0 +- span * (kappa + Gamma0)``, widened
    by half the normal-mode splitting so that both hybridised peaks stay
    inside it at strong coupling.
    """
    modes = eigenfrequencies(params, drive, pump)
    half = span * (drive.kappa_driven + params.Gamma0) + 0.5 * modes.splitting + abs(pump.delta)
    a, b = -params.Omega0 - half, -params.Omega0 + half
    n_hf = adaptive_simpson(
        lambda w: psd_intracavity_closed_form(w, params, drive, pump, baths)[0],
        a, b, atol * TWO_PI) / TWO_PI
    n_rf = adaptive_simpson(
        lambda w: psd_intracavity_closed_form(w, params, drive, pump, baths)[1],
        a, b, atol * TWO_PI) / TWO_PI
    return n_hf, n_rf


def reflection_errors(params, drive, pump, n_points=401, g_plus=0.0):
    """Relative modulus error of the reduced reflection within +-kappa of the idler."""
    kappa = drive.kappa_driven
    offsets = np.linspace(-kappa, kappa, n_points)
    Omega = drive.omega0 + offsets - pump.omega_p
    full = full_reflection(Omega, params, drive, pump, g_plus)
    reduced = s11_coupled_values(Omega, params, drive, pump)
    return np.abs(np.abs(full) - np.abs(reduced)) / np.abs(reduced)


def validation_report(params, drive, pump, baths, g_plus=0.0, n_points=401):
    """Comparison of the reduced model with the unreduced solve and quadrature."""
    err = reflection_errors(params, drive, pump, n_points, g_plus)
    n_hf, n_rf = integrate_occupations(params, drive, pump, baths)
    occ = final_occupations(params, drive, pump.g_minus, baths)
    Omega_idler = drive.omega0 - pump.omega_p
    return {
        "reflection": {
            "max_relative_error": float(err.max()),
            "mean_relative_error": float(err.mean()),
            "window_hz": drive.kappa_driven / TWO_PI,
            "points": int(n_points),
        },
        "occupations": {
            "n_fin_hf_closed_form": occ.n_fin_hf,
            "n_fin_hf_integral": n_hf,
            "n_fin_hf_relative_error": abs(n_hf / occ.n_fin_hf - 1.0),
            "n_fin_rf_closed_form": occ.n_fin_rf,
            "n_fin_rf_integral": n_rf,
            "n_fin_rf_relative_error": (abs(n_rf / occ.n_fin_rf - 1.0)
                                        if occ.n_fin_rf else abs(n_rf)),
            "span_linewidths": QUAD_SPAN,
        },
        "diagnostics": {
            "Omega_i_over_kappa": drive.Omega_i / drive.kappa_driven,
            "gain_factor": drive.gain,
            "dropped_coupling_ratio": float(
                np.max(coupling_correction(Omega_idler, params, drive, pump, g_plus))),
            "notes": [
                "output PSD is the approximate closed form, implemented term by term",
            ],
        },
    }
