"""
Strong-drive working point of the Kerr circuit.

The drive is characterised by its detuning ``Delta_d = omega_d - omega_c`` and
the intracavity drive photon number ``n_d``. Both quasi-modes of the driven
cavity sit symmetrically around the drive at ``omega_d +- Omega_i``; the
idler (upper) one carries the gain factor ``G``, the signal (lower) one
carries ``1 - G``.
"""

from __future__ import annotations

import math

import numpy as np

from .params import (
    CircuitParams,
    DriveState,
    ParameterError,
    UnstableWorkingPointError,
)


def steady_state_photon_number(flux, Delta_d, kerr, kappa, kappa_e):
    """All physical steady states of the driven Kerr cavity.

    Solves ``n [(kappa/2)^2 + (Delta_d - K n)^2] = kappa_e * flux`` in closed
    form.

    Parameters
    ----------
    flux : float
        Drive photon flux at the feedline (photons/s).
    Delta_d, kerr, kappa, kappa_e : float
        Drive detuning, Kerr constant and linewidths, angular units.

    Returns
    -------
    list of (float, bool)
        Non-negative roots ``(n_d, stable)`` sorted ascending. A root is
        stable when ``d flux / d n_d > 0``.
    """
    if flux < 0:
        raise ValueError("flux must be non-negative")
    if kappa <= 0 or kappa_e < 0:
        raise ValueError("invalid linewidths")
    if flux == 0:
        return [(0.0, True)]
    s = 0.5 * kappa
    P = kappa_e * flux
    if kerr == 0:
        return [(P / (s * s + Delta_d * Delta_d), True)]

    # dimensionless: y = K n / s, d = Delta_d / s, F = K P / s^3
    # y^3 - 2 d y^2 + (1 + d^2) y - F = 0
    d = Delta_d / s
    F = kerr * P / s**3
    ys = _real_cubic_roots(-2.0 * d, 1.0 + d * d, -F)
    out = []
    for y in ys:
        n = y * s / kerr
        if n < 0:
            continue
        slope = 1.0 + (d - y) * (d - 3.0 * y)
        out.append((n, bool(slope > 0)))
    out.sort(key=lambda r: r[0])
    return out


def _real_cubic_roots(b, c, d):
    """Real roots of the monic cubic ``y^3 + b y^2 + c y + d``."""
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc < 0:
        # three distinct real roots
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q / (p * r))
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        ts = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    elif disc == 0:
        if p == 0:
            ts = [0.0]
        else:
            ts = [3.0 * q / p, -1.5 * q / p]
    else:
        sq = math.sqrt(disc)
        # pick the larger-magnitude branch to avoid cancellation
        u = np.cbrt(-q / 2.0 - sq if q > 0 else -q / 2.0 + sq)
        ts = [float(u - p / (3.0 * u))] if u != 0 else [0.0]
    return [t - shift for t in ts]


def idler_frequency(Delta_d, kerr, n_d):
    """Idler offset from the drive, ``sqrt((Delta_d - K n_d)(Delta_d - 3 K n_d))``."""
    x = kerr * n_d
    radicand = (Delta_d - x) * (Delta_d - 3.0 * x)
    if radicand < 0:
        raise UnstableWorkingPointError(
            f"negative idler radicand {radicand:.6g}: working point is unstable"
        )
    return math.sqrt(radicand)


def gain_factor(Delta_d, kerr, n_d, signal=False):
    """Gain factor ``(Omega_i - Delta_d + 2 K n_d) / (2 Omega_i)`` of the idler.

    With ``signal=True`` the signal-mode factor is returned, obtained by
    replacing ``Omega_i`` with ``-Omega_i``; it always equals ``1 - G``.
    """
    Omega_i = idler_frequency(Delta_d, kerr, n_d)
    if Omega_i == 0:
        raise ZeroDivisionError("Omega_i = 0: instability boundary, gain undefined")
    if signal:
        Omega_i = -Omega_i
    return (Omega_i - Delta_d + 2.0 * kerr * n_d) / (2.0 * Omega_i)


def two_mode_reflection(omega, omega_d, Omega_i, kappa, kappa_e, gain):
    """Reflection of the driven cavity with both quasi-modes.

    ``1 - kappa_e (1 - G) chi_s - kappa_e G chi_i`` where the signal mode sits
    at ``omega_d - Omega_i`` and the idler at ``omega_d + Omega_i``.
    """
    if kappa_e > kappa:
        raise ValueError("kappa_e must not exceed kappa")
    nu = np.asarray(omega, dtype=float) - omega_d
    chi_s = 1.0 / (0.5 * kappa + 1j * (nu + Omega_i))
    chi_i = 1.0 / (0.5 * kappa + 1j * (nu - Omega_i))
    return 1.0 - kappa_e * (1.0 - gain) * chi_s - kappa_e * gain * chi_i


def drive_from_working_point(params: CircuitParams, Delta_d, n_d,
                             kappa_driven=None) -> DriveState:
    """Drive state for an explicit ``(Delta_d, n_d)`` pair."""
    if n_d < 0:
        raise ParameterError("n_d must be non-negative")
    Omega_i = idler_frequency(Delta_d, params.kerr, n_d)
    gain = gain_factor(Delta_d, params.kerr, n_d)
    omega_d = params.omega_c + Delta_d
    return DriveState(
        omega_d=omega_d, Delta_d=Delta_d, n_d=n_d, Omega_i=Omega_i, gain=gain,
        kappa_driven=params.kappa if kappa_driven is None else kappa_driven,
        omega0=omega_d + Omega_i,
    )


def working_point_for_gain(gain, Omega_i, kerr):
    """Invert the gain formula: the ``(Delta_d, n_d)`` giving ``gain`` at ``Omega_i``.

    Only ``G <= 0`` or ``G >= 1`` are reachable; the window ``0 < G < 1`` is
    not accessible by parametric driving.
    """
    if Omega_i <= 0:
        raise ParameterError("Omega_i must be positive")
    if 0 < gain < 1:
        raise ParameterError(f"gain {gain} lies in the inaccessible window (0, 1)")
    u = (1.0 - 2.0 * gain) * Omega_i
    shift = 2.0 * Omega_i * math.sqrt(gain * (gain - 1.0))
    if shift == 0:
        return u, 0.0
    if kerr == 0:
        raise ParameterError("a gain other than 0 or 1 needs a non-zero Kerr constant")
    x = math.copysign(shift, kerr)
    return u + 2.0 * x, x / kerr


def drive_from_gain(params: CircuitParams, gain, Omega_i, kappa_driven=None) -> DriveState:
    """Drive state realising ``gain`` with the idler ``Omega_i`` above the drive."""
    Delta_d, n_d = working_point_for_gain(gain, Omega_i, params.kerr)
    state = drive_from_working_point(params, Delta_d, n_d, kappa_driven)
    # keep the requested values exactly; they agree to rounding
    omega_d = state.omega_d
    return DriveState(omega_d, Delta_d, n_d, Omega_i, gain, state.kappa_driven,
                      omega_d + Omega_i)


def drive_from_flux(params: CircuitParams, flux, Delta_d, branch="highest",
                    kappa_driven=None) -> DriveState:
    """Drive state from a feedline photon flux.

    ``branch`` is ``"highest"`` (highest stable root, the default past
    bifurcation), ``"lowest"`` or an index into the stable roots. The
    steady state is solved with ``kappa_driven`` when given.
    """
    kappa = params.kappa if kappa_driven is None else kappa_driven
    roots = [n for n, stable in steady_state_photon_number(
        flux, Delta_d, params.kerr, kappa, params.kappa_e) if stable]
    if not roots:
        raise UnstableWorkingPointError("no stable steady state")
    if branch == "highest":
        n_d = roots[-1]
    elif branch == "lowest":
        n_d = roots[0]
    else:
        n_d = roots[int(branch)]
    return drive_from_working_point(params, Delta_d, n_d, kappa_driven)


def undriven(params: CircuitParams, Delta_d=None) -> DriveState:
    """Reference state without drive photons: ``G = 1`` and ``omega0 = omega_c``."""
    if Delta_d is None:
        Delta_d = -10.0 * params.kappa
    if Delta_d >= 0:
        raise ParameterError("the undriven reference needs a red-detuned Delta_d")
    return drive_from_working_point(params, Delta_d, 0.0)
