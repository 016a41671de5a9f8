"""
Final occupations under sideband pumping of the negative-mass mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import BathOccupations, CircuitParams, DriveState


@dataclass(frozen=True)
class OccupationResult:
    n_fin_hf: float
    n_fin_rf: float
    n_lim_hf: float
    n_lim_rf: float
    g_eff: float
    n_eff_hf: float


def effective_noise_occupations(gain, n_th_hf):
    """Correlators ``(<xi^dag xi>, <xi xi^dag>)`` of the drive-dressed HF bath.

    The drive adds ``(G - 1)/G`` times the vacuum-shifted occupation. The
    difference ``<xi xi^dag> - <xi^dag xi>`` is ``1/G``, negative for a
    negative-mass mode.
    """
    if gain == 0:
        raise ZeroDivisionError("gain factor must be non-zero")
    r = (gain - 1.0) / gain
    return n_th_hf + r * (n_th_hf + 1.0), n_th_hf + 1.0 + r * n_th_hf


def effective_hf_occupation(gain, n_th_hf):
    """Effective thermal HF occupation seen by the RF mode, ``n(2|G|+1) + |G|``."""
    a = abs(gain)
    return n_th_hf * (2.0 * a + 1.0) + a


def final_occupations(params: CircuitParams, drive: DriveState, g_minus,
                      baths: BathOccupations) -> OccupationResult:
    """Closed-form final occupations of both modes and their strong-pump limits."""
    return occupations_from_rates(drive.kappa_driven, params.Gamma0, drive.gain,
                                  abs(g_minus) ** 2, baths.n_th_rf, baths.n_th_hf)


def occupations_from_rates(kappa, Gamma0, gain, g2, n_th_rf, n_th_hf=0.0) -> OccupationResult:
    """:func:`final_occupations` in terms of bare numbers.

    ``kappa`` is the driven HF linewidth and ``g2`` is ``|g_-|^2``.
    """
    a = abs(gain)
    n_eff = effective_hf_occupation(gain, n_th_hf)
    g_eff2 = a * g2
    total = kappa + Gamma0
    den = 4.0 * g_eff2 + kappa * Gamma0
    frac = 4.0 * g_eff2 / den

    n_hf = (kappa / total * (4.0 * g_eff2 + Gamma0 * total) / den * a * (n_eff + 1.0)
            + Gamma0 / total * frac * a * (n_th_rf + 1.0))
    n_rf_fin = (Gamma0 / total * (4.0 * g_eff2 + kappa * total) / den * n_th_rf
                + kappa / total * frac * n_eff)
    lim_rf = (Gamma0 * n_th_rf + kappa * n_eff) / total
    lim_hf = a * (kappa * (n_eff + 1.0) + Gamma0 * (n_th_rf + 1.0)) / total
    return OccupationResult(n_fin_hf=n_hf, n_fin_rf=n_rf_fin, n_lim_hf=lim_hf,
                            n_lim_rf=lim_rf, g_eff=math.sqrt(max(g_eff2, 0.0)),
                            n_eff_hf=n_eff)


def coupling_for_rf_occupation(params: CircuitParams, drive: DriveState,
                               baths: BathOccupations, target):
    """``|g_-|`` at which the RF final occupation reaches ``target``.

    The RF occupation is a Moebius function of ``s = 4 g_eff^2 / (kappa Gamma0)``
    so the inversion is exact. Returns ``None`` if the target lies outside
    the range between the bath and the strong-pump limit.
    """
    kappa = drive.kappa_driven
    Gamma0 = params.Gamma0
    total = kappa + Gamma0
    n_rf = baths.n_th_rf
    n_eff = effective_hf_occupation(drive.gain, baths.n_th_hf)
    # n(s) = (A s + B) / (s + 1)
    A = (Gamma0 * n_rf + kappa * n_eff) / total
    B = n_rf
    if A == target:
        return None
    s = (B - target) / (target - A)
    if not s >= 0 or math.isinf(s):
        return None
    g_eff2 = s * kappa * Gamma0 / 4.0
    return math.sqrt(g_eff2 / abs(drive.gain))
