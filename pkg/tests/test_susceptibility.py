import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from negmass import kerr, susceptibility as sus
from negmass.backaction import effective_linewidths, nms_threshold
from negmass.params import TWO_PI, PumpConfig

from conftest import KAPPA_DRIVEN

KAPPA = TWO_PI * 300e3
grid = np.linspace(-3e6, 3e6, 801) * TWO_PI


def test_mechanical_resonance_is_real():
    w0, k, m = TWO_PI * 5e6, TWO_PI * 1e3, 2.0
    v = sus.chi_mechanical(w0, w0, k, m)
    assert v.imag == 0
    assert v.real == pytest.approx(1 / (2 * m * w0) * 2 / k, rel=1e-14)


def test_mechanical_negative_mass_flips_sign():
    w = np.linspace(0.9, 1.1, 101) * TWO_PI * 5e6
    a = sus.chi_mechanical(w, TWO_PI * 5e6, TWO_PI * 1e4, 1.5)
    b = sus.chi_mechanical(w, TWO_PI * 5e6, TWO_PI * 1e4, -1.5)
    np.testing.assert_array_equal(a, -b)


def test_mechanical_tail_decreases():
    w0, k = TWO_PI * 5e6, TWO_PI * 1e4
    w = w0 + np.linspace(k, 50 * k, 200)
    mag = np.abs(sus.chi_mechanical(w, w0, k, 1.0))
    assert np.all(np.diff(mag) < 0)


def test_mechanical_rejects_zero_mass():
    with pytest.raises(ValueError):
        sus.chi_mechanical(1.0, 1.0, 1.0, 0.0)


def test_generalized_resonance_values():
    assert sus.chi_generalized(0.0, 0.0, KAPPA, 1.0) == pytest.approx(2 / KAPPA)
    v = sus.chi_generalized(TWO_PI * 1e6, -TWO_PI * 1e6, KAPPA, -0.35)
    assert v.imag == 0 and v.real == pytest.approx(-0.35 * 2 / KAPPA, rel=1e-14)


def test_generalized_inverted_lorentzian():
    re = sus.chi_generalized(grid, 0.0, KAPPA, -0.35).real
    assert np.all(re < 0)
    assert np.argmin(re) == len(grid) // 2


@given(g=st.floats(0.01, 5.0), det=st.floats(-1e7, 1e7))
def test_generalized_sign_law(g, det):
    a = sus.chi_generalized(grid, det, KAPPA, g)
    b = sus.chi_generalized(grid, det, KAPPA, -g)
    np.testing.assert_array_equal(a, -b)


@given(det=st.floats(-1e7, 1e7))
def test_generalized_unit_gain_equals_bare_pump_frame(det):
    a = sus.chi_generalized(grid, det, KAPPA, 1.0)
    b = sus.chi_pump_frame(grid, det, -TWO_PI * 5e3, 0.0, KAPPA)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_pump_frame_resonance():
    Dp = TWO_PI * 2e6
    assert sus.chi_pump_frame(-Dp, Dp, -1.0, 0.0, KAPPA) == pytest.approx(2 / KAPPA)


@given(Odp=st.floats(-1e7, 1e7), nd=st.floats(0, 1e4))
def test_pump_frame_mirror_symmetry(Odp, nd):
    Dp, K = TWO_PI * 3e6, -TWO_PI * 5e3
    a = sus.chi_pump_frame(grid, Dp, K, nd, KAPPA, conjugate_shifted=True, Omega_dp=Odp)
    b = np.conj(sus.chi_pump_frame(-grid + 2 * Odp, Dp, K, nd, KAPPA))
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_pump_frame_rejects_bad_input():
    with pytest.raises(ValueError):
        sus.chi_pump_frame(0.0, 0.0, 0.0, -1.0, KAPPA)
    with pytest.raises(ValueError):
        sus.chi_pump_frame(0.0, 0.0, 0.0, 0.0, 0.0)


def test_kerr_dressed_undriven_is_bare(device):
    st0 = kerr.undriven(device)
    nu = np.linspace(-2, 2, 301) * abs(st0.Delta_d)
    a = sus.chi_kerr_dressed(nu, st0, device)
    b = sus.chi_pump_frame(nu, st0.Delta_d, device.kerr, 0.0, device.kappa)
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_kerr_dressed_peak_at_idler(device, drive):
    nu = drive.Omega_i + np.linspace(-3, 3, 6001) * KAPPA_DRIVEN
    mag = np.abs(sus.chi_kerr_dressed(nu, drive, device))
    assert abs(nu[np.argmax(mag)] - drive.Omega_i) < KAPPA_DRIVEN / 10


def test_kerr_dressed_matches_generalized_near_idler(device, drive):
    nu = drive.Omega_i + np.linspace(-1, 1, 401) * KAPPA_DRIVEN
    full = sus.chi_kerr_dressed(nu, drive, device)
    approx = sus.chi_generalized(nu, -drive.Omega_i, KAPPA_DRIVEN, drive.gain)
    assert np.max(np.abs(full - approx) / np.abs(approx)) < 0.05


def test_mirror_weight_near_idler(device, drive):
    # (G - 1)/G equals K^2 n_d^2 |chibar_p|^2 near the idler when Omega_i >> kappa
    x = device.kerr * drive.n_d
    mirror = sus.chi_pump_frame(drive.Omega_i, drive.Delta_d, device.kerr, drive.n_d,
                                KAPPA_DRIVEN, conjugate_shifted=True)
    lhs = (drive.gain - 1) / drive.gain
    assert x * x * abs(mirror) ** 2 == pytest.approx(lhs, rel=0.05)


def test_rf_effective_decoupled(device, drive):
    pump = PumpConfig.from_coupling(device, drive, 0.0)
    np.testing.assert_allclose(
        sus.chi_rf_effective(grid, device, drive, pump),
        sus.chi_rf_bare(grid, device.Omega0, device.Gamma0), rtol=1e-15)


def test_rf_effective_poles_match_linewidths(device, drive):
    pump = PumpConfig.from_coupling(device, drive, TWO_PI * 60e3)
    k, G0, G = KAPPA_DRIVEN, device.Gamma0, drive.gain
    # 1/chi = (G0/2 + s)(k/2 + s) - G g^2, s = i(Omega + Omega0)
    roots = np.roots([1.0, 0.5 * (k + G0), 0.25 * k * G0 - G * pump.g2])
    widths = sorted(-2 * roots.real)
    Ge, ke = effective_linewidths(device, drive, pump.g_minus)
    assert widths[0] == pytest.approx(Ge, rel=1e-9)
    assert widths[1] == pytest.approx(ke, rel=1e-9)


def test_rf_effective_damped_by_coupling(device, drive):
    vals = []
    for g in np.linspace(0, 0.9, 10) * nms_threshold(KAPPA_DRIVEN, device.Gamma0, drive.gain):
        pump = PumpConfig.from_coupling(device, drive, g)
        vals.append(abs(sus.chi_rf_effective(-device.Omega0, device, drive, pump)))
    assert np.all(np.diff(vals) < 0)


@given(frac=st.floats(0.0, 0.99))
def test_factored_equals_unfactored(device, drive, frac):
    g = frac * nms_threshold(KAPPA_DRIVEN, device.Gamma0, drive.gain)
    pump = PumpConfig.from_coupling(device, drive, g)
    Ge, ke = effective_linewidths(device, drive, g)
    Om = -device.Omega0 + grid
    a = sus.chi_hf_effective(Om, device, drive, pump)
    b = sus.chi_hf_effective_factored(Om, drive.gain, device.Gamma0, Ge, ke, device.Omega0)
    np.testing.assert_allclose(b, a, rtol=1e-9)


def test_factored_decoupled_and_centre(device, drive):
    G0, Om0 = device.Gamma0, device.Omega0
    a = sus.chi_hf_effective_factored(grid, -0.35, G0, G0, KAPPA, Om0)
    np.testing.assert_allclose(a, sus.chi_generalized(grid, Om0, KAPPA, -0.35), rtol=1e-13)
    Ge, ke = TWO_PI * 80e3, TWO_PI * 265e3
    v = sus.chi_hf_effective_factored(-Om0, -0.35, G0, Ge, ke, Om0)
    assert v.imag == 0
    assert v.real == pytest.approx(-0.35 * (G0 / 2) / ((Ge / 2) * (ke / 2)), rel=1e-14)


@pytest.mark.parametrize("kind", list(sus.SusceptibilityKind))
def test_evaluate_dispatch(device, drive, pump, kind):
    Om = -device.Omega0 + grid[:5]
    if kind is sus.SusceptibilityKind.KERR_DRESSED:
        Om = drive.Omega_i + grid[:5]
    elif kind is sus.SusceptibilityKind.MECHANICAL:
        Om = drive.omega0 + grid[:5]
    v = sus.evaluate(kind, Om, device, drive, pump)
    assert v.shape == (5,) and np.all(np.isfinite(v))
    assert sus.evaluate(kind.value, Om, device, drive, pump) == pytest.approx(v)


def test_evaluate_matches_direct(device, drive, pump):
    Om = -device.Omega0 + grid
    np.testing.assert_array_equal(
        sus.evaluate("hfEffective", Om, device, drive, pump),
        sus.chi_hf_effective(Om, device, drive, pump))
    with pytest.raises(ValueError):
        sus.evaluate("nonsense", Om, device, drive, pump)
