import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from negmass import kerr, spectra
from negmass.fitting import (
    DegenerateModelError,
    FitError,
    FitProblem,
    PsdFitter,
    ReflectionFitter,
    fit_psd,
    fit_reflection,
    get_model,
    levenberg_marquardt,
    psd_fixed_from_working_point,
)
from negmass.fitting import models as M
from negmass.params import TWO_PI, BathOccupations, PumpConfig
from negmass.spectra import Spectrum

F0 = 5.0e9
TRUE = {
    "s11-single": {"omega0": TWO_PI * F0, "kappa": TWO_PI * 300e3,
                   "kappa_e": TWO_PI * 85e3, "gain": -0.35},
    "s11-two-mode": {"omega_d": TWO_PI * F0, "Omega_i": TWO_PI * 3e6,
                     "kappa": TWO_PI * 300e3, "kappa_e": TWO_PI * 85e3, "gain": -0.35},
    "s11-coupled": {"omega0": TWO_PI * F0, "gain": -0.35, "kappa_e": TWO_PI * 85e3,
                    "Gamma0": TWO_PI * 45e3, "Gamma_eff": TWO_PI * 87e3,
                    "kappa_eff": TWO_PI * 258e3},
}
FIXED = {"s11-single": ("kappa_e",), "s11-two-mode": ("omega_d",),
         "s11-coupled": ("kappa_e", "Gamma0")}
NUIS = {"scale_re": 0.8, "scale_im": -0.3, "delay": 4e-9}


def grid_for(model):
    if model == "s11-two-mode":
        return np.linspace(F0 - 5e6, F0 + 5e6, 1601)
    return spectra.symmetric_grid(F0, 300e3, n_points=801)


def synth(model, grid, p, nuisance=True):
    spec = get_model(model)
    full = {**p, **NUIS} if nuisance else p
    omega = TWO_PI * grid
    ref = 0.5 * (omega[0] + omega[-1])
    return M.evaluate(spec, omega, full, ref, nuisance)


def problem(model, grid, y, guess=None, nuisance=True):
    spec = get_model(model)
    fixed = {k: TRUE[model][k] for k in FIXED[model]}
    free = {n: (guess or {}).get(n) for n in spec.default_free}
    return FitProblem(model, Spectrum(grid, y, "reflection"), free, fixed, nuisance=nuisance)


@pytest.fixture(scope="module")
def psd_case(device, drive, pump, baths):
    grid = spectra.symmetric_grid(drive.omega0 / TWO_PI, 300e3, n_points=801)
    y = 3.0 * spectra.psd_output_quanta(grid, device, drive, pump, baths).values
    fixed = psd_fixed_from_working_point(device, drive, pump)
    return grid, y, fixed


# --- analytic Jacobians ----------------------------------------------------

PSD_POINT = {"omega0": TWO_PI * F0, "g2": (TWO_PI * 80e3) ** 2, "n_th_rf": 13.0,
             "n_add": 10.0, "scale": 3.0, "gain": -0.35, "kappa": TWO_PI * 300e3,
             "kappa_e": TWO_PI * 85e3, "Gamma0": TWO_PI * 45e3, "delta": TWO_PI * 20e3,
             "kerr_nd": -TWO_PI * 20.6e6, "mirror_detuning": -TWO_PI * 10.5e6}


@pytest.mark.parametrize("model", ["s11-single", "s11-two-mode", "s11-coupled",
                                   "psd-cooling"])
def test_jacobian_matches_finite_differences(model):
    spec = get_model(model)
    if model == "psd-cooling":
        p = dict(PSD_POINT)
        nuisance = False
    else:
        p = {**TRUE[model], **NUIS}
        nuisance = True
    omega = TWO_PI * grid_for(model)[::20]
    ref = 0.5 * (omega[0] + omega[-1])
    names = list(spec.params) + (list(M.NUISANCE) if nuisance else [])
    J = M.jacobian(spec, omega, p, names, ref, nuisance)
    for n in names:
        h = 1e-6 * abs(p[n]) if p[n] != 0 else 1e-9
        if n in ("omega0", "omega_d"):
            h = 10.0
        up, dn = dict(p), dict(p)
        up[n] += h
        dn[n] -= h
        fd = (M.evaluate(spec, omega, up, ref, nuisance)
              - M.evaluate(spec, omega, dn, ref, nuisance)) / (2 * h)
        scale = np.max(np.abs(fd)) + 1e-300
        assert np.max(np.abs(J[n] - fd)) / scale < 1e-5, n


# --- round trips -----------------------------------------------------------

@pytest.mark.parametrize("model", ["s11-single", "s11-two-mode", "s11-coupled"])
def test_noiseless_round_trip(model):
    grid = grid_for(model)
    res = fit_reflection(problem(model, grid, synth(model, grid, TRUE[model])))
    assert res.converged, res.message
    for n, v in TRUE[model].items():
        assert res.estimates[n] == pytest.approx(v, rel=1e-6), n
    for n, v in NUIS.items():
        assert res.estimates[n] == pytest.approx(v, rel=1e-6, abs=1e-12), n


@pytest.mark.parametrize("model", ["s11-single", "s11-two-mode", "s11-coupled"])
@pytest.mark.parametrize("factor", [0.8, 1.2])
def test_perturbed_guess_converges(model, factor):
    grid = grid_for(model)
    spec = get_model(model)
    guess = {n: TRUE[model][n] * (factor if n != spec.centre else 1.0)
             for n in spec.default_free}
    guess[spec.centre] = TRUE[model][spec.centre] + (factor - 1) * 1e5
    res = fit_reflection(problem(model, grid, synth(model, grid, TRUE[model]), guess))
    assert res.converged
    for n, v in TRUE[model].items():
        assert res.estimates[n] == pytest.approx(v, rel=1e-6), n


def test_history_monotone():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    res = fit_reflection(problem("s11-single", grid, y))
    h = np.array(res.history)
    assert h.size >= 2 and np.all(np.diff(h) <= 0)
    assert res.iterations <= 200


@given(phase=st.floats(-np.pi, np.pi))
@settings(max_examples=10)
def test_phase_invariance(phase):
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    a = fit_reflection(problem("s11-single", grid, y))
    b = fit_reflection(problem("s11-single", grid, y * np.exp(1j * phase)))
    for n in TRUE["s11-single"]:
        assert b.estimates[n] == pytest.approx(a.estimates[n], rel=1e-9), n


def test_degenerate_free_set():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    prob = FitProblem("s11-single", Spectrum(grid, y, "reflection"),
                      {"omega0": None, "kappa": None, "kappa_e": None, "gain": None})
    with pytest.raises(DegenerateModelError):
        fit_reflection(prob)


def test_bounds_are_respected():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    free = {"omega0": None, "kappa": TWO_PI * 250e3, "gain": -0.3}
    prob = FitProblem("s11-single", Spectrum(grid, y, "reflection"), free,
                      {"kappa_e": TRUE["s11-single"]["kappa_e"]},
                      bounds={"kappa": (TWO_PI * 200e3, TWO_PI * 280e3)})
    res = fit_reflection(prob)
    assert TWO_PI * 200e3 <= res.estimates["kappa"] <= TWO_PI * 280e3 * (1 + 1e-12)
    with pytest.raises(FitError):
        fit_reflection(FitProblem("s11-single", Spectrum(grid, y, "reflection"), free,
                                  {"kappa_e": 1.0},
                                  bounds={"kappa": (1.0, 2.0)}))


def test_problem_validation():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    data = Spectrum(grid, y, "reflection")
    with pytest.raises(FitError):
        FitProblem("s11-single", data, {"bogus": None})
    with pytest.raises(FitError):
        FitProblem("s11-single", data, {"kappa": None}, {"kappa": 1.0})
    with pytest.raises(FitError):
        FitProblem("s11-single", data, {})
    with pytest.raises(FitError):
        FitProblem("s11-single", data, {"kappa": None}, bounds={"gain": (0, 1)})
    with pytest.raises(FitError):
        FitProblem("psd-cooling", data, {"g2": None})
    with pytest.raises(ValueError):
        FitProblem("nope", data, {"kappa": None})
    with pytest.raises(FitError):
        fit_psd(FitProblem("s11-single", data, {"kappa": None}))


def test_too_few_points():
    grid = grid_for("s11-single")[::100]
    y = synth("s11-single", grid, TRUE["s11-single"])
    with pytest.raises(FitError, match="data points"):
        fit_reflection(problem("s11-single", grid, y))


def test_iteration_limit_reported():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    prob = problem("s11-single", grid, y, {"kappa": TWO_PI * 100e3})
    prob = FitProblem(prob.model, prob.data, prob.free, prob.fixed, max_iter=1)
    res = fit_reflection(prob)
    assert not res.converged and res.iterations == 1


def test_result_report_in_hz():
    grid = grid_for("s11-coupled")
    y = synth("s11-coupled", grid, TRUE["s11-coupled"])
    res = fit_reflection(problem("s11-coupled", grid, y))
    d = json.loads(json.dumps(res.to_dict()))
    assert d["estimates"]["kappaEff"] == pytest.approx(258e3, rel=1e-6)
    assert d["estimates"]["omega0"] == pytest.approx(F0, rel=1e-12)
    assert d["derived"]["traceSum"] == pytest.approx(345e3, rel=1e-6)
    assert d["free"][:4] == ["omega0", "gainG", "GammaEff", "kappaEff"]
    corr = np.array(d["correlation"])
    np.testing.assert_allclose(np.diag(corr), 1.0)
    np.testing.assert_allclose(res.predict(grid), y, atol=1e-9)


def test_stderr_scales_with_noise(rng):
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    errs = []
    for sigma in (1e-3, 1e-2):
        noisy = y + sigma * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
        errs.append(fit_reflection(problem("s11-single", grid, noisy)).stderr["kappa"])
    assert errs[1] / errs[0] == pytest.approx(10, rel=0.3)


# --- LM core ----------------------------------------------------------------

def test_lm_linear_problem():
    A = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
    b = np.array([1.0, 3.0, 5.0, 7.0])
    out = levenberg_marquardt(lambda x: A @ x - b, lambda x: A, [0.0, 0.0], ["a", "b"])
    assert out.converged
    np.testing.assert_allclose(out.x, [1.0, 2.0], atol=1e-10)


def test_lm_rank_check():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(DegenerateModelError):
        levenberg_marquardt(lambda x: A @ x, lambda x: A, [1.0, 1.0], ["a", "b"])
    with pytest.raises(DegenerateModelError, match="does not depend"):
        levenberg_marquardt(lambda x: A[:, :1] @ x[:1], lambda x: np.c_[A[:, :1], 0 * A[:, :1]],
                            [1.0, 1.0], ["a", "b"])


# --- estimators -------------------------------------------------------------

def test_estimator_round_trip_and_shuffle(rng):
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    fixed = {"kappa_e": TRUE["s11-single"]["kappa_e"]}
    a = ReflectionFitter(fixed=fixed).fit(grid, y)
    order = rng.permutation(grid.size)
    b = ReflectionFitter(fixed=fixed).fit(grid[order, None], y[order])
    for n in a.estimates_:
        assert b.estimates_[n] == pytest.approx(a.estimates_[n], rel=1e-12)
    assert a.converged_ and a.score(grid, y) > -1e-9
    np.testing.assert_allclose(a.predict(grid), y, atol=1e-9)


def test_estimator_params_and_clone():
    est = ReflectionFitter(model="s11-two-mode", free=("Omega_i", "gain"), nuisance=False)
    params = est.get_params()
    assert params["model"] == "s11-two-mode" and params["nuisance"] is False
    c = clone(est)
    assert c.get_params() == params
    c.set_params(gtol=1e-8)
    assert c.gtol == 1e-8 and est.gtol != 1e-8
    assert "fixed" in PsdFitter().get_params()


def test_estimator_input_checks():
    est = ReflectionFitter()
    with pytest.raises(AttributeError):
        est.predict([1.0])
    g = grid_for("s11-single")
    with pytest.raises(ValueError):
        est.fit(g, np.ones(g.size - 1))
    with pytest.raises(ValueError):
        est.fit(np.r_[g[:-1], g[0]], np.ones(g.size))
    with pytest.raises(ValueError):
        est.fit(np.c_[g, g], np.ones(g.size))


def test_estimator_guess_for_fixed_parameter():
    grid = grid_for("s11-single")
    y = synth("s11-single", grid, TRUE["s11-single"])
    est = ReflectionFitter(guess={"kappa_e": TRUE["s11-single"]["kappa_e"],
                                  "gain": -0.3}).fit(grid, y)
    assert "kappa_e" not in est.free_names_
    assert est.estimates_["gain"] == pytest.approx(-0.35, rel=1e-6)


# --- PSD ---------------------------------------------------------------------

def test_psd_round_trip(psd_case, pump, baths):
    grid, y, fixed = psd_case
    est = PsdFitter(fixed=fixed).fit(grid, y)
    assert est.converged_
    assert est.estimates_["n_th_rf"] == pytest.approx(baths.n_th_rf, rel=1e-6)
    assert est.estimates_["g2"] == pytest.approx(pump.g2, rel=1e-6)
    assert est.estimates_["n_add"] == pytest.approx(baths.n_add, rel=1e-6)
    assert est.estimates_["scale"] == pytest.approx(3.0, rel=1e-6)
    occ = est.occupations_
    assert occ["nFinRF"] == pytest.approx(8.6118, abs=1e-4)
    assert occ["nFinHF"] == pytest.approx(0.70288, abs=1e-5)
    assert occ["regime"] == "weakCoupling"


def test_psd_scale_invariance(psd_case):
    grid, y, fixed = psd_case
    a = PsdFitter(fixed=fixed).fit(grid, y)
    b = PsdFitter(fixed=fixed).fit(grid, 2 * y)
    assert b.estimates_["scale"] == pytest.approx(2 * a.estimates_["scale"], rel=1e-9)
    assert b.occupations_["nFinRF"] == pytest.approx(a.occupations_["nFinRF"], rel=1e-9)


def test_psd_noisy_covariance(psd_case, rng):
    grid, y, fixed = psd_case
    noisy = y * (1 + 0.01 * rng.standard_normal(y.size))
    est = PsdFitter(fixed=fixed).fit(grid, noisy)
    cov = est.covariance_
    np.testing.assert_allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > 0)
    assert est.occupations_["nFinRFStderr"] > 0
    assert abs(est.occupations_["nFinRF"] - 8.6118) < 5 * est.occupations_["nFinRFStderr"]


def test_psd_flat_spectrum(device, rng):
    # decoupled undriven device: the fitted coupling must be consistent with zero
    drive = kerr.undriven(device)
    pump = PumpConfig.from_coupling(device, drive, 0.0)
    grid = spectra.symmetric_grid(drive.omega0 / TWO_PI, 420e3, n_points=801)
    y = spectra.psd_output_quanta(grid, device, drive, pump,
                                  BathOccupations.thermal(13.0, 0.0, 7.5)).values
    y = y * (1 + 1e-3 * rng.standard_normal(y.size))
    fixed = psd_fixed_from_working_point(device, drive, pump)
    fixed.update(scale=1.0, n_th_rf=13.0)
    est = PsdFitter(free=("g2", "n_add"), fixed=fixed).fit(grid, y)
    assert abs(est.estimates_["g2"]) < 3 * est.stderr_["g2"]
    assert est.estimates_["n_add"] == pytest.approx(7.5, rel=1e-3)
