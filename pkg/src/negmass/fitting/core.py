"""
Fit problems, results and the two fitting entry points.

Reflection data are fitted with uniform complex weighting, i.e. the residual
vector stacks ``Re`` and ``Im`` of ``model - data``. PSD data are fitted with
uniform real weighting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..backaction import modes_from_rates
from ..cooling import occupations_from_rates
from ..params import TWO_PI
from ..spectra import PSD, REFLECTION, Spectrum
from . import models as M
from ._lm import DegenerateModelError, levenberg_marquardt

MAX_ITER = 200
GTOL = 1e-10

REPORT_KEYS = {
    "omega0": "omega0", "omega_d": "omegaD", "Omega_i": "OmegaI",
    "kappa": "kappa", "kappa_e": "kappaE", "gain": "gainG",
    "Gamma0": "Gamma0", "Gamma_eff": "GammaEff", "kappa_eff": "kappaEff",
    "g2": "gMinusSquared", "n_th_rf": "nThRF", "n_add": "nAdd", "scale": "scale",
    "delta": "delta", "kerr_nd": "kerrND", "mirror_detuning": "mirrorDetuning",
    "scale_re": "scaleRe", "scale_im": "scaleIm", "delay": "delay",
}
_UNIT_FACTOR = {M.FREQ: 1.0 / TWO_PI, M.FREQ2: 1.0 / TWO_PI**2, M.TIME: 1.0,
                M.NUMBER: 1.0}


class FitError(ValueError):
    """Ill-posed fit problem."""


@dataclass(frozen=True, eq=False)
class FitProblem:
    """A model, data and the split of parameters into free and fixed.

    Parameters
    ----------
    model : str
        ``s11-single``, ``s11-two-mode``, ``s11-coupled`` or ``psd-cooling``
        (camel-case aliases accepted).
    data : Spectrum
    free : mapping
        Free parameter -> initial guess in angular units, or ``None`` for an
        automatic guess. For reflection models the nuisance parameters
        ``scale_re``, ``scale_im`` and ``delay`` are added automatically
        unless they appear in ``fixed``.
    fixed : mapping
        Parameters held at the given values.
    bounds : mapping
        Optional ``(lower, upper)`` per free parameter.
    nuisance : bool
        Fit a complex scale and an electrical delay (reflection models only).
    """

    model: str
    data: Spectrum
    free: Mapping[str, float | None]
    fixed: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    nuisance: bool = True
    max_iter: int = MAX_ITER
    gtol: float = GTOL

    def __post_init__(self):
        model = M.get_model(self.model)
        object.__setattr__(self, "free", dict(self.free))
        object.__setattr__(self, "fixed", {k: float(v) for k, v in self.fixed.items()})
        object.__setattr__(self, "bounds", dict(self.bounds))
        if not isinstance(self.data, Spectrum):
            raise FitError("data must be a Spectrum")
        if self.data.kind != model.kind:
            raise FitError(f"model {model.name} needs {model.kind} data, got {self.data.kind}")
        nuisance = self.nuisance and model.kind == REFLECTION
        known = set(model.params) | (set(M.NUISANCE) if nuisance else set())
        for name in list(self.free) + list(self.fixed) + list(self.bounds):
            if name not in known:
                raise FitError(f"{name!r} is not a parameter of {model.name}")
        both = set(self.free) & set(self.fixed)
        if both:
            raise FitError(f"parameters both free and fixed: {sorted(both)}")
        for name in self.bounds:
            if name not in self.free:
                raise FitError(f"bounds given for non-free parameter {name!r}")
        if not self.free:
            raise FitError("no free parameters")

    @property
    def spec(self) -> M.Model:
        return M.get_model(self.model)

    def free_names(self) -> tuple[str, ...]:
        names = [n for n in self.spec.params if n in self.free]
        if self.nuisance and self.spec.kind == REFLECTION:
            names += [n for n in M.NUISANCE if n not in self.fixed]
        return tuple(names)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a fit; all values in angular units.

    ``estimates`` holds every model parameter (free and fixed), ``stderr``
    and ``covariance`` only the free ones in the order of ``names``.
    """

    model: str
    names: tuple[str, ...]
    estimates: dict
    stderr: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    message: str
    history: tuple = ()
    omega_ref: float = 0.0
    nuisance: bool = False
    derived: dict = field(default_factory=dict)

    def correlation(self) -> np.ndarray:
        sd = np.sqrt(np.diag(self.covariance))
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = self.covariance / np.outer(sd, sd)
        return np.where(np.isfinite(corr), corr, 0.0)

    def predict(self, grid_hz) -> np.ndarray:
        spec = M.get_model(self.model)
        omega = TWO_PI * np.asarray(grid_hz, dtype=float)
        return M.evaluate(spec, omega, self.estimates, self.omega_ref, self.nuisance)

    def to_dict(self) -> dict:
        """JSON-ready report in Hz."""
        spec = M.get_model(self.model)
        units = {**spec.params, **M.NUISANCE}

        def conv(name, value):
            return value * _UNIT_FACTOR[units[name][1]]

        return {
            "model": spec.name,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
            "residualNorm": float(self.residual_norm),
            "free": [REPORT_KEYS[n] for n in self.names],
            "estimates": {REPORT_KEYS[n]: conv(n, v) for n, v in self.estimates.items()},
            "stderr": {REPORT_KEYS[n]: conv(n, v) for n, v in self.stderr.items()},
            "correlation": self.correlation().tolist(),
            "derived": self.derived,
        }


# --- parameter transforms -------------------------------------------------

def _to_theta(name, value, transform, omega_ref, centre):
    if transform == M.LOG:
        if not value > 0:
            raise FitError(f"{name} must be positive, got {value}")
        return math.log(value)
    if name == centre:
        return value - omega_ref
    return value


def _from_theta(name, theta, transform, omega_ref, centre):
    if transform == M.LOG:
        return math.exp(theta)
    if name == centre:
        return theta + omega_ref
    return theta


def _dv_dtheta(value, transform):
    return value if transform == M.LOG else 1.0


def _theta_bounds(name, lo, hi, transform, omega_ref, centre):
    if transform == M.LOG:
        tlo = math.log(lo) if lo > 0 else -math.inf
        thi = math.log(hi) if hi > 0 else -math.inf
        return tlo, thi
    if name == centre:
        return lo - omega_ref, hi - omega_ref
    return lo, hi


# --- initial guesses -------------------------------------------------------

def _edge_mask(n, frac=0.1):
    k = max(2, int(round(frac * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:k] = True
    mask[-k:] = True
    return mask


def _nuisance_guess(omega, y, omega_ref):
    edges = _edge_mask(omega.size)
    phase = np.unwrap(np.angle(y))
    x = omega[edges] - omega_ref
    if np.ptp(x) > 0:
        # one shared slope for both edges, separate offsets absorb the feature
        n = edges.sum() // 2
        xa, xb = x[:n], x[n:]
        pa, pb = phase[edges][:n], phase[edges][n:]
        num = np.sum((xa - xa.mean()) * (pa - pa.mean())) + np.sum((xb - xb.mean()) * (pb - pb.mean()))
        den = np.sum((xa - xa.mean()) ** 2) + np.sum((xb - xb.mean()) ** 2)
        delay = -num / den if den > 0 else 0.0
    else:
        delay = 0.0
    a = np.mean(y[edges] * np.exp(1j * delay * (omega[edges] - omega_ref)))
    return {"scale_re": float(a.real), "scale_im": float(a.imag), "delay": float(delay)}


def _half_width(omega, mag2, k):
    """Full width at half maximum of ``mag2`` around index ``k``."""
    half = 0.5 * mag2[k]
    left = k
    while left > 0 and mag2[left] > half:
        left -= 1
    right = k
    while right < mag2.size - 1 and mag2[right] > half:
        right += 1
    width = omega[right] - omega[left]
    if width <= 0:
        width = 2.0 * (omega[1] - omega[0]) if omega.size > 1 else 1.0
    return width


def _guess_reflection(spec, omega, y, known, omega_ref, nuisance):
    p = dict(known)
    if nuisance:
        for k, v in _nuisance_guess(omega, y, omega_ref).items():
            p.setdefault(k, v)
        a = p["scale_re"] + 1j * p["scale_im"]
        if a == 0:
            a = 1.0
        e = y / (a * np.exp(-1j * p["delay"] * (omega - omega_ref))) - 1.0
    else:
        e = y - 1.0
    mag2 = np.abs(e) ** 2

    if spec.name == "s11-single":
        k = int(np.argmax(mag2))
        p.setdefault("omega0", float(omega[k]))
        p.setdefault("kappa", float(_half_width(omega, mag2, k)))
        prod = -e[k].real * 0.5 * p["kappa"]
        if "kappa_e" not in p:
            p["kappa_e"] = abs(prod / p.get("gain", 1.0)) or p["kappa"] / 2
        p.setdefault("gain", prod / p["kappa_e"])
    elif spec.name == "s11-two-mode":
        if "omega_d" not in p:
            raise FitError("s11-two-mode needs omega_d (drive frequency) as fixed or guess")
        nu = omega - p["omega_d"]
        up, dn = nu > 0, nu < 0
        if not up.any() or not dn.any():
            raise FitError("grid must straddle the drive frequency")
        ki = int(np.flatnonzero(up)[np.argmax(mag2[up])])
        ks = int(np.flatnonzero(dn)[np.argmax(mag2[dn])])
        p.setdefault("Omega_i", float(0.5 * (nu[ki] - nu[ks])))
        kk = ki if mag2[ki] >= mag2[ks] else ks
        p.setdefault("kappa", float(_half_width(omega, mag2, kk)))
        ai, as_ = -e[ki].real, -e[ks].real
        total = ai + as_
        p.setdefault("kappa_e", abs(total) * 0.5 * p["kappa"] or p["kappa"] / 2)
        p.setdefault("gain", ai / total if total != 0 else 0.5)
    elif spec.name == "s11-coupled":
        k = int(np.argmax(mag2))
        p.setdefault("omega0", float(omega[k]))
        p.setdefault("kappa_eff", float(_half_width(omega, mag2, k)))
        p.setdefault("Gamma_eff", p.get("Gamma0", 0.1 * p["kappa_eff"]))
        p.setdefault("Gamma0", p["Gamma_eff"])
        if "kappa_e" not in p:
            raise FitError("s11-coupled needs kappa_e fixed or guessed")
        e0 = -e[k].real
        p.setdefault("gain", e0 * p["Gamma_eff"] * p["kappa_eff"]
                     / (2.0 * p["kappa_e"] * p["Gamma0"]))
    return p


def _guess_psd(spec, omega, y, known):
    p = dict(known)
    missing = [n for n in ("gain", "kappa", "kappa_e", "Gamma0") if n not in p]
    if missing:
        raise FitError(f"psd-cooling needs {missing} fixed (taken from the working point)")
    p.setdefault("delta", 0.0)
    p.setdefault("kerr_nd", 0.0)
    p.setdefault("mirror_detuning", 0.0)
    p.setdefault("scale", 1.0)
    if "omega0" not in p:
        p["omega0"] = float(omega[int(np.argmax(y))])
    edges = _edge_mask(omega.size)
    p.setdefault("n_add", max(float(np.median(y[edges])) / p["scale"] - 0.5, 0.0))
    p.setdefault("n_th_rf", 1.0)
    if "g2" not in p:
        thr = 0.25 * abs(p["kappa"] - p["Gamma0"])
        p["g2"] = 0.25 * thr * thr / max(abs(p["gain"]), 1e-3)
    return p


# --- engine ----------------------------------------------------------------

def _run(problem: FitProblem) -> FitResult:
    spec = problem.spec
    data = problem.data
    omega = data.omega
    y = data.values
    nuisance = problem.nuisance and spec.kind == REFLECTION
    names = problem.free_names()
    n_res = 2 * omega.size if spec.kind == REFLECTION else omega.size
    if n_res < 5 * len(names) * (2 if spec.kind == REFLECTION else 1):
        raise FitError(f"need at least {5 * len(names)} data points for "
                       f"{len(names)} free parameters, got {omega.size}")
    omega_ref = float(0.5 * (omega[0] + omega[-1]))

    known = {k: v for k, v in problem.free.items() if v is not None}
    known.update(problem.fixed)
    if spec.kind == REFLECTION:
        p0 = _guess_reflection(spec, omega, y, known, omega_ref, nuisance)
    else:
        p0 = _guess_psd(spec, omega, y, known)
    if nuisance:
        for k in M.NUISANCE:
            p0.setdefault(k, problem.fixed.get(k, 0.0))
    missing = [n for n in spec.params if n not in p0]
    if missing:
        raise FitError(f"no value for {missing}")

    units = {**spec.params, **M.NUISANCE}
    tr = {n: units[n][0] for n in names}
    centre = spec.centre
    lo = np.full(len(names), -np.inf)
    hi = np.full(len(names), np.inf)
    for i, n in enumerate(names):
        if n in problem.bounds:
            b_lo, b_hi = problem.bounds[n]
            if not b_lo <= p0[n] <= b_hi:
                raise FitError(f"initial guess {n}={p0[n]} outside bounds {(b_lo, b_hi)}")
            lo[i], hi[i] = _theta_bounds(n, b_lo, b_hi, tr[n], omega_ref, centre)
    theta0 = np.array([_to_theta(n, p0[n], tr[n], omega_ref, centre) for n in names])

    base = dict(p0)

    def unpack(theta):
        p = dict(base)
        for n, t in zip(names, theta):
            p[n] = _from_theta(n, t, tr[n], omega_ref, centre)
        return p

    def residual(theta):
        with np.errstate(over="ignore", invalid="ignore"):
            diff = M.evaluate(spec, omega, unpack(theta), omega_ref, nuisance) - y
        if spec.kind == REFLECTION:
            return np.concatenate([diff.real, diff.imag])
        return diff

    def jac(theta):
        p = unpack(theta)
        d = M.jacobian(spec, omega, p, names, omega_ref, nuisance)
        cols = [d[n] * _dv_dtheta(p[n], tr[n]) for n in names]
        J = np.stack(cols, axis=1)
        if spec.kind == REFLECTION:
            return np.concatenate([J.real, J.imag], axis=0)
        return np.real(J)

    out = levenberg_marquardt(residual, jac, theta0, names, problem.max_iter,
                              problem.gtol, lo, hi)
    p = unpack(out.x)
    dof = n_res - len(names)
    s2 = 2.0 * out.cost / dof if dof > 0 else math.nan
    # column scaling keeps pinv from discarding small-magnitude directions
    D = np.linalg.norm(out.jac, axis=0)
    D = np.where(D > 0, D, 1.0)
    Js = out.jac / D
    cov_theta = s2 * np.linalg.pinv(Js.T @ Js, hermitian=True) / np.outer(D, D)
    T = np.array([_dv_dtheta(p[n], tr[n]) for n in names])
    cov = cov_theta * np.outer(T, T)
    cov = 0.5 * (cov + cov.T)
    stderr = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    return FitResult(
        model=spec.name, names=names, estimates={k: float(v) for k, v in p.items()},
        stderr=stderr, covariance=cov, residual_norm=math.sqrt(2.0 * out.cost),
        converged=out.converged, iterations=out.iterations, message=out.message,
        history=tuple(math.sqrt(2.0 * c) for c in out.history), omega_ref=omega_ref,
        nuisance=nuisance,
    )


def fit_reflection(problem: FitProblem) -> FitResult:
    """Complex least-squares fit of a reflection spectrum.

    Raises
    ------
    FitError
        Wrong data kind, too few points or an inconsistent parameter split.
    DegenerateModelError
        The free parameters are not jointly identifiable.
    """
    if problem.spec.kind != REFLECTION:
        raise FitError(f"{problem.spec.name} is not a reflection model")
    res = _run(problem)
    if res.model == "s11-coupled":
        est = res.estimates
        res.derived["traceSum"] = (est["Gamma_eff"] + est["kappa_eff"]) / TWO_PI
    return res


def fit_psd(problem: FitProblem) -> FitResult:
    """Least-squares fit of an output PSD in quanta.

    Besides the model parameters the result carries derived occupations in
    ``derived`` with first-order error propagation.
    """
    if problem.spec.kind != PSD:
        raise FitError(f"{problem.spec.name} is not a PSD model")
    res = _run(problem)
    res.derived.update(_psd_derived(res))
    return res


def _psd_derived(res: FitResult) -> dict:
    est = res.estimates

    def occ(g2, n_rf):
        o = occupations_from_rates(est["kappa"], est["Gamma0"], est["gain"], max(g2, 0.0),
                                   n_rf)
        return np.array([o.n_fin_rf, o.n_fin_hf])

    center = occ(est["g2"], est["n_th_rf"])
    # first-order propagation over the free (g2, n_th_rf) subset
    grads = []
    idx = []
    for name in ("g2", "n_th_rf"):
        if name in res.names:
            h = 1e-6 * max(abs(est[name]), 1e-6 if name == "n_th_rf" else 1.0)
            hi = dict(g2=est["g2"], n_rf=est["n_th_rf"])
            lo = dict(hi)
            key = "g2" if name == "g2" else "n_rf"
            hi[key] += h
            lo[key] -= h
            grads.append((occ(hi["g2"], hi["n_rf"]) - occ(lo["g2"], lo["n_rf"])) / (2 * h))
            idx.append(res.names.index(name))
    if grads:
        Jg = np.stack(grads, axis=1)
        C = res.covariance[np.ix_(idx, idx)]
        var = np.einsum("ij,jk,ik->i", Jg, C, Jg)
        err = np.sqrt(np.maximum(var, 0.0))
    else:
        err = np.zeros(2)
    modes = modes_from_rates(est["kappa"], est["Gamma0"], est["gain"], max(est["g2"], 0.0),
                             0.0, est["delta"])
    o = occupations_from_rates(est["kappa"], est["Gamma0"], est["gain"], max(est["g2"], 0.0),
                               est["n_th_rf"])
    return {
        "gMinus": math.sqrt(max(est["g2"], 0.0)) / TWO_PI,
        "gEff": o.g_eff / TWO_PI,
        "GammaEff": modes.Gamma_eff / TWO_PI,
        "kappaEff": modes.kappa_eff / TWO_PI,
        "regime": modes.regime.value,
        "nFinRF": float(center[0]),
        "nFinRFStderr": float(err[0]),
        "nFinHF": float(center[1]),
        "nFinHFStderr": float(err[1]),
        "nLimRF": o.n_lim_rf,
        "nLimHF": o.n_lim_hf,
    }


def psd_fixed_from_working_point(params, drive, pump) -> dict:
    """Fixed ``psd-cooling`` parameters implied by a circuit, drive and pump."""
    u = drive.Delta_d - 2.0 * params.kerr * drive.n_d
    return {
        "omega0": drive.omega0,
        "gain": drive.gain,
        "kappa": drive.kappa_driven,
        "kappa_e": params.kappa_e,
        "Gamma0": params.Gamma0,
        "delta": pump.delta,
        "kerr_nd": params.kerr * drive.n_d,
        "mirror_detuning": drive.Omega_i - u,
    }


__all__ = ["FitProblem", "FitResult", "FitError", "DegenerateModelError",
           "fit_reflection", "fit_psd", "psd_fixed_from_working_point"]
