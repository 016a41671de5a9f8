"""
Command-line interface.

Frequencies on the command line and in files are ordinary frequencies in Hz.

Exit codes: 0 success, 1 input error, 2 fit did not converge, 3 unstable
working point.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, backaction, cooling, kerr, oracle, spectra
from .fitting import DegenerateModelError, FitError, FitProblem, fit_psd, fit_reflection
from .fitting import models as M
from .fitting.core import REPORT_KEYS, psd_fixed_from_working_point
from .io import (
    Config,
    SpectrumFileError,
    config_from_snapshot,
    read_params_json,
    read_spectrum_csv,
    write_json,
    write_spectrum_csv,
    write_table_csv,
    table_to_csv,
    spectrum_to_csv,
)
from .params import TWO_PI, ParameterError, PumpConfig, UnstableWorkingPointError, as_jsonable
from .spectra import REFLECTION, Spectrum, SpectrumError
from .susceptibility import SingularityError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_UNSTABLE = 3

RNG_ALGORITHM = "numpy.random.PCG64"
SYNTH_KINDS = ("s11-single", "s11-two-mode", "s11-coupled", "psd")
FIT_MODELS = ("s11-single", "s11-two-mode", "s11-coupled", "psd-cooling")
SWEEP_KINDS = ("backaction", "cooling", "gain-vs-power")

_BY_REPORT_KEY = {v: k for k, v in REPORT_KEYS.items()}
_TO_ANGULAR = {M.FREQ: TWO_PI, M.FREQ2: TWO_PI**2, M.TIME: 1.0, M.NUMBER: 1.0}


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


# --- shared helpers --------------------------------------------------------

def _load_config(args) -> Config:
    if not args.params:
        raise CliError("--params is required for this command")
    return read_params_json(args.params, args.set)



def _emit_json(obj, out) -> None:
    if out:
        write_json(obj, out)
    else:
        sys.stdout.write(json.dumps(as_jsonable(obj), indent=2, sort_keys=True) + "\n")


def working_point_summary(cfg: Config) -> dict:
    modes = backaction.eigenfrequencies(cfg.circuit, cfg.drive, cfg.pump)
    return {
        "nD": cfg.drive.n_d,
        "OmegaI": cfg.drive.Omega_i / TWO_PI,
        "gainG": cfg.drive.gain,
        "kappaDriven": cfg.drive.kappa_driven / TWO_PI,
        "omega0": cfg.drive.omega0 / TWO_PI,
        "regime": modes.regime.value,
        "nmsThresholdGMinus": backaction.nms_threshold(
            cfg.drive.kappa_driven, cfg.circuit.Gamma0, cfg.drive.gain) / TWO_PI,
    }


def _linspace(start, stop, num, what) -> np.ndarray:
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise CliError(f"{what} range must be finite")
    if num < 1:
        raise CliError(f"{what} needs at least one point")
    if num > 1 and not stop > start:
        raise CliError(f"{what} range needs stop > start")
    return np.linspace(start, stop, num)


# --- synth -----------------------------------------------------------------

def _grid(center_hz, linewidth_hz, args, extra_hz=0.0):
    if args.grid_points < 2 or args.grid_span <= 0:
        raise CliError("--grid-points must be >= 2 and --grid-span positive")
    half = extra_hz + args.grid_span * linewidth_hz
    return np.linspace(center_hz - half, center_hz + half, args.grid_points)


def _add_noise(spec: Spectrum, sigma, seed) -> Spectrum:
    if not sigma:
        return spec
    if seed is None:
        raise CliError("--noise needs an explicit --seed")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = len(spec)
    if spec.kind == REFLECTION:
        noise = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    else:
        noise = sigma * rng.standard_normal(n)
    meta = dict(spec.meta, noise={"sigma": sigma, "seed": seed, "rng": RNG_ALGORITHM})
    try:
        return Spectrum(spec.grid, spec.values + noise, spec.kind, meta)
    except SpectrumError as exc:
        raise CliError(f"noisy spectrum invalid: {exc}") from None


def _synth_one(kind, cfg: Config, args) -> Spectrum:
    c, d, p = cfg.circuit, cfg.drive, cfg.pump
    kd_hz = d.kappa_driven / TWO_PI
    if kind == "s11-single":
        grid = _grid(d.omega0 / TWO_PI, kd_hz, args)
        spec = spectra.s11_single_mode(grid, d.omega0, d.kappa_driven, c.kappa_e, d.gain)
    elif kind == "s11-two-mode":
        grid = _grid(d.omega_d / TWO_PI, kd_hz, args, extra_hz=d.Omega_i / TWO_PI)
        spec = spectra.s11_two_mode(grid, d.omega_d, d.Omega_i, d.kappa_driven, c.kappa_e,
                                    d.gain)
    elif kind == "s11-coupled":
        grid = _grid(d.omega0 / TWO_PI, kd_hz, args)
        spec = spectra.s11_coupled(grid, c, d, p)
    else:
        grid = _grid(d.omega0 / TWO_PI, kd_hz, args)
        spec = spectra.psd_output_quanta(grid, c, d, p, cfg.baths)
    return _add_noise(spec, args.noise, args.seed)


def _write_spectrum(spec: Spectrum, out, fmt):
    if fmt == "json":
        obj = {"kind": spec.kind, "meta": spec.meta, "frequency_hz": spec.grid.tolist()}
        if spec.kind == REFLECTION:
            obj["re_s11"] = spec.values.real.tolist()
            obj["im_s11"] = spec.values.imag.tolist()
        else:
            obj["psd_quanta"] = spec.values.tolist()
        _emit_json(obj, out)
    elif out:
        write_spectrum_csv(spec, out)
    else:
        sys.stdout.write(spectrum_to_csv(spec))


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    summary = working_point_summary(cfg)
    if args.delta_sweep:
        if args.kind != "s11-coupled":
            raise CliError("--delta-sweep is only available for s11-coupled")
        if not args.out:
            raise CliError("--delta-sweep needs --out (used as file name stem)")
        start, stop, num = args.delta_sweep
        deltas = _linspace(start, stop, int(num), "delta sweep")
        out = Path(args.out)
        files = []
        for i, delta_hz in enumerate(deltas):
            pump = PumpConfig.from_coupling(cfg.circuit, cfg.drive, cfg.pump.g_minus,
                                            TWO_PI * delta_hz)
            sub = Config(cfg.circuit, cfg.drive, pump, cfg.baths, cfg.g_plus, cfg.drive_form)
            spec = _synth_one(args.kind, sub, args)
            spec = Spectrum(spec.grid, spec.values, spec.kind,
                            dict(spec.meta, sweepIndex=i, deltaHz=float(delta_hz)))
            name = out.with_name(f"{out.stem}_{i:03d}{out.suffix or '.csv'}")
            _write_spectrum(spec, str(name), args.format)
            files.append(str(name))
        summary["files"] = files
        summary["deltaHz"] = deltas.tolist()
    else:
        spec = _synth_one(args.kind, cfg, args)
        if not args.out:
            raise CliError("synth needs --out (standard output carries the working point)")
        _write_spectrum(spec, args.out, args.format)
        summary["files"] = [args.out]
        if args.noise:
            summary["noise"] = spec.meta["noise"]
    sys.stdout.write(json.dumps(as_jsonable(summary), sort_keys=True) + "\n")
    return EXIT_OK


# --- fit -------------------------------------------------------------------

def _param_name(model: M.Model, key: str) -> str:
    name = key if key in model.params or key in M.NUISANCE else _BY_REPORT_KEY.get(key, key)
    if name not in model.params and name not in M.NUISANCE:
        raise CliError(f"{key!r} is not a parameter of {model.name}")
    return name


def _parse_assignments(model: M.Model, items) -> dict:
    """``name=value`` pairs in CLI units (Hz) converted to angular units."""
    out = {}
    units = {**model.params, **M.NUISANCE}
    for item in items or ():
        if "=" not in item:
            raise CliError(f"expected name=value, got {item!r}")
        key, text = item.split("=", 1)
        name = _param_name(model, key.strip())
        try:
            value = float(text)
        except ValueError:
            raise CliError(f"value of {key} is not a number: {text!r}") from None
        out[name] = value * _TO_ANGULAR[units[name][1]]
    return out


def _fit_context(args, data: Spectrum):
    if args.params:
        return read_params_json(args.params, args.set)
    try:
        return config_from_snapshot(data.meta)
    except (ParameterError, KeyError, TypeError):
        return None


def _meta_value(data, key):
    value = data.meta.get(key)
    return float(value) if isinstance(value, (int, float)) else None


def cmd_fit(args) -> int:
    model = M.get_model(args.model)
    data = read_spectrum_csv(args.data)
    if len(data) == 0:
        raise CliError(f"{args.data}: spectrum has no data rows")
    fixed_cli = _parse_assignments(model, args.fix)
    guess_cli = _parse_assignments(model, args.guess)
    cfg = _fit_context(args, data)

    defaults = {}
    guesses = {}
    if model.name == "s11-single":
        ke = cfg.circuit.kappa_e if cfg else _meta_value(data, "kappaE")
        if ke is not None and cfg is None:
            ke *= TWO_PI
        if ke is not None:
            defaults["kappa_e"] = ke
    elif model.name == "s11-two-mode":
        if cfg is not None:
            defaults["omega_d"] = cfg.drive.omega_d
        elif _meta_value(data, "omegaD") is not None:
            defaults["omega_d"] = TWO_PI * _meta_value(data, "omegaD")
    elif model.name == "s11-coupled":
        if cfg is not None:
            defaults["kappa_e"] = cfg.circuit.kappa_e
            defaults["Gamma0"] = cfg.circuit.Gamma0
    else:
        if cfg is None:
            raise CliError("psd-cooling needs --params or a data file with a parameter snapshot")
        defaults.update(psd_fixed_from_working_point(cfg.circuit, cfg.drive, cfg.pump))
        guesses.update(g2=cfg.pump.g2, n_th_rf=cfg.baths.n_th_rf, n_add=cfg.baths.n_add,
                       scale=1.0)

    free_names = ([_param_name(model, n.strip()) for n in args.free.split(",") if n.strip()]
                  if args.free else list(model.default_free))
    fixed = {k: v for k, v in defaults.items() if k not in free_names}
    fixed.update(fixed_cli)
    free = {}
    for n in free_names:
        if n in fixed_cli:
            continue
        free[n] = guess_cli.get(n, guesses.get(n))
    problem = FitProblem(model.name, data, free, fixed, nuisance=not args.no_nuisance)
    result = fit_reflection(problem) if model.kind == REFLECTION else fit_psd(problem)
    report = result.to_dict()
    report["data"] = str(args.data)
    if model.name == "psd-cooling" and cfg is not None:
        occ = cooling.final_occupations(cfg.circuit, cfg.drive, cfg.pump.g_minus, cfg.baths)
        report["workingPointOccupations"] = {"nFinRF": occ.n_fin_rf, "nFinHF": occ.n_fin_hf}
    _emit_json(report, args.out)
    if not result.converged:
        sys.stderr.write(f"fit did not converge: {result.message}\n")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


# --- sweep -----------------------------------------------------------------

def _sweep_backaction(cfg: Config, values_hz):
    c, d = cfg.circuit, cfg.drive
    cols = ("gMinus_hz", "GammaEff_hz", "kappaEff_hz", "omegaMinus_hz", "omegaPlus_hz",
            "splitting_hz", "GammaPP_hz", "deltaOmega0_hz", "regime")
    rows = []
    for g_hz in values_hz:
        pump = PumpConfig.from_coupling(c, d, TWO_PI * g_hz, cfg.pump.delta)
        m = backaction.eigenfrequencies(c, d, pump)
        gpp, dom = backaction.backaction_rates(c.Omega0 + pump.delta, -c.Omega0, d.gain,
                                               pump.g_minus, d.kappa_driven)
        rows.append((g_hz, m.Gamma_eff / TWO_PI, m.kappa_eff / TWO_PI,
                     m.omega_minus.real / TWO_PI, m.omega_plus.real / TWO_PI,
                     m.splitting / TWO_PI, float(gpp) / TWO_PI, float(dom) / TWO_PI,
                     m.regime.value))
    return cols, rows


def _sweep_cooling(cfg: Config, values_hz):
    c, d = cfg.circuit, cfg.drive
    cols = ("gMinus_hz", "gEff_hz", "nFinRF", "nFinHF", "nLimRF", "nLimHF", "regime")
    rows = []
    for g_hz in values_hz:
        pump = PumpConfig.from_coupling(c, d, TWO_PI * g_hz, cfg.pump.delta)
        o = cooling.final_occupations(c, d, pump.g_minus, cfg.baths)
        regime = backaction.eigenfrequencies(c, d, pump).regime.value
        rows.append((g_hz, o.g_eff / TWO_PI, o.n_fin_rf, o.n_fin_hf, o.n_lim_rf, o.n_lim_hf,
                     regime))
    return cols, rows


def _sweep_gain(cfg: Config, values, control, Delta_d):
    c = cfg.circuit
    kd = cfg.drive.kappa_driven
    cols = ("DeltaD_hz", "nD", "OmegaI_hz", "gainIdler", "gainSignal", "gainSum",
            "idlerFrequency_hz", "signalFrequency_hz", "stable")
    if control == "flux":
        cols = ("flux_per_s",) + cols
    nan = math.nan
    rows = []
    for v in values:
        try:
            if control == "nD":
                d = kerr.drive_from_working_point(c, Delta_d, v, kd)
            else:
                d = kerr.drive_from_flux(c, v, Delta_d, "highest", kd)
            gs = kerr.gain_factor(d.Delta_d, c.kerr, d.n_d, signal=True)
            row = (Delta_d / TWO_PI, d.n_d, d.Omega_i / TWO_PI, d.gain, gs, d.gain + gs,
                   d.omega0 / TWO_PI, (d.omega_d - d.Omega_i) / TWO_PI, 1.0)
        except (UnstableWorkingPointError, ZeroDivisionError):
            row = (Delta_d / TWO_PI, v if control == "nD" else nan) + (nan,) * 6 + (0.0,)
        rows.append(((v,) if control == "flux" else ()) + row)
    return cols, rows


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    values = _linspace(args.start, args.stop, args.num, args.kind)
    if args.kind in ("backaction", "cooling"):
        if np.any(values < 0):
            raise CliError("coupling values |g_-| must be non-negative")
        fn = _sweep_backaction if args.kind == "backaction" else _sweep_cooling
        cols, rows = fn(cfg, values)
    else:
        control = args.control
        if control == "flux" and np.any(values < 0):
            raise CliError("photon flux must be non-negative")
        if control == "nD" and np.any(values < 0):
            raise CliError("n_d must be non-negative")
        Delta_d = (TWO_PI * args.delta_d if args.delta_d is not None else cfg.drive.Delta_d)
        cols, rows = _sweep_gain(cfg, values, control, Delta_d)
    meta = {"sweep": args.kind, "workingPoint": cfg.to_jsonable()}
    if args.format == "json":
        _emit_json({"columns": cols, "rows": [list(r) for r in rows], "meta": meta}, args.out)
    elif args.out:
        write_table_csv(cols, rows, args.out, meta)
    else:
        sys.stdout.write(table_to_csv(cols, rows, meta))
    return EXIT_OK


# --- validate --------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = _load_config(args)
    report = oracle.validation_report(cfg.circuit, cfg.drive, cfg.pump, cfg.baths,
                                      g_plus=cfg.g_plus, n_points=args.points)
    report["workingPoint"] = working_point_summary(cfg)
    _emit_json(report, args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse would exit with 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p, params_required=False):
    p.add_argument("--params", required=params_required, help="JSON parameter file (Hz)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a parameter file entry; repeatable")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="negmass",
        description="Spectra, fits and sweeps for a driven Kerr circuit coupled to an RF mode.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesise a spectrum file")
    p.add_argument("kind", choices=SYNTH_KINDS)
    _common(p, params_required=True)
    p.add_argument("--grid-span", type=float, default=8.0,
                   help="half span in driven linewidths (default 8)")
    p.add_argument("--grid-points", type=int, default=2001)
    p.add_argument("--noise", type=float, default=0.0,
                   help="Gaussian noise per real component (needs --seed)")
    p.add_argument("--seed", type=int, help="seed of the noise generator")
    p.add_argument("--delta-sweep", type=float, nargs=3, metavar=("START", "STOP", "NUM"),
                   help="pump detunings in Hz; writes one file per value")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a spectrum file")
    p.add_argument("model", choices=FIT_MODELS)
    p.add_argument("data", help="spectrum CSV")
    _common(p)
    p.add_argument("--free", help="comma-separated free parameters")
    p.add_argument("--fix", action="append", default=[], metavar="NAME=VALUE",
                   help="hold a parameter fixed (Hz for frequencies)")
    p.add_argument("--guess", action="append", default=[], metavar="NAME=VALUE",
                   help="initial value of a free parameter (Hz for frequencies)")
    p.add_argument("--no-nuisance", action="store_true",
                   help="do not fit complex scale and delay")
    p.set_defaults(func=cmd_fit, format="json")

    p = sub.add_parser("sweep", help="tabulate a quantity against a control parameter")
    p.add_argument("kind", choices=SWEEP_KINDS)
    _common(p, params_required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--num", type=int, default=101)
    p.add_argument("--control", choices=("nD", "flux"), default="nD",
                   help="gain-vs-power control variable")
    p.add_argument("--delta-d", type=float,
                   help="drive detuning in Hz for gain-vs-power (default: from params)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="compare the reduced model with the oracles")
    _common(p, params_required=True)
    p.add_argument("--points", type=int, default=401)
    p.set_defaults(func=cmd_validate, format="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UnstableWorkingPointError, SingularityError) as exc:
        sys.stderr.write(f"unstable working point: {exc}\n")
        return EXIT_UNSTABLE
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except (ParameterError, SpectrumFileError, SpectrumError, FitError,
            DegenerateModelError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
