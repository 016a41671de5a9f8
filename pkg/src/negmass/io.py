"""
Spectrum CSV files and JSON parameter files.

A spectrum file starts with a comment line holding a JSON snapshot
``# {"kind": ..., "meta": {...}}`` followed by a column header and one row
per frequency. Numbers are written with 17 significant digits so that a
write/read cycle reproduces every double exactly.
"""

from __future__ import annotations

import copy
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import kerr
from .params import (
    TWO_PI,
    BathOccupations,
    CircuitParams,
    DriveState,
    ParameterError,
    PumpConfig,
    as_jsonable,
    circuit_from_hz,
)
from .spectra import PSD, REFLECTION, Spectrum, SpectrumError

COLUMNS = {
    REFLECTION: ("frequency_hz", "re_s11", "im_s11"),
    PSD: ("frequency_hz", "psd_quanta"),
}
NUMBER_FORMAT = ".17g"


class SpectrumFileError(ValueError):
    """Malformed spectrum file."""


def _fmt(x: float) -> str:
    return format(float(x), NUMBER_FORMAT)


def _atomic_write(path, text: str) -> None:
    # write to a sibling temp file and rename, so readers never see a partial file
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spectrum_to_csv(spectrum: Spectrum) -> str:
    header = json.dumps({"kind": spectrum.kind, "meta": as_jsonable(spectrum.meta)},
                        sort_keys=True, allow_nan=False)
    lines = ["# " + header, ",".join(COLUMNS[spectrum.kind])]
    if spectrum.kind == REFLECTION:
        for f, v in zip(spectrum.grid, spectrum.values):
            lines.append(f"{_fmt(f)},{_fmt(v.real)},{_fmt(v.imag)}")
    else:
        for f, v in zip(spectrum.grid, spectrum.values):
            lines.append(f"{_fmt(f)},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    """Write ``spectrum`` to ``path`` (replaced atomically)."""
    _atomic_write(path, spectrum_to_csv(spectrum))


def read_spectrum_csv(path) -> Spectrum:
    """Read a spectrum written by :func:`write_spectrum_csv`.

    The kind is taken from the JSON comment line if present, otherwise from
    the column header.

    Raises
    ------
    SpectrumFileError
        Missing header, unknown or missing columns, a malformed row, a
        non-finite value or a frequency that does not increase; the message
        names the offending line.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_spectrum_csv(text, source=str(path))


def parse_spectrum_csv(text: str, source: str = "<string>") -> Spectrum:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    pos = 0
    kind = None
    meta: dict[str, Any] = {}
    if pos < len(lines) and lines[pos].startswith("#"):
        try:
            snap = json.loads(lines[pos][1:].strip() or "{}")
        except json.JSONDecodeError as exc:
            raise SpectrumFileError(f"{source}:1: invalid JSON in comment line: {exc}") from None
        if not isinstance(snap, dict):
            raise SpectrumFileError(f"{source}:1: comment line must hold a JSON object")
        kind = snap.get("kind")
        meta = snap.get("meta", {}) or {}
        pos += 1
    if pos >= len(lines):
        raise SpectrumFileError(f"{source}: missing column header")
    cols = tuple(c.strip() for c in lines[pos].split(","))
    header_line = pos + 1
    by_cols = {v: k for k, v in COLUMNS.items()}
    if kind is None:
        if cols not in by_cols:
            raise SpectrumFileError(
                f"{source}:{header_line}: cannot infer spectrum kind from columns {list(cols)}")
        kind = by_cols[cols]
    if kind not in COLUMNS:
        raise SpectrumFileError(f"{source}: unknown spectrum kind {kind!r}")
    expected = COLUMNS[kind]
    if cols != expected:
        missing = [c for c in expected if c not in cols]
        detail = f"missing column(s) {missing}" if missing else f"unexpected columns {list(cols)}"
        raise SpectrumFileError(f"{source}:{header_line}: {kind} file: {detail}")
    pos += 1

    ncol = len(expected)
    rows = []
    line_no = []
    for i in range(pos, len(lines)):
        raw = lines[i]
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != ncol:
            raise SpectrumFileError(
                f"{source}:{i + 1}: expected {ncol} fields, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise SpectrumFileError(f"{source}:{i + 1}: malformed number in {raw!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise SpectrumFileError(f"{source}:{i + 1}: NaN or Inf value")
        if rows and not vals[0] > rows[-1][0]:
            raise SpectrumFileError(
                f"{source}:{i + 1}: frequency {parts[0]} does not increase "
                f"(previous row on line {line_no[-1]})")
        rows.append(vals)
        line_no.append(i + 1)

    arr = np.array(rows, dtype=float).reshape(-1, ncol)
    values = arr[:, 1] + 1j * arr[:, 2] if kind == REFLECTION else arr[:, 1]
    try:
        return Spectrum(arr[:, 0], values, kind, meta)
    except SpectrumError as exc:
        raise SpectrumFileError(f"{source}: {exc}") from None


# --- parameter files -------------------------------------------------------

SECTIONS = ("circuit", "drive", "pump", "baths")
DRIVE_FORMS = (
    ("gain", {"gainG", "OmegaI"}, {"kappaDriven"}),
    ("workingPoint", {"DeltaD", "nD"}, {"kappaDriven"}),
    ("flux", {"flux", "DeltaD"}, {"branch", "kappaDriven"}),
    ("undriven", set(), {"DeltaD"}),
)
PUMP_KEYS = {"gMinus", "gMinusPhase", "nMinus", "delta", "gPlus"}
BATH_THERMAL = {"nThRF", "nThHF"}
BATH_PARTIAL = {"nERF", "nIRF", "nEHF", "nIHF"}


@dataclass(frozen=True)
class Config:
    """Resolved parameter file: everything in angular units."""

    circuit: CircuitParams
    drive: DriveState
    pump: PumpConfig
    baths: BathOccupations
    g_plus: complex = 0.0
    drive_form: str = "undriven"

    def to_jsonable(self) -> dict:
        return as_jsonable({"circuit": self.circuit, "drive": self.drive,
                            "pump": self.pump, "baths": self.baths})


def _number(section, key, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _resolve_drive(circuit: CircuitParams, raw: Mapping[str, Any]):
    keys = set(raw)
    for form, required, optional in DRIVE_FORMS:
        if required <= keys and keys <= required | optional:
            break
    else:
        raise ParameterError(
            f"drive section {sorted(keys)} matches none of: "
            "{gainG, OmegaI[, kappaDriven]}, {DeltaD, nD[, kappaDriven]}, "
            "{flux, DeltaD[, branch, kappaDriven]} or {} / {DeltaD} for no drive")
    num = {k: _number("drive", k, v) for k, v in raw.items() if k != "branch"}
    kd = TWO_PI * num["kappaDriven"] if "kappaDriven" in num else None
    if form == "gain":
        drive = kerr.drive_from_gain(circuit, num["gainG"], TWO_PI * num["OmegaI"], kd)
    elif form == "workingPoint":
        drive = kerr.drive_from_working_point(circuit, TWO_PI * num["DeltaD"], num["nD"], kd)
    elif form == "flux":
        drive = kerr.drive_from_flux(circuit, num["flux"], TWO_PI * num["DeltaD"],
                                     raw.get("branch", "highest"), kd)
    else:
        Delta = TWO_PI * num["DeltaD"] if "DeltaD" in num else None
        drive = kerr.undriven(circuit, Delta)
    return drive, form


def _resolve_pump(circuit, drive, raw):
    unknown = set(raw) - PUMP_KEYS
    if unknown:
        raise ParameterError(f"unknown pump keys: {sorted(unknown)}")
    if "gMinus" in raw and "nMinus" in raw:
        raise ParameterError("give either pump.gMinus or pump.nMinus, not both")
    num = {k: _number("pump", k, v) for k, v in raw.items()}
    delta = TWO_PI * num.get("delta", 0.0)
    phase = num.get("gMinusPhase", 0.0)
    if "nMinus" in num:
        pump = PumpConfig.from_photon_number(circuit, drive, num["nMinus"], delta, phase)
    else:
        mag = TWO_PI * num.get("gMinus", 0.0)
        if mag < 0:
            raise ParameterError("pump.gMinus is a magnitude and must be non-negative")
        g = mag * complex(math.cos(phase), math.sin(phase))
        pump = PumpConfig.from_coupling(circuit, drive, g, delta)
    return pump, TWO_PI * num.get("gPlus", 0.0)


def _resolve_baths(circuit, raw):
    keys = set(raw) - {"nAdd"}
    unknown = keys - BATH_THERMAL - BATH_PARTIAL
    if unknown:
        raise ParameterError(f"unknown baths keys: {sorted(unknown)}")
    if keys & BATH_THERMAL and keys & BATH_PARTIAL:
        raise ParameterError("give either nThRF/nThHF or the partial bath occupations")
    num = {k: _number("baths", k, v) for k, v in raw.items()}
    if keys & BATH_PARTIAL:
        return BathOccupations.from_partials(
            circuit, n_e_rf=num.get("nERF", 0.0), n_i_rf=num.get("nIRF", 0.0),
            n_e_hf=num.get("nEHF", 0.0), n_i_hf=num.get("nIHF", 0.0),
            n_add=num.get("nAdd", 0.0))
    return BathOccupations.thermal(num.get("nThRF", 0.0), num.get("nThHF", 0.0),
                                   num.get("nAdd", 0.0))


def apply_overrides(doc: Mapping[str, Any], overrides) -> dict:
    """Return a copy of ``doc`` with ``section.key=value`` overrides applied.

    Values are parsed as JSON where possible (numbers, ``null``), otherwise
    kept as strings. A ``null`` value deletes the key.
    """
    out = copy.deepcopy(dict(doc))
    for item in overrides or ():
        if "=" not in item:
            raise ParameterError(f"override {item!r} is not of the form section.key=value")
        path, text = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2 or parts[0] not in SECTIONS or not parts[1]:
            raise ParameterError(f"override path {path!r} must be <section>.<key> with "
                                 f"section in {SECTIONS}")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        section = out.setdefault(parts[0], {})
        if value is None:
            section.pop(parts[1], None)
        else:
            section[parts[1]] = value
    return out


def resolve_config(doc: Mapping[str, Any]) -> Config:
    """Build all parameter objects from a parsed JSON document (Hz units)."""
    if not isinstance(doc, Mapping):
        raise ParameterError("parameter file must hold a JSON object")
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ParameterError(f"unknown sections: {sorted(unknown)}")
    if "circuit" not in doc:
        raise ParameterError("missing section: circuit")
    for s in SECTIONS:
        if s in doc and not isinstance(doc[s], Mapping):
            raise ParameterError(f"section {s} must be an object")
    circuit = circuit_from_hz({k: _number("circuit", k, v) for k, v in doc["circuit"].items()})
    drive, form = _resolve_drive(circuit, doc.get("drive", {}))
    pump, g_plus = _resolve_pump(circuit, drive, doc.get("pump", {}))
    baths = _resolve_baths(circuit, doc.get("baths", {}))
    return Config(circuit, drive, pump, baths, g_plus, form)


def read_params_json(path, overrides=()) -> Config:
    """Load and resolve a JSON parameter file."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON: {exc}") from None
    return resolve_config(apply_overrides(doc, overrides))


def write_json(obj, path) -> None:
    _atomic_write(path, json.dumps(as_jsonable(obj), indent=2, sort_keys=True,
                                   allow_nan=False) + "\n")


def table_to_csv(columns, rows, meta=None) -> str:
    """CSV text for a table of numbers and short strings."""
    lines = []
    if meta is not None:
        lines.append("# " + json.dumps(as_jsonable(meta), sort_keys=True, allow_nan=False))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table_csv(columns, rows, path, meta=None) -> None:
    _atomic_write(path, table_to_csv(columns, rows, meta))


def config_from_snapshot(meta: Mapping[str, Any]) -> Config:
    """Rebuild a :class:`Config` from the parameter snapshot of a spectrum file."""
    try:
        circuit = dict(meta["circuit"])
        drive = meta["drive"]
    except (KeyError, TypeError):
        raise ParameterError("spectrum file carries no circuit/drive snapshot") from None
    doc = {"circuit": circuit,
           "drive": {"DeltaD": drive["DeltaD"], "nD": drive["nD"],
                     "kappaDriven": drive["kappaDriven"]}}
    if "pump" in meta:
        p = meta["pump"]
        doc["pump"] = {"gMinus": p["gMinus"], "gMinusPhase": p["gMinusPhase"],
                       "delta": p["delta"]}
    if "baths" in meta:
        b = meta["baths"]
        doc["baths"] = {k: b[k] for k in ("nERF", "nIRF", "nEHF", "nIHF", "nAdd")}
    return resolve_config(doc)
