import functools
import json
from pathlib import Path

import pytest

from negmass import cli, io
from negmass.fitting import FitProblem

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
DRIVEN = str(CONFIGS / "driven.json")


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("kind", ["s11-single", "s11-two-mode", "s11-coupled", "psd"])
def test_synth_writes_spectrum(tmp_path, capsys, kind):
    out = tmp_path / f"{kind}.csv"
    code, stdout, _ = run(capsys, "synth", kind, "--params", DRIVEN, "--out", out,
                          "--grid-points", 201)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["gainG"] == pytest.approx(-0.35)
    assert summary["files"] == [str(out)]
    spec = io.read_spectrum_csv(out)
    assert len(spec) == 201
    assert spec.kind == ("psd" if kind == "psd" else "reflection")


def test_synth_noise_is_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        code, stdout, _ = run(capsys, "synth", "s11-single", "--params", DRIVEN, "--out", p,
                              "--noise", 0.01, "--seed", 7, "--grid-points", 101)
        assert code == 0
    assert a.read_text() == b.read_text()
    assert io.read_spectrum_csv(a).meta["noise"]["rng"] == "numpy.random.PCG64"
    code, _, err = run(capsys, "synth", "s11-single", "--params", DRIVEN, "--out", a,
                       "--noise", 0.01)
    assert code == 1 and "seed" in err


def test_synth_delta_sweep(tmp_path, capsys):
    code, stdout, _ = run(capsys, "synth", "s11-coupled", "--params", DRIVEN,
                          "--out", tmp_path / "d.csv", "--delta-sweep", -200000, 200000, 3,
                          "--grid-points", 101)
    assert code == 0
    files = json.loads(stdout)["files"]
    assert [Path(f).name for f in files] == ["d_000.csv", "d_001.csv", "d_002.csv"]
    assert io.read_spectrum_csv(files[2]).meta["deltaHz"] == 200000


def test_synth_json_format(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "synth", "psd", "--params", DRIVEN, "--out", out,
                     "--format", "json", "--grid-points", 11)
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["psd_quanta"]) == 11 and doc["kind"] == "psd"


@pytest.mark.parametrize("kind,model", [("s11-single", "s11-single"),
                                        ("s11-two-mode", "s11-two-mode"),
                                        ("s11-coupled", "s11-coupled"),
                                        ("psd", "psd-cooling")])
def test_synth_then_fit(tmp_path, capsys, kind, model):
    data = tmp_path / "d.csv"
    assert run(capsys, "synth", kind, "--params", DRIVEN, "--out", data,
               "--grid-points", 401)[0] == 0
    rep = tmp_path / "fit.json"
    code, _, err = run(capsys, "fit", model, data, "--out", rep)
    assert code == 0, err
    report = json.loads(rep.read_text())
    assert report["converged"]
    est = report["estimates"]
    if model != "psd-cooling":
        assert est["gainG"] == pytest.approx(-0.35, rel=1e-6)
    else:
        assert est["nThRF"] == pytest.approx(13.0, rel=1e-6)
        assert report["derived"]["nFinRF"] == pytest.approx(8.6118, abs=1e-4)


def test_fit_free_and_fix(tmp_path, capsys):
    data = tmp_path / "d.csv"
    run(capsys, "synth", "s11-single", "--params", DRIVEN, "--out", data, "--grid-points", 401)
    code, stdout, _ = run(capsys, "fit", "s11-single", data, "--free", "omega0,gainG",
                          "--fix", "kappa=300e3", "--fix", "kappaE=85e3")
    assert code == 0
    report = json.loads(stdout)
    assert report["free"][:2] == ["omega0", "gainG"]
    assert report["estimates"]["kappa"] == pytest.approx(300e3)


def test_fit_empty_file(tmp_path, capsys):
    data = tmp_path / "e.csv"
    data.write_text("frequency_hz,re_s11,im_s11\n")
    code, _, err = run(capsys, "fit", "s11-single", data)
    assert code == 1 and "no data rows" in err


def test_fit_bad_parameter_name(tmp_path, capsys):
    data = tmp_path / "d.csv"
    run(capsys, "synth", "s11-single", "--params", DRIVEN, "--out", data, "--grid-points", 101)
    code, _, err = run(capsys, "fit", "s11-single", data, "--fix", "bogus=1")
    assert code == 1 and "bogus" in err


def test_fit_non_convergence(tmp_path, capsys, monkeypatch):
    data = tmp_path / "d.csv"
    run(capsys, "synth", "s11-single", "--params", DRIVEN, "--out", data, "--grid-points", 401)
    monkeypatch.setattr(cli, "FitProblem", functools.partial(FitProblem, max_iter=1))
    code, stdout, err = run(capsys, "fit", "s11-single", data, "--guess", "kappa=100e3")
    assert code == 2
    assert "did not converge" in err
    assert json.loads(stdout)["converged"] is False


def test_unstable_working_point(capsys):
    code, _, err = run(capsys, "validate", "--params", DRIVEN,
                       "--set", "drive.gainG=null", "--set", "drive.OmegaI=null",
                       "--set", "drive.DeltaD=-1000000", "--set", "drive.nD=100")
    assert code == 3 and "unstable" in err


def test_parameter_errors(tmp_path, capsys):
    code, _, _ = run(capsys, "validate", "--params", DRIVEN, "--set", "drive.gainG=0.5")
    assert code == 1
    code, _, _ = run(capsys, "validate", "--params", tmp_path / "missing.json")
    assert code == 1
    code, _, _ = run(capsys, "sweep", "cooling", "--params", DRIVEN, "--start", "-1",
                     "--stop", 1)
    assert code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["synth", "nonsense"])
    assert exc.value.code == 1


def test_sweep_backaction(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(capsys, "sweep", "backaction", "--params", DRIVEN, "--start", 0,
                     "--stop", 300e3, "--num", 31, "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1].split(",")[0] == "gMinus_hz" and lines[1].endswith("regime")
    regimes = [ln.rsplit(",", 1)[1] for ln in lines[2:]]
    assert regimes[0] == "weakCoupling" and regimes[-1] == "strongCoupling"


def test_sweep_cooling_json(capsys):
    code, stdout, _ = run(capsys, "sweep", "cooling", "--params", DRIVEN, "--start", 0,
                          "--stop", 200e3, "--num", 5, "--format", "json")
    assert code == 0
    doc = json.loads(stdout)
    assert len(doc["rows"]) == 5
    assert doc["rows"][0][doc["columns"].index("nFinRF")] == pytest.approx(13.0)


def test_sweep_gain_vs_power(capsys):
    code, stdout, _ = run(capsys, "sweep", "gain-vs-power", "--params", DRIVEN,
                          "--start", 0, "--stop", 5000, "--num", 11, "--format", "json")
    assert code == 0
    doc = json.loads(stdout)
    cols = doc["columns"]
    for row in doc["rows"]:
        if row[cols.index("stable")] == 1.0:
            assert row[cols.index("gainSum")] == pytest.approx(1.0, abs=1e-12)
    code, stdout, _ = run(capsys, "sweep", "gain-vs-power", "--params", DRIVEN,
                          "--control", "flux", "--start", 0, "--stop", 1e12, "--num", 3,
                          "--delta-d=-1e6", "--format", "json")
    assert code == 0
    assert json.loads(stdout)["columns"][0] == "flux_per_s"


def test_validate(capsys):
    code, stdout, _ = run(capsys, "validate", "--params", DRIVEN, "--points", 101)
    assert code == 0
    rep = json.loads(stdout)
    assert rep["reflection"]["max_relative_error"] < 0.05
    assert rep["occupations"]["n_fin_rf_relative_error"] < 0.01
    assert rep["workingPoint"]["regime"] == "weakCoupling"
    assert rep["workingPoint"]["nmsThresholdGMinus"] == pytest.approx(107757.17, rel=1e-6)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
