import csv
import io
import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from soliton_forge.cli import main
from soliton_forge.closed_form import WaveConfig
from soliton_forge.presets import FIGURES

from .conftest import GOLDEN


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# -- params / collect / solve ------------------------------------------------------


def test_params_fig1():
    code, out, _ = run("params", "--preset", "fig1")
    assert code == 0
    payload = json.loads(out)
    set1 = next(s for s in payload["sets"] if s["set_tag"] == "SET1")
    assert set1["p"] == pytest.approx(-0.8, abs=1e-12)
    assert payload["Lambda"] == pytest.approx(0.6)


def test_params_fig3_set2():
    code, out, _ = run("params", "--C", "0.15")
    assert code == 0
    set2 = next(s for s in json.loads(out)["sets"] if s["set_tag"] == "SET2")
    assert set2["p"] == pytest.approx(-1.13333, abs=1e-5)


@pytest.mark.parametrize(
    "argv, reason",
    [
        (["--B", "2", "--C", "1"], "DegenerateAmplitude"),
        (["--B", "4", "--C", "4"], "LambdaZero"),
        (["--alpha", "0"], "AlphaZero"),
        (["--m", "-2"], "DegenerateDirection"),
    ],
)
def test_params_validation_exit_codes(argv, reason):
    code, out, err = run("params", *argv)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == reason
    assert err.count("\n") == 1


def test_collect_matches_golden():
    code, out, _ = run("collect")
    assert code == 0
    assert out == (GOLDEN / "collect_bkp.txt").read_text(encoding="utf-8")
    assert out.count("\n") == 5


def test_collect_other_degree():
    code, out, _ = run("collect", "--N", "3")
    assert code == 0 and out.count("\n") == 7


def test_solve_finds_both_sets():
    code, out, _ = run("solve", "--seeds", "64")
    assert code == 0
    records = json.loads(out)
    assert len(records) >= 2
    assert {r["closed_form_match"] for r in records} >= {"SET1", "SET2"}


def test_solve_alpha_zero():
    code, _, err = run("solve", "--alpha", "0")
    assert code == 2 and json.loads(err)["error"] == "AlphaZero"


# -- eval ----------------------------------------------------------------------------


def test_eval_line_fig1_morphology(tmp_path):
    path = tmp_path / "fig1.csv"
    code, out, _ = run("eval", "--preset", "fig1", "--out", str(path))
    assert code == 0 and out.strip() == str(path)
    header, data = read_csv(path)
    assert header == ["xi", "x", "y", "t", "U", "w", "singular"]
    assert data.shape == (2001, 7)
    U, w = data[:, 4], data[:, 5]
    assert np.all(U < 0) or np.all(U > 0)
    dU = np.sign(np.diff(U))
    assert np.count_nonzero(np.diff(dU[dU != 0])) == 1  # single extremum
    assert np.all(np.diff(w) > 0) or np.all(np.diff(w) < 0)
    assert w[0] == 0.0  # anchored at the grid minimum
    # x recovered from xi at y = 0, t = 1
    np.testing.assert_allclose(data[:, 1], data[:, 0] + data[:, 3] * -0.8, atol=1e-12)


def test_eval_surface_header(tmp_path):
    path = tmp_path / "s.csv"
    code, _, _ = run("eval", "--preset", "fig3", "--mode", "surface", "--x-steps", "7",
                     "--y-steps", "5", "--out", str(path))
    assert code == 0
    header, data = read_csv(path)
    assert header == ["x", "y", "t", "U", "w", "singular"]
    assert data.shape == (35, 6)


def test_eval_single_point(tmp_path):
    path = tmp_path / "one.csv"
    code, _, _ = run("eval", "--xi-min", "0.5", "--xi-steps", "1", "--out", str(path))
    assert code == 0
    _, data = read_csv(path)
    assert data.shape == (1, 7)
    assert data[0, 5] == 0.0


def test_eval_fig4_flags_pole_lattice(tmp_path):
    path = tmp_path / "fig4.csv"
    code, _, _ = run("eval", "--preset", "fig4", "--xi-min", "-10", "--xi-max", "10",
                     "--xi-steps", "401", "--out", str(path))
    assert code == 0
    _, data = read_csv(path)
    xi, U, w, singular = data[:, 0], data[:, 4], data[:, 5], data[:, 6].astype(bool)

    # independent oracle: zeros of the TRIG denominator written out from G
    B, C = 1.0, 1.1
    s = math.sqrt(4 * C - B * B)

    def den(z):
        c, sn = math.cos(s * z / 2), math.sin(s * z / 2)
        g = sn  # C1 = 0, C2 = 1
        dg = -B / 2 * sn + s / 2 * c
        return dg + g

    z = np.linspace(-10, 10, 4001)
    vals = np.array([den(v) for v in z])
    roots = [brentq(den, a, b, xtol=1e-15) for a, b, fa, fb in zip(z[:-1], z[1:], vals[:-1], vals[1:])
             if fa * fb < 0]
    assert len(roots) >= 5
    np.testing.assert_allclose(xi[singular], roots, atol=1e-10)
    np.testing.assert_allclose(np.diff(roots), 2 * math.pi / math.sqrt(3.4), atol=1e-9)
    assert np.all(np.isnan(U[singular])) and np.all(np.isnan(w[singular]))
    assert np.all(np.isfinite(U[~singular]))


def test_eval_rejects_bad_grid():
    code, _, err = run("eval", "--xi-steps", "0")
    assert code == 2 and json.loads(err)["error"] == "ValidationError"
    code, _, _ = run("eval", "--xi-min", "3", "--xi-max", "1")
    assert code == 2


def test_eval_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SOLITON_FORGE_OUT", str(tmp_path))
    code, out, _ = run("eval", "--xi-steps", "11")
    assert code == 0
    assert (tmp_path / "eval.csv").exists() and out.strip() == str(tmp_path / "eval.csv")


# -- verify --------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_verify_presets_pass(name):
    code, out, _ = run("verify", "--preset", name)
    payload = json.loads(out)
    assert code == 0 and payload["pass"]
    assert {r["target"] for r in payload["reports"]} == {"RICCATI", "EQ6_AUX", "EQ9_ODE", "EQ8_ODE"}


def test_verify_with_pde():
    code, out, _ = run("verify", "--preset", "fig3", "--pde", "--x-steps", "11", "--y-steps", "11",
                       "--t-steps", "3")
    assert code == 0
    assert "EQ1_PDE" in {r["target"] for r in json.loads(out)["reports"]}


def test_verify_detects_corruption():
    code, out, _ = run("verify", "--preset", "fig1", "--corrupt", "a0=1e-3")
    assert code == 3 and not json.loads(out)["pass"]


def test_verify_bad_corrupt_entries():
    assert run("verify", "--corrupt", "a0=abc")[0] == 2
    assert run("verify", "--corrupt", "a7=0.1")[0] == 2


def test_verify_empty_grid():
    code, _, err = run("verify", "--xi-steps", "0")
    assert code == 2 and "error" in json.loads(err)


# -- figure --------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name, p, display",
    [("fig1", -0.8, "w"), ("fig2", -2.13333, "U"), ("fig3", -1.13333, "U"), ("fig4", 0.133333, "U")],
)
def test_figure_outputs(tmp_path, name, p, display):
    code, out, _ = run("figure", name, "--out", str(tmp_path))
    assert code == 0
    payload = json.loads(out)
    assert payload["p"] == pytest.approx(p, abs=1e-5)
    assert payload["display"] == display
    for key in ("line", "surface", "script"):
        assert (tmp_path / payload["files"][key].split("/")[-1]).exists()
    script = (tmp_path / f"{name}.gp").read_text()
    assert f"{name}_surface.csv" in script and f"{name}_line.csv" in script


def test_preset_fidelity():
    common = dict(B=1.0, C1=1.0, C2=1.0, n=1.0, m=1.0, alpha=1.0, t=1.0)
    expected = {
        "fig1": dict(common, C=0.1, set_tag="SET1"),
        "fig2": dict(common, C=1.1, set_tag="SET1"),
        "fig3": dict(common, C=0.15, set_tag="SET2"),
        "fig4": dict(common, C=1.1, set_tag="SET2", C1=0.0),
    }
    for name, fields in expected.items():
        cfg = WaveConfig(**FIGURES[name].wave)
        for key, value in fields.items():
            got = getattr(cfg, key)
            assert (got.value if hasattr(got, "value") else got) == value, (name, key)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"C": 0.15, "set": "SET2", "xi_steps": 21}))
    code, out, _ = run("params", "--config", str(cfg))
    set2 = next(s for s in json.loads(out)["sets"] if s["set_tag"] == "SET2")
    assert set2["p"] == pytest.approx(-1.13333, abs=1e-5)
    code, out, _ = run("params", "--config", str(cfg), "--C", "0.1")
    set1 = next(s for s in json.loads(out)["sets"] if s["set_tag"] == "SET1")
    assert set1["p"] == pytest.approx(-0.8, abs=1e-12)
    cfg.write_text(json.dumps({"colour": 3}))
    assert run("params", "--config", str(cfg))[0] == 2


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("figure", "fig2", "--out", str(d))[0] == 0
    for name in ("fig2_line.csv", "fig2_surface.csv", "fig2.gp"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert run("solve", "--rng-seed", "5")[1] == run("solve", "--rng-seed", "5")[1]
