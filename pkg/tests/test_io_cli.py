import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from wavekit.cli import CLI_TOL, main
from wavekit.continuation import Discretization, continue_curve_1d
from wavekit.errors import VerificationError
from wavekit.io import (BranchFormatError, branch_schema, read_branch, sidecar_path, state_from_branch,
                        write_branch)
from wavekit.presets import PRESET_NAMES, load_preset

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, "--json", *argv)
    assert code == 0, err
    return json.loads(out)


def assert_close_tree(got, want, path="$"):
    if isinstance(want, dict):
        assert isinstance(got, dict) and set(got) == set(want), path
        for k in want:
            assert_close_tree(got[k], want[k], f"{path}.{k}")
    elif isinstance(want, list):
        assert isinstance(got, list) and len(got) == len(want), path
        for i, (g, w) in enumerate(zip(got, want)):
            assert_close_tree(g, w, f"{path}[{i}]")
    elif isinstance(want, float):
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12), path
    else:
        assert got == want, path


# --- kernel ---------------------------------------------------------------------------------


def test_kernel_preset(capsys):
    d = run_json(capsys, "kernel", "--preset", "ek1")
    assert d["M"] == [1] and d["r"] == pytest.approx(1.0, abs=1e-12) and d["transversality"] is True
    assert d["tol"] == CLI_TOL


def test_kernel_explicit_matches_preset(capsys):
    d = run_json(capsys, "kernel", "--mu", 1, "--alpha", -1, "--lambda", 1.5707963, "--kappa", 1)
    ref = run_json(capsys, "kernel", "--preset", "ek1")
    assert d["M"] == ref["M"] and d["r"] == pytest.approx(ref["r"], abs=1e-7)


def test_kernel_human_output(capsys):
    code, out, _ = run(capsys, "kernel", "--preset", "ek2")
    assert code == 0 and "M = [1, 2]" in out


def test_kernel_mu_zero(capsys):
    code, out, err = run(capsys, "kernel", "--mu", 0, "--alpha", -1, "--lambda", 1.5, "--kappa", 1)
    assert code == 2 and "mu" in err and out == ""


@pytest.mark.parametrize("argv", [
    ["kernel"],
    ["kernel", "--preset", "nope"],
    ["kernel", "--preset", "ek1", "--tol", "0"],
    ["kernel", "--preset", "ek1", "--tol", "-1"],
    ["kernel", "--mu", "1", "--alpha", "1", "--lambda", "1.5"],
    ["kernel", "--mu", "1", "--alpha", "-1", "--lambda", "4.0"],
    ["kernel", "--preset", "ek1", "--out", "/nonexistent/dir/k.json"],
    ["frobnicate"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_out_file(capsys, tmp_path):
    out = tmp_path / "k.json"
    code, _, _ = run(capsys, "--out", out, "kernel", "--preset", "ek3")
    assert code == 0
    assert json.loads(out.read_text())["M"] == [2, 3]


# --- construct ------------------------------------------------------------------------------


@pytest.mark.parametrize("argv,H,M", [
    (["--H", 325], 325, [3, 5, 9]),
    (["--H", 1105], 1105, [2, 6, 12, 16]),
    (["--dim", 3, "--prime", 5], 3125, [5, 19, 25]),
])
def test_construct(capsys, argv, H, M):
    d = run_json(capsys, "construct", *argv)
    assert d["H"] == H and d["M"] == M and d["verification"]["matches"] is True


@pytest.mark.parametrize("argv", [["--dim", 3, "--prime", 7], ["--H", 324], ["--dim", 2, "--prime", 5, "--knum", 2,
                                                                             "--kden", 4], []])
def test_construct_rejects(capsys, argv):
    assert run(capsys, "construct", *argv)[0] == 2


def test_construct_verification_failure(capsys, monkeypatch):
    import wavekit.diophantine as dio
    # a kernel scan that disagrees with the construction
    monkeypatch.setattr(dio, "kernel_set", lambda *a, **k: type("K", (), {"modes": (1,), "contains_zero": False,
                                                                          "r": 0.0})())
    code, _, err = run(capsys, "construct", "--H", 325)
    assert code == 3 and "verif" in err


# --- asymptotics ----------------------------------------------------------------------------


def test_asymptotics_ek1(capsys):
    d = run_json(capsys, "asymptotics", "--preset", "ek1")
    assert d["lambda_ddot"] == pytest.approx(-7.2768, abs=1e-4) and d["lambda_dot"] == 0.0
    assert d["A_pairing"] == pytest.approx(-math.pi, rel=1e-12)


def test_asymptotics_ek3_pair(capsys):
    d = run_json(capsys, "asymptotics", "--preset", "ek3", "--pair", 2, 3)
    assert d["C"] == pytest.approx(-0.11589, abs=1e-5) and d["C_vanishes"] is False
    assert d["C_simplified"] == pytest.approx(d["C"], abs=1e-10)


def test_asymptotics_check_transversality(capsys):
    code, out, _ = run(capsys, "asymptotics", "--preset", "ek1", "--check-transversality")
    assert code == 0 and out.count("A-pairing") == 1
    d = run_json(capsys, "asymptotics", "--preset", "ek1", "--check-transversality")
    assert d["A_pairing"] == pytest.approx(-math.pi, rel=1e-12)


def test_asymptotics_bad_pair(capsys):
    assert run(capsys, "asymptotics", "--preset", "ek3", "--pair", 1, 3)[0] == 2


# --- golden files ---------------------------------------------------------------------------


GOLDEN_RUNS = {
    "kernel_ek1.json": ["kernel", "--preset", "ek1"],
    "kernel_ek3.json": ["kernel", "--preset", "ek3"],
    "construct_325.json": ["construct", "--H", "325"],
    "construct_d3_p5.json": ["construct", "--dim", "3", "--prime", "5"],
    "asymptotics_ek1.json": ["asymptotics", "--preset", "ek1"],
    "asymptotics_ek3.json": ["asymptotics", "--preset", "ek3", "--pair", "2", "3"],
    "branch_ek1.json": ["continue", "--preset", "ek1", "--tmax", "0.01", "--steps", "2"],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden(capsys, tmp_path, name):
    out = tmp_path / name
    code, _, err = run(capsys, "--out", out, *GOLDEN_RUNS[name])
    assert code == 0, err
    got = json.loads(out.read_text())
    want = json.loads((GOLDEN / name).read_text())
    if name.startswith("branch"):
        jsonschema.validate(got, branch_schema())
        for p in got["points"]:
            assert p.pop("residual_norm") <= 1e-10
        for p in want["points"]:
            p.pop("residual_norm")
        # values near the noise floor only need absolute agreement
        for g, w in zip(got["points"], want["points"]):
            np.testing.assert_allclose(g.pop("eta_coeffs"), w.pop("eta_coeffs"), rtol=0, atol=1e-12)
    assert_close_tree(got, want)


def test_golden_branch_validates():
    jsonschema.validate(json.loads((GOLDEN / "branch_ek1.json").read_text()), branch_schema())


# --- continue -------------------------------------------------------------------------------


def test_continue_curve(capsys, tmp_path):
    out = tmp_path / "b1.json"
    code, text, _ = run(capsys, "continue", "--preset", "ek1", "--tmax", 0.05, "--steps", 10, "--out", out)
    assert code == 0 and "lambda" in text
    doc = read_branch(out)
    assert len(doc["points"]) == 11 and all(p["residual_norm"] <= 1e-10 for p in doc["points"])
    assert doc["phi_hat_file"] is None


def test_continue_tmax_zero(capsys, tmp_path):
    out = tmp_path / "b0.json"
    assert run(capsys, "continue", "--preset", "ek1", "--tmax", 0, "--out", out)[0] == 0
    doc = read_branch(out)
    assert len(doc["points"]) == 1 and doc["points"][0]["t"] == 0.0


def test_continue_sheet(capsys, tmp_path):
    out = tmp_path / "s1.json"
    code, _, err = run(capsys, "continue", "--preset", "ek3", "--sheet", "--r", 0.01, "--v", 0.785, "--out", out)
    assert code == 0, err
    doc = read_branch(out)
    assert doc["kind"] == "sheet" and doc["modes"] == [2, 3]
    last = doc["points"][-1]
    assert last["rv"] == [0.01, 0.785] and last["residual_norm"] <= 1e-10


def test_continue_sheet_grid_files(capsys, tmp_path):
    out = tmp_path / "g.json"
    code, _, err = run(capsys, "continue", "--preset", "ek3", "--sheet", "--rv-grid", "0.005,0.5;0.005,2.5",
                       "--out", out)
    assert code == 0, err
    assert (tmp_path / "g.0.json").exists() and (tmp_path / "g.1.json").exists()


def test_continue_divergence_exit_4(capsys, tmp_path):
    code, _, err = run(capsys, "continue", "--preset", "ek1", "--tmax", 0.6, "--steps", 1,
                       "--out", tmp_path / "d.json")
    assert code == 4
    dump = json.loads(err.strip().splitlines()[-1])
    assert dump["error"] == "DivergenceError" and dump["residual_norm"] > 0


def test_continue_delta_band(capsys, tmp_path):
    code, _, err = run(capsys, "continue", "--preset", "ek2", "--sheet", "--r", 0.01, "--v", 0.05,
                       "--out", tmp_path / "x.json")
    assert code == 2 and "sin" in err


# --- branch files and field -----------------------------------------------------------------


@pytest.fixture(scope="module")
def small_branch(ek1):
    return continue_curve_1d(ek1.params, 1, 0.05, 5, Discretization(16, 48, 1.0))


def test_sidecar_round_trip(small_branch, tmp_path):
    path = tmp_path / "b.json"
    written = write_branch(path, small_branch, full_state=True)
    assert written == [path, sidecar_path(path)]
    doc = read_branch(path)
    for idx in (0, 3, -1):
        st, disc = state_from_branch(doc, idx, path)
        ref = small_branch.points[idx].state
        np.testing.assert_array_equal(st.eta_coeffs, ref.eta_coeffs)
        np.testing.assert_array_equal(st.phi_hat_values, ref.phi_hat_values)
        assert st.params.lam == ref.params.lam


def test_resolve_without_sidecar(small_branch, tmp_path):
    path = tmp_path / "b.json"
    write_branch(path, small_branch)
    st, _ = state_from_branch(read_branch(path), -1, path)
    ref = small_branch.points[-1].state
    np.testing.assert_allclose(st.phi_hat_values, ref.phi_hat_values, atol=1e-10)


def test_resolve_mismatch_is_verification_error(small_branch, tmp_path, capsys):
    path = tmp_path / "b.json"
    write_branch(path, small_branch)
    doc = json.loads(path.read_text())
    doc["points"][-1]["eta_coeffs"][1] += 1e-3
    path.write_text(json.dumps(doc))
    with pytest.raises(VerificationError):
        state_from_branch(read_branch(path), -1, path)
    assert run(capsys, "field", "--branch", path, "--out", tmp_path / "f.csv")[0] == 3


def test_field_from_endpoint(small_branch, tmp_path, capsys):
    path = tmp_path / "b.json"
    write_branch(path, small_branch, full_state=True)
    out = tmp_path / "f.csv"
    d = run_json(capsys, "field", "--branch", path, "--index", -1, "--res", 24, 17, "--out", out)
    assert d["boundary_check"]["m0_error"] == 0.0 and d["boundary_check"]["m1_error"] <= 1e-8
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x", "y", "psi"] and len(rows) == 1 + 24 * 17
    stag = json.loads(Path(str(out) + ".stagnation.json").read_text())
    assert set(stag) == {"points", "critical_layers"} and stag["points"] == []


def test_field_trivial_point_x_independent(small_branch, tmp_path, capsys):
    path = tmp_path / "b.json"
    write_branch(path, small_branch)
    out = tmp_path / "f.csv"
    assert run(capsys, "field", "--branch", path, "--index", 0, "--res", 8, 5, "--out", out)[0] == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1).reshape(8, 5, 3)
    np.testing.assert_array_equal(data[:, :, 2], np.broadcast_to(data[0, :, 2], (8, 5)))


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n "format": "wavekit-branch",\n "version": 1,,\n}')
    with pytest.raises(BranchFormatError, match=r"bad\.json:3:\d+"):
        read_branch(bad)
    code, _, err = run(capsys, "field", "--branch", bad)
    assert code == 2 and "bad.json:3:" in err


def test_schema_violation_names_field(small_branch, tmp_path, capsys):
    path = tmp_path / "b.json"
    write_branch(path, small_branch)
    doc = json.loads(path.read_text())
    doc["points"][2]["residual_norm"] = -1.0
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "field", "--branch", path)
    assert code == 2 and "points/2/residual_norm" in err


def test_field_bad_index(small_branch, tmp_path, capsys):
    path = tmp_path / "b.json"
    write_branch(path, small_branch)
    assert run(capsys, "field", "--branch", path, "--index", 99)[0] == 2
    assert run(capsys, "field", "--branch", tmp_path / "missing.json")[0] == 2


def test_presets_round_trip():
    from wavekit.kernel import kernel_set
    for name in PRESET_NAMES:
        pre = load_preset(name)
        assert kernel_set(pre.params).modes == pre.modes


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "wavekit", "kernel", "--preset", "ek1", "--json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["M"] == [1]
