import json

import numpy as np
import pytest

from nsfinsler import __version__
from nsfinsler import matrix_finsler as mf
from nsfinsler.cli import main
from nsfinsler.io import dumps, load_matrix_file, parse_json, parse_text, to_jsonable
from nsfinsler.errors import InvalidInput
from nsfinsler.matrix_finsler import M1Result

EX1 = {"n": 2, "M": [1, 0, 0, -1], "N": [1, 1, 1, 1]}
EX2 = {"n": 2, "M": [[1, 0], [0, -1]], "N": [[0, 0], [0, 1]]}


@pytest.fixture
def files(tmp_path):
    def write(name, content):
        path = tmp_path / name
        path.write_text(content if isinstance(content, str) else json.dumps(content))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_json_and_text_agree():
    a = parse_json(json.dumps(EX1))
    b = parse_text("2\n1 0\n0 -1\n1 1 1 1\n")
    assert np.array_equal(a["M"], b["M"]) and np.array_equal(a["N"], b["N"])


@pytest.mark.parametrize("text", [
    '{"n": 2, "M": [1, 0, 0], "N": [1, 1, 1, 1]}',
    '{"n": 2, "M": [1, 0, 0, "x"], "N": [1, 1, 1, 1]}',
    '{"M": [1]}',
    '[1, 2]',
])
def test_parse_json_rejects(text):
    with pytest.raises(InvalidInput):
        parse_json(text)


def test_parse_text_rejects_short_input():
    with pytest.raises(InvalidInput):
        parse_text("2\n1 0 0 -1\n1 1\n")


def test_to_jsonable_handles_inf_and_arrays():
    assert to_jsonable({"a": np.array([1.0, np.inf]), "b": np.float64(2.0)}) == {"a": [1.0, "inf"], "b": 2.0}


def test_report_round_trip_is_lossless():
    x = np.random.default_rng(0).standard_normal(20)
    back = np.array(json.loads(dumps({"x": x}))["x"])
    assert np.array_equal(back, x)


def test_check_infeasible_pair(files, capsys):
    code, out, _ = run(capsys, "check", files("ex1.json", EX1))
    rep = json.loads(out)
    assert code == 1
    assert rep["version"] == __version__ and rep["tolerances"]["psd_tol"] == 1e-9
    x = np.array(rep["ns3"]["witness"]["x"])
    assert np.allclose(np.abs(x), 2 ** -0.5) and x[0] * x[1] < 0


def test_check_feasible_pair_text(files, capsys):
    code, out, _ = run(capsys, "check", files("ex2.txt", "2\n1 0\n0 -1\n0 0\n0 1\n"))
    assert code == 0
    assert json.loads(out)["alpha"] >= 1.0


def test_truncated_file_exits_2(files, capsys):
    code, out, err = run(capsys, "check", files("bad.json", json.dumps(EX1)[:15]))
    assert code == 2 and out == "" and "error" in err


def test_usage_error_exits_2(capsys):
    assert run(capsys, "check")[0] == 2
    assert run(capsys, "frobnicate", "x")[0] == 2
    assert run(capsys, "check", "--tol-psd", "-1", "x")[0] == 2


def test_missing_file_exits_2(capsys, tmp_path):
    assert run(capsys, "check", str(tmp_path / "nope.json"))[0] == 2


def test_verify_only_round_trip(files, capsys, tmp_path):
    for name, inst in (("ex1.json", EX1), ("ex2.json", EX2)):
        out_path = tmp_path / f"{name}.report"
        assert run(capsys, "check", files(name, inst), "--output", str(out_path))[0] in (0, 1)
        code, out, _ = run(capsys, "check", "--verify-only", str(out_path))
        assert code == 0 and json.loads(out)["all_verified"]


def test_verify_only_detects_tampering(files, capsys, tmp_path):
    out_path = tmp_path / "r.json"
    run(capsys, "check", files("ex1.json", EX1), "--output", str(out_path))
    rep = json.loads(out_path.read_text())
    rep["ns3"]["witness"]["x"] = [1.0, 0.0]
    out_path.write_text(json.dumps(rep))
    assert run(capsys, "check", "--verify-only", str(out_path))[0] == 1


def test_nspl_emits_multiple_of_U(files, capsys):
    code, out, _ = run(capsys, "nspl", files("p.json", {"n": 2, "Q": [1, 0, 0, -1], "U": [0, 1]}))
    rep = json.loads(out)
    assert code == 0
    X = np.array(rep["X"])
    assert X[0, 0] == 0.0 and X[0, 1] == pytest.approx(rep["beta"]) and rep["beta"] > 0


def test_nspl_infeasible(files, capsys):
    code, out, _ = run(capsys, "nspl", files("p.json", {"n": 2, "Q": [1, 0, 0, -1], "U": [1, 0]}))
    assert code == 1 and json.loads(out)["cond_U"]["status"] == "violated"


def test_alpha_and_strict(files, capsys):
    path = files("ex2.json", EX2)
    code, out, _ = run(capsys, "alpha", path)
    assert code == 0 and json.loads(out)["alpha"] >= 1
    code, out, _ = run(capsys, "strict", path)
    rep = json.loads(out)
    assert code == 0 and rep["s2"]["epsilon"] == pytest.approx(1.0)
    assert run(capsys, "alpha", files("ex1.json", EX1))[0] == 1


def test_oracle_flags_boundary(files, capsys):
    code, out, _ = run(capsys, "oracle", files("ex1.json", EX1))
    rep = json.loads(out)
    assert code == 1 and rep["boundary"] and rep["budget_exhausted"] and rep["value"] < 0


def test_gen_is_deterministic_and_loadable(capsys, tmp_path):
    a = run(capsys, "gen", "--n", "4", "--class", "psd", "--seed", "7")[1]
    b = run(capsys, "gen", "--n", "4", "--class", "psd", "--seed", "7")[1]
    assert a == b
    path = tmp_path / "g.json"
    path.write_text(a)
    data = load_matrix_file(path)
    assert data["ground_truth"]["status"] == "feasible"
    assert run(capsys, "check", str(path))[0] == 0


def test_gen_ns3_then_witness(capsys, tmp_path):
    path = tmp_path / "ns3.json"
    path.write_text(run(capsys, "gen", "--n", "4", "--kind", "ns3", "--class", "indefinite", "--seed", "2")[1])
    code, out, _ = run(capsys, "witness", str(path))
    rep = json.loads(out)
    assert code == 0 and rep["witness"]["verified"]
    assert run(capsys, "check", str(path))[0] == 1


def test_mfl_exit_codes(capsys, tmp_path, monkeypatch):
    path = tmp_path / "mfl.json"
    path.write_text(run(capsys, "gen", "--n", "2", "--m", "2", "--kind", "mfl", "--mode", "feasible")[1])
    assert run(capsys, "mfl", str(path))[0] == 0
    monkeypatch.setattr(mf, "check_m1", lambda p, tol=None: M1Result(False, None, "mtilde-psd", -1.0))
    code, _, err = run(capsys, "mfl", str(path))
    assert code == 3 and "inconsistency" in err


def test_mfl_rejects_pair_without_blocks(files, capsys):
    assert run(capsys, "mfl", files("ex1.json", EX1))[0] == 2


def test_batch_directory(capsys, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    (src / "a.json").write_text(json.dumps(EX1))
    (src / "b.json").write_text(json.dumps(EX2))
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "check", str(src), "--output", str(out_dir), "--jobs", "2")
    assert code == 1
    assert json.loads(out)["exit_codes"] == {"a.json": 1, "b.json": 0}
    assert sorted(p.name for p in out_dir.iterdir()) == ["a.check.json", "b.check.json"]


def test_text_format(files, capsys):
    code, out, _ = run(capsys, "check", files("ex2.json", EX2), "--format", "text")
    assert code == 0 and "feasible: True" in out
