import csv
import io
import json

import pytest

from conftest import SCRIPTED_PATH, KB_PATH, tiny_kb_dict, tiny_model_dict
from spmiti.bench import CSV_COLUMNS, check_guardrails, run_bench, to_csv
from spmiti.cli import main
from spmiti.errors import GuardrailExceeded

SCRIPTED = ["--kb", KB_PATH, "--model", SCRIPTED_PATH]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def tiny_files(tmp_path):
    kb = tmp_path / "kb.json"
    model = tmp_path / "model.json"
    kb.write_text(json.dumps(tiny_kb_dict()))
    model.write_text(json.dumps(tiny_model_dict()))
    return ["--kb", str(kb), "--model", str(model)]


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", *SCRIPTED)
    assert code == 0
    assert out.startswith("ok: 10 ASPs, 11 CPs")


def test_validate_reports_class_name(capsys, tmp_path):
    bad = tmp_path / "m.json"
    d = tiny_model_dict()
    d["artifacts"][0]["kind"] = "binary"
    bad.write_text(json.dumps(d))
    code, _, err = run(capsys, "validate", "--kb", KB_PATH, "--model", str(bad))
    assert code == 1
    assert err.startswith("ValidationError:")
    code, _, err = run(capsys, "validate", "--kb", str(tmp_path / "none.json"), "--model", str(bad))
    assert code == 1 and err.startswith("ParseError:")


def test_prepare(capsys, tiny_files):
    code, out, err = run(capsys, "prepare", *tiny_files, "--name", "tiny")
    doc = json.loads(out)
    assert code == 0
    assert doc["schema_version"] == 1
    assert [c["id"] for c in doc["ccs"]] == ["a", "b"]
    assert doc["ccs"][0]["thresholds"]["client_time"] is None
    assert err.strip().split("\t")[:3] == ["tiny", "2", "2"]


def test_optimize_scripted_json(capsys):
    code, out, _ = run(capsys, "optimize", *SCRIPTED, "--scripted")
    rep = json.loads(out)
    assert code == 0
    assert rep["schema_version"] == 1
    assert rep["solution_label"] == "S3"
    assert rep["residual"] == 8.0
    assert [a["path"] for a in rep["attack_sequence"]] == ["K1", "K1", "K2"]
    assert rep["stats"]["nodes_visited"] > 0


def test_optimize_text(capsys, tiny_files):
    code, out, _ = run(capsys, "optimize", *tiny_files, "--depth", "2", "--sigma", "1",
                       "--report", "text", "--engine", "plain")
    assert code == 0
    assert out.startswith("best solution: ")
    assert "overheads a:" in out and "overheads b:" in out


def test_optimize_options(capsys, tiny_files, tmp_path):
    code, out, _ = run(capsys, "optimize", *tiny_files, "--depth", "2", "--sigma", "1",
                       "--enable", "alpha_beta,tt", "--top-n", "3", "--monolithic")
    first = json.loads(out)
    assert code == 0 and len(first["ranked"]) == 3
    prev = tmp_path / "prev.json"
    prev.write_text(out)
    seed = tmp_path / "seed.json"
    seed.write_text(json.dumps([{"cp": "x", "artifact": "a"}]))
    code, out, _ = run(capsys, "optimize", *tiny_files, "--depth", "2", "--sigma", "1",
                       "--warm-start", str(prev), "--seed-solution", str(seed),
                       "--margins", "f=inf,ef=inf,rz=inf", "--top-n", "3")
    second = json.loads(out)
    assert code == 0
    assert second["residual"] == first["residual"]
    assert second["approximate"] is False


def test_optimize_approximate_flag(capsys, tiny_files):
    code, out, _ = run(capsys, "optimize", *tiny_files, "--depth", "2", "--sigma", "1",
                       "--margins", "f=0.5")
    assert code == 0 and json.loads(out)["approximate"] is True


def test_bad_arguments(capsys, tiny_files):
    with pytest.raises(SystemExit):
        main(["optimize", *tiny_files, "--margins", "zz=1"])
    assert "unknown margin" in capsys.readouterr().err
    code, _, err = run(capsys, "optimize", *tiny_files, "--enable", "nope")
    assert code == 1 and err.startswith("ConfigError:")
    code, _, err = run(capsys, "optimize", *tiny_files, "--scripted")
    assert code == 1 and "scripted_tree" in err


def test_explain_dot(capsys):
    code, out, _ = run(capsys, "explain", *SCRIPTED, "--scripted", "--engine", "plain", "--dot")
    assert code == 0
    assert out.startswith("digraph search {")
    assert out.count("->") == 21


def test_explain_too_large(capsys):
    code, _, err = run(capsys, "explain", *SCRIPTED, "--depth", "3", "--sigma", "2", "--engine", "plain",
                       "--dot")
    assert code == 1 and err.startswith("TooLarge:")


def test_bench_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", "--po-counts", "4", "--depths", "1,2", "--engines", "plain")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [int(r["depth"]) for r in rows] == [1, 2]
    target = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bench", "--po-counts", "4", "--depths", "1", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_bench_guardrails(capsys):
    code, _, err = run(capsys, "bench", "--po-counts", "256", "--depths", "1")
    assert code == 1 and err.startswith("GuardrailExceeded:")
    with pytest.raises(GuardrailExceeded):
        check_guardrails([4], [6])
    check_guardrails([1024], [9], force=True)


def test_bench_is_deterministic():
    a = to_csv(run_bench([4], [2], [2], seed=5, engines=("plain", "optimized")))
    b = to_csv(run_bench([4], [2], [2], seed=5, engines=("plain", "optimized")))
    strip = lambda text: [r[:5] + r[6:] for r in csv.reader(io.StringIO(text))]
    assert strip(a) == strip(b)


def test_log_level_from_environment(capsys, monkeypatch, tiny_files):
    monkeypatch.setenv("SPMITI_LOG", "debug")
    assert main(["validate", *tiny_files]) == 0
