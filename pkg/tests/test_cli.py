import json

import pytest

from slotmech.cli import main
from slotmech.core import load_instance

from conftest import DATA, GOLDEN


@pytest.mark.parametrize("instance,mechanism,golden", [
    ("draft_example.json", "vcgt", "draft_vcgt.json"),
    ("instance_w.json", "maa", "w_maa.json"),
    ("instance_w.json", "exact", "w_exact.json"),
])
def test_solve_matches_golden(tmp_path, instance, mechanism, golden):
    out = tmp_path / "out.json"
    assert main(["solve", str(DATA / instance), "--mechanism", mechanism, "-o", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / golden).read_bytes()


def test_solve_order_flag(tmp_path):
    out = tmp_path / "o.json"
    assert main(["solve", str(DATA / "instance_w.json"), "--mechanism", "maa",
                 "--order", "3,2,1", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["order"] == ["3", "2", "1"]
    assert doc["allocation"][2]["slot"] == 0


def test_small_capacity_exits_2(tmp_path):
    doc = json.loads((DATA / "instance_w.json").read_text())
    doc["capacity"] = 2
    p = tmp_path / "k2.json"
    p.write_text(json.dumps(doc))
    assert main(["solve", str(p), "--mechanism", "maa"]) == 2


def test_invalid_input_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kind": "single", "slots": 2, "capacity": 0,
                             "agents": [{"id": "a", "values": [1, 2]}]}))
    assert main(["solve", str(p)]) == 1
    assert "capacity" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 1


def test_vcgt_rejects_multi():
    assert main(["solve", str(DATA / "instance_w.json"), "--mechanism", "vcgt"]) == 2


def test_verify_exit_codes(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "ir", "--mechanism", "vcgt-single",
                 "--trials", "30", "--seed", "0", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["reports"][0]["violations"] == []
    assert main(["verify", "--suite", "capacity", "--trials", "30", "--seed", "0",
                 "-o", str(out)]) == 0
    assert main(["verify", "--suite", "epp", "--mechanism", "maa", "--seed", "0"]) == 2


def test_verify_reports_violations(tmp_path):
    out = tmp_path / "r.json"
    code = main(["verify", "--suite", "truthfulness", "--mechanism", "maa",
                 "--trials", "400", "--seed", "0", "-o", str(out)])
    doc = json.loads(out.read_text())
    assert code == 1 and doc["reports"][0]["violations"]


@pytest.mark.parametrize("argv", [
    ["experiment", "congestion", "--days", "2", "--seed", "4"],
    ["experiment", "priority", "--ns", "3,8", "--reps", "2", "--seed", "4"],
])
def test_experiment_output_is_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*argv, "-o", str(a)]) == 0
    assert main([*argv, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) > 1


def test_congestion_from_footfall_file(tmp_path):
    ff = tmp_path / "ff.csv"
    assert main(["gen", "footfall", "--days", "2", "--seed", "1", "-o", str(ff)]) == 0
    out = tmp_path / "c.csv"
    assert main(["experiment", "congestion", "--footfall", str(ff), "--seed", "1",
                 "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 14


@pytest.mark.parametrize("kind", ["single", "multi", "divisible"])
def test_gen_instance_is_valid(tmp_path, kind):
    out = tmp_path / "i.json"
    assert main(["gen", "instance", "--kind", kind, "--n", "6", "--m", "4", "--k", "3",
                 "--seed", "2", "-o", str(out)]) == 0
    inst = load_instance(out)
    assert inst.kind == kind and inst.n == 6 and inst.m == 4


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("SLOTMECH_SEED", "9")
    assert main(["gen", "footfall", "--days", "1", "-o", str(a)]) == 0
    monkeypatch.delenv("SLOTMECH_SEED")
    assert main(["gen", "footfall", "--days", "1", "--seed", "9", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["gen", "footfall", "--days", "1"]) == 1
