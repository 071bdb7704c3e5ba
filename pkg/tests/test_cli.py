import csv
import io
import json

import pytest
from click.testing import CliRunner

from nicf.cli import SCHEMA_VERSION, main, parse_intervals, parse_word, to_csv, to_json
from nicf.maps import MapKind


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args, env=None):
        return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)
    return invoke


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_expand_json(run):
    res = run("expand", "--kind", "folded", "--x", 0.4, "--n", 5)
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["schema_version"] == SCHEMA_VERSION and doc["command"] == "expand"
    assert doc["config"] == {"fmt": "json", "kind": "folded", "n": 5, "x": 0.4}
    assert doc["result"]["digits"] == [[3, -1], [2, 1]]
    assert doc["result"]["terminated"] is True


def test_expand_odd_and_csv(run):
    res = run("expand", "--kind", "odd", "--x", 0.302776, "--n", 2)
    assert json.loads(res.output)["result"]["digits"] == [3, 3]
    res = run("expand", "--kind", "folded", "--x", 0.4, "--format", "csv")
    assert _rows(res.output) == [{"i": "1", "a": "3", "e": "-1"}, {"i": "2", "a": "2", "e": "1"}]


@pytest.mark.parametrize("args", [
    ("expand", "--kind", "folded", "--x", 0.9),
    ("expand", "--kind", "gauss", "--x", 0.1),
    ("expand", "--kind", "odd", "--x", 0.1, "--n", 0),
    ("decay", "--kind", "folded", "--n-max", 0),
    ("certify", "--family", "folded", "--spacing", 0.5),
    ("mixing", "--kind", "folded", "--e", "0,0.25", "--f", "2,-1", "--n", 5),
    ("mixing", "--kind", "folded", "--e", "0.3,0.1", "--f", "2,1", "--n", 5),
    ("mixing", "--kind", "odd", "--e", "0,0.25", "--f", "3", "--n", 5),
    ("levy", "--n-max", 1),
])
def test_invalid_input_exits_2(run, args):
    res = run(*args)
    assert res.exit_code == 2
    assert res.output.startswith("error:")


def test_domain_error_message_names_the_domain(run):
    res = run("expand", "--kind", "folded", "--x", 0.9)
    assert "folded domain [0, 0.5]" in res.output


def test_inadmissible_word_message(run):
    res = run("mixing", "--kind", "folded", "--e", "0,0.25", "--f", "2,-1", "--n", 5)
    assert "(2, -1)" in res.output and "a + e >= 2" in res.output


def test_certify_folded(run):
    res = run("certify", "--family", "folded", "--report-components")
    assert res.exit_code == 0
    r = json.loads(res.output)["result"]
    assert r["pass"] is True and r["certified_sup"] < 0.288
    assert {"paper_constant", "certified_sup", "grid_spacing", "padding", "pass"} <= r.keys()
    assert len(r["components"]) == 2


def test_certify_conjugate_reports_discrepancy(run):
    res = run("certify", "--family", "conjugate", "--report-components")
    assert res.exit_code == 0
    r = json.loads(res.output)["result"]
    assert r["pass"] is True and r["certified_sup"] < 0.234
    assert r["lemma_route_pass"] is False
    assert "0.092" in r["discrepancy_note"] and "0.0992" in r["discrepancy_note"]


def test_failed_certificate_exits_1(run):
    # on a 1e-2 grid the Lipschitz padding lifts the folded sup above 0.288
    res = run("certify", "--family", "folded", "--spacing", 0.01)
    assert res.exit_code == 1
    assert json.loads(res.output)["result"]["pass"] is False


@pytest.mark.parametrize("kind", ["folded", "conjugate"])
def test_decay_csv(run, kind):
    res = run("decay", "--kind", kind, "--n-max", 20, "--format", "csv")
    assert res.exit_code == 0
    rows = _rows(res.output)
    assert len(rows) == 20 and list(rows[0]) == ["n", "error", "ratio"]
    doc = json.loads(run("decay", "--kind", kind, "--n-max", 20).output)
    assert doc["result"]["fitted_rate"] < doc["result"]["paper_rate"]


def test_mixing_csv_gaps_decay(run):
    res = run("mixing", "--kind", "folded", "--e", "0,0.25", "--f", "2,+1", "--n", "5,10,15")
    assert res.exit_code == 0
    rows = _rows(res.output)
    assert [int(r["n"]) for r in rows] == [5, 10, 15]
    gaps = [float(r["gap"]) for r in rows]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_mixing_conjugate_and_odd(run):
    res = run("mixing", "--kind", "conjugate", "--e=-0.25,0.25", "--f", "2,1", "--n", "2,4",
              "--format", "json")
    rows = json.loads(res.output)["result"]["rows"]
    assert len(rows) == 2 and rows[1]["gap"] < rows[0]["gap"]
    res = run("mixing", "--kind", "odd", "--e=-0.25,0.25", "--f", "3", "--n", "2")
    assert res.exit_code == 0 and len(_rows(res.output)) == 1


def test_mixing_seed_and_reproducibility(run, monkeypatch):
    args = ("mixing", "--kind", "folded", "--e", "0,0.25", "--f", "2,1", "--n", "2",
            "--mc-samples", 20000, "--format", "json")
    a = run(*args, env={"NICF_SEED": "99"})
    b = run(*args, env={"NICF_SEED": "99"})
    assert a.output == b.output
    assert json.loads(a.output)["config"]["seed"] == 99
    c = run(*args, "--seed", 99, env={"NICF_SEED": "1"})
    assert json.loads(c.output)["result"] == json.loads(a.output)["result"]
    assert "mc_z" in json.loads(a.output)["result"]["rows"][0]


def test_config_file_and_flag_precedence(run, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nn = 3\nformat = csv\nseed = 5\n")
    res = run("--config", cfg, "expand", "--kind", "folded", "--x", 0.3)
    assert len(_rows(res.output)) == 3
    res = run("--config", cfg, "expand", "--kind", "folded", "--x", 0.3, "--n", 1,
              "--format", "json")
    assert json.loads(res.output)["config"]["n"] == 1
    res = run("--config", cfg, "mixing", "--kind", "folded", "--e", "0,0.25", "--f", "2,1",
              "--n", "2", "--format", "json")
    assert json.loads(res.output)["config"]["seed"] == 5


def test_output_file(run, tmp_path):
    out = tmp_path / "levy.csv"
    res = run("levy", "--n-max", 10, "--format", "csv", "--output", out)
    assert res.exit_code == 0 and res.output == ""
    rows = _rows(out.read_text())
    assert [r["family"] for r in rows] == ["folded", "conjugate", "gauss (Wirsing)"]
    assert rows[2]["certified_sup"] == "null"


def test_json_floats_round_trip():
    x = 0.1 + 0.2
    assert float(json.loads(to_json({"v": x}))["v"]) == x
    assert to_json([1.0, float("nan")]) == "[1, null]"
    assert to_csv(["a"], [[1 / 3]]) == "a\n0.33333333333333331\n"


def test_parsers():
    assert parse_intervals("0,0.25; 0.3,0.4") == [(0.0, 0.25), (0.3, 0.4)]
    assert parse_word("2,+1;3,-1", MapKind.FOLDED) == [(2, 1), (3, -1)]
    assert parse_word("3;-2", MapKind.ODD) == [3, -2]
    with pytest.raises(ValueError):
        parse_intervals("")
    with pytest.raises(ValueError):
        parse_word("3", MapKind.FOLDED)
