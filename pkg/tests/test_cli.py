import json
import subprocess
import sys

import numpy as np
import pytest

from gdlstbc import cli, design


def run(argv, capsys):
    rc = cli.main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


@pytest.mark.parametrize("code,extra,verdict", [
    ("alamouti", [], "4-group decodable; GDL order |A_n|"),
    ("golden_naive", [], "fully-interfering (moral graph complete); GDL order = |C|"),
    ("golden_s2", [], "conditionally 2-group; Gamma^c = {5,6,7,8}"),
    ("toeplitz2xT", ["--T", "10"], "conditionally 2-group; Gamma^c = {5}"),
    ("oac4x14", [], "2-group decodable"),
])
def test_analyze_verdicts(code, extra, verdict, capsys):
    rc, out, _ = run(["analyze", "--code", code, *extra], capsys)
    assert rc == cli.EXIT_OK
    assert verdict in out


def test_analyze_json(capsys):
    rc, out, _ = run(["analyze", "--code", "golden_s2", "--json"], capsys)
    d = json.loads(out)
    assert d["gamma_c"] == [5, 6, 7, 8] and d["groups"] == [[1, 3], [2, 4]]
    assert d["moral_edges"] == 20 and d["order_brute"] == 256


def test_tree_outputs(capsys, tmp_path):
    rc, out, _ = run(["tree", "--code", "toeplitz2xT", "--T", "10", "--kind", "core"], capsys)
    assert rc == 0 and out.count("shape=box") == 8 and out.count("--") == 7
    rc, out, _ = run(["tree", "--code", "alamouti", "--kind", "moral"], capsys)
    assert "--" not in out
    p = tmp_path / "t.dot"
    rc, out, _ = run(["tree", "--code", "fe3x3", "--out", str(p)], capsys)
    assert out == "" and p.read_text().startswith("graph jtree {")


def test_tree_from_core_file(capsys, tmp_path):
    p = tmp_path / "core.json"
    p.write_text(json.dumps({"vertices": [[1, 2, 3]]}))
    rc, out, _ = run(["tree", "--code", "fe3x3", "--tree", str(p), "--kind", "core"], capsys)
    assert rc == 0 and "(x1,x2,x3)" in out
    p.write_text(json.dumps({"vertices": [[1, 2], [3]], "edges": [[0, 1]]}))
    rc, _, err = run(["tree", "--code", "fe3x3", "--tree", str(p)], capsys)
    assert rc == cli.EXIT_SPEC and err


def test_decode_is_reproducible(capsys):
    rc, a, _ = run(["decode", "--code", "alamouti", "--seed", "7"], capsys)
    _, b, _ = run(["decode", "--code", "alamouti", "--seed", "7"], capsys)
    assert rc == 0 and a == b
    d = json.loads(a)
    sols = {tuple(v["solution"]) for v in d["decoders"].values()}
    assert len(sols) == 1 and set(d["decoders"]) == {"gdl", "gdl-pam", "cml-brute", "cml-conditional"}


def test_decode_input_file(capsys, tmp_path):
    rng = np.random.default_rng(2)
    H = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    Y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    enc = lambda M: [[[z.real, z.imag] for z in row] for row in M]
    p = tmp_path / "blk.json"
    p.write_text(json.dumps({"H": enc(H), "Y": enc(Y)}))
    rc, out, _ = run(["decode", "--code", "golden_s2", "--input", str(p), "--decoder", "gdl"], capsys)
    assert rc == 0 and list(json.loads(out)["decoders"]) == ["gdl"]
    p.write_text(json.dumps({"H": enc(H)}))
    rc, _, _ = run(["decode", "--code", "golden_s2", "--input", str(p)], capsys)
    assert rc == cli.EXIT_ARGS


def test_count_rows(capsys):
    rc, out, _ = run(["count", "--code", "cda2x2", "--const", "psk", "--M", "8"], capsys)
    assert rc == 0
    assert "507903" in out and "26718" in out and "FAIL" not in out
    rc, out, _ = run(["count", "--code", "fe3x3", "--const", "psk", "--M", "8", "--json"], capsys)
    rows = {r["decoder"]: r["total"] for r in json.loads(out)}
    assert rows["gdl"] == 2758 and rows["cml-brute"] == 38399


def test_simulate(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"code": "fe3x3", "params": {"const": "psk", "M": 8}, "trials": 50}))
    out_csv = tmp_path / "r.csv"
    rc, out, _ = run(["simulate", "--config", str(cfg), "--trials", "4", "--snr", "0", "10",
                      "--out", str(out_csv)], capsys)
    assert rc == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("code,snr_db,trials") and len(lines) == 1 + 2 * 4
    assert all(",4," in line for line in lines[1:])
    rc, out, _ = run(["simulate", "--code", "alamouti", "--trials", "2", "--json"], capsys)
    assert json.loads(out)["config"]["trials"] == 2


def test_exit_codes(capsys, tmp_path):
    assert run([], capsys)[0] == cli.EXIT_ARGS
    assert run(["analyze"], capsys)[0] == cli.EXIT_ARGS
    assert run(["analyze", "--code", "nope"], capsys)[0] == cli.EXIT_ARGS
    assert run(["analyze", "--code", "alamouti", "--q", "0"], capsys)[0] == cli.EXIT_SPEC
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_t": 1, "T": 1, "weights": [[[[1, 0]]]],
                               "groups": [{"indices": [1], "signal_set": {"kind": "PAM", "points": [[0.5]]}},
                                          {"indices": [1], "signal_set": {"kind": "PAM", "points": [[0.5]]}}]}))
    rc, _, err = run(["analyze", "--spec", str(bad)], capsys)
    assert rc == cli.EXIT_SPEC and "overlap" in err
    assert run(["count", "--code", "alamouti", "--decoder", "sphere"], capsys)[0] == cli.EXIT_ARGS
    assert run(["simulate", "--code", "alamouti", "--trials", "0"], capsys)[0] == cli.EXIT_SPEC


def test_spec_file_round_trip(capsys, tmp_path):
    p = tmp_path / "g.json"
    design.catalog("golden_s2").save(p)
    rc, out, _ = run(["analyze", "--spec", str(p)], capsys)
    assert rc == 0 and "Gamma^c = {5,6,7,8}" in out


def test_console_script_module():
    r = subprocess.run([sys.executable, "-m", "gdlstbc.cli", "analyze", "--code", "alamouti"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "4-group" in r.stdout


def test_verify_formulas_gate(capsys):
    # exits non-zero while the known unreproduced rows remain
    rc, out, _ = run(["verify_formulas", "--json"], capsys)
    rows = json.loads(out)
    failing = sorted(r["label"] for r in rows if not r["pass"])
    assert rc == cli.EXIT_VERIFY
    assert failing == sorted(["golden q=2 CML", "golden q=4 CML",
                              "tree example q=2 all-vertex", "tree example q=3 all-vertex",
                              "tree example q=4 all-vertex"])
    assert sum(r["pass"] for r in rows) == len(rows) - 5
