import csv
import io
import json

import pytest

from curvepoints.cli import parse_grid, run


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_count_reference(capsys):
    code, out, _ = _run(capsys, "count", "--curve", "parabola", "--interval", "0,1",
                        "--Q", "50", "--delta", "0.1")
    assert code == 0
    assert out.splitlines()[0] == "Q,delta,count,ambiguous,elapsed_ms"
    assert _rows(out)[0]["count"] == "330"


def test_validation_exit_code(capsys):
    code, _, err = _run(capsys, "count", "--Q", "50", "--delta", "0.6")
    assert code == 2 and "0 < delta < 1/2" in err


def test_unknown_command(capsys):
    code, _, err = _run(capsys, "frobnicate")
    assert code == 2 and "usage" in err


def test_fejer_check_lines(capsys):
    code, out, _ = _run(capsys, "fejer-check", "--delta", "0.49")
    rows = _rows(out)
    assert code == 0
    assert {r["check"] for r in rows} >= {"range", "fourier", "lower_bound"}
    assert all(r["status"] == "PASS" for r in rows)


def test_json_matches_csv(capsys):
    argv = ["bound-envelope", "--Q-grid", "2^6..2^7", "--delta-grid", "2^-2..2^-3"]
    _, c, _ = _run(capsys, *argv)
    _, j, _ = _run(capsys, *argv, "--format", "json")
    data = json.loads(j)
    rows = _rows(c)
    assert data["columns"] == list(rows[0].keys())
    for a, b in zip(rows, data["rows"]):
        for k in data["columns"]:
            assert float(a[k]) == float(b[k])


def test_threads_byte_identical(capsys):
    outs = []
    for t in ("1", "4", "8"):
        _, out, _ = _run(capsys, "count-tilde", "--curve", "exp", "--Q", "300", "--delta",
                         "0.05", "--threads", t)
        outs.append([",".join(r.split(",")[:-1]) for r in out.splitlines()])
    assert outs[0] == outs[1] == outs[2]


def test_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample\nQ=50\ndelta=0.1\ncurve=parabola\n")
    man = tmp_path / "m.json"
    code, out, _ = _run(capsys, "count", "--config", str(cfg), "--manifest", str(man))
    assert code == 0 and _rows(out)[0]["count"] == "330"
    rec = json.loads(man.read_text())
    assert rec["config"]["Q"] == 50 and "numpy" in rec["versions"] and rec["threads"] >= 1
    code, out, _ = _run(capsys, "count", "--config", str(cfg), "--Q", "10")
    assert _rows(out)[0]["Q"] == "10"


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus=1\n")
    code, _, _ = _run(capsys, "count", "--config", str(cfg), "--Q", "5", "--delta", "0.1")
    assert code == 2


def test_out_file_and_points(tmp_path, capsys):
    out = tmp_path / "r.csv"
    pts = tmp_path / "p.csv"
    code, stdout, _ = _run(capsys, "count", "--Q", "20", "--delta", "0.1", "--out", str(out),
                           "--points", str(pts))
    assert code == 0 and stdout == ""
    n = int(_rows(out.read_text())[0]["count"])
    assert len(_rows(pts.read_text())) == n


@pytest.mark.parametrize("argv,cols", [
    (["count-nf", "--Q", "64", "--psi", "1,0.5"], "Q,psi_Q,count,majorant_count,ambiguous,elapsed_ms"),
    (["coprime-triples", "--R", "20", "--Psi", "0.1"], "R,Psi,count,double_sum,elapsed_ms"),
    (["dual", "--j", "3"], "j,h,beta,phi,lambda"),
    (["lambda", "--J", "3"], "j,h,beta,phi,lambda"),
    (["lemma23", "--J", "8", "--Q", "32"], "J,Q,S5,S6,S7,rhs5,rhs6,rhs7"),
    (["majorant", "--Q", "20", "--delta", "0.1"], "Q,delta,N_tilde,majorant,slack"),
    (["sigma-intervals", "--psi", "1,0.6", "--n", "2"], "n,q,p1,p2,lo,hi,length"),
    (["step4-check", "--psi", "1,0.55", "--n-range", "2:4"], "n,card,rhs,ratio"),
    (["khinchin-sum", "--psi", "1,0.6", "--t-max", "1000"], "t,partial_sum,verdict"),
    (["khinchin-sum", "--psi", "1,0.75", "--borel-cantelli", "3"],
     "n,block_length,partial_sum,comparison"),
    (["jarnik-sum", "--psi", "1,1", "--s", "0.6", "--t-max", "100"], "t,partial_sum,verdict"),
    (["hausdorff-cover", "--psi", "1,0.75", "--s", "0.8", "--l", "2", "--L", "4"],
     "n,card,diameter,summand,cumulative"),
    (["mult-probe", "--psi", "1,1,2", "--Q", "100", "--samples", "2"], "x,hits"),
    (["bench", "--Q", "200", "--thread-list", "1,2"], "threads,elapsed_ms,speedup,count"),
])
def test_schemas(capsys, argv, cols):
    code, out, err = _run(capsys, *argv)
    assert code == 0, err
    assert out.splitlines()[0] == cols
    assert out.endswith("\n") and "\r" not in out


def test_mult_probe_endpoint(capsys):
    _, out, _ = _run(capsys, "mult-probe", "--psi", "1,1,2", "--Q", "1000", "--x", "1")
    assert _rows(out)[0]["hits"] == "1000"


def test_jarnik_rejects_s(capsys):
    code, _, _ = _run(capsys, "jarnik-sum", "--psi", "1,1", "--s", "0.3")
    assert code == 2


def test_parse_grid():
    assert parse_grid("2^7..2^9") == [128, 256, 512]
    assert [float(x) for x in parse_grid("2^-2..2^-4")] == [0.25, 0.125, 0.0625]
    assert parse_grid("1:2:1/4")[-1] == 2
    assert parse_grid("3,1,2") == [3, 1, 2]
