import json
import subprocess
import sys
from pathlib import Path

import pytest

from sdpprep.cli import main
from sdpprep.io_sdpa import parse_solution, read_instance
from sdpprep.reduce import ReductionCertificate

DATA = Path(__file__).parent / "data"
EX1 = str(DATA / "example1.dat-s")
CHAIN = str(DATA / "reducible_chain.dat-s")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_reduce_example_1_is_infeasible(capsys, tmp_path):
    code, out, err = run(capsys, "reduce", "--in", EX1, "--cert", tmp_path / "c.json")
    assert code == 2
    report = json.loads(out)
    assert report["verdict"] == "infeasible" and report["n_steps"] == 2
    assert [s["action"] for s in report["steps"]] == ["delete", "infeasible"]
    assert "infeasible" in err
    assert ReductionCertificate.from_json((tmp_path / "c.json").read_text()).infeasible


def test_reduce_unchanged_and_force_out(capsys, tmp_path):
    f = tmp_path / "f.dat-s"
    assert run(capsys, "gen", "--seed", 1, "--preset", "feasible", "--out", f)[0] == 0
    code, out, _ = run(capsys, "reduce", "--in", f, "--out", tmp_path / "o.dat-s")
    assert code == 0 and json.loads(out)["verdict"] == "unchanged"
    assert not (tmp_path / "o.dat-s").exists()
    code, _, _ = run(capsys, "reduce", "--in", f, "--out", tmp_path / "o.dat-s", "--force-out")
    assert read_instance(tmp_path / "o.dat-s") == read_instance(f)


def test_reduce_errors_exit_1(capsys, tmp_path):
    assert run(capsys, "reduce", "--in", tmp_path / "missing.dat-s")[0] == 1
    bad = tmp_path / "bad.dat-s"
    bad.write_text("1\n1\n2\n0\n1 1 3 1 1.0\n")
    code, _, err = run(capsys, "reduce", "--in", bad)
    assert code == 1 and ":5:" in err
    assert run(capsys, "reduce")[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["reduce", "--bogus"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1


def test_report_file_and_determinism(capsys, tmp_path):
    reports = []
    for k in range(2):
        rp = tmp_path / f"r{k}.json"
        assert run(capsys, "reduce", "--in", CHAIN, "--report", rp)[1] == ""
        r = json.loads(rp.read_text())
        del r["wall_time_s"]
        reports.append(r)
    assert reports[0] == reports[1]
    assert reports[0]["final"] == {"n": 1, "m": 1, "block_sizes": [1]}
    assert reports[0]["steps"][1]["support_original"] == [[1, 1], [1, 2]]


def test_verify(capsys, tmp_path):
    cert = tmp_path / "c.json"
    run(capsys, "reduce", "--in", CHAIN, "--cert", cert)
    assert run(capsys, "verify", "--in", CHAIN, "--cert", cert)[0] == 0
    assert run(capsys, "verify", "--in", EX1, "--cert", cert)[0] == 3

    d = json.loads(cert.read_text())
    d["steps"][1]["support_original"] = [[1, 1]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, _, err = run(capsys, "verify", "--in", CHAIN, "--cert", bad)
    assert code == 3 and err
    bad.write_text("{not json")
    assert run(capsys, "verify", "--in", CHAIN, "--cert", bad)[0] == 1


def test_lift(capsys, tmp_path):
    cert = tmp_path / "c.json"
    run(capsys, "reduce", "--in", CHAIN, "--cert", cert)
    sol = tmp_path / "r.sol"
    sol.write_text("y 0.5\nX 1 1 1 2.0\nS 1 1 1 1.0\n")
    assert run(capsys, "lift", "--cert", cert, "--sol", sol, "--out", tmp_path / "x.sol")[0] == 0
    inst = read_instance(CHAIN)
    lifted = parse_solution((tmp_path / "x.sol").read_text(), inst.structure, inst.m)
    assert lifted.X.entries == {(1, 4, 4): 2.0}
    assert lifted.S.entries == {(1, 4, 4): 1.0}
    assert list(lifted.y) == [0.0, 0.0, 0.5]

    sol.write_text("X 1 2 2 1.0\n")
    assert run(capsys, "lift", "--cert", cert, "--sol", sol, "--out", tmp_path / "y.sol")[0] == 1

    excert = tmp_path / "e.json"
    run(capsys, "reduce", "--in", EX1, "--cert", excert)
    assert run(capsys, "lift", "--cert", excert, "--sol", sol, "--out", tmp_path / "z")[0] == 1


def test_lift_zero_step_certificate(capsys, tmp_path):
    f = tmp_path / "f.dat-s"
    run(capsys, "gen", "--seed", 2, "--preset", "feasible", "--base-n", 3, "--base-m", 2,
        "--out", f, "--witness", tmp_path / "w.sol")
    cert = tmp_path / "c.json"
    run(capsys, "reduce", "--in", f, "--cert", cert)
    assert run(capsys, "lift", "--cert", cert, "--sol", tmp_path / "w.sol",
               "--out", tmp_path / "x.sol")[0] == 0
    inst = read_instance(f)
    a = parse_solution((tmp_path / "w.sol").read_text(), inst.structure, inst.m)
    b = parse_solution((tmp_path / "x.sol").read_text(), inst.structure, inst.m)
    assert a.X == b.X


def test_metrics(capsys, tmp_path):
    f = tmp_path / "f.dat-s"
    w = tmp_path / "w.sol"
    run(capsys, "gen", "--seed", 3, "--preset", "feasible", "--out", f, "--witness", w)
    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", w)
    res = json.loads(out)
    assert code == 0 and res["errors"]["err1"] < 1e-12 and res["errors"]["err2"] == 0.0
    assert res["errors"]["err3"] is None and "helped" not in res

    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", w, "--peer-err", "1e-3")
    assert json.loads(out)["helped"]["reason"] == 2
    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", w, "--peer-err", "1e-3",
                       "--role", "before")
    assert json.loads(out)["helped"] == {"helped": False, "reason": 0,
                                         "reason_name": "NOT_HELPED",
                                         "err_before": res["worst_error"],
                                         "err_after": 1e-3}
    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", w, "--infeasible-detected")
    assert json.loads(out)["helped"]["reason"] == 1
    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", w, "--peer-err", "0",
                       "--obj-before", "1", "--obj-after", "2")
    assert json.loads(out)["helped"]["reason"] == 3
    assert run(capsys, "metrics", "--in", f, "--sol", tmp_path / "nope")[0] == 1


def test_gen_presets_reproducible(capsys, tmp_path):
    for preset, kind, code in [("reducible", "reduced", 0), ("infeasible", "infeasible", 2),
                               ("ill-conditioned", "reduced", 0)]:
        a, b = tmp_path / f"{preset}a.dat-s", tmp_path / f"{preset}b.dat-s"
        for out in (a, b):
            assert run(capsys, "gen", "--seed", 7, "--preset", preset, "--k", 3,
                       "--out", out)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        plant = json.loads(Path(f"{a}.plant.json").read_text())
        assert plant["infeasible"] == (preset == "infeasible")
        c, out, _ = run(capsys, "reduce", "--in", a)
        assert c == code and json.loads(out)["verdict"] == kind
    assert run(capsys, "gen", "--seed", 1, "--preset", "infeasible", "--k", 0,
               "--out", tmp_path / "x")[0] == 1


def test_batch(capsys, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for name in ("example1", "reducible_chain", "empty"):
        (src / f"{name}.dat-s").write_text((DATA / f"{name}.dat-s").read_text())
    code, out, _ = run(capsys, "reduce", "--in-dir", src, "--out-dir", tmp_path / "out")
    assert code == 0
    verdicts = {Path(r["input"]).name: r["verdict"] for r in json.loads(out)["batch"]}
    assert verdicts == {"empty.dat-s": "unchanged", "example1.dat-s": "infeasible",
                        "reducible_chain.dat-s": "reduced"}
    assert (tmp_path / "out" / "reducible_chain.reduced.dat-s").exists()
    assert (tmp_path / "out" / "example1.cert.json").exists()

    (src / "broken.dat-s").write_text("garbage\n")
    code, out, _ = run(capsys, "reduce", "--in-dir", src, "--out-dir", tmp_path / "o2",
                       "--jobs", 2)
    assert code == 1
    assert len(json.loads(out)["batch"]) == 4
    assert run(capsys, "reduce", "--in-dir", src)[0] == 1


def test_pipeline(capsys, tmp_path):
    f, w = tmp_path / "p.dat-s", tmp_path / "w.sol"
    run(capsys, "gen", "--seed", 11, "--preset", "reducible", "--k", 3, "--diag-block", 2,
        "--out", f, "--witness", w)
    red, cert = tmp_path / "r.dat-s", tmp_path / "c.json"
    assert run(capsys, "reduce", "--in", f, "--out", red, "--cert", cert)[0] == 0
    assert run(capsys, "verify", "--in", f, "--cert", cert)[0] == 0
    # restrict the witness by hand through the certificate, then lift it back
    c = ReductionCertificate.from_json(cert.read_text())
    orig = read_instance(f)
    X = parse_solution(w.read_text(), orig.structure, orig.m).X
    pos = {(g.block, g.local): k for k, g in enumerate(c.kept_indices)}
    st = c.reduced_structure()
    lines = []
    for (b, i, j), v in X.entries.items():
        if (b, i) in pos and (b, j) in pos:
            gi, gj = st.index(pos[(b, i)]), st.index(pos[(b, j)])
            lo, hi = sorted((gi.local, gj.local))
            lines.append(f"X {gi.block} {lo} {hi} {v!r}")
    rs = tmp_path / "rs.sol"
    rs.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "metrics", "--in", red, "--sol", rs)
    assert code == 0 and json.loads(out)["errors"]["err1"] < 1e-12
    assert run(capsys, "lift", "--cert", cert, "--sol", rs, "--out", tmp_path / "l.sol")[0] == 0
    code, out, _ = run(capsys, "metrics", "--in", f, "--sol", tmp_path / "l.sol")
    errs = json.loads(out)["errors"]
    # the lift is singular, so err2 only sits within the eigenvalue bracket of zero
    assert errs["err1"] < 1e-12 and errs["err2"] <= 1e-10


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sdpprep", "reduce", "--in", EX1],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["verdict"] == "infeasible"
