import subprocess
import sys

import pytest

from dpms.cli import main
from dpms.formula_io import read_formula
from dpms.oracle import all_values

TWO_UNITS = "p hwcnf 1 2 3\n1 1 0\n1 -1 0\n"
HYBRID2 = "p hwcnf 2 3 10\n2 1 2 0\nx 3 1 2 0\nd 1 2 1 2 0\n"
MINMAX = "p hwcnf 2 2 10\na 1 0\ne 2 0\n1 1 2 0\n1 -1 -2 0\n"


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _lines(out, prefix):
    return [l for l in out.splitlines() if l.startswith(prefix)]


def test_two_units(capsys, write):
    code, out, _ = run(capsys, "solve", write("u.hwcnf", TWO_UNITS))
    assert code == 0
    assert "s OPTIMUM FOUND" in out and "o 1" in out.splitlines()


def test_chain_width_stat(capsys, write, tmp_path):
    path = str(tmp_path / "chain.hwcnf")
    assert main(["gen", "chain", "--n", "100", "--k", "10", "--seed", "7", "-o", path]) == 0
    code, out, _ = run(capsys, "solve", path, "--stats")
    assert code == 0
    (w,) = _lines(out, "c width")
    assert int(w.split()[2]) <= 20
    for key in ("c peak-nodes", "c plan-ms", "c solve-ms", "c bound"):
        assert _lines(out, key)


def _check_v_line(text, out):
    """Re-evaluate the emitted assignment straight from the file."""
    f = read_formula(text)
    (v,) = _lines(out, "v ")
    lits = [int(x) for x in v.split()[1:]]
    idx = sum(1 << (l - 1) for l in lits if l > 0)
    value = int(all_values(f)[idx])
    (o,) = _lines(out, "o ")
    assert f.total_soft_weight - value == int(o.split()[1])


def test_emit_and_oracle_check(capsys, write):
    code, out, _ = run(capsys, "solve", write("h.hwcnf", HYBRID2), "--emit-assignment", "--oracle-check")
    assert code == 0
    assert "o 1" in out.splitlines()
    assert "c oracle agrees value 5" in out
    _check_v_line(HYBRID2, out)


@pytest.mark.parametrize("bound", ["ls:20", "fixed:40", "fallback", "none"])
def test_bound_sources(capsys, write, tmp_path, bound):
    path = str(tmp_path / "r.hwcnf")
    main(["gen", "random", "--n", "14", "--k", "4", "--seed", "3"])
    text = capsys.readouterr().out
    (tmp_path / "r.hwcnf").write_text(text)
    code, out, _ = run(capsys, "solve", path, "--bound", bound, "--emit-assignment", "--oracle-check", "--stats")
    assert code == 0 and "c oracle agrees" in out
    _check_v_line(text, out)


def test_minmax_output(capsys, write):
    code, out, _ = run(capsys, "solve", write("m.hwcnf", MINMAX))
    assert code == 0
    assert "o 0" in out.splitlines() and "c value 2" in out.splitlines()


def test_executor_flags(capsys, write):
    path = write("h.hwcnf", HYBRID2)
    for ex in ("standard", "basic"):
        for impl in ("cofactor", "compose"):
            code, out, _ = run(capsys, "solve", path, "--executor", ex, "--max-impl", impl, "--oracle-check")
            assert code == 0 and "o 1" in out.splitlines()


def test_hard_unsat(capsys, write):
    code, out, _ = run(capsys, "solve", write("x.hwcnf", "p hwcnf 1 2 5\n5 1 0\n5 -1 0\n"))
    assert code == 0 and "s HARD UNSATISFIABLE" in out


def test_decimal_cost(capsys, write):
    code, out, _ = run(capsys, "solve", write("d.hwcnf", "p hwcnf 1 2 9\n1.5 1 0\n0.25 -1 0\n"))
    assert "o 0.25" in out.splitlines()


def test_wcnf_input(capsys, write):
    code, out, _ = run(capsys, "solve", write("w.wcnf", "p wcnf 2 2 3\n3 1 0\n1 -1 2 0\n"))
    assert code == 0 and "o 0" in out.splitlines()


def test_deterministic_output(capsys, write):
    path = write("h.hwcnf", HYBRID2)
    outs = []
    for _ in range(2):
        _, out, _ = run(capsys, "solve", path, "--stats", "--emit-assignment", "--seed", "4")
        outs.append([l for l in out.splitlines() if not l.endswith("-ms") and "-ms " not in l])
    assert outs[0] == outs[1]


def test_parse_error_exit(capsys, write):
    code, _, err = run(capsys, "solve", write("bad.hwcnf", "p hwcnf 1 1 5\n1 2 0\n"))
    assert code == 1 and "line 2" in err


def test_missing_file(capsys):
    code, _, _ = run(capsys, "solve", "/nonexistent/file.hwcnf")
    assert code == 1


def test_bad_flags(capsys):
    with pytest.raises(SystemExit) as e:
        main(["solve", "--bound", "sometimes", "x"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1


def test_node_cap_exit(capsys, write, monkeypatch):
    main(["gen", "chain", "--n", "40", "--k", "6"])
    path = write("c.hwcnf", capsys.readouterr().out)
    monkeypatch.setenv("DPMS_NODE_CAP", "10")
    code, _, err = run(capsys, "solve", path)
    assert code == 2 and "resource" in err


def test_plan_and_verify(capsys, write):
    path = write("m.hwcnf", MINMAX)
    code, out, _ = run(capsys, "plan", path)
    assert code == 0 and out.splitlines()[-1].startswith("width")
    code, out, _ = run(capsys, "verify", path)
    assert code == 0 and "agrees" in out


def test_verify_mismatch_exit(capsys, write, monkeypatch):
    import dpms.oracle as oracle
    from dpms.oracle import OracleResult
    monkeypatch.setattr(oracle, "brute_max", lambda f: OracleResult(-1))
    code, out, _ = run(capsys, "verify", write("h.hwcnf", HYBRID2))
    assert code == 3 and "MISMATCH" in out


def test_jobs_and_dump(capsys, write):
    a, b = write("a.hwcnf", HYBRID2), write("b.hwcnf", TWO_UNITS)
    code, out, err = run(capsys, "solve", a, b, "--jobs", "2", "--dump-add", "0")
    assert code == 0
    assert _lines(out, "c file") == [f"c file {a}", f"c file {b}"]
    assert err.count("digraph") == 2


def test_gen_minmax_prefix(capsys):
    main(["gen", "hybrid", "--n", "6", "--m", "5", "--minmax", "0.5", "--seed", "2"])
    text = capsys.readouterr().out
    assert read_formula(text).has_partition


def test_module_entry_point(tmp_path):
    p = tmp_path / "u.hwcnf"
    p.write_text(TWO_UNITS)
    r = subprocess.run([sys.executable, "-m", "dpms", "solve", str(p)], capture_output=True, text=True)
    assert r.returncode == 0 and "o 1" in r.stdout.splitlines()
