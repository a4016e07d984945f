import json
from fractions import Fraction

import pytest

from villadsen.cli import main
from villadsen.sysfile import save_system
from villadsen.system import VilladsenSystem, cube, stage, Point
from villadsen.families import OddSquaresFamily, SquaresFamily


@pytest.fixture
def s2_file(tmp_path, s2):
    path = tmp_path / "s2.vsys"
    save_system(s2, path)
    return path


@pytest.fixture
def s4_file(tmp_path, s4):
    path = tmp_path / "s4.vsys"
    save_system(s4, path)
    return path


def run(args):
    return main([str(a) for a in args])


def test_validate_ok(tmp_path, s2_file):
    out = tmp_path / "report.txt"
    code = run(["validate", s2_file, "--depth", "8", "-o", out, "-q"])
    assert code == 0
    text = out.read_text()
    assert "negligible-evaluations = satisfied" in text
    assert "structural = pass" in text


def test_validate_structural_failure_exit_one(tmp_path):
    bad = VilladsenSystem(
        seed=cube(1), n0=1,
        prefix=(stage(2, (1, 0), 1, [Point((Fraction(1, 2),))]),),
    )
    path = tmp_path / "bad.vsys"
    save_system(bad, path)
    code = run(["validate", path, "--depth", "1", "-o", tmp_path / "r.txt", "-q"])
    assert code == 1


def test_invariants_report(tmp_path, s2_file):
    out = tmp_path / "inv.txt"
    code = run(["invariants", s2_file, "--depth", "10", "-o", out, "-q"])
    assert code == 0
    text = out.read_text()
    assert "gamma.exact = 1/2" in text
    assert "comparison-radius.exact = 1/2" in text
    assert "mean-dimension.exact = 1" in text
    assert "trace-simplex = Poulsen" in text
    assert (tmp_path / "inv.partials.tsv").read_text().startswith("depth\t")


def test_invariants_deterministic(tmp_path, s2_file):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run(["invariants", s2_file, "-o", a, "-q"])
    run(["invariants", s2_file, "-o", b, "-q"])
    assert a.read_bytes() == b.read_bytes()


def test_invariants_figures(tmp_path, s2_file):
    out = tmp_path / "inv.txt"
    code = run(["invariants", s2_file, "--depth", "8", "--figures", "-o", out, "-q"])
    assert code == 0
    png = tmp_path / "inv.partials.png"
    assert png.exists() and png.stat().st_size > 0


def test_classify_not_isomorphic_exit_zero(tmp_path, s2_file, s4_file):
    out = tmp_path / "cls.txt"
    code = run(["classify", s2_file, s4_file, "-o", out, "-q"])
    assert code == 0
    text = out.read_text()
    assert "verdict = NotIsomorphic" in text
    assert "rc.left.exact = 1/2" in text
    assert "rc.right.exact = 3/2" in text


def test_classify_isomorphic(tmp_path, s2, s2_other_evals):
    a, b = tmp_path / "a.vsys", tmp_path / "b.vsys"
    save_system(s2, a)
    save_system(s2_other_evals, b)
    out = tmp_path / "cls.txt"
    code = run(["classify", a, b, "-o", out, "-q"])
    assert code == 0
    assert "verdict = Isomorphic" in out.read_text()


def test_classify_undetermined_exit_two(tmp_path):
    # two systems with the same comparison radius whose K-zero generators only
    # decide primes pointwise: the first stage of one is scaled by 7, which
    # divides infinitely many later terms on both sides, so no witness exists
    # at the bound and no equality certificate either
    from villadsen.families import HalvingFamily

    a = VilladsenSystem(seed=cube(2), n0=1, family=HalvingFamily(7, 10), name="a")
    b = VilladsenSystem(
        seed=cube(2), n0=1, family=HalvingFamily(7, 10),
        prefix=(stage(98, (1,) * 98, 21),),
        name="b",
    )
    fa, fb = tmp_path / "a.vsys", tmp_path / "b.vsys"
    save_system(a, fa)
    save_system(b, fb)
    out = tmp_path / "cls.txt"
    code = run(["classify", fa, fb, "--criterion", "k-contractible", "-o", out, "-q"])
    assert code == 2
    assert "verdict = Undetermined" in out.read_text()


def test_schedule_cli(tmp_path, s2, s2_other_evals):
    a, b = tmp_path / "a.vsys", tmp_path / "b.vsys"
    save_system(s2, a)
    save_system(s2_other_evals, b)
    out = tmp_path / "sched.txt"
    code = run([
        "schedule", a, b, "--deltas", "1/8,1/16,1/32", "--search-bound", "200", "-o", out, "-q",
    ])
    assert code == 0
    text = out.read_text()
    assert "entries = 3" in text
    assert "all-pass = true" in text


def test_schedule_refusal_exit_one(tmp_path, s2_file, s2):
    odd = VilladsenSystem(seed=cube(2), n0=1, family=OddSquaresFamily(3), name="odd")
    b = tmp_path / "odd.vsys"
    save_system(odd, b)
    out = tmp_path / "sched.txt"
    code = run(["schedule", s2_file, b, "-o", out, "-q"])
    assert code == 1
    assert "failed-condition = k0-equality" in out.read_text()


def test_match_cli(tmp_path):
    instance = tmp_path / "match.json"
    instance.write_text(json.dumps({
        "cube": 1,
        "xs": [{"point": ["1/10"]}, {"point": ["5/10"]}, {"point": ["9/10"]}],
        "ys": [{"point": ["15/100"]}, {"point": ["55/100"]}, {"point": ["95/100"]}],
    }))
    out = tmp_path / "match.txt"
    code = run(["match", instance, "--radius", "1/5", "-o", out, "-q"])
    assert code == 0
    text = out.read_text()
    assert "matched = true" in text
    assert "max-displacement = 1/20" in text


def test_trace_approx_cli(tmp_path, s2_file):
    task = tmp_path / "mu.json"
    task.write_text(json.dumps({
        "stage": 1,
        "support": [
            {"point": ["1/4", "1/4"], "weight": "1/2"},
            {"point": ["3/4", "3/4"], "weight": "1/2"},
        ],
        "functions": [{
            "name": "f",
            "lipschitz": "1",
            "values": [
                {"point": ["1/4", "1/4"], "value": "0"},
                {"point": ["3/4", "3/4"], "value": "1/2"},
            ],
        }],
    }))
    out = tmp_path / "approx.txt"
    code = run(["trace-approx", s2_file, task, "--eps", "1/5", "-o", out, "-q"])
    assert code == 0
    assert "all-verified = true" in out.read_text()


def test_realize_round_trip(tmp_path):
    out = tmp_path / "sys.vsys"
    code = run(["realize", "--rc", "3/2", "-o", out, "-q"])
    assert code == 0
    rep = tmp_path / "sys.report.txt"
    assert "comparison-radius.exact = 3/2" in rep.read_text()
    inv_out = tmp_path / "check.txt"
    assert run(["invariants", out, "-o", inv_out, "-q"]) == 0
    assert "comparison-radius.exact = 3/2" in inv_out.read_text()


def test_bad_file_exit_one(tmp_path):
    path = tmp_path / "junk.vsys"
    path.write_text("{not json")
    assert run(["validate", path, "-o", tmp_path / "r.txt", "-q"]) == 1
