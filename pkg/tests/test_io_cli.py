import csv
import io as stdio
import json
from fractions import Fraction

import pytest

from helpers import footnote2, random_fl, random_kc
from parclust import cli, io
from parclust.errors import StructuralError
from parclust.generate import GenParams, generate_instance, parse_mix
from parclust.instance import ParityLabel, feasibility_precheck, reduce_unconstrained, validate_instance
from parclust.kcenter import kcenter_precheck

FOOTNOTE2 = io.bundled("footnote2.json")


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", stdio.StringIO(stdin))
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- parsing ---------------------------------------------------------------


def test_bundled_footnote2():
    inst = footnote2()
    assert inst.facility_ids == ("i1", "i2") and inst.clients == ("j1", "j2")
    assert all(f.parity is ParityLabel.EVEN and f.open_cost == 0 for f in inst.facilities)


def test_matrix_order_is_respected():
    data = {
        "facilities": [{"id": "i", "open_cost": 1, "parity": "odd"}],
        "clients": [{"id": "j"}],
        "metric": {"kind": "matrix", "order": ["j", "i"], "d": [[0, 2], [2, 0]]},
    }
    inst = io.instance_from_dict(data)
    assert inst.d("i", "j") == 2


def test_euclidean_metric():
    data = {
        "facilities": [{"id": "i", "open_cost": 0, "parity": "even"}],
        "clients": [{"id": "j"}],
        "metric": {"kind": "euclidean", "points": {"i": [0, 0], "j": [3, 4]}},
    }
    assert io.instance_from_dict(data).d("i", "j") == 5


def test_exact_mode_reads_fractions():
    text = json.dumps(
        {
            "facilities": [{"id": "i", "open_cost": 0.1, "parity": "even"}],
            "clients": [{"id": "j"}],
            "metric": {"kind": "matrix", "d": [[0, "1/3"], ["1/3", 0]]},
        }
    )
    inst = io.instance_from_dict(io.loads(text, exact=True), exact=True)
    assert inst.f("i") == Fraction(1, 10)
    assert inst.d("i", "j") == Fraction(1, 3)


@pytest.mark.parametrize(
    "data",
    [
        [],
        {"facilities": [{"id": 3}], "clients": [], "metric": {"kind": "matrix", "d": [[0]]}},
        {"facilities": [{"id": "a", "parity": "weird"}], "clients": [], "metric": {"kind": "matrix", "d": [[0]]}},
        {"facilities": [{"id": "a"}], "clients": [{"id": "a"}], "metric": {"kind": "matrix", "d": [[0, 0], [0, 0]]}},
        {"facilities": [{"id": "a"}], "clients": [{"id": "b"}], "metric": {"kind": "matrix", "d": [[0, 1]]}},
        {"facilities": [{"id": "a"}], "clients": [{"id": "b"}], "metric": {"kind": "spherical"}},
        {"facilities": [{"id": "a"}], "clients": [{"id": "b"}], "metric": {"kind": "bipartite", "d": {"b": {"a": 1}}}},
        {"facilities": [{"id": "a"}, {"id": "c"}], "clients": [{"id": "b"}], "metric": {"kind": "bipartite", "d": {"a": {"b": 1}}}},
        {"facilities": [{"id": "a", "open_cost": True}], "clients": [], "metric": {"kind": "matrix", "d": [[0]]}},
    ],
)
def test_malformed_instances_rejected(data):
    with pytest.raises(StructuralError):
        io.instance_from_dict(data)


def test_kcenter_parse_and_reject():
    data = {"nodes": [{"id": "a", "parity": "odd"}, {"id": "b", "parity": "even"}], "metric": {"kind": "matrix", "d": [[0, 1], [1, 0]]}, "k": 1}
    inst = io.kcenter_from_dict(data)
    assert inst.nodes == ("a", "b") and inst.k == 1
    with pytest.raises(StructuralError):
        io.kcenter_from_dict({**data, "k": "2"})
    with pytest.raises(StructuralError):
        io.kcenter_from_dict({**data, "metric": {"kind": "bipartite", "d": {}}})
    with pytest.raises(StructuralError):
        io.loads("{not json")
    with pytest.raises(StructuralError):
        io.loads('{"a": NaN}')


@pytest.mark.parametrize("seed", range(20))
def test_roundtrip_fl(seed):
    geometry = "euclidean" if seed % 2 else "random-metric"
    inst = random_fl(seed, 1 + seed % 5, seed % 8, mix=(1, 1, 1), geometry=geometry, feasible=False)
    again = io.instance_from_dict(json.loads(io.dumps(inst)))
    assert again == inst


@pytest.mark.parametrize("seed", range(20))
def test_roundtrip_kcenter(seed):
    geometry = "euclidean" if seed % 2 else "random-metric"
    inst = random_kc(seed, seed % 9, 1 + seed % 3, geometry=geometry, feasible=False)
    again = io.kcenter_from_dict(json.loads(io.dumps(inst)))
    assert again == inst


def test_roundtrip_exact():
    inst = footnote2()
    text = io.dumps(inst)
    assert io.instance_from_dict(io.loads(text, exact=True), exact=True) == inst


# -- generator -------------------------------------------------------------


def test_generate_empty_and_deterministic():
    empty = generate_instance(GenParams("fl", 0, 0), 1)
    assert empty.facilities == () and empty.clients == ()
    p = GenParams("fl", 4, 6, geometry="random-metric", parity_mix=(1, 1, 1))
    assert io.dumps(generate_instance(p, 9)) == io.dumps(generate_instance(p, 9))
    assert io.dumps(generate_instance(p, 9)) != io.dumps(generate_instance(p, 10))


def test_generate_metrics_are_valid():
    for geometry in ("euclidean", "random-metric"):
        inst = generate_instance(GenParams("fl", 4, 7, geometry=geometry), 3)
        assert validate_instance(inst).ok


def test_feasible_only():
    for seed in range(50):
        inst = generate_instance(GenParams("fl", 1 + seed % 3, seed % 6, parity_mix=(1, 1, 0), feasible_only=True), seed)
        assert feasibility_precheck(reduce_unconstrained(inst).instance)
        kc = generate_instance(GenParams("kcenter", 0, seed % 7, k=1, parity_mix=(1, 1, 0), feasible_only=True), seed)
        assert kcenter_precheck(kc)[0]


def test_impossible_mix_errors():
    with pytest.raises(StructuralError, match="no feasible instance"):
        generate_instance(GenParams("fl", 2, 3, parity_mix=(0, 1, 0), feasible_only=True, max_retries=5), 0)


def test_params_validation():
    with pytest.raises(StructuralError):
        GenParams("fl", -1, 2)
    with pytest.raises(StructuralError):
        GenParams("fl", 1, 2, parity_mix=(0, 0, 0))
    with pytest.raises(StructuralError):
        GenParams("tsp")
    with pytest.raises(StructuralError):
        parse_mix("1:2")
    assert parse_mix("1:0:2") == (1.0, 0.0, 2.0)


# -- CLI -------------------------------------------------------------------


def test_cli_solve_fl_footnote2(capsys):
    code, out, _ = run(capsys, "solve-fl", FOOTNOTE2, "--exact")
    assert code == 0
    res = json.loads(out)
    assert res["cost"] == 1 and len(res["open"]) == 1
    assert set(res["assignment"]) == {"j1", "j2"}


def test_cli_oracle_footnote2(capsys):
    code, out, _ = run(capsys, "oracle", FOOTNOTE2, "--problem", "fl")
    assert code == 0 and json.loads(out)["optimum"] == 1


def test_cli_gen_pipe_solve(capsys, monkeypatch):
    code, text, _ = run(capsys, "gen", "--problem", "fl", "--nf", "4", "--nd", "6", "--seed", "7")
    assert code == 0
    code, out, _ = run(capsys, "solve-fl", "-", stdin=text, monkeypatch=monkeypatch)
    assert code == 0
    res = json.loads(out)
    inst = io.instance_from_dict(json.loads(text))
    from parclust.instance import Solution, is_feasible

    sol = Solution(frozenset(res["open"]), res["assignment"])
    assert is_feasible(inst, sol)


def test_cli_kcenter(capsys, tmp_path):
    path = tmp_path / "k.json"
    path.write_text(json.dumps(
        {"nodes": [{"id": c, "parity": "even"} for c in "abcd"],
         "metric": {"kind": "euclidean", "points": {"a": [0, 0], "b": [1, 0], "c": [10, 0], "d": [11, 0]}}, "k": 2}
    ))
    code, out, _ = run(capsys, "solve-kcenter", str(path))
    assert code == 0 and json.loads(out)["radius"] == 1
    code, out, _ = run(capsys, "solve-kcenter", str(path), "--linear-scan")
    assert json.loads(out)["radius"] == 1
    code, out, _ = run(capsys, "oracle", str(path), "--problem", "kcenter")
    assert code == 0 and json.loads(out)["optimum"] == 1


def test_cli_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "solve-fl", str(bad))[0] == 1
    assert run(capsys, "solve-fl", str(tmp_path / "missing.json"))[0] == 1
    infeasible = tmp_path / "inf.json"
    infeasible.write_text(json.dumps(
        {"facilities": [{"id": "i", "open_cost": 0, "parity": "even"}], "clients": [{"id": "j"}],
         "metric": {"kind": "matrix", "d": [[0, 1], [1, 0]]}}
    ))
    code, _, err = run(capsys, "solve-fl", str(infeasible))
    assert code == 2 and "infeasible" in err
    big = tmp_path / "big.json"
    big.write_text(io.dumps(random_fl(0, 8, 3, feasible=False)))
    code, _, err = run(capsys, "oracle", str(big), "--problem", "fl")
    assert code == 3 and "exceeds" in err
    broken = tmp_path / "tri.json"
    broken.write_text(json.dumps(
        {"facilities": [{"id": "a"}], "clients": [{"id": "b"}, {"id": "c"}],
         "metric": {"kind": "matrix", "d": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}}
    ))
    code, out, _ = run(capsys, "verify", str(broken))
    assert code == 1 and json.loads(out)["issues"]
    code, out, _ = run(capsys, "verify", FOOTNOTE2)
    assert code == 0 and json.loads(out) == {"ok": True, "issues": []}


def _suite(tmp_path):
    for seed in range(4):
        (tmp_path / f"fl{seed}.json").write_text(io.dumps(random_fl(seed, 3, 5)))
        (tmp_path / f"kc{seed}.json").write_text(io.dumps(random_kc(seed, 6, 2)))
    (tmp_path / "all_even.json").write_text(io.dumps(random_fl(9, 3, 6, mix=(0, 1, 0))))


@pytest.mark.parametrize("threads", ["1", "2"])
def test_cli_bench(capsys, tmp_path, monkeypatch, threads):
    monkeypatch.setenv("PARCLUST_THREADS", threads)
    _suite(tmp_path)
    out = tmp_path / "results.csv"
    code, _, _ = run(capsys, "bench", "--suite", str(tmp_path), "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert tuple(rows[0]) == cli.CSV_COLUMNS
    assert len(rows) == 2 * 5 + 4
    assert rows == sorted(rows, key=lambda r: (r["instance"], r["solver"]))
    for r in rows:
        ratio = float(r["ratio"])
        assert ratio >= 1 - 1e-9
        limit = 6.0 if r["solver"] == "kcenter" or r["instance"] == "all_even.json" and r["solver"] == "fl-auto" else 11.0
        assert ratio <= limit


def test_bench_rejects_bad_thread_cap(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PARCLUST_THREADS", "many")
    _suite(tmp_path)
    assert run(capsys, "bench", "--suite", str(tmp_path))[0] == 1
