"""Command-line front end (``parclust``).

Results go to stdout as JSON, diagnostics to stderr.  Exit codes: 0 on
success, 1 for unreadable or invalid input, 2 for an infeasible instance,
3 when an oracle refuses an instance above its size guard and 4 if a
solver's internal self-check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from parclust import io, oracle
from parclust._num import to_json_number
from parclust.errors import InfeasibleInstance, InvariantViolation, SizeGuardExceeded, StructuralError
from parclust.fl import SolverConfig, solve_fl
from parclust.generate import GenParams, generate_instance, parse_mix
from parclust.instance import Instance, is_feasible, solution_cost, validate_instance, validate_metric
from parclust.kcenter import KCenterInstance, solve_kcenter

log = logging.getLogger("parclust")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_GUARD, EXIT_INTERNAL = 0, 1, 2, 3, 4
CSV_COLUMNS = ("instance", "solver", "value", "oracle", "ratio", "ms", "seed", "params")


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, default=to_json_number)
    sys.stdout.write("\n")


def _value(x):
    return to_json_number(x.item() if hasattr(x, "item") else x)


def cmd_solve_fl(args: argparse.Namespace) -> int:
    inst = io.load_fl(args.file, args.exact)
    cfg = SolverConfig(trials=args.trials, seed=args.seed, mode=args.mode)
    sol = solve_fl(inst, cfg)
    _emit({"cost": _value(solution_cost(inst, sol)), **io.solution_to_dict(inst, sol)})
    return EXIT_OK


def cmd_solve_kcenter(args: argparse.Namespace) -> int:
    inst = io.load_kcenter(args.file, args.exact)
    res = solve_kcenter(inst, linear_scan=args.linear_scan)
    _emit(
        {
            "radius": _value(res.radius),
            "realized": _value(res.realized),
            "centers": list(res.centers),
            "assignment": dict(res.assignment),
        }
    )
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    if args.problem == "fl":
        inst = io.load_fl(args.file, args.exact)
        res = oracle.exact_fl(inst)
        _emit({"optimum": _value(res.optimum_value), "examined": res.enumeration_size, **io.solution_to_dict(inst, res.witness)})
    else:
        kc = io.load_kcenter(args.file, args.exact)
        res = oracle.exact_kcenter(kc)
        centers, assignment = res.witness
        _emit({"optimum": _value(res.optimum_value), "examined": res.enumeration_size, "centers": list(centers), "assignment": assignment})
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    params = GenParams(
        problem=args.problem,
        nf=args.nf,
        nd=args.nd,
        k=args.k,
        geometry=args.geometry,
        parity_mix=parse_mix(args.parity_mix),
        feasible_only=args.feasible_only,
    )
    io.dump(generate_instance(params, args.seed), sys.stdout)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    inst = io.load(args.file, args.exact)
    if isinstance(inst, KCenterInstance):
        rep = validate_metric(inst.nodes, inst.dist.tolist())
    else:
        rep = validate_instance(inst)
    _emit({"ok": rep.ok, "issues": rep.lines()})
    return EXIT_OK if rep.ok else EXIT_INPUT


# --------------------------------------------------------------------------
# bench


def _bench_one(path: str, seed: int, trials: int) -> list[dict]:
    name = Path(path).name
    try:
        inst = io.load(path)
    except StructuralError as exc:
        log.warning("%s: %s", name, exc)
        return []
    rows = []

    def row(solver, value, opt, ms, params):
        ratio = ""
        if value not in ("", None) and opt not in ("", None):
            ratio = float(value) / float(opt) if opt else (1.0 if value == 0 else float("inf"))
        rows.append(
            {
                "instance": name,
                "solver": solver,
                "value": "" if value is None else _value(value),
                "oracle": "" if opt is None else _value(opt),
                "ratio": ratio,
                "ms": round(ms, 3),
                "seed": seed,
                "params": json.dumps(params, sort_keys=True),
            }
        )

    if isinstance(inst, Instance):
        try:
            opt = oracle.exact_fl(inst).optimum_value
        except (SizeGuardExceeded, InfeasibleInstance):
            opt = None
        for mode in ("auto", "general"):
            t = time.perf_counter()
            try:
                sol = solve_fl(inst, SolverConfig(trials=trials, seed=seed, mode=mode))
                if not is_feasible(inst, sol):
                    raise InvariantViolation(f"{name}: fl-{mode} returned an infeasible solution")
                value = solution_cost(inst, sol)
            except InfeasibleInstance:
                value = None
            row(f"fl-{mode}", value, opt, 1000 * (time.perf_counter() - t), {"trials": trials})
    else:
        try:
            opt = oracle.exact_kcenter(inst).optimum_value
        except (SizeGuardExceeded, InfeasibleInstance):
            opt = None
        t = time.perf_counter()
        try:
            value = solve_kcenter(inst).realized
        except InfeasibleInstance:
            value = None
        row("kcenter", value, opt, 1000 * (time.perf_counter() - t), {"k": inst.k})
    return rows


def _pool_size() -> int:
    cap = os.environ.get("PARCLUST_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise StructuralError(f"PARCLUST_THREADS must be an integer, got {cap!r}") from None
    return n


def cmd_bench(args: argparse.Namespace) -> int:
    suite = Path(args.suite)
    if not suite.is_dir():
        raise StructuralError(f"{suite} is not a directory")
    files = sorted(str(p) for p in suite.glob("*.json"))
    workers = _pool_size()
    if workers == 1 or len(files) <= 1:
        batches = [_bench_one(f, args.seed, args.trials) for f in files]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(_bench_one, files, [args.seed] * len(files), [args.trials] * len(files)))
    rows = sorted((r for b in batches for r in b), key=lambda r: (r["instance"], r["solver"]))
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("wrote %d records for %d instances", len(rows), len(files))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parclust", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_file(sp):
        sp.add_argument("file", help="instance JSON, or - for stdin")
        sp.add_argument("--exact", action="store_true", help="read every number as an exact rational")
        return sp

    s = with_file(sub.add_parser("solve-fl", help="parity-constrained facility location"))
    s.add_argument("--mode", choices=("auto", "all-even", "general"), default="auto")
    s.add_argument("--trials", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve_fl)

    s = with_file(sub.add_parser("solve-kcenter", help="parity-constrained k-center"))
    s.add_argument("--linear-scan", action="store_true", help="scan radii one by one instead of binary search")
    s.set_defaults(func=cmd_solve_kcenter)

    s = with_file(sub.add_parser("oracle", help="exact optimum of a small instance"))
    s.add_argument("--problem", choices=("fl", "kcenter"), required=True)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("gen", help="random instance JSON on stdout")
    s.add_argument("--problem", choices=("fl", "kcenter"), default="fl")
    s.add_argument("--nf", type=int, default=3, help="facilities (fl)")
    s.add_argument("--nd", type=int, default=5, help="clients (fl) or nodes (kcenter)")
    s.add_argument("--k", type=int, default=2, help="center budget (kcenter)")
    s.add_argument("--geometry", choices=("euclidean", "random-metric"), default="euclidean")
    s.add_argument("--parity-mix", default="1:1:0", help="odd:even:unconstrained weights")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--feasible-only", action="store_true")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("bench", help="CSV of solver values against the oracle")
    s.add_argument("--suite", required=True, help="directory of instance JSON files")
    s.add_argument("--out", default="-", help="CSV path, or - for stdout")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=16)
    s.set_defaults(func=cmd_bench)

    s = with_file(sub.add_parser("verify", help="check the metric axioms"))
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InfeasibleInstance as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeGuardExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InvariantViolation as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (StructuralError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
