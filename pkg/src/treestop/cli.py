"""Command-line harness: solve, verify, simulate, generate, run suites.

Every command prints a human-readable report and, when ``--out`` is given,
persists an experiment record (inputs hash, command, outputs as exact
rational strings plus decimals, wall time, seed, library version) as JSON.
Re-running a record's command on the same inputs reproduces its outputs
bit-for-bit.  Exit code 0 means every verdict passed.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import __version__
from .dp import dp_value, root_envelope
from .dpp import verify_dpp
from .errors import NoInstances, TreestopError
from .generate import generate_instance
from .io import (dump_measure, dump_rule, fmt_rational, fmt_value, instance_hash,
                 load_budgets, load_instance, load_measure, load_rule, parse_word,
                 word_str, write_json_atomic)
from .lp import measure_to_rule, solve_robust, solve_weak
from .martingale import check_membership
from .rules import (derandomize, equivalence_check, monte_carlo_value,
                    theta_of_rule)
from .xreal import Ext


@dataclass
class ExperimentRecord:
    instance_hash: str
    command: list
    parameters: dict
    outputs: dict
    wall_time_s: float
    seed: int
    version: str = __version__


def _write_record(args, record: ExperimentRecord, name: str) -> None:
    if not args.out:
        return
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{name}-{record.instance_hash[:12]}.json")
    write_json_atomic(path, asdict(record))


def _print_table(rows, header) -> None:
    print("\t".join(header))
    for row in rows:
        print("\t".join(str(c) for c in row))


def _measure_table(tree, measure):
    rule = measure_to_rule(tree, measure)
    rows = []
    for w in tree.nodes():
        rows.append((word_str(tree, w) or ".",
                     fmt_rational(measure.stop(w)),
                     fmt_rational(measure.cont(w)),
                     fmt_rational(rule.prob(w))))
    return rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_solve(args) -> int:
    started = time.perf_counter()
    if args.robust:
        paths = sorted(glob.glob(os.path.join(args.robust, "*.json")))
        if not paths:
            raise NoInstances(f"no instance files in {args.robust}")
        trees = [load_instance(p) for p in paths]
        budgets = load_budgets(trees[0], args.budgets) if args.budgets else None
        res, idx = solve_robust(trees, budgets)
        tree = trees[idx] if idx is not None else trees[0]
        print(f"status\t{res.status}")
        if idx is not None:
            print(f"argmax_model\t{idx}\t{paths[idx]}")
    else:
        tree = load_instance(args.instance)
        budgets = load_budgets(tree, args.budgets) if args.budgets else None
        res = solve_weak(tree, budgets)
        idx = None
        print(f"status\t{res.status}")
    outputs = {"status": res.status}
    if res.optimal:
        print(f"value\t{fmt_value(res.value)}")
        outputs["value"] = fmt_rational(res.value)
        outputs["value_decimal"] = float(res.value)
        if idx is not None:
            outputs["argmax_model"] = idx
        print("duals_ineq\t" + "\t".join(map(fmt_rational, res.duals_ineq)))
        print("duals_eq\t" + "\t".join(map(fmt_rational, res.duals_eq)))
        outputs["duals_ineq"] = [fmt_rational(d) for d in res.duals_ineq]
        outputs["duals_eq"] = [fmt_rational(d) for d in res.duals_eq]
        print()
        _print_table(_measure_table(tree, res.measure), ("word", "s", "u", "q"))
        outputs["measure"] = dump_measure(tree, res.measure)
    else:
        print(f"reason\t{res.reason}")
        outputs["reason"] = res.reason
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"budgets": args.budgets, "robust": args.robust},
        outputs=outputs, wall_time_s=time.perf_counter() - started,
        seed=args.seed)
    _write_record(args, record, "solve")
    return 0


def _cmd_dp(args) -> int:
    started = time.perf_counter()
    tree = load_instance(args.instance)
    value = dp_value(tree, Ext.parse(args.budget))
    env = root_envelope(tree)
    print(f"value\t{fmt_value(value)}")
    print()
    _print_table([(fmt_rational(x), fmt_rational(v)) for x, v in zip(env.xs, env.vs)],
                 ("budget", "value"))
    outputs = {"value": fmt_rational(value),
               "envelope": [[fmt_rational(x), fmt_rational(v)]
                            for x, v in zip(env.xs, env.vs)]}
    if args.grid:
        lo, hi = env.xs[0], env.xs[-1]
        step = (hi - lo) / (args.grid - 1) if args.grid > 1 else Fraction(0)
        grid_rows = []
        for i in range(args.grid):
            y = lo + i * step
            grid_rows.append([fmt_rational(y), fmt_rational(env.value(y))])
        print()
        _print_table(grid_rows, ("grid_budget", "value"))
        outputs["grid"] = grid_rows
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"budget": args.budget, "grid": args.grid},
        outputs=outputs, wall_time_s=time.perf_counter() - started,
        seed=args.seed)
    _write_record(args, record, "dp")
    return 0


def _cmd_derandomize(args) -> int:
    started = time.perf_counter()
    tree = load_instance(args.instance)
    rule = load_rule(tree, args.rule)
    theta = theta_of_rule(tree, rule)
    taus = derandomize(tree, theta, args.eta)
    rows = [(word_str(tree, w) or ".", k) for w, k in sorted(taus.items())]
    _print_table(rows, ("word", "stop_depth"))
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"rule": args.rule, "eta": args.eta},
        outputs={"stop_depths": {word_str(tree, w): k for w, k in taus.items()}},
        wall_time_s=time.perf_counter() - started, seed=args.seed)
    _write_record(args, record, "derandomize")
    return 0


def _cmd_mc(args) -> int:
    started = time.perf_counter()
    tree = load_instance(args.instance)
    rule = load_rule(tree, args.rule)
    est = monte_carlo_value(tree, rule, paths=args.paths, seed=args.seed)
    rows = [("value", est["value"][0], est["value"][1])]
    rows += [(f"ineq[{i}]", m, se) for i, (m, se) in enumerate(est["ineq"])]
    rows += [(f"eq[{i}]", m, se) for i, (m, se) in enumerate(est["eq"])]
    _print_table(rows, ("functional", "mean", "stderr"))
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"rule": args.rule, "paths": args.paths},
        outputs={"estimates": {str(r[0]): [r[1], r[2]] for r in rows}},
        wall_time_s=time.perf_counter() - started, seed=args.seed)
    _write_record(args, record, "mc")
    return 0


def _parse_tau(tree, text):
    try:
        return int(text)
    except ValueError:
        pass
    with open(text) as fh:
        raw = json.load(fh)
    words = raw["cut"] if isinstance(raw, dict) else raw
    return [parse_word(tree, w) for w in words]


def _cmd_verify_dpp(args) -> int:
    started = time.perf_counter()
    tree = load_instance(args.instance)
    budgets = load_budgets(tree, args.budgets) if args.budgets else None
    tau = _parse_tau(tree, args.tau)
    report = verify_dpp(tree, tau, budgets=budgets)
    payload = {
        "lhs": fmt_rational(report["lhs"]),
        "rhs_sub": fmt_rational(report["rhs_sub"]),
        "rhs_super": fmt_rational(report["rhs_super"]),
        "gap": fmt_rational(report["gap"]),
        "pass": report["pass"],
        "per_node": [{
            "node": word_str(tree, e["node"]),
            "mass": fmt_rational(e["mass"]),
            "Y": [fmt_rational(v) for v in e["Y"]],
            "Z": [fmt_rational(v) for v in e["Z"]],
            "subvalue": fmt_rational(e["subvalue"]),
        } for e in report["per_node"]],
    }
    print(json.dumps(payload, indent=2))
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"tau": args.tau, "budgets": args.budgets},
        outputs=payload, wall_time_s=time.perf_counter() - started,
        seed=args.seed)
    _write_record(args, record, "verify-dpp")
    return 0 if report["pass"] else 1


def _cmd_check_class(args) -> int:
    started = time.perf_counter()
    tree = load_instance(args.instance)
    if args.measure:
        measure = load_measure(tree, args.measure)
    else:
        res = solve_weak(tree)
        if not res.optimal:
            print(f"cannot derive a measure: solve is {res.status}")
            return 2
        measure = res.measure
    report = check_membership(tree, measure, degree=args.degree,
                              mode=args.mode, tolerance=Fraction(str(args.tol)))
    worst = max(report.clause1, key=lambda r: abs(r["stat"]), default=None)
    print(f"clause1\t{'pass' if report.clause1_pass else 'FAIL'}"
          f"\t({len(report.clause1)} statistics)")
    if worst is not None:
        print(f"worst_stat\t{fmt_rational(worst['stat'])}\tphi={worst['phi']}"
              f"\ts={worst['s']}\tr={worst['r']}\tweight={worst['weight']}")
    print(f"clause2\t{'pass' if report.clause2_pass else 'FAIL'}")
    print(f"overall\t{'pass' if report.ok else 'FAIL'}")
    outputs = {
        "clause1_pass": report.clause1_pass,
        "clause2_pass": report.clause2_pass,
        "overall": report.ok,
        "n_statistics": len(report.clause1),
        "worst_stat": fmt_rational(worst["stat"]) if worst else "0",
    }
    record = ExperimentRecord(
        instance_hash=instance_hash(tree), command=sys.argv[1:],
        parameters={"degree": args.degree, "mode": args.mode, "tol": args.tol},
        outputs=outputs, wall_time_s=time.perf_counter() - started,
        seed=args.seed)
    _write_record(args, record, "check-class")
    return 0 if report.ok else 1


def _cmd_gen(args) -> int:
    doc = generate_instance(seed=args.seed, depth=args.depth,
                            branches=args.branches, n_ineq=args.ineq,
                            n_eq=args.eq, nonneg_g=args.nonneg_g,
                            vacuous_rate=args.vacuous_rate)
    write_json_atomic(args.out_file, doc)
    print(f"wrote {args.out_file}\thash={instance_hash(doc)[:12]}")
    return 0


def run_suite(directory: str, suite: str, out: str = None, seed: int = 0):
    """Run a verifier over every instance in a directory.

    Returns (rows, all_pass); rows carry per-instance verdicts, gaps and
    runtimes, assembled in sorted file order.
    """
    paths = sorted(glob.glob(os.path.join(directory, "*.json")))
    if not paths:
        raise NoInstances(f"no instance files in {directory}")
    rows = []
    all_pass = True
    for path in paths:
        tree = load_instance(path)
        started = time.perf_counter()
        verdicts = {}
        gaps = []
        checks = ["equivalence", "dpp", "membership"] if suite == "all" else [suite]
        for check in checks:
            if check == "equivalence":
                res = solve_weak(tree)
                if not res.optimal:
                    verdicts[check] = False
                    continue
                rule = measure_to_rule(tree, res.measure)
                rep = equivalence_check(tree, rule)
                same = all(rep["stop_mass_rule"][w] == rep["stop_mass_hitting"][w]
                           for w in tree.nodes())
                verdicts[check] = rep["pass"] and same and \
                    rep["stop_mass_rule"] == {w: res.measure.stop(w)
                                              for w in tree.nodes()}
            elif check == "dpp":
                ok = True
                worst = Fraction(0)
                for k in range(1, tree.depth):
                    rep = verify_dpp(tree, k)
                    ok = ok and rep["pass"]
                    g = rep["gap"]
                    if g.is_finite and abs(g.fraction()) > abs(worst):
                        worst = g.fraction()
                verdicts[check] = ok
                gaps.append(worst)
            elif check == "membership":
                res = solve_weak(tree)
                if not res.optimal:
                    verdicts[check] = False
                    continue
                rep = check_membership(tree, res.measure, degree=2, mode="exact")
                verdicts[check] = rep.ok
            else:
                raise ValueError(f"unknown suite {check!r}")
        passed = all(verdicts.values())
        all_pass = all_pass and passed
        rows.append({
            "instance": os.path.basename(path),
            "hash": instance_hash(tree)[:12],
            "pass": passed,
            "verdicts": verdicts,
            "max_gap": fmt_rational(max(gaps, key=abs)) if gaps else "0",
            "runtime_s": round(time.perf_counter() - started, 4),
        })
        if out:
            os.makedirs(out, exist_ok=True)
            record = ExperimentRecord(
                instance_hash=instance_hash(tree),
                command=["suite", suite, path],
                parameters={"suite": suite}, outputs=rows[-1],
                wall_time_s=rows[-1]["runtime_s"], seed=seed)
            write_json_atomic(os.path.join(
                out, f"suite-{rows[-1]['hash']}.json"), asdict(record))
    return rows, all_pass


def _cmd_suite(args) -> int:
    rows, all_pass = run_suite(args.dir, args.suite, out=args.out, seed=args.seed)
    if args.format == "json":
        print(json.dumps(rows, indent=2, default=str))
    else:
        _print_table(
            [(r["instance"], r["hash"], "pass" if r["pass"] else "FAIL",
              r["max_gap"], r["runtime_s"]) for r in rows],
            ("instance", "hash", "verdict", "max_gap", "runtime_s"))
    total = len(rows)
    good = sum(1 for r in rows if r["pass"])
    print(f"\n{good}/{total} instances pass")
    if args.out:
        agg = os.path.join(args.out, f"suite-{args.suite}.tsv")
        with open(agg, "w") as fh:
            fh.write("instance\thash\tverdict\tmax_gap\truntime_s\n")
            for r in rows:
                fh.write(f"{r['instance']}\t{r['hash']}\t"
                         f"{'pass' if r['pass'] else 'FAIL'}\t"
                         f"{r['max_gap']}\t{r['runtime_s']}\n")
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treestop",
        description="exact constrained optimal stopping on finite increment trees")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="directory for experiment records")
    parser.add_argument("--format", choices=("tsv", "json"), default="tsv")
    # the same flags are accepted after the subcommand; SUPPRESS keeps the
    # top-level value unless the subcommand position overrides it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("tsv", "json"),
                        default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("solve", help="solve the constrained stopping problem")
    p.add_argument("--instance")
    p.add_argument("--budgets")
    p.add_argument("--robust", help="directory of instances forming a model family")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("dp", help="scalar-budget backward induction")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", required=True)
    p.add_argument("--grid", type=int)
    p.set_defaults(fn=_cmd_dp)

    p = sub.add_parser("derandomize", help="hitting-time stop depths at a threshold")
    p.add_argument("--instance", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--eta", required=True)
    p.set_defaults(fn=_cmd_derandomize)

    p = sub.add_parser("mc", help="Monte Carlo evaluation of a rule")
    p.add_argument("--instance", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--paths", type=int, required=True)
    p.set_defaults(fn=_cmd_mc)

    p = sub.add_parser("verify-dpp", help="two-sided value recursion check")
    p.add_argument("--instance", required=True)
    p.add_argument("--budgets")
    p.add_argument("--tau", required=True, help="cut depth or cut file")
    p.set_defaults(fn=_cmd_verify_dpp)

    p = sub.add_parser("check-class", help="martingale-problem membership tests")
    p.add_argument("--instance", required=True)
    p.add_argument("--measure")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--mode", choices=("exact", "generator"), default="exact")
    p.add_argument("--tol", default="1")
    p.set_defaults(fn=_cmd_check_class)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--branches", type=int, default=2)
    p.add_argument("--ineq", type=int, default=1)
    p.add_argument("--eq", type=int, default=0)
    p.add_argument("--nonneg-g", action="store_true")
    p.add_argument("--vacuous-rate", type=float, default=0.0)
    p.add_argument("--out-file", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("suite", help="run a verifier over a directory of instances")
    p.add_argument("--dir", required=True)
    p.add_argument("--suite", choices=("equivalence", "dpp", "membership", "all"),
                   default="all")
    p.set_defaults(fn=_cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (TreestopError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
