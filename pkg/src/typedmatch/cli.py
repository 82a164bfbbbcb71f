"""Command-line front end.

Subcommands cover the whole toolbox: `solve` dispatches to the right
solver by problem kind and detected model, `check` scores a matching file,
`oracle` runs the exhaustive reference searches, `reduce` emits hardness
gadgets, `gen` produces seeded random instances, and `ip` feeds the
integer-program engine directly.

Every solve report recomputes stability figures through the agent-level
checker; a solver claiming an optimum its own matching does not attain is
reported as an internal failure, never papered over.

Exit codes: 0 success (stable / answer yes), 2 negative answer (no stable
matching, infeasible, target missed), 3 unsupported model or method
limitation, 4 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

from . import smallip
from .core import (AgentMatching, InstanceError, TypedInstance,
                   format_instance, format_matching, normalize_with_dummies,
                   parse_instance, parse_matching)
from .exceptions import exception_model, solve_1top_max_smti
from .gen import MODELS, generate
from .hrc import enumerate_hrc_profiles, solve_max_hrc
from .oracle import (OracleCapError, blocking_report, com_stable_exists_brute,
                     exact_bp_brute, max_stable_brute, min_ba_brute,
                     min_bp_brute)
from .quality import solve_exact_bp, solve_min_ba, solve_min_bp
from .reductions import clique_to_com_smti, parse_graph
from .refined import (RealizationError, solve_max_refined_srti,
                      solve_refined_quality, strip_refinements)
from .typed import (NoStableError, clone_hospitals_to_smti,
                    enumerate_feasible_profiles, enumerate_worst_profiles,
                    solve_max_hrt, solve_max_smti, solve_max_srti)

EXIT_OK = 0
EXIT_NO = 2
EXIT_UNSUPPORTED = 3
EXIT_INPUT = 4


class UnsupportedModel(Exception):
    """The instance is outside every solver's reach; the oracle may help."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise InstanceError(f"cannot read {path}: {e.strerror or e}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise InstanceError(f"cannot write {out}: {e.strerror or e}")


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _detect_model(inst: TypedInstance):
    """(label, solver_available) naming what the instance is.

    Unsupported labels still solve through the exhaustive fallback when
    the instance fits the enumeration cap."""
    kind = inst.problem_kind
    if kind == "hrc":
        if inst.refinements or inst.exceptions:
            return "hrc+extras", False
        return "hrc", True
    if inst.exceptions:
        if inst.refinements:
            return f"refined+exceptions-{kind}", False
        c, style = exception_model(inst)
        if kind == "smti" and (c, style) == (1, "top"):
            return "1top-smti", True
        return f"({c},{style})-{kind}", False
    if inst.refinements:
        return f"refined-{kind}", kind in ("smti", "srti")
    return f"typed-{kind}", True


def _count_profiles(inst: TypedInstance, model: str, path: str):
    """How many candidate profiles the solver's enumeration walks; None on
    paths that search something else entirely."""
    if path in ("brute", "matching", "search"):
        return None
    kind = inst.problem_kind
    if model.startswith("refined"):
        inst = strip_refinements(inst)
    if model == "hrc":
        return sum(1 for _ in enumerate_hrc_profiles(normalize_with_dummies(inst)))
    if kind == "hrt":
        clone = clone_hospitals_to_smti(inst)
        return sum(1 for _ in enumerate_worst_profiles(normalize_with_dummies(clone)))
    base = normalize_with_dummies(inst)
    if kind == "smti":
        return sum(1 for _ in enumerate_worst_profiles(base))
    return sum(1 for _ in enumerate_feasible_profiles(base))


_PATHS = {
    "typed-smti": "flow",
    "typed-hrt": "flow",
    "typed-srti": "ip",
    "refined-smti": "ip",
    "refined-srti": "ip",
    "1top-smti": "matching",
}


def _parse_objective(spec: str):
    if spec in ("max-size", "min-bp", "min-ba"):
        return spec, None
    if spec.startswith("exact-bp:"):
        raw = spec[len("exact-bp:"):]
        try:
            return "exact-bp", int(raw)
        except ValueError:
            raise InstanceError(f"exact-bp target {raw!r} is not an integer")
    raise InstanceError(
        f"unknown objective {spec!r}; use max-size, min-bp, min-ba, or exact-bp:<Z>")


def _solve_max(inst: TypedInstance, model: str, jobs):
    if model == "hrc":
        size, matching = solve_max_hrc(inst, jobs=jobs)
        path = "search" if inst.couple_rows() else "ip"
        return size, matching, path
    if model == "1top-smti":
        size, matching = solve_1top_max_smti(inst, jobs=jobs)
        return size, matching, _PATHS[model]
    if model.startswith("refined"):
        size, matching = solve_max_refined_srti(inst, jobs=jobs)
        return size, matching, _PATHS[model]
    kind = inst.problem_kind
    if kind == "smti":
        size, matching, _ = solve_max_smti(inst, jobs=jobs)
    elif kind == "hrt":
        size, matching, _ = solve_max_hrt(inst, jobs=jobs)
    else:
        size, matching, _ = solve_max_srti(inst, jobs=jobs)
    return size, matching, _PATHS[model]


def _solve_brute(inst, objective, target, max_size, why):
    """Exhaustive fallback for models or objectives no solver covers;
    only available while the instance fits the enumeration cap."""
    try:
        if objective == "max-size":
            best = max_stable_brute(inst)
            if best is None:
                raise NoStableError
            return best.size, best, "brute"
        if objective == "min-ba" and inst.problem_kind in ("hrt", "hrc"):
            raise UnsupportedModel(
                "blocking agents are defined for one-to-one problems")
        if objective == "min-bp":
            matching, count = min_bp_brute(inst, require_max_size=max_size)
        elif objective == "min-ba":
            matching, count = min_ba_brute(inst, require_max_size=max_size)
        else:
            matching = exact_bp_brute(inst, target)
            if matching is None:
                return None
            count = target
        return count, matching, "brute"
    except OracleCapError:
        raise UnsupportedModel(
            f"{why} and the instance exceeds the enumeration cap: oracle only")


def _solve_quality(inst, model, objective, target, max_size, jobs):
    if model.startswith("refined"):
        got = solve_refined_quality(inst, objective, target=target,
                                    require_max_size=max_size)
        if objective == "exact-bp":
            if got is None:
                return None
            return target, got, "ip"
        return got[0], got[1], "ip"
    if objective == "min-bp":
        count, matching = solve_min_bp(inst, require_max_size=max_size)
    elif objective == "min-ba":
        count, matching = solve_min_ba(inst, require_max_size=max_size, jobs=jobs)
    else:
        matching = solve_exact_bp(inst, target)
        if matching is None:
            return None
        count = target
    return count, matching, "ip"


def _blocking_fields(inst: TypedInstance, matching: AgentMatching):
    report = blocking_report(inst, matching)
    one_to_one = all(ev[0] == "pair" for ev in report.events) and \
        inst.problem_kind in ("smti", "srti")
    agents = len(report.blocking_agents()) if one_to_one else None
    return report, agents


def _render_report(fields: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(fields, indent=2) + "\n"
    lines = []
    for key in ("instance", "model", "objective", "path", "profiles",
                "optimum", "wall_ms"):
        if key in fields:
            val = fields[key]
            lines.append(f"{key} {'-' if val is None else val}")
    for pair in fields.get("matching", ()):
        lines.append(f"pair {pair[0]} {pair[1]}")
    lines.append(f"size {fields['size']}")
    lines.append(f"blocking_pairs {fields['blocking_pairs']}")
    if fields.get("blocking_agents") is not None:
        lines.append(f"blocking_agents {fields['blocking_agents']}")
    for ev in fields.get("blocking_events", ()):
        lines.append("block " + " ".join(str(x) for x in ev))
    lines.append(f"stable {'yes' if fields['stable'] else 'no'}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    text = _read(args.file)
    inst = parse_instance(text)
    objective, target = _parse_objective(args.objective)
    if args.max_size and objective not in ("min-bp", "min-ba"):
        raise InstanceError("--max-size only modifies min-bp and min-ba")
    model, has_solver = _detect_model(inst)
    quality_ok = model in ("typed-smti", "typed-srti", "refined-smti",
                           "refined-srti")
    t0 = time.perf_counter()
    if objective == "max-size":
        try:
            if has_solver:
                optimum, matching, path = _solve_max(inst, model, args.jobs)
            else:
                optimum, matching, path = _solve_brute(
                    inst, objective, target, False,
                    f"model {model} has no dedicated solver")
        except NoStableError:
            print("no stable matching", file=sys.stderr)
            return EXIT_NO
    else:
        try:
            if quality_ok:
                got = _solve_quality(inst, model, objective, target,
                                     args.max_size, args.jobs)
            else:
                got = _solve_brute(
                    inst, objective, target, args.max_size,
                    f"objective {objective} on {model} needs exhaustive search")
        except RealizationError as e:
            print(f"unsupported: {e}", file=sys.stderr)
            return EXIT_UNSUPPORTED
        if got is None:
            print(f"no matching with exactly {target} blocking pairs",
                  file=sys.stderr)
            return EXIT_NO
        optimum, matching, path = got
    wall_ms = round((time.perf_counter() - t0) * 1000, 1)

    report, agents = _blocking_fields(inst, matching)
    claimed = {
        "max-size": lambda: report.stable and matching.size == optimum,
        "min-bp": lambda: report.count == optimum,
        "min-ba": lambda: agents == optimum,
        "exact-bp": lambda: report.count == target,
    }[objective]()
    if not claimed:
        print("internal failure: solver result fails the independent recheck",
              file=sys.stderr)
        return 1
    fields = {
        "instance": _digest(text),
        "model": model,
        "objective": args.objective,
        "path": path,
        "profiles": _count_profiles(inst, model, path),
        "optimum": optimum,
        "wall_ms": wall_ms,
        "matching": [list(p) for p in matching.pairs],
        "size": matching.size,
        "blocking_pairs": report.count,
        "blocking_agents": agents,
        "blocking_events": [list(ev) for ev in report.events],
        "stable": report.stable,
    }
    _emit(_render_report(fields, args.format), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    inst = parse_instance(_read(args.file))
    pairs = parse_matching(_read(args.matching))
    matching = AgentMatching(inst, pairs)
    report, agents = _blocking_fields(inst, matching)
    fields = {
        "size": matching.size,
        "blocking_pairs": report.count,
        "blocking_agents": agents,
        "blocking_events": [list(ev) for ev in report.events],
        "stable": report.stable,
    }
    _emit(_render_report(fields, args.format), args.out)
    return EXIT_OK if report.stable else EXIT_NO


def cmd_oracle(args) -> int:
    inst = parse_instance(_read(args.file))
    sub = args.oracle_cmd
    if sub == "max":
        best = max_stable_brute(inst)
        if best is None:
            print("no stable matching", file=sys.stderr)
            return EXIT_NO
        _emit(format_matching(best, blocking=0), args.out)
        return EXIT_OK
    if sub in ("min-bp", "min-ba"):
        brute = min_bp_brute if sub == "min-bp" else min_ba_brute
        matching, count = brute(inst, require_max_size=args.max_size)
        report = blocking_report(inst, matching)
        out = f"optimum {count}\n" + format_matching(matching, blocking=report.count)
        _emit(out, args.out)
        return EXIT_OK
    if sub == "exact-bp":
        matching = exact_bp_brute(inst, args.z)
        if matching is None:
            print(f"no matching with exactly {args.z} blocking pairs",
                  file=sys.stderr)
            return EXIT_NO
        _emit(format_matching(matching, blocking=args.z), args.out)
        return EXIT_OK
    # com: does some stable matching cover every real agent
    exists, witness = com_stable_exists_brute(inst)
    if exists:
        _emit("complete_stable yes\n" + format_matching(witness, blocking=0),
              args.out)
        return EXIT_OK
    _emit("complete_stable no\n", args.out)
    return EXIT_NO


def cmd_reduce(args) -> int:
    graph = parse_graph(_read(args.graph))
    inst = clique_to_com_smti(graph, args.r)
    _emit(format_instance(inst), args.out)
    return EXIT_OK


_GEN_FLAGS = {
    "typed": ("kind", "k", "counts", "tie", "accept", "max_count", "max_cap"),
    "refined": ("kind", "k", "counts", "tie", "accept", "max_count", "refine_prob"),
    "1top": ("k", "counts", "tie", "accept", "max_count", "except_prob"),
    "hrc": ("k_r", "k_h", "counts", "tie", "accept", "max_count", "max_cap",
            "couple_blocks"),
}


def cmd_gen(args) -> int:
    shape = {}
    for flag in ("kind", "k", "counts", "tie", "accept", "max_count",
                 "max_cap", "refine_prob", "except_prob", "k_r", "k_h",
                 "couple_blocks"):
        val = getattr(args, flag)
        if val is None:
            continue
        if flag not in _GEN_FLAGS[args.model]:
            raise InstanceError(
                f"inconsistent shape: --{flag.replace('_', '-')} does not "
                f"apply to model {args.model}")
        shape[flag] = val
    if "counts" in shape:
        try:
            shape["counts"] = [int(c) for c in shape["counts"].split(",")]
        except ValueError:
            raise InstanceError("counts must be a comma-separated integer list")
    inst = generate(args.model, args.seed, **shape)
    _emit(format_instance(inst), args.out)
    return EXIT_OK


def cmd_ip(args) -> int:
    try:
        ip = smallip.parse_program(_read(args.file))
    except ValueError as exc:
        raise InstanceError(str(exc))
    try:
        value, assignment = smallip.solve(ip)
    except smallip.Infeasible:
        print("infeasible", file=sys.stderr)
        return EXIT_NO
    if args.format == "json":
        _emit(json.dumps({"optimum": value, "assignment": assignment},
                         indent=2) + "\n", args.out)
    else:
        lines = [f"optimum {value}"]
        lines += [f"set {name} {assignment[name]}" for name in sorted(assignment)]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _parser() -> _Parser:
    p = _Parser(prog="stm", description="typed stable-matching toolbox")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("-o", "--out", default=None, metavar="FILE")

    sp = sub.add_parser("solve", help="run the model-appropriate solver")
    sp.add_argument("--file", required=True)
    sp.add_argument("--objective", default="max-size",
                    metavar="max-size|min-bp|min-ba|exact-bp:<Z>")
    sp.add_argument("--max-size", action="store_true",
                    help="restrict min-bp/min-ba to maximum-cardinality matchings")
    sp.add_argument("--jobs", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="score a matching file against an instance")
    sp.add_argument("--file", required=True)
    sp.add_argument("--matching", required=True)
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("oracle", help="exhaustive reference searches")
    osub = sp.add_subparsers(dest="oracle_cmd", required=True)
    for name in ("max", "min-bp", "min-ba", "exact-bp", "com"):
        op = osub.add_parser(name)
        op.add_argument("--file", required=True)
        if name in ("min-bp", "min-ba"):
            op.add_argument("--max-size", action="store_true")
        if name == "exact-bp":
            op.add_argument("--z", type=int, required=True)
        common(op)
        op.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("reduce", help="emit hardness-reduction gadgets")
    rsub = sp.add_subparsers(dest="reduce_cmd", required=True)
    rp = rsub.add_parser("clique")
    rp.add_argument("--graph", required=True,
                    help="edge list: first line `n m`, then one `u v` per edge")
    rp.add_argument("--r", type=int, required=True)
    common(rp)
    rp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("gen", help="seeded random instance")
    sp.add_argument("--model", choices=MODELS, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--kind", choices=("smti", "srti", "hrt"), default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--k-r", dest="k_r", type=int, default=None)
    sp.add_argument("--k-h", dest="k_h", type=int, default=None)
    sp.add_argument("--counts", default=None, metavar="N,N,...")
    sp.add_argument("--tie", type=float, default=None)
    sp.add_argument("--accept", type=float, default=None)
    sp.add_argument("--max-count", dest="max_count", type=int, default=None)
    sp.add_argument("--max-cap", dest="max_cap", type=int, default=None)
    sp.add_argument("--refine-prob", dest="refine_prob", type=float, default=None)
    sp.add_argument("--except-prob", dest="except_prob", type=float, default=None)
    sp.add_argument("--couples", dest="couple_blocks", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("ip", help="run the integer-program engine on a file")
    sp.add_argument("--file", required=True)
    common(sp)
    sp.set_defaults(func=cmd_ip)

    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedModel as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except OracleCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except InstanceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
