"""Command-line entry point.

Exit codes: 0 PASS/SAT, 1 FAIL/UNSAT, 2 invalid input or internal error,
3 resource limit.

Every ``--in`` accepts a JSON file or an inline generator spec:
``gen:<flavor>:<n>:<seed>[:zero]``, ``coboundary:<n>:<seed>`` or
``blocked:<seed>[:<n>]``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import amalgamation as am
from . import groupoid as gp
from .builder import blocked_configuration, coboundary_structure, generate
from .errors import AmalgamError, ResourceLimitError
from .functors import DiagramFunctor, functor_from_json, random_problem
from .report import RunReport
from .structure import FLAVORS, Structure, validate_axioms

EXIT_OK, EXIT_VERDICT, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(AmalgamError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _generated(ref: str):
    parts = ref.split(":")
    kind = parts[0]
    try:
        if kind == "gen" and len(parts) in (4, 5):
            zero = len(parts) == 5 and parts[4] == "zero"
            if len(parts) == 5 and not zero:
                raise UsageError(f"unknown generator option {parts[4]!r}")
            return generate(parts[1], int(parts[2]), int(parts[3]), all_zero_base=zero)
        if kind == "coboundary" and len(parts) == 3:
            return coboundary_structure(int(parts[1]), int(parts[2]))
        if kind == "blocked" and len(parts) in (2, 3):
            n = int(parts[2]) if len(parts) == 3 else 6
            return blocked_configuration(int(parts[1]), n)[0]
    except ValueError as exc:
        raise UsageError(f"bad generator spec {ref!r}: {exc}") from None
    raise UsageError(f"bad generator spec {ref!r}")


def load_input(ref: str):
    """A Structure or a DiagramFunctor, by file contents or generator spec."""
    if ref is None:
        raise UsageError("--in is required")
    if ref.split(":")[0] in ("gen", "coboundary", "blocked") and not Path(ref).exists():
        return _generated(ref)
    path = Path(ref)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {ref}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{ref} is not JSON: {exc}") from None
    if isinstance(data, dict) and "flavor" in data:
        return Structure.from_json(data)
    if isinstance(data, dict) and "assignment" in data:
        return functor_from_json(data, path.parent)
    raise UsageError(f"{ref} is neither a structure nor a problem file")


def _structure(args) -> Structure:
    obj = load_input(args.input)
    if isinstance(obj, DiagramFunctor):
        return obj.ambient
    return obj


def _functor(args, build) -> DiagramFunctor:
    obj = load_input(args.input)
    if isinstance(obj, Structure):
        if args.n is None:
            raise UsageError("--n is required to generate a problem from a structure")
        return build(obj, args.n, args.seed)
    if args.n is not None and obj.n != args.n:
        raise UsageError(f"--n {args.n} does not match the problem's n = {obj.n}")
    return obj


def _status_code(status: str) -> int:
    return EXIT_OK if status in (am.PASS, am.SAT) else EXIT_VERDICT


# ---- commands ----------------------------------------------------------------

def cmd_gen(args, report: RunReport) -> int:
    if args.blocked:
        s, t = blocked_configuration(args.seed, args.n or 6)
        report.add({"check": "gen", "status": am.PASS, "details": {"blocked_triple": list(t)}})
    else:
        if args.flavor is None or args.n is None:
            raise UsageError("gen needs --flavor and --n (or --blocked)")
        s = generate(args.flavor, args.n, args.seed, all_zero_base=args.all_zero_base)
        report.add({"check": "gen", "status": am.PASS, "details": {"flavor": args.flavor, "n": args.n}})
    text = s.dumps()
    if args.output:
        Path(args.output).write_text(text)
        args.output = None  # the structure, not the report, goes to -o
    else:
        sys.stdout.write(text)
        args.quiet = True
    return EXIT_OK


def cmd_check_axioms(args, report):
    rep = validate_axioms(_structure(args))
    status = am.PASS if rep.ok else am.FAIL
    report.add({"check": "axioms", "status": status, "details": rep.to_json()})
    return _status_code(status)


def cmd_check_bn(args, report):
    v = am.check_Bn(_structure(args), _ints(args.vertices), buffer=args.buffer, seed=args.seed)
    report.add(v.to_json())
    return _status_code(v.status)


def cmd_check_rel_uniq(args, report):
    vs = _ints(args.vertices)
    k = args.k if args.k is not None else len(vs)
    v = am.check_relative_uniqueness(_structure(args), k, vs, buffer=args.buffer, seed=args.seed)
    report.add(v.to_json())
    return _status_code(v.status)


def cmd_check_uniqueness(args, report):
    obj = load_input(args.input)
    if args.other is not None:
        other = load_input(args.other)
        if not (isinstance(obj, DiagramFunctor) and isinstance(other, DiagramFunctor)):
            raise UsageError("uniqueness with --other compares two solution files")
        a, b = obj, other
    else:
        if args.triple is None:
            raise UsageError("uniqueness needs --other or --triple")
        s = obj.ambient if isinstance(obj, DiagramFunctor) else obj
        a, b = am.one_side_twisted_pair(s, tuple(_ints(args.triple)))
        if not args.twist:
            b = a
    v = am.check_uniqueness(a, b)
    report.add(v.to_json())
    return _status_code(v.status)


def cmd_check_existence(args, report):
    if args.blocked_triple is not None:
        problem = am.blocked_problem(_structure(args), tuple(_ints(args.blocked_triple)),
                                     twist_parity=args.twist_parity)
    else:
        problem = _functor(args, random_problem)
    res = am.solve_existence(problem, budget=args.budget, seed=args.seed)
    v = res.verdict()
    report.add(v.to_json())
    return _status_code(v.status)


def cmd_check_skeletal(args, report):
    f = _functor(args, am.skeletal_problem)
    k = args.k if args.k is not None else 2
    try:
        out = am.extend_skeletal(am.SkeletalSpec(k - 1, f))
    except am.ObstructionError as exc:
        report.add({"check": "skeletal", "status": am.FAIL,
                    "witness": {"face": exc.face, "triangle": exc.triangle, "message": str(exc)},
                    "details": {"k": k}})
        return EXIT_VERDICT
    report.add({"check": "skeletal", "status": am.PASS, "details": {"k": k, "skeletal": out.check()}})
    return EXIT_OK


def _witness(args, s):
    triple = tuple(_ints(args.triple))
    return gp.find_witness(s, triple)


def _no_witness(report, check, triple):
    report.add({"check": check, "status": am.FAIL, "details": {"triple": triple, "reason": "no full symmetric witness"}})
    return EXIT_VERDICT


def cmd_witness_find(args, report):
    s = _structure(args)
    w = _witness(args, s)
    if w is None:
        return _no_witness(report, "witness", args.triple)
    report.add({"check": "witness", "status": am.PASS, "witness": w.to_json()})
    return EXIT_OK


def cmd_groupoid_build(args, report):
    s = _structure(args)
    w = _witness(args, s)
    if w is None:
        return _no_witness(report, "groupoid-build", args.triple)
    g = gp.build_groupoid(w, s)
    bad = gp.theta_matches_composition(g) + gp.coherence_violations(g)
    status = am.FAIL if bad else am.PASS
    report.add({"check": "groupoid-build", "status": status, "witness": g.to_json(),
                "details": {"theta_composition_mismatches": len(gp.theta_matches_composition(g)),
                            "coherence_violations": len(gp.coherence_violations(g))}})
    return _status_code(status)


def cmd_groupoid_binding(args, report):
    s = _structure(args)
    w = _witness(args, s)
    if w is None:
        return _no_witness(report, "groupoid-binding", args.triple)
    g = gp.build_groupoid(w, s)
    bg = gp.binding_group(g)
    a1, a2, _ = w.objects
    crit = gp.check_abelian_criterion(g, a1, a2)
    iso = gp.binding_vs_automorphisms(bg, a1, a2)
    status = am.PASS if crit.implication else am.FAIL
    report.add({"check": "groupoid-binding", "status": status, "witness": bg.to_json(),
                "details": {"criterion": crit.to_json(),
                            "aut_isomorphism": [[k, v] for k, v in sorted(iso.items())]}})
    return _status_code(status)


_FLIP_INDEX = {"12": 0, "23": 1, "13": 2}


def cmd_groupoid_twist(args, report):
    s = _structure(args)
    w = _witness(args, s)
    if w is None:
        return _no_witness(report, "groupoid-twist", args.triple)
    sigma = [0, 0, 0]
    for f in args.flip or []:
        key = f.replace(",", "")
        if key not in _FLIP_INDEX:
            raise UsageError(f"--flip takes 12, 23 or 13, got {f!r}")
        sigma[_FLIP_INDEX[key]] ^= 1
    res = gp.twist_witness(w, tuple(sigma), s)
    report.add({"check": "groupoid-twist", "status": am.PASS, "witness": res.witness.to_json(),
                "details": {"sigma": sigma,
                            "isomorphism": [[list(k), list(v)] for k, v in sorted(res.isomorphism.items())]}})
    return EXIT_OK


def cmd_groupoid_autotower(args, report):
    s = _structure(args)
    a, b = _ints(args.pair)
    stage = gp.aut_tower(s, a, b, buffer=args.buffer, seed=args.seed)
    status = am.PASS if stage.group.is_abelian() else am.FAIL
    report.add({"check": "autotower", "status": status, "witness": stage.to_json()})
    return _status_code(status)


def cmd_corpus(args, report):
    from .corpus import run_corpus

    return run_corpus(args.spec, report)


# ---- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--buffer", type=int, default=2)
    common.add_argument("--budget", type=int, default=2)
    common.add_argument("-o", "--output")
    common.add_argument("--json", action="store_true", help="print the run report as JSON")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    common.add_argument("--in", dest="input")

    p = _Parser(prog="amalgam")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    g = sub.add_parser("gen", parents=[common])
    g.add_argument("--flavor", choices=FLAVORS)
    g.add_argument("--n", type=int)
    g.add_argument("--all-zero-base", action="store_true")
    g.add_argument("--blocked", action="store_true")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check")
    csub = c.add_subparsers(dest="check", parser_class=_Parser, required=True)
    x = csub.add_parser("axioms", parents=[common])
    x.set_defaults(func=cmd_check_axioms)
    x = csub.add_parser("bn", parents=[common])
    x.add_argument("--vertices", required=True)
    x.set_defaults(func=cmd_check_bn)
    x = csub.add_parser("rel-uniq", parents=[common])
    x.add_argument("--vertices", required=True)
    x.add_argument("--k", type=int)
    x.set_defaults(func=cmd_check_rel_uniq)
    x = csub.add_parser("uniqueness", parents=[common])
    x.add_argument("--other")
    x.add_argument("--triple")
    x.add_argument("--twist", action="store_true", help="compare against the one-side twisted solution")
    x.set_defaults(func=cmd_check_uniqueness)
    x = csub.add_parser("existence", parents=[common])
    x.add_argument("--n", type=int)
    x.add_argument("--blocked-triple")
    x.add_argument("--twist-parity", type=int, default=1)
    x.set_defaults(func=cmd_check_existence)
    x = csub.add_parser("skeletal", parents=[common])
    x.add_argument("--n", type=int)
    x.add_argument("--k", type=int)
    x.set_defaults(func=cmd_check_skeletal)

    gr = sub.add_parser("groupoid")
    gsub = gr.add_subparsers(dest="action", parser_class=_Parser, required=True)
    for name, func in (("build", cmd_groupoid_build), ("binding", cmd_groupoid_binding),
                       ("twist", cmd_groupoid_twist)):
        x = gsub.add_parser(name, parents=[common])
        x.add_argument("--triple", default="0,1,2")
        if name == "twist":
            x.add_argument("--flip", action="append", help="pair to flip: 12, 23 or 13 (repeatable)")
        x.set_defaults(func=func)
    x = gsub.add_parser("autotower", parents=[common])
    x.add_argument("--pair", default="0,1")
    x.set_defaults(func=cmd_groupoid_autotower)

    w = sub.add_parser("witness")
    wsub = w.add_subparsers(dest="action", parser_class=_Parser, required=True)
    x = wsub.add_parser("find", parents=[common])
    x.add_argument("--triple", default="0,1,2")
    x.set_defaults(func=cmd_witness_find)

    co = sub.add_parser("corpus", parents=[common])
    co.add_argument("spec", nargs="?", help="corpus spec file (default: the shipped acceptance corpus)")
    co.set_defaults(func=cmd_corpus)
    return p


def run(argv: list) -> tuple[int, RunReport, argparse.Namespace | None]:
    """Parse and dispatch; every path ends in one of the four exit codes."""
    report = RunReport(command=list(argv), seed=0)
    args = None
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        args.quiet = False
        report.seed, report.buffer, report.budget = args.seed, args.buffer, args.budget
        code = args.func(args, report)
    except ResourceLimitError as exc:
        code, report.error = EXIT_LIMIT, f"resource limit: {exc}"
    except AmalgamError as exc:
        code, report.error = EXIT_INVALID, f"{type(exc).__name__}: {exc}"
    except (ValueError, KeyError, TypeError) as exc:
        code, report.error = EXIT_INVALID, f"invalid input: {exc!r}"
    except RecursionError as exc:
        code, report.error = EXIT_LIMIT, f"resource limit: {exc}"
    report.exit_code = code
    if args is not None and getattr(args, "timing", False):
        report.timing = {"seconds": round(time.perf_counter() - start, 3)}
    return code, report, args


def _summary(report: RunReport) -> str:
    lines = [f"{v.get('check')}: {v.get('status')}" for v in report.verdicts]
    if report.error:
        lines.append(f"error: {report.error}")
    return "\n".join(lines)


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    code, report, args = run(argv)
    text = report.serialize()
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text + "\n")
    if args is None or not getattr(args, "quiet", False):
        if args is not None and args.json:
            sys.stdout.write(text + "\n")
        else:
            summary = _summary(report)
            if summary:
                stream = sys.stderr if report.error else sys.stdout
                stream.write(summary + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
