"""Command line interface.

    chrcp run <prog.chrcp> [--store f] [--engine op|abs] [--max-steps N]
              [--seed N] [--trace out.json]
    chrcp analyze <prog.chrcp> [--json]
    chrcp check <prog.chrcp> [--store f] [--budget N]
    chrcp fuzz --seeds A..B [--size-preset desk]

Exit codes: 0 success/OK, 1 errors or failed verdicts, 2 step limit hit.
CHRCP_COLOR=0|1 overrides color auto-detection.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ChrcpError
from .fuzz import DESK, generate_random
from .machine import annotate, run_operational
from .monotone import predicate_report, residual_non_unifiable
from .parse import load_program, load_store, pretty_pattern, pretty_store
from .rewrite import run_abstract, store_of
from .rules import canonical_store
from .soundness import check_soundness, correspondence, trace_records


def _use_color(stream) -> bool:
    env = os.environ.get("CHRCP_COLOR")
    if env == "0":
        return False
    if env == "1":
        return True
    return hasattr(stream, "isatty") and stream.isatty()


def _paint(text: str, code: str, stream=sys.stdout) -> str:
    if _use_color(stream):
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _ok(text: str) -> str:
    return _paint(text, "32")


def _bad(text: str) -> str:
    return _paint(text, "31")


def cmd_run(args) -> int:
    program = load_program(args.program)
    store = load_store(args.store) if args.store else ()
    trace_out: list[dict] = []
    if args.engine == "abs":
        run = run_abstract(program, store_of(store), max_steps=args.max_steps, seed=args.seed)
        final = run.final
        limit = run.limit_exceeded
        for i, step in enumerate(run.steps):
            trace_out.append(
                {
                    "index": i,
                    "kind": "apply",
                    "rule": step.rule,
                    "goalDigest": None,
                    "storeBefore": None,
                    "storeAfter": None,
                    "classification": None,
                }
            )
    else:
        pw = annotate(program)
        run = run_operational(pw, store, max_steps=args.max_steps, seed=args.seed)
        final = canonical_store(correspondence(run.state))
        limit = run.limit_exceeded
        for i, (kind, digest) in enumerate(run.trace):
            trace_out.append(
                {
                    "index": i,
                    "kind": kind,
                    "goalDigest": digest,
                    "storeBefore": None,
                    "storeAfter": None,
                    "classification": None,
                }
            )
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump(trace_out, fh, indent=2)
    print(pretty_store(final))
    if limit:
        print(_bad("step limit exceeded"), file=sys.stderr)
        return 2
    return 0


def cmd_analyze(args) -> int:
    program = load_program(args.program)
    patterns = []
    owners = []
    for rule in program.rules:
        for p in rule.body:
            patterns.append(p)
            owners.append(rule.name)
    report = residual_non_unifiable(program, patterns)
    preds = predicate_report(program)
    if args.json:
        payload = {
            "patterns": [
                {
                    "rule": owner,
                    "pattern": pretty_pattern(v.pattern),
                    "monotone": v.monotone,
                    "witnessRule": v.witness_rule,
                    "witnessHead": pretty_pattern(v.witness_head) if v.witness_head else None,
                }
                for owner, v in zip(owners, report.verdicts)
            ],
            "predicates": {
                f"{pred}/{arity}": mono for (pred, arity), mono in sorted(preds.items())
            },
        }
        print(json.dumps(payload, indent=2))
        return 0
    print("body patterns:")
    if not report.verdicts:
        print("  (none)")
    for owner, v in zip(owners, report.verdicts):
        if v.monotone:
            print(f"  {owner}: {pretty_pattern(v.pattern)}: {_ok('monotone')}")
        else:
            why = f"unifies with {pretty_pattern(v.witness_head)} in rule {v.witness_rule}"
            print(f"  {owner}: {pretty_pattern(v.pattern)}: {_bad('non-monotone')} ({why})")
    print("predicates:")
    for (pred, arity), mono in sorted(preds.items()):
        verdict = _ok("monotone") if mono else _bad("non-monotone")
        print(f"  {pred}/{arity}: {verdict}")
    return 0


def cmd_check(args) -> int:
    program = load_program(args.program)
    store = load_store(args.store) if args.store else ()
    report = check_soundness(program, store, max_steps=args.budget)
    counts = report.counts()
    print(
        f"steps={report.steps} silent={counts['silent']} "
        f"abstract={counts['abstract']} violations={counts['violation']}"
    )
    for index, kind, cls in report.violations:
        print(_bad(f"violation at step {index} ({kind}):"))
        print(f"  before: {pretty_store(cls.before or ())}")
        print(f"  after:  {pretty_store(cls.after or ())}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            json.dump(trace_records(report), fh, indent=2)
    if report.limit_exceeded:
        print("note: step budget exhausted before termination", file=sys.stderr)
    print(_ok("OK") if report.ok else _bad("FAIL"))
    return 0 if report.ok else 1


def _parse_seed_range(text: str) -> tuple[int, int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return int(a), int(b)
    v = int(text)
    return v, v


def cmd_fuzz(args) -> int:
    lo, hi = _parse_seed_range(args.seeds)
    params = DESK  # the only preset
    failures = []
    truncated = 0
    total_steps = 0
    for seed in range(lo, hi + 1):
        program, init = generate_random(seed, params)
        report = check_soundness(program, init, max_steps=args.budget)
        total_steps += report.steps
        if report.limit_exceeded:
            truncated += 1
        if not report.ok:
            failures.append(seed)
            print(_bad(f"seed {seed}: {len(report.violations)} violation(s)"))
    n = hi - lo + 1
    print(
        f"seeds {lo}..{hi}: {n - len(failures)}/{n} OK, "
        f"{truncated} truncated, {total_steps} machine steps"
    )
    print(_ok("OK") if not failures else _bad("FAIL"))
    return 0 if not failures else 1


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chrcp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a program on a store")
    run.add_argument("program")
    run.add_argument("--store")
    run.add_argument("--engine", choices=("op", "abs"), default="op")
    run.add_argument("--max-steps", type=int, default=10_000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--trace")
    run.set_defaults(func=cmd_run)

    an = sub.add_parser("analyze", help="monotonicity report")
    an.add_argument("program")
    an.add_argument("--json", action="store_true")
    an.set_defaults(func=cmd_analyze)

    ck = sub.add_parser("check", help="differential soundness check")
    ck.add_argument("program")
    ck.add_argument("--store")
    ck.add_argument("--budget", type=int, default=2_000)
    ck.add_argument("--trace")
    ck.set_defaults(func=cmd_check)

    fz = sub.add_parser("fuzz", help="soundness-check random programs")
    fz.add_argument("--seeds", required=True, help="inclusive range A..B")
    fz.add_argument("--size-preset", choices=("desk",), default="desk")
    fz.add_argument("--budget", type=int, default=300)
    fz.set_defaults(func=cmd_fuzz)
    return ap


def main(argv=None) -> int:
    ap = build_arg_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ChrcpError as exc:
        print(_bad(str(exc)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
