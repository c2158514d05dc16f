"""Command-line interface.

Subcommands:
    optimize   search for a faster legal schedule and report/store results
    simulate   price one schedule with the scoreboard model (JSON report)
    verify     differential-test a mutant schedule against a reference
    diff       minimal adjacent-swap sequence between two schedules

Exit codes: 0 success, 1 input/usage problem (e.g. diff on non-permutations,
verify without a plan), 2 parse failure, 3 no movable instructions,
4 backend failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .anneal import InvalidBaseline
from .backends import MeasurementFailed, make_backend
from .config import RunConfig, load_config
from .deps import build_depgraph, to_dot
from .difftest import run_tests
from .driver import run_search
from .ir import Kernel
from .machine import simulate
from .perturb import NoCandidatesError
from .sasstext import ParseError, parse_kernel, serialize_kernel
from .store import ResultStore

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_NO_CANDIDATES = 3
EXIT_BACKEND = 4


def _load_kernel(path: str) -> Kernel:
    text = Path(path).read_text()
    return parse_kernel(text, name=Path(path).stem)


def _print_parse_error(path: str, exc: ParseError) -> None:
    for diag in exc.diagnostics:
        print(f"{path}:{diag}", file=sys.stderr)


def _emit_deps(kernel: Kernel, path: str) -> None:
    Path(path).write_text(to_dot(build_depgraph(kernel), kernel))


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg: RunConfig = load_config(args.config)
    anneal_cfg = cfg.anneal
    if args.seed is not None:
        anneal_cfg = replace(anneal_cfg, seed=args.seed)
    if args.tests is not None:
        anneal_cfg = replace(anneal_cfg, tests_per_step=args.tests)
    if args.unsafe_moves:
        anneal_cfg = replace(anneal_cfg, unsafe_moves=True)
    backend_spec = args.backend if args.backend is not None else cfg.backend_spec

    try:
        kernel = _load_kernel(args.input)
    except ParseError as exc:
        _print_parse_error(args.input, exc)
        return EXIT_PARSE

    if args.emit_deps:
        _emit_deps(kernel, args.emit_deps)

    try:
        backend = make_backend(
            backend_spec, machine=cfg.machine, timeout_s=cfg.timeout_s, workdir=cfg.workdir
        )
    except ValueError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND

    store = ResultStore(args.store) if args.store else None
    try:
        report = run_search(
            kernel,
            backend,
            anneal_cfg,
            chains=args.chains,
            plan=cfg.plan,
            store=store,
        )
    except NoCandidatesError as exc:
        print(f"no candidates: {exc}", file=sys.stderr)
        return EXIT_NO_CANDIDATES
    except (MeasurementFailed, InvalidBaseline) as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND

    unit = report.unit
    print(f"input: {kernel.name}  instructions: {len(kernel)}  candidates: {report.candidate_count}")
    print(f"baseline: {report.baseline:g} {unit}")
    for o in report.chains:
        verdict = "tests skipped"
        if o.verdict is not None:
            if o.verdict.inconclusive is not None:
                verdict = f"inconclusive ({o.verdict.inconclusive})"
            elif o.verdict.ok:
                verdict = f"passed {o.verdict.passed} tests"
            else:
                verdict = f"FAILED {o.verdict.failed}/{o.verdict.passed + o.verdict.failed} tests"
        print(
            f"chain seed={o.seed}: best {o.state.best_time:g} {unit} "
            f"after {o.state.iterations} iterations, {verdict}"
        )
    if report.best is None:
        print("best: none (no candidate passed verification)")
    else:
        print(
            f"best: {report.best_time:g} {unit} (seed {report.best.seed}), "
            f"improvement {report.improvement_pct:.2f}%"
        )
    if store is not None:
        print(f"store: {store.run_dir(report.input_digest)}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    try:
        kernel = _load_kernel(args.input)
    except ParseError as exc:
        _print_parse_error(args.input, exc)
        return EXIT_PARSE
    if args.emit_deps:
        _emit_deps(kernel, args.emit_deps)
    print(simulate(kernel, cfg.machine).to_json())
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if cfg.plan is None:
        print("verify needs a config file with a 'tests' section", file=sys.stderr)
        return EXIT_USAGE
    plan = cfg.plan
    if args.tests is not None:
        plan = replace(plan, samples=args.tests)
    try:
        reference = _load_kernel(args.reference)
        mutant = _load_kernel(args.mutant)
    except ParseError as exc:
        _print_parse_error("input", exc)
        return EXIT_PARSE
    verdict = run_tests(reference, mutant, plan, fail_fast=args.fail_fast)
    print(json.dumps(verdict.to_dict(), sort_keys=True))
    return EXIT_OK


def schedule_moves(a: Kernel, b: Kernel) -> list[tuple[int, int]]:
    """Minimal ordered adjacent-swap sequence turning schedule a into b.

    Raises ValueError when the two schedules are not permutations of the
    same instruction lines.
    """
    def key(ins) -> str:
        return (ins.source_text or "").strip()

    if len(a.schedule) != len(b.schedule):
        raise ValueError("schedules have different lengths")
    pool: dict[str, list[int]] = {}
    for j, ins in enumerate(b.schedule):
        pool.setdefault(key(ins), []).append(j)
    target: list[int] = []
    for ins in a.schedule:
        slots = pool.get(key(ins))
        if not slots:
            raise ValueError(f"line not present in both schedules: {key(ins)!r}")
        target.append(slots.pop(0))
    if any(slots for slots in pool.values()):
        raise ValueError("schedules are not permutations of each other")

    moves: list[tuple[int, int]] = []
    order = list(target)
    changed = True
    while changed:
        changed = False
        for i in range(len(order) - 1):
            if order[i] > order[i + 1]:
                order[i], order[i + 1] = order[i + 1], order[i]
                moves.append((i, i + 1))
                changed = True
    return moves


def cmd_diff(args: argparse.Namespace) -> int:
    try:
        a = _load_kernel(args.a)
        b = _load_kernel(args.b)
    except ParseError as exc:
        _print_parse_error("input", exc)
        return EXIT_PARSE
    try:
        moves = schedule_moves(a, b)
    except ValueError as exc:
        print(f"diff error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"moves": [{"swap": list(m)} for m in moves]}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sasstune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="search for a faster legal schedule")
    p_opt.add_argument("input", help="kernel dump (.sass)")
    p_opt.add_argument("--config", help="JSON run configuration")
    p_opt.add_argument("--seed", type=int, default=None)
    p_opt.add_argument("--chains", type=int, default=1, help="independent search chains")
    p_opt.add_argument("--backend", default=None, help="sim | external:<command with {schedule_file}>")
    p_opt.add_argument("--tests", type=int, default=None, help="differential test samples per step")
    p_opt.add_argument("--emit-deps", metavar="FILE", help="write the dependence graph as DOT")
    p_opt.add_argument("--unsafe-moves", action="store_true", help="skip dependency legality checks")
    p_opt.add_argument("--store", metavar="DIR", help="result store directory")
    p_opt.set_defaults(fn=cmd_optimize)

    p_sim = sub.add_parser("simulate", help="price one schedule (JSON report)")
    p_sim.add_argument("input")
    p_sim.add_argument("--config")
    p_sim.add_argument("--emit-deps", metavar="FILE")
    p_sim.set_defaults(fn=cmd_simulate)

    p_ver = sub.add_parser("verify", help="differential-test mutant against reference")
    p_ver.add_argument("reference")
    p_ver.add_argument("mutant")
    p_ver.add_argument("--config", required=False)
    p_ver.add_argument("--tests", type=int, default=None, help="override sample count")
    p_ver.add_argument("--fail-fast", action="store_true")
    p_ver.set_defaults(fn=cmd_verify)

    p_diff = sub.add_parser("diff", help="adjacent-swap sequence between two schedules")
    p_diff.add_argument("a")
    p_diff.add_argument("b")
    p_diff.set_defaults(fn=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
