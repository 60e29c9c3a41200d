"""kra-sat command line: solve, gen, compare, shrink, check."""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from kra_sat.cnf import Cube, Formula, all_triples, parse_dimacs, write_dimacs
from kra_sat.decision import ExtractionOrder, Sat, SolveConfig, Unknown, Unsat, run_kra
from kra_sat.engine import Derivation, EngineConfig, derivation_log
from kra_sat.errors import DimacsSyntaxError, EmptyClause, KraSatError, ProofFormatError, TooLarge
from kra_sat.harness import (
    RunConfig,
    compare,
    generate_family,
    generate_sweep,
    make_predicate,
    records_csv,
    refutation_witness,
    shrink,
    verdict_label,
    with_engine,
)
from kra_sat.oracle import BRUTE_FORCE_LIMIT, brute_force, check_derivation
from kra_sat.proof import format_log, parse_log
from kra_sat.utils.config_loader import ConfigLoader
from kra_sat.utils.logger import logger

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_UNKNOWN = 0
EXIT_ERROR = 1


def _read_formula(path: str) -> Formula:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_dimacs(f)
    except UnicodeDecodeError as e:
        raise DimacsSyntaxError(f"{path} is not a text DIMACS file ({e.reason})") from e


def _read_proof(path: str) -> List[Derivation]:
    try:
        return parse_log(Path(path).read_text(encoding="utf-8"))
    except UnicodeDecodeError as e:
        raise ProofFormatError(f"{path} is not a text derivation log ({e.reason})") from e


def _solve_config(args) -> SolveConfig:
    cfg = SolveConfig.from_config(engine=EngineConfig.from_config())
    cfg = with_engine(cfg, max_width=getattr(args, "max_width", None))
    if getattr(args, "all_triples", False):
        cfg = replace(cfg, all_triples=True)
    if getattr(args, "extraction_order", None):
        cfg = replace(cfg, extraction_order=ExtractionOrder(args.extraction_order))
    return cfg


def solve_cmd(args) -> int:
    try:
        f = _read_formula(args.file)
    except EmptyClause as e:
        print(f"c {e}")
        print("s UNSATISFIABLE")
        return EXIT_UNSAT
    if args.verify_oracle and f.n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f.n, BRUTE_FORCE_LIMIT)

    run = run_kra(f, _solve_config(args))
    verdict = run.verdict
    print(f"c kra-sat: n={f.n} m={f.m} rejected={len(run.store)} pops={run.report.iterations}")

    if isinstance(verdict, Sat):
        print("s SATISFIABLE")
        print("v " + " ".join(str(lit) for lit in verdict.assignment.to_literals()) + " 0")
        code = EXIT_SAT
    elif isinstance(verdict, Unsat):
        if isinstance(verdict.witness, Cube):
            print("c witness: empty cube")
        else:
            print("c witness: triple " + " ".join(str(v) for v in verdict.witness))
        print("s UNSATISFIABLE")
        code = EXIT_UNSAT
    else:
        print(f"c reason: {verdict.reason.value}: {verdict.detail}")
        if verdict.unverified_answer_was_sat:
            print("c note: the unverified procedure would have answered SAT here")
        print("s UNKNOWN")
        code = EXIT_UNKNOWN

    if args.proof:
        proof = verdict.proof if isinstance(verdict, Unsat) else derivation_log(run.store)
        Path(args.proof).write_text(format_log(proof))
    if args.stats:
        stats = {"verdict": verdict_label(verdict), "report": run.report.to_dict()}
        if isinstance(verdict, Unknown):
            stats["reason"] = verdict.reason.value
        Path(args.stats).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")

    if args.verify_oracle:
        truth = "SAT" if brute_force(f).satisfiable else "UNSAT"
        if isinstance(verdict, Unknown):
            print(f"c oracle says {truth}")
        elif verdict_label(verdict) == truth:
            print("c oracle agrees")
        else:
            print("c oracle DISAGREES")
            logger.error(f"❌ Soundness violation on {args.file}")
            return EXIT_ERROR
    return code


def gen_cmd(args) -> int:
    out_dir = Path(args.out_dir)
    if args.ratio_sweep:
        lo, hi, step = args.ratio_sweep
        paths = generate_sweep(args.n, lo, hi, step, args.count, args.seed, out_dir)
    else:
        if args.m is None:
            raise KraSatError("gen needs --m or --ratio-sweep")
        paths = generate_family(args.n, args.m, args.count, args.seed, out_dir)
    logger.info(f"✅ Wrote {len(paths)} instance(s) to {out_dir}")
    for path in paths:
        print(path)
    return 0


def compare_cmd(args) -> int:
    cfg = RunConfig.from_config()
    overrides = {
        "seed": args.seed,
        "n_min": args.n_min,
        "n_max": args.n_max,
        "ratio_min": args.ratio_min,
        "ratio_max": args.ratio_max,
        "count": args.count,
        "workers": args.workers,
        "csv_path": args.csv,
        "summary_path": args.summary,
        "archive_dir": args.archive_dir,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    cfg = replace(cfg, solve=_solve_config(args), timings=args.timings)

    to_stdout = cfg.csv_path is not None and str(cfg.csv_path) == "-"
    if to_stdout:
        cfg = replace(cfg, csv_path=None)
    records, summary = compare(cfg)
    if to_stdout:
        sys.stdout.write(records_csv(records, cfg.timings))
    return EXIT_ERROR if summary["soundness_violations"] or summary["errors"] else 0


def shrink_cmd(args) -> int:
    f = _read_formula(args.instance)
    kind = args.predicate or ConfigLoader("harness_config.yaml").get("shrink.predicate", "unknown")
    predicate = make_predicate(kind, _solve_config(args))
    minimal = shrink(f, predicate)
    logger.info(f"✅ Shrunk {f.m} -> {minimal.m} clause(s), {f.n} -> {minimal.n} variable(s)")
    text = write_dimacs(minimal)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def check_cmd(args) -> int:
    f = _read_formula(args.file)
    log = _read_proof(args.proof)
    universe = all_triples(f.n) if args.all_triples else None
    report = check_derivation(f, log, universe, any_triple=args.all_triples)
    if not report.valid:
        print(f"c invalid step {report.first_invalid}: {report.reason}")
        print("s INVALID")
        return EXIT_ERROR
    witness = refutation_witness(f, log, universe)
    print(f"c {report.steps_checked} step(s) replayed")
    if witness:
        print(f"c refutes: {witness}")
    print("s VALID")
    return 0


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-width", type=int, choices=(3, 4), default=None)
    p.add_argument("--all-triples", action="store_true", help="use all C(n,3) triples")
    p.add_argument(
        "--extraction-order", choices=[o.value for o in ExtractionOrder], default=None
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kra-sat", description="Knowledge Recognition Algorithm for 3-SAT"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide a DIMACS CNF file")
    p.add_argument("file")
    p.add_argument("--proof", help="write the derivation slice here")
    p.add_argument("--stats", help="write the fixpoint report as JSON here")
    p.add_argument("--verify-oracle", action="store_true", help="cross-check by brute force")
    _add_engine_flags(p)
    p.set_defaults(func=solve_cmd)

    p = sub.add_parser("gen", help="generate random 3-CNF families")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--ratio-sweep", type=float, nargs=3, metavar=("LO", "HI", "STEP"),
        help="one family per clause/variable ratio",
    )
    p.set_defaults(func=gen_cmd)

    p = sub.add_parser("compare", help="compare KRA with the oracle on random instances")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--ratio-min", type=float)
    p.add_argument("--ratio-max", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--csv", type=Path, help="CSV output path, '-' for stdout")
    p.add_argument("--summary", type=Path)
    p.add_argument("--archive-dir", type=Path)
    p.add_argument("--timings", action="store_true", help="add wall-time columns")
    _add_engine_flags(p)
    p.set_defaults(func=compare_cmd)

    p = sub.add_parser("shrink", help="minimize an instance that stays UNKNOWN or disagrees")
    p.add_argument("instance")
    p.add_argument("--predicate", choices=("unknown", "disagree"), default=None)
    p.add_argument("-o", "--output")
    _add_engine_flags(p)
    p.set_defaults(func=shrink_cmd)

    p = sub.add_parser("check", help="replay a derivation log against a CNF file")
    p.add_argument("file")
    p.add_argument("proof")
    p.add_argument("--all-triples", action="store_true")
    p.set_defaults(func=check_cmd)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (KraSatError, OSError) as e:
        logger.debug(f"❌ {args.command} failed", exc_info=True)
        print(f"kra-sat: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
