"""
Experiment harness: instance families, KRA-vs-oracle comparison, shrinking.

A failing instance is logged and recorded as UNKNOWN-other; it never stops
the run.
"""

import csv
import io
import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from kra_sat.cnf import (
    Clause,
    Formula,
    VarTriple,
    clause_triples,
    cova_set,
    evaluate,
    lit_var,
    max_cova_clauses,
    random_formula,
    sub_cubes,
    write_dimacs,
)
from kra_sat.decision import SolveConfig, Sat, Unknown, UnknownReason, Unsat, decide, run_kra
from kra_sat.engine import Derivation, RuleId, cube_space_bound
from kra_sat.errors import InvalidParams, PredicateNotSatisfied
from kra_sat.oracle import BRUTE_FORCE_LIMIT, brute_force, check_derivation, cube_sound, models
from kra_sat.utils.config import WORKERS
from kra_sat.utils.config_loader import ConfigLoader
from kra_sat.utils.logger import logger

CSV_SCHEMA = "# kra-sat compare schema v1"
CSV_COLUMNS = [
    "instance_id",
    "n",
    "m",
    "kra_verdict",
    "oracle_verdict",
    "agree",
    "soundness_violation",
    "unsound_cubes",
    "proof_valid",
    "rejected_cubes",
    "within_bound",
    "fixpoint_iterations",
    "rule_firings",
]
TIMING_COLUMNS = ["kra_seconds", "oracle_seconds"]


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    n_min: int = 5
    n_max: int = 14
    ratio_min: float = 3.0
    ratio_max: float = 6.0
    count: int = 1000
    workers: int = 1
    solve: SolveConfig = field(default_factory=SolveConfig)
    csv_path: Optional[Path] = None
    summary_path: Optional[Path] = None
    archive_dir: Optional[Path] = None
    timings: bool = False

    def __post_init__(self):
        if not 3 <= self.n_min <= self.n_max:
            raise InvalidParams(f"empty or invalid n-range [{self.n_min}, {self.n_max}]")
        if self.n_max > BRUTE_FORCE_LIMIT:
            raise InvalidParams(f"n_max={self.n_max} is beyond the oracle limit {BRUTE_FORCE_LIMIT}")
        if not 0 < self.ratio_min <= self.ratio_max:
            raise InvalidParams(f"empty ratio-range [{self.ratio_min}, {self.ratio_max}]")
        if self.count < 1 or self.workers < 1:
            raise InvalidParams("count and workers must be positive")

    @classmethod
    def from_config(cls, config_path: str = "harness_config.yaml") -> "RunConfig":
        loader = ConfigLoader(config_path)

        def path(key: str) -> Optional[Path]:
            value = loader.get(key)
            return Path(value) if value else None

        workers = int(WORKERS) if WORKERS else int(loader.get("compare.workers", 1))
        return cls(
            seed=int(loader.get("compare.seed", 1)),
            n_min=int(loader.get("compare.n_min", 5)),
            n_max=int(loader.get("compare.n_max", 14)),
            ratio_min=float(loader.get("compare.ratio_min", 3.0)),
            ratio_max=float(loader.get("compare.ratio_max", 6.0)),
            count=int(loader.get("compare.count", 1000)),
            workers=workers,
            solve=SolveConfig.from_config(config_path),
            csv_path=path("compare.csv_path"),
            summary_path=path("compare.summary_path"),
            archive_dir=path("compare.archive_dir"),
        )


@dataclass(frozen=True)
class InstanceSpec:
    instance_id: str
    n: int
    m: int
    seed: int

    def formula(self) -> Formula:
        return random_formula(self.n, self.m, self.seed)


@dataclass
class ComparisonRecord:
    instance_id: str
    n: int
    m: int
    kra_verdict: str
    oracle_verdict: str
    agree: bool
    soundness_violation: bool
    unsound_cubes: int = 0
    proof_valid: bool = True
    rejected_cubes: int = 0
    within_bound: bool = True
    fixpoint_iterations: int = 0
    rule_firings: Dict[str, int] = field(default_factory=dict)
    kra_seconds: float = 0.0
    oracle_seconds: float = 0.0
    error: str = ""

    def row(self, timings: bool = False) -> List[str]:
        firings = ";".join(
            f"{rule.name}={self.rule_firings[rule.name]}"
            for rule in RuleId
            if rule.name in self.rule_firings
        )
        values = [
            self.instance_id,
            self.n,
            self.m,
            self.kra_verdict,
            self.oracle_verdict,
            int(self.agree),
            int(self.soundness_violation),
            self.unsound_cubes,
            int(self.proof_valid),
            self.rejected_cubes,
            int(self.within_bound),
            self.fixpoint_iterations,
            firings,
        ]
        if timings:
            values += [f"{self.kra_seconds:.6f}", f"{self.oracle_seconds:.6f}"]
        return [str(v) for v in values]


def verdict_label(verdict) -> str:
    if isinstance(verdict, Sat):
        return "SAT"
    if isinstance(verdict, Unsat):
        return "UNSAT"
    if isinstance(verdict, Unknown) and verdict.reason is UnknownReason.EXTRACTION_CONFLICT:
        return "UNKNOWN-conflict"
    return "UNKNOWN-other"


def instance_specs(cfg: RunConfig) -> List[InstanceSpec]:
    """Deterministic instance family for a run configuration."""
    rng = random.Random(cfg.seed)
    specs = []
    for index in range(cfg.count):
        n = rng.randint(cfg.n_min, cfg.n_max)
        ratio = rng.uniform(cfg.ratio_min, cfg.ratio_max)
        m = min(max(1, round(ratio * n)), max_cova_clauses(n))
        specs.append(InstanceSpec(f"{cfg.seed}-{index}", n, m, rng.randrange(2**31)))
    return specs


def compare_instance(spec: InstanceSpec, solve_cfg: SolveConfig) -> ComparisonRecord:
    try:
        f = spec.formula()
        started = time.perf_counter()
        run = run_kra(f, solve_cfg)
        kra_seconds = time.perf_counter() - started

        started = time.perf_counter()
        oracle = brute_force(f)
        oracle_seconds = time.perf_counter() - started

        all_models = list(models(f)) if oracle.satisfiable else []
        unsound = sum(
            1 for c in run.store.cubes() if not cube_sound(f, c, all_models=all_models)
        )
        report = check_derivation(
            f, run.store.log, run.store.universe, any_triple=solve_cfg.all_triples
        )

        kra = verdict_label(run.verdict)
        expected = "SAT" if oracle.satisfiable else "UNSAT"
        wrong_sat = isinstance(run.verdict, Sat) and not evaluate(f, run.verdict.assignment)
        wrong_unsat = kra == "UNSAT" and oracle.satisfiable
        if unsound or wrong_sat or wrong_unsat:
            logger.error(f"❌ Soundness violation on {spec.instance_id}")

        return ComparisonRecord(
            instance_id=spec.instance_id,
            n=f.n,
            m=f.m,
            kra_verdict=kra,
            oracle_verdict=expected,
            agree=kra == expected,
            soundness_violation=bool(unsound or wrong_sat or wrong_unsat),
            unsound_cubes=unsound,
            proof_valid=report.valid,
            rejected_cubes=len(run.store),
            within_bound=len(run.store) <= cube_space_bound(f.n),
            fixpoint_iterations=run.report.iterations,
            rule_firings=dict(run.report.firings_per_rule),
            kra_seconds=kra_seconds,
            oracle_seconds=oracle_seconds,
        )
    except Exception as e:
        logger.error(f"❌ Failed to compare instance {spec.instance_id}: {e}")
        return ComparisonRecord(
            instance_id=spec.instance_id,
            n=spec.n,
            m=spec.m,
            kra_verdict="UNKNOWN-other",
            oracle_verdict="ERROR",
            agree=False,
            soundness_violation=False,
            proof_valid=False,
            error=str(e),
        )


def _compare_job(args: Tuple[InstanceSpec, SolveConfig]) -> ComparisonRecord:
    return compare_instance(*args)


def run_comparison(cfg: RunConfig) -> List[ComparisonRecord]:
    """One record per instance, in instance order whatever the scheduling."""
    jobs = [(spec, cfg.solve) for spec in instance_specs(cfg)]
    if cfg.workers == 1:
        return [_compare_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_compare_job, jobs, chunksize=4))


def records_csv(records: Sequence[ComparisonRecord], timings: bool = False) -> str:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (TIMING_COLUMNS if timings else []))
    for record in records:
        writer.writerow(record.row(timings))
    return buf.getvalue()


def summarize(records: Sequence[ComparisonRecord], timings: bool = False) -> dict:
    total = len(records)
    firings: Dict[str, int] = {}
    for record in records:
        for rule, count in record.rule_firings.items():
            firings[rule] = firings.get(rule, 0) + count

    def count(pred: Callable[[ComparisonRecord], bool]) -> int:
        return sum(1 for r in records if pred(r))

    kra_unsat = count(lambda r: r.kra_verdict == "UNSAT")
    # errored instances carry no verdict
    decided = count(lambda r: not r.error)
    unknown = count(lambda r: r.kra_verdict.startswith("UNKNOWN") and not r.error)
    summary = {
        "schema": CSV_SCHEMA.lstrip("# "),
        "instances": total,
        "agreement_rate": count(lambda r: r.agree) / total if total else 0.0,
        "unknown_rate": unknown / decided if decided else 0.0,
        "unknown_conflict": count(lambda r: r.kra_verdict == "UNKNOWN-conflict"),
        "unknown_other": count(lambda r: r.kra_verdict == "UNKNOWN-other" and not r.error),
        "errors": count(lambda r: bool(r.error)),
        "oracle_sat": count(lambda r: r.oracle_verdict == "SAT"),
        "kra_sat": count(lambda r: r.kra_verdict == "SAT"),
        "kra_unsat": kra_unsat,
        "kra_unsat_confirmed": count(
            lambda r: r.kra_verdict == "UNSAT" and r.oracle_verdict == "UNSAT"
        ),
        "soundness_violations": count(lambda r: r.soundness_violation),
        "invalid_proofs": count(lambda r: not r.proof_valid and not r.error),
        "bound_violations": count(lambda r: not r.within_bound),
        "firings_per_rule": {rule.name: firings[rule.name] for rule in RuleId if rule.name in firings},
    }
    if timings:
        summary["timing"] = {
            "kra_seconds": sum(r.kra_seconds for r in records),
            "oracle_seconds": sum(r.oracle_seconds for r in records),
        }
    return summary


def compare(cfg: RunConfig) -> Tuple[List[ComparisonRecord], dict]:
    logger.info(f"ℹ️ Comparing KRA with the oracle on {cfg.count} instance(s)")
    records = run_comparison(cfg)
    summary = summarize(records, cfg.timings)

    if cfg.csv_path:
        Path(cfg.csv_path).write_text(records_csv(records, cfg.timings))
    if cfg.summary_path:
        Path(cfg.summary_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if cfg.archive_dir:
        archive_unknowns(records, instance_specs(cfg), cfg.solve, Path(cfg.archive_dir))

    if summary["soundness_violations"]:
        logger.error(f"❌ {summary['soundness_violations']} soundness violation(s)")
    elif summary["errors"]:
        logger.error(f"❌ {summary['errors']} instance(s) failed before a verdict")
    else:
        logger.info(
            f"✅ {summary['instances']} instance(s), agreement {summary['agreement_rate']:.3f}, "
            f"unknown {summary['unknown_rate']:.3f}, no soundness violation"
        )
    return records, summary


def archive_unknowns(
    records: Sequence[ComparisonRecord],
    specs: Sequence[InstanceSpec],
    solve_cfg: SolveConfig,
    archive_dir: Path,
) -> List[Path]:
    """Write each UNKNOWN instance next to its shrunk witness."""
    archive_dir.mkdir(parents=True, exist_ok=True)
    by_id = {spec.instance_id: spec for spec in specs}
    written = []
    for record in records:
        if not record.kra_verdict.startswith("UNKNOWN") or record.error:
            continue
        f = by_id[record.instance_id].formula()
        original = archive_dir / f"{record.instance_id}.cnf"
        original.write_text(write_dimacs(f))
        shrunk = shrink(f, make_predicate("unknown", solve_cfg))
        minimal = archive_dir / f"{record.instance_id}.min.cnf"
        minimal.write_text(write_dimacs(shrunk))
        logger.info(f"📌 Archived {record.instance_id}: {f.m} -> {shrunk.m} clause(s)")
        written += [original, minimal]
    return written


def make_predicate(kind: str, solve_cfg: Optional[SolveConfig] = None) -> Callable[[Formula], bool]:
    solve_cfg = solve_cfg or SolveConfig()

    def is_unknown(f: Formula) -> bool:
        verdict, _ = decide(f, solve_cfg)
        return isinstance(verdict, Unknown)

    def disagrees(f: Formula) -> bool:
        verdict, _ = decide(f, solve_cfg)
        if isinstance(verdict, Unknown):
            return True
        return isinstance(verdict, Sat) != brute_force(f).satisfiable

    predicates = {"unknown": is_unknown, "disagree": disagrees}
    if kind not in predicates:
        raise InvalidParams(f"unknown predicate `{kind}`, expected one of {sorted(predicates)}")
    return predicates[kind]


def compact_variables(f: Formula) -> Formula:
    """Drop unused variables, renumbering the rest densely in order."""
    used = sorted({lit_var(lit) for clause in f.clauses for lit in clause})
    mapping = {old: new for new, old in enumerate(used, start=1)}
    clauses = tuple(
        Clause(tuple(mapping[lit_var(lit)] * (1 if lit > 0 else -1) for lit in clause))
        for clause in f.clauses
    )
    return Formula(n=len(used), clauses=clauses)


def shrink(f: Formula, predicate: Callable[[Formula], bool]) -> Formula:
    """Greedy one-clause-at-a-time reduction to a 1-minimal instance."""
    if not predicate(f):
        raise PredicateNotSatisfied("predicate does not hold on the input instance")

    clauses = list(f.clauses)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(clauses):
            candidate = Formula(f.n, tuple(clauses[:i] + clauses[i + 1:]))
            if predicate(candidate):
                clauses = list(candidate.clauses)
                changed = True
            else:
                i += 1

    reduced = Formula(f.n, tuple(clauses))
    compacted = compact_variables(reduced)
    if compacted != reduced and predicate(compacted):
        return compacted
    return reduced


def generate_family(n: int, m: int, count: int, seed: int, out_dir: Path, tag: str = "") -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(f"{seed}{tag}")
    paths = []
    for index in range(count):
        f = random_formula(n, m, rng.randrange(2**31))
        name = f"{seed}-{tag}{index}.cnf" if tag else f"{seed}-{index}.cnf"
        path = out_dir / name
        path.write_text(write_dimacs(f))
        paths.append(path)
    return paths


def ratio_grid(lo: float, hi: float, step: float) -> List[float]:
    if step <= 0 or hi < lo:
        raise InvalidParams(f"bad ratio sweep {lo}..{hi} step {step}")
    steps = int(round((hi - lo) / step))
    return [round(lo + i * step, 4) for i in range(steps + 1)]


def generate_sweep(
    n: int, lo: float, hi: float, step: float, count: int, seed: int, out_dir: Path
) -> List[Path]:
    paths = []
    for ratio in ratio_grid(lo, hi, step):
        m = min(max(1, round(ratio * n)), max_cova_clauses(n))
        paths += generate_family(n, m, count, seed, out_dir, tag=f"r{ratio:.2f}-")
    return paths


def refutation_witness(
    f: Formula, log: Iterable[Derivation], universe: Optional[Iterable[VarTriple]] = None
) -> Optional[str]:
    """What a (checked) proof refutes: the empty cube or a fully covered triple."""
    conclusions = set()
    for d in log:
        if d.rule is RuleId.EMPTY_RESOLVENT:
            return "empty cube"
        conclusions.add(d.conclusion)

    def covered(cube) -> bool:
        if cube in conclusions:
            return True
        return any(sub in conclusions for k in (1, 2) for sub in sub_cubes(cube, k))

    for t in clause_triples(f) if universe is None else universe:
        if all(covered(c) for c in cova_set(t)):
            return f"triple {t[0]} {t[1]} {t[2]}"
    return None


def with_engine(solve_cfg: SolveConfig, **changes) -> SolveConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    if not changes:
        return solve_cfg
    return replace(solve_cfg, engine=replace(solve_cfg.engine, **changes))
