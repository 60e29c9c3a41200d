"""
Termination tests over a saturated rejection store.

UNSAT when every cube of some COVA set is rejected (or the empty cube was
derived); otherwise the survivors of each set are united greedily into an
assignment, and SAT is only reported once that assignment checks out.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from kra_sat.cnf import (
    EMPTY_CUBE,
    Assignment,
    Cube,
    Formula,
    Literal,
    VarTriple,
    all_triples,
    clause_triples,
    cova_set,
    evaluate,
    lit_var,
    sub_cubes,
)
from kra_sat.engine import (
    Derivation,
    EngineConfig,
    FixpointReport,
    RejectionStore,
    fixpoint,
    seed_rejections,
)
from kra_sat.errors import IterationCapExceeded
from kra_sat.utils.config_loader import ConfigLoader
from kra_sat.utils.logger import logger

Witness = Union[VarTriple, Cube]


class ExtractionOrder(str, Enum):
    CLAUSE = "clause"
    LEXICOGRAPHIC = "lexicographic"


class UnknownReason(str, Enum):
    EXTRACTION_CONFLICT = "ExtractionConflict"
    VERIFICATION_FAILED = "VerificationFailed"
    ITERATION_CAP = "IterationCap"


@dataclass(frozen=True)
class SolveConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    all_triples: bool = False
    extraction_order: ExtractionOrder = ExtractionOrder.CLAUSE

    def __post_init__(self):
        object.__setattr__(self, "extraction_order", ExtractionOrder(self.extraction_order))

    @classmethod
    def from_config(
        cls,
        config_path: str = "harness_config.yaml",
        engine: Optional[EngineConfig] = None,
    ) -> "SolveConfig":
        loader = ConfigLoader(config_path)
        return cls(
            engine=engine or EngineConfig.from_config(),
            all_triples=bool(loader.get("solve.all_triples", False)),
            extraction_order=ExtractionOrder(loader.get("solve.extraction_order", "clause")),
        )


@dataclass(frozen=True)
class CovaStatus:
    triple: VarTriple
    survivors: Tuple[Cube, ...]


@dataclass(frozen=True)
class ExtractionConflict:
    triple: VarTriple
    committed: Tuple[Literal, ...]


@dataclass(frozen=True)
class Sat:
    assignment: Assignment
    kind = "SAT"


@dataclass(frozen=True)
class Unsat:
    witness: Witness
    proof: Tuple[Derivation, ...]
    kind = "UNSAT"


@dataclass(frozen=True)
class Unknown:
    reason: UnknownReason
    detail: str = ""
    kind = "UNKNOWN"

    @property
    def unverified_answer_was_sat(self) -> bool:
        # without the model check these reasons would have been reported SAT
        return self.reason is not UnknownReason.ITERATION_CAP


Verdict = Union[Sat, Unsat, Unknown]


@dataclass
class KraRun:
    store: RejectionStore
    report: FixpointReport
    verdict: Verdict


def ordered_triples(f: Formula, cfg: SolveConfig) -> List[VarTriple]:
    """Triple universe in extraction order."""
    if cfg.extraction_order is ExtractionOrder.LEXICOGRAPHIC:
        return all_triples(f.n) if cfg.all_triples else sorted(clause_triples(f))
    triples = clause_triples(f)
    if cfg.all_triples:
        present = set(triples)
        triples += [t for t in all_triples(f.n) if t not in present]
    return triples


def is_rejected(store: RejectionStore, cube: Cube) -> bool:
    """Stored, or a superset of a stored width-1/2 cube."""
    if cube in store:
        return True
    for k in (1, 2):
        if k < cube.width and any(sub in store for sub in sub_cubes(cube, k)):
            return True
    return False


def cova_status(store: RejectionStore, t: VarTriple) -> CovaStatus:
    survivors = tuple(c for c in cova_set(t) if not is_rejected(store, c))
    return CovaStatus(t, survivors)


def check_unsat(store: RejectionStore, f: Formula, cfg: SolveConfig) -> Optional[Witness]:
    for t in ordered_triples(f, cfg):
        if not cova_status(store, t).survivors:
            return t
    if store.empty_derived:
        return EMPTY_CUBE
    return None


def _fallback_literal(store: RejectionStore, var: int, committed: Dict[int, Literal]) -> Literal:
    for lit in (-var, var):
        if Cube((lit,)) in store:
            continue
        blocked = any(
            c.width == 2
            and all(committed.get(lit_var(other)) == other for other in c if other != lit)
            for c in store.index.get(lit, ())
        )
        if not blocked:
            return lit
    return -var


def extract_assignment(
    store: RejectionStore, f: Formula, cfg: SolveConfig
) -> Union[Assignment, ExtractionConflict]:
    """Unite one surviving cube per triple, first consistent survivor wins.

    Variables outside every triple default to false, except when false is
    itself rejected: a stored unit cube on the false literal, or a stored
    width-2 cube the committed literals would complete. Such a variable is set
    true when true is not blocked the same way (see ``_fallback_literal``).
    The result is still evaluated afterwards, so neither choice can yield a wrong SAT.
    """
    committed: Dict[int, Literal] = {}
    for t in ordered_triples(f, cfg):
        status = cova_status(store, t)
        choice = next(
            (
                s
                for s in status.survivors
                if all(committed.get(lit_var(lit), lit) == lit for lit in s)
            ),
            None,
        )
        if choice is None:
            logger.info(f"⚠️ No survivor of {t} agrees with the literals committed so far")
            return ExtractionConflict(t, tuple(sorted(committed.values(), key=abs)))
        for lit in choice:
            committed[lit_var(lit)] = lit

    for var in range(1, f.n + 1):
        if var not in committed:
            committed[var] = _fallback_literal(store, var, committed)
    return Assignment.from_literals(f.n, committed.values())


def proof_slice(store: RejectionStore, witness: Witness) -> List[Derivation]:
    """Ancestry of the derivations that reject every cube of the witness."""
    roots: List[int] = []
    if isinstance(witness, Cube):
        if store.empty_id is not None:
            roots.append(store.empty_id)
    else:
        for cube in cova_set(witness):
            rid = store.derivation_id(cube)
            if rid is None:
                rid = next(
                    (
                        store.derivation_id(sub)
                        for k in (1, 2)
                        for sub in sub_cubes(cube, k)
                        if sub in store
                    ),
                    None,
                )
            if rid is not None:
                roots.append(rid)

    keep = set()
    stack = list(roots)
    while stack:
        did = stack.pop()
        if did in keep:
            continue
        keep.add(did)
        stack.extend(store.log[did].parents)
    return [store.log[did] for did in sorted(keep)]


def run_kra(f: Formula, cfg: Optional[SolveConfig] = None) -> KraRun:
    """Seed, saturate and decide; keeps the store for inspection."""
    cfg = cfg or SolveConfig()
    universe = ordered_triples(f, cfg) if cfg.all_triples else clause_triples(f)
    store = seed_rejections(f, universe)

    # a fully rejected COVA set right after seeding needs no derivations
    witness = check_unsat(store, f, cfg)
    if witness is not None:
        report = FixpointReport(empty_derived=store.empty_derived, decided_at_seed=True)
        return KraRun(store, report, Unsat(witness, tuple(proof_slice(store, witness))))

    try:
        report = fixpoint(store, cfg.engine)
    except IterationCapExceeded as e:
        report = FixpointReport(iterations=e.cap, empty_derived=store.empty_derived)
        return KraRun(store, report, Unknown(UnknownReason.ITERATION_CAP, str(e)))

    witness = check_unsat(store, f, cfg)
    if witness is not None:
        proof = tuple(proof_slice(store, witness))
        return KraRun(store, report, Unsat(witness, proof))

    extracted = extract_assignment(store, f, cfg)
    if isinstance(extracted, ExtractionConflict):
        detail = f"no consistent survivor for triple {extracted.triple}"
        return KraRun(store, report, Unknown(UnknownReason.EXTRACTION_CONFLICT, detail))

    if not evaluate(f, extracted):
        logger.warning("⚠️ Extracted assignment does not satisfy the formula")
        return KraRun(
            store,
            report,
            Unknown(UnknownReason.VERIFICATION_FAILED, "survivor union falsifies a clause"),
        )
    return KraRun(store, report, Sat(extracted))


def decide(f: Formula, cfg: Optional[SolveConfig] = None) -> Tuple[Verdict, FixpointReport]:
    run = run_kra(f, cfg)
    return run.verdict, run.report
