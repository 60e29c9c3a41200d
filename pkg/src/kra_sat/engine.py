"""
Rejection engine: leveled stores of rejected cubes and the rejection rules.

Every two-parent rule (2-2CI, 3-3CII, 2-3CDD, 2-4CIDD, 3-3CID, 3-4CIID,
4-4CIII, 3-3CDD) is one width-bounded resolution step on cubes, computed by
``resolve_rejected``; ``classify_rule`` recovers the rule label from the
parent and conclusion widths. The one-parent rules 1-3I and 2-3II are
subsumption into the width-3 cubes of the active triple universe.
"""

import time
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from math import comb
from typing import Deque, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from kra_sat.cnf import (
    EMPTY_CUBE,
    MAX_CUBE_WIDTH,
    Cube,
    Formula,
    VarTriple,
    clause_triples,
    complement_cube,
    sorted_literals,
)
from kra_sat.errors import InvalidParams, IterationCapExceeded, UnclassifiablePair
from kra_sat.utils.config_loader import ConfigLoader
from kra_sat.utils.logger import logger


class RuleId(Enum):
    SEED = "SEED"
    R22CI = "2-2CI"
    R33CII = "3-3CII"
    R13I = "1-3I"
    R23II = "2-3II"
    R23CDD = "2-3CDD"
    R24CIDD = "2-4CIDD"
    R33CID = "3-3CID"
    R34CIID = "3-4CIID"
    R44CIII = "4-4CIII"
    R33CDD = "3-3CDD"
    EMPTY_RESOLVENT = "EMPTY"

    @property
    def label(self) -> str:
        return self.value

    @property
    def arity(self) -> int:
        if self is RuleId.SEED:
            return 0
        if self in (RuleId.R13I, RuleId.R23II):
            return 1
        return 2


class WorklistOrder(str, Enum):
    FIFO = "fifo"
    LIFO = "lifo"


# unordered parent widths -> label; (3, 3) is split by conclusion width
_PAIR_RULES = {
    (2, 2): RuleId.R22CI,
    (2, 3): RuleId.R23CDD,
    (2, 4): RuleId.R24CIDD,
    (3, 4): RuleId.R34CIID,
    (4, 4): RuleId.R44CIII,
}
_THREE_THREE_RULES = {2: RuleId.R33CII, 3: RuleId.R33CID, 4: RuleId.R33CDD}
# unit partners have no label of their own
_NEAREST_FAMILY = {1: RuleId.R22CI, 2: RuleId.R33CII, 3: RuleId.R33CID, 4: RuleId.R33CDD}


@dataclass(frozen=True)
class Derivation:
    id: int
    conclusion: Cube
    rule: RuleId
    parents: Tuple[int, ...] = ()
    source_clause: Optional[int] = None


@dataclass(frozen=True)
class EngineConfig:
    max_width: int = MAX_CUBE_WIDTH
    iteration_cap: Optional[int] = None
    eager_subsumption: bool = True
    worklist_order: WorklistOrder = WorklistOrder.FIFO
    stop_on_empty: bool = True

    def __post_init__(self):
        if self.max_width not in (3, 4):
            raise InvalidParams(f"max_width must be 3 or 4, got {self.max_width}")
        if self.iteration_cap is not None and self.iteration_cap < 0:
            raise InvalidParams(f"iteration_cap must be >= 0, got {self.iteration_cap}")
        object.__setattr__(self, "worklist_order", WorklistOrder(self.worklist_order))

    @classmethod
    def from_config(cls, config_path: str = "engine_config.yaml") -> "EngineConfig":
        loader = ConfigLoader(config_path)
        return cls(
            max_width=int(loader.get("engine.max_width", MAX_CUBE_WIDTH)),
            iteration_cap=loader.get("engine.iteration_cap"),
            eager_subsumption=bool(loader.get("engine.eager_subsumption", True)),
            worklist_order=WorklistOrder(loader.get("engine.worklist_order", "fifo")),
            stop_on_empty=bool(loader.get("engine.stop_on_empty", True)),
        )

    def cap_for(self, n: int) -> int:
        if self.iteration_cap is not None:
            return self.iteration_cap
        return cube_space_bound(n)


def cube_space_bound(n: int) -> int:
    """Number of distinct cubes of width 1..4 over n variables."""
    return 16 * comb(n, 4) + 8 * comb(n, 3) + 4 * comb(n, 2) + 2 * n


@dataclass
class FixpointReport:
    iterations: int = 0
    additions_per_level: List[int] = field(default_factory=lambda: [0, 0, 0, 0])
    empty_resolvents: int = 0
    firings_per_rule: Dict[str, int] = field(default_factory=dict)
    unclassified_firings: int = 0
    reached_fixpoint: bool = False
    empty_derived: bool = False
    decided_at_seed: bool = False
    wall_time: float = 0.0

    def to_dict(self, with_time: bool = False) -> dict:
        out = {
            "iterations": self.iterations,
            "additions_per_level": list(self.additions_per_level),
            "empty_resolvents": self.empty_resolvents,
            "firings_per_rule": dict(self.firings_per_rule),
            "unclassified_firings": self.unclassified_firings,
            "reached_fixpoint": self.reached_fixpoint,
            "empty_derived": self.empty_derived,
            "decided_at_seed": self.decided_at_seed,
        }
        if with_time:
            out["wall_time"] = self.wall_time
        return out


class RejectionStore:
    """Four leveled sets of rejected cubes, a literal index, worklist and log.

    Cubes are only ever added. The first derivation of a cube is its
    provenance; rediscoveries are dropped.
    """

    def __init__(self, formula: Formula, universe: Sequence[VarTriple]):
        self.formula = formula
        self.universe: List[VarTriple] = list(universe)
        self.levels: List[Dict[Cube, int]] = [{} for _ in range(MAX_CUBE_WIDTH)]
        # dicts as insertion-ordered sets keep partner enumeration deterministic
        self.index: Dict[int, Dict[Cube, None]] = defaultdict(dict)
        self.worklist: Deque[int] = deque()
        self.log: List[Derivation] = []
        self.empty_derived = False
        self.empty_id: Optional[int] = None
        self.firings: Counter = Counter()
        self.unclassified = 0
        self.seed_count = 0

        self._triples_by_var: Dict[int, List[VarTriple]] = defaultdict(list)
        for t in self.universe:
            for v in t:
                self._triples_by_var[v].append(t)

    def __contains__(self, cube: Cube) -> bool:
        return 0 < cube.width <= MAX_CUBE_WIDTH and cube in self.levels[cube.width - 1]

    def __len__(self) -> int:
        return sum(len(level) for level in self.levels)

    def derivation_id(self, cube: Cube) -> Optional[int]:
        if cube.is_empty:
            return self.empty_id
        if cube.width > MAX_CUBE_WIDTH:
            return None
        return self.levels[cube.width - 1].get(cube)

    def cubes(self, width: Optional[int] = None) -> Iterator[Cube]:
        levels = self.levels if width is None else [self.levels[width - 1]]
        for level in levels:
            yield from level

    def rejected_set(self) -> frozenset:
        return frozenset(self.cubes())

    def triples_containing(self, variables: Sequence[int]) -> List[VarTriple]:
        if not variables:
            return []
        return [
            t for t in self._triples_by_var.get(variables[0], ()) if set(variables) <= set(t)
        ]

    def add(
        self,
        cube: Cube,
        rule: RuleId,
        parents: Tuple[int, ...] = (),
        source_clause: Optional[int] = None,
    ) -> Optional[Derivation]:
        """Store ``cube`` with its derivation; ``None`` when already known."""
        if cube.is_empty:
            if self.empty_derived:
                return None
            derivation = Derivation(len(self.log), cube, rule, parents, source_clause)
            self.log.append(derivation)
            self.empty_derived = True
            self.empty_id = derivation.id
            return derivation

        level = self.levels[cube.width - 1]
        if cube in level:
            return None
        derivation = Derivation(len(self.log), cube, rule, parents, source_clause)
        self.log.append(derivation)
        level[cube] = derivation.id
        for lit in cube.literals:
            self.index[lit][cube] = None
        self.worklist.append(derivation.id)
        return derivation


def seed_rejections(f: Formula, universe: Optional[Sequence[VarTriple]] = None) -> RejectionStore:
    """Convert every clause into its complement cube, the first rejections."""
    store = RejectionStore(f, clause_triples(f) if universe is None else universe)
    for index, clause in enumerate(f.clauses):
        if store.add(complement_cube(clause), RuleId.SEED, (), index) is not None:
            store.seed_count += 1
    logger.debug(f"ℹ️ Seeded {store.seed_count} rejected complement(s) from {f.m} clause(s)")
    return store


def resolve_rejected(c1: Cube, c2: Cube, max_width: int = MAX_CUBE_WIDTH) -> Optional[Cube]:
    """Resolve two rejected cubes on their unique complementary variable.

    Returns the canonical resolvent, ``EMPTY_CUBE`` for a direct
    contradiction, or ``None`` when the pair is not applicable (zero or
    several complementary pairs, resolvent wider than ``max_width``, or a
    width-4 resolvent of two width-4 cubes).
    """
    pivot = None
    for lit in c1.literals:
        if -lit in c2.lit_set:
            if pivot is not None:
                return None
            pivot = lit
    if pivot is None:
        return None

    merged = (c1.lit_set - {pivot}) | (c2.lit_set - {-pivot})
    if not merged:
        return EMPTY_CUBE
    if len(merged) > max_width:
        return None
    if c1.width == 4 and c2.width == 4 and len(merged) == 4:
        return None
    return Cube(sorted_literals(merged))


def classify_rule(c1: Cube, c2: Cube, conclusion: Cube) -> RuleId:
    if conclusion.is_empty:
        return RuleId.EMPTY_RESOLVENT
    pair = tuple(sorted((c1.width, c2.width)))
    if pair == (3, 3):
        rule = _THREE_THREE_RULES.get(conclusion.width)
    else:
        rule = _PAIR_RULES.get(pair)
    if rule is None:
        raise UnclassifiablePair(pair[0], pair[1], conclusion.width)
    return rule


def rule_label(c1: Cube, c2: Cube, conclusion: Cube) -> Tuple[RuleId, bool]:
    """Rule id for a resolution step and whether it matched the rule table."""
    try:
        return classify_rule(c1, c2, conclusion), True
    except UnclassifiablePair as e:
        logger.debug(f"ℹ️ {e}; filed under nearest family")
        return _NEAREST_FAMILY[conclusion.width], False


def subsumption_closure(store: RejectionStore, newly: Cube) -> List[Cube]:
    """Width-3 supersets of a rejected width-1/2 cube not yet rejected."""
    if newly.width not in (1, 2):
        return []
    out: List[Cube] = []
    seen = set()
    for t in store.triples_containing(newly.variables):
        others = [v for v in t if v not in newly.variables]
        for signs in product((1, -1), repeat=len(others)):
            lits = newly.literals + tuple(s * v for s, v in zip(signs, others))
            cube = Cube(sorted_literals(lits))
            if cube in seen or cube in store:
                continue
            seen.add(cube)
            out.append(cube)
    return out


def _partners(store: RejectionStore, c: Cube) -> Iterable[Cube]:
    for lit in c.literals:
        # snapshot: cubes added during this step meet ``c`` when they are popped
        yield from list(store.index.get(-lit, ()))


def step(store: RejectionStore, cfg: EngineConfig) -> int:
    """Pop one cube and fire every rule it takes part in."""
    if not store.worklist:
        return 0
    if cfg.worklist_order is WorklistOrder.FIFO:
        cid = store.worklist.popleft()
    else:
        cid = store.worklist.pop()
    c = store.log[cid].conclusion
    added = 0

    for d in _partners(store, c):
        resolvent = resolve_rejected(c, d, cfg.max_width)
        if resolvent is None:
            continue
        rule, classified = rule_label(c, d, resolvent)
        parents = tuple(sorted((cid, store.levels[d.width - 1][d])))
        if store.add(resolvent, rule, parents) is None:
            continue
        added += 1
        store.firings[rule] += 1
        if not classified:
            store.unclassified += 1
        if store.empty_derived and cfg.stop_on_empty:
            return added

    if cfg.eager_subsumption and c.width <= 2:
        rule = RuleId.R13I if c.width == 1 else RuleId.R23II
        for sup in subsumption_closure(store, c):
            if store.add(sup, rule, (cid,)) is not None:
                added += 1
                store.firings[rule] += 1
    return added


def fixpoint(store: RejectionStore, cfg: EngineConfig) -> FixpointReport:
    """Run ``step`` until the worklist drains (or the empty cube appears)."""
    started = time.perf_counter()
    cap = cfg.cap_for(store.formula.n)
    report = FixpointReport()
    log_start = len(store.log)

    while store.worklist:
        if store.empty_derived and cfg.stop_on_empty:
            break
        if report.iterations >= cap:
            logger.error(f"❌ Iteration cap {cap} hit with {len(store.worklist)} cube(s) queued")
            raise IterationCapExceeded(cap)
        step(store, cfg)
        report.iterations += 1

    for d in store.log[log_start:]:
        if d.rule is RuleId.SEED:
            continue
        if d.conclusion.is_empty:
            report.empty_resolvents += 1
        else:
            report.additions_per_level[d.conclusion.width - 1] += 1
    report.firings_per_rule = {
        rule.name: store.firings[rule] for rule in RuleId if store.firings[rule]
    }
    report.unclassified_firings = store.unclassified
    report.reached_fixpoint = not store.worklist
    report.empty_derived = store.empty_derived
    report.wall_time = time.perf_counter() - started

    logger.debug(
        f"✅ Fixpoint: {report.iterations} pop(s), {len(store)} rejected cube(s), "
        f"empty={report.empty_derived}, {report.wall_time:.3f}s"
    )
    return report


def derivation_log(store: RejectionStore) -> List[Derivation]:
    return list(store.log)
