"""
Ground truth at desk scale.

Two independent deciders (plain enumeration and a small DPLL) plus the
checks the engine is judged by: ``cube_sound`` says whether a rejection is
correct, ``check_derivation`` replays a derivation log without the engine.
"""

from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from kra_sat.cnf import (
    MAX_CUBE_WIDTH,
    Assignment,
    Cube,
    Formula,
    VarTriple,
    all_triples,
    clause_triples,
    complement_cube,
    lit_var,
    literal_key,
)
from kra_sat.engine import Derivation, RuleId, rule_label
from kra_sat.errors import TooLarge
from kra_sat.utils.config_loader import ConfigLoader

BRUTE_FORCE_LIMIT = int(
    ConfigLoader("harness_config.yaml").get("oracle.brute_force_limit", 20)
)


@dataclass(frozen=True)
class OracleResult:
    satisfiable: bool
    model: Optional[Assignment]
    assignments_tried: int


@dataclass(frozen=True)
class CheckReport:
    steps_checked: int
    first_invalid: Optional[int]
    seeds_matched: bool
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.first_invalid is None and self.seeds_matched


def _clause_lists(f: Formula) -> List[Tuple[int, ...]]:
    return [clause.literals for clause in f.clauses]


def _satisfied(clauses: Sequence[Tuple[int, ...]], values: Sequence[bool]) -> bool:
    # values[v - 1] is x_v
    for clause in clauses:
        for lit in clause:
            if values[abs(lit) - 1] == (lit > 0):
                break
        else:
            return False
    return True


def models(f: Formula, limit: int = BRUTE_FORCE_LIMIT) -> Iterator[Assignment]:
    """Every model of ``f``, in lexicographic order (x1 first, false < true)."""
    if f.n > limit:
        raise TooLarge(f.n, limit)
    clauses = _clause_lists(f)
    for values in product((False, True), repeat=f.n):
        if _satisfied(clauses, values):
            yield Assignment(values)


def brute_force(f: Formula, limit: int = BRUTE_FORCE_LIMIT) -> OracleResult:
    if f.n > limit:
        raise TooLarge(f.n, limit)
    clauses = _clause_lists(f)
    tried = 0
    for values in product((False, True), repeat=f.n):
        tried += 1
        if _satisfied(clauses, values):
            return OracleResult(True, Assignment(values), tried)
    return OracleResult(False, None, tried)


def _simplify(clauses: List[List[int]], lit: int) -> Optional[List[List[int]]]:
    """Set ``lit`` true; ``None`` signals an empty clause."""
    out = []
    for clause in clauses:
        if lit in clause:
            continue
        reduced = [x for x in clause if x != -lit]
        if not reduced:
            return None
        out.append(reduced)
    return out


def _unit_propagate(
    clauses: List[List[int]], trail: Dict[int, bool]
) -> Optional[List[List[int]]]:
    while True:
        unit = next((c[0] for c in clauses if len(c) == 1), None)
        if unit is None:
            return clauses
        trail[abs(unit)] = unit > 0
        clauses = _simplify(clauses, unit)
        if clauses is None:
            return None


def dpll(f: Formula) -> OracleResult:
    """Unit propagation plus branching on the first unassigned variable, true first."""
    counter = [0]

    def search(clauses: List[List[int]], trail: Dict[int, bool]) -> Optional[Dict[int, bool]]:
        counter[0] += 1
        clauses = _unit_propagate(clauses, trail)
        if clauses is None:
            return None
        if not clauses:
            return trail
        var = min(abs(lit) for clause in clauses for lit in clause)
        for lit in (var, -var):
            branch = _simplify(clauses, lit)
            if branch is None:
                continue
            found = search(branch, {**trail, var: lit > 0})
            if found is not None:
                return found
        return None

    found = search([list(c) for c in _clause_lists(f)], {})
    if found is None:
        return OracleResult(False, None, counter[0])
    values = tuple(found.get(v, False) for v in range(1, f.n + 1))
    return OracleResult(True, Assignment(values), counter[0])


def cube_sound(
    f: Formula,
    c: Cube,
    limit: int = BRUTE_FORCE_LIMIT,
    all_models: Optional[Sequence[Assignment]] = None,
) -> bool:
    """True iff no model of ``f`` extends ``c``; enumeration only.

    Pass ``all_models`` (from ``models``) to check many cubes against one
    enumeration.
    """
    if all_models is None:
        if f.n > limit:
            raise TooLarge(f.n, limit)
        clauses = _clause_lists(f)
        fixed = {lit_var(lit): lit > 0 for lit in c}
        free = [v for v in range(1, f.n + 1) if v not in fixed]
        for bits in product((False, True), repeat=len(free)):
            values = [False] * f.n
            for v, val in fixed.items():
                values[v - 1] = val
            for v, val in zip(free, bits):
                values[v - 1] = val
            if _satisfied(clauses, values):
                return False
        return True
    return not any(a.extends(c) for a in all_models)


def _canonical(c: Cube) -> bool:
    lits = c.literals
    if len(set(lits)) != len(lits) or len({lit_var(x) for x in lits}) != len(lits):
        return False
    return list(lits) == sorted(lits, key=literal_key)


def _resolvent(a: Cube, b: Cube) -> Optional[Cube]:
    """Unique-pivot resolvent, recomputed apart from the engine."""
    pivots = [lit for lit in a.literals if -lit in b.literals]
    if len(pivots) != 1:
        return None
    p = pivots[0]
    rest = {x for x in a.literals if x != p} | {x for x in b.literals if x != -p}
    return Cube(tuple(sorted(rest, key=literal_key)))


def _check_step(
    f: Formula,
    d: Derivation,
    by_id: Dict[int, Derivation],
    universe: Set[VarTriple],
    any_triple: bool,
) -> Optional[str]:
    c = d.conclusion
    if not _canonical(c) or c.width > MAX_CUBE_WIDTH:
        return "conclusion is not a canonical cube of width <= 4"
    if len(d.parents) != d.rule.arity:
        return f"{d.rule.name} takes {d.rule.arity} parent(s), got {len(d.parents)}"
    for p in d.parents:
        if p not in by_id or p >= d.id:
            return f"parent {p} missing or not earlier"
    if d.rule is not RuleId.SEED and d.source_clause is not None:
        return "only SEED records cite a clause"

    if d.rule is RuleId.SEED:
        idx = d.source_clause
        if idx is None or not 0 <= idx < f.m:
            return "SEED cites no clause of the formula"
        if complement_cube(f.clauses[idx]) != c:
            return f"SEED is not the complement of clause {idx}"
        return None

    if d.rule.arity == 1:
        parent = by_id[d.parents[0]].conclusion
        expected = RuleId.R13I if parent.width == 1 else RuleId.R23II
        if parent.width not in (1, 2) or d.rule is not expected:
            return f"{d.rule.name} does not match a width-{parent.width} parent"
        if c.width != 3 or not set(parent.literals) < set(c.literals):
            return "subsumption conclusion is not a width-3 superset"
        if not any_triple and c.variables not in universe:
            return f"triple {c.variables} is outside the triple universe"
        return None

    a, b = (by_id[p].conclusion for p in d.parents)
    resolvent = _resolvent(a, b)
    if resolvent is None:
        return "parents do not share exactly one complementary pair"
    if resolvent != c:
        return "conclusion is not the resolvent of its parents"
    if a.width == 4 and b.width == 4 and c.width == 4:
        return "no rule resolves two width-4 cubes into a width-4 cube"
    if c.is_empty:
        expected_rule = RuleId.EMPTY_RESOLVENT
    else:
        expected_rule, _ = rule_label(a, b, c)
    if d.rule is not expected_rule:
        return f"rule {d.rule.name} should be {expected_rule.name}"
    return None


def check_derivation(
    f: Formula,
    log: Iterable[Derivation],
    universe: Optional[Iterable[VarTriple]] = None,
    any_triple: bool = False,
) -> CheckReport:
    """Replay a derivation log (or a slice of one) against ``f``.

    ``universe`` defaults to the triples of the formula's width-3 clauses;
    ``any_triple`` accepts subsumption into any triple (all-triples mode).
    """
    triples = set(clause_triples(f) if universe is None else universe)
    if any_triple:
        triples = set(all_triples(f.n))
    by_id: Dict[int, Derivation] = {}
    seen_conclusions: Set[Cube] = set()
    seeds_matched = True
    checked = 0
    last_id = -1

    for d in log:
        checked += 1
        if d.id in by_id:
            return CheckReport(checked, d.id, seeds_matched, "duplicate id")
        if d.id <= last_id:
            return CheckReport(checked, d.id, seeds_matched, "ids are not increasing")
        reason = _check_step(f, d, by_id, triples, any_triple)
        if reason is None and d.conclusion in seen_conclusions:
            reason = "conclusion derived twice"
        if reason is not None:
            if d.rule is RuleId.SEED:
                seeds_matched = False
            return CheckReport(checked, d.id, seeds_matched, reason)
        by_id[d.id] = d
        last_id = d.id
        seen_conclusions.add(d.conclusion)

    return CheckReport(checked, None, seeds_matched)
