"""
CNF data model: literals, clauses, formulas, cubes and assignments.

Literals use the DIMACS signed-integer encoding (``+v`` is x_v, ``-v`` is ~x_v),
ordered by ``literal_key`` (variable first, then sign). Clauses are
disjunctions of 1..3 literals, cubes are conjunctions of 1..4 literals; both
are stored as sorted tuples, so structural equality is set equality.
"""

import io
import random
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

from kra_sat.errors import (
    ComplementaryPair,
    DimacsSyntaxError,
    EmptyClause,
    InvalidParams,
    VarOutOfRange,
    WidthOutOfRange,
)
from kra_sat.utils.logger import logger

Literal = int
VarTriple = Tuple[int, int, int]

MAX_CLAUSE_WIDTH = 3
MAX_CUBE_WIDTH = 4


def lit_var(lit: Literal) -> int:
    return lit if lit > 0 else -lit


def literal_key(lit: Literal) -> Tuple[int, int]:
    return (lit_var(lit), lit)


def sorted_literals(lits: Iterable[Literal]) -> Tuple[Literal, ...]:
    return tuple(sorted(set(lits), key=literal_key))


def _first_complementary_var(lits: Iterable[Literal]) -> Optional[int]:
    seen = set(lits)
    for lit in sorted(seen, key=literal_key):
        if -lit in seen:
            return lit_var(lit)
    return None


@dataclass(frozen=True)
class Cube:
    """Conjunction of literals over distinct variables (the unit of rejection).

    Build through ``canonicalize_cube``; the raw constructor trusts its input
    and is only used for already-canonical tuples and the empty cube.
    """

    literals: Tuple[Literal, ...]
    lit_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lit_set", frozenset(self.literals))

    @property
    def width(self) -> int:
        return len(self.literals)

    @property
    def variables(self) -> Tuple[int, ...]:
        return tuple(lit_var(lit) for lit in self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def negated(self) -> Tuple[Literal, ...]:
        return tuple(-lit for lit in self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __contains__(self, lit) -> bool:
        return lit in self.lit_set

    def __str__(self) -> str:
        return "{" + ",".join(f"{lit:+d}" for lit in self.literals) + "}"


EMPTY_CUBE = Cube(())


@dataclass(frozen=True)
class Clause:
    literals: Tuple[Literal, ...]

    @property
    def width(self) -> int:
        return len(self.literals)

    @property
    def variables(self) -> Tuple[int, ...]:
        return tuple(lit_var(lit) for lit in self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __str__(self) -> str:
        body = " ∨ ".join(
            f"x{lit}" if lit > 0 else f"∼x{-lit}" for lit in self.literals
        )
        return f"({body})"


class _TautologyMarker:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TAUTOLOGY"


TAUTOLOGY = _TautologyMarker()


@dataclass(frozen=True)
class Formula:
    n: int
    clauses: Tuple[Clause, ...]

    @property
    def m(self) -> int:
        return len(self.clauses)

    @classmethod
    def build(cls, n: int, raw_clauses: Iterable[Sequence[Literal]]) -> "Formula":
        """Normalize raw clauses, drop tautologies and duplicates (first wins)."""
        if n < 0:
            raise InvalidParams(f"variable count must be >= 0, got {n}")
        seen = set()
        kept: List[Clause] = []
        for index, raw in enumerate(raw_clauses):
            for lit in raw:
                if lit == 0 or lit_var(lit) > n:
                    raise VarOutOfRange(lit, n)
            try:
                clause = normalize_clause(raw)
            except EmptyClause:
                raise EmptyClause(index)
            if clause is TAUTOLOGY or clause in seen:
                continue
            seen.add(clause)
            kept.append(clause)
        return cls(n=n, clauses=tuple(kept))


@dataclass(frozen=True)
class Assignment:
    """Total truth assignment; ``values[v - 1]`` is the value of x_v."""

    values: Tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def from_literals(cls, n: int, lits: Iterable[Literal]) -> "Assignment":
        values = [False] * n
        for lit in lits:
            values[lit_var(lit) - 1] = lit > 0
        return cls(tuple(values))

    @classmethod
    def all_false(cls, n: int) -> "Assignment":
        return cls((False,) * n)

    def __getitem__(self, var: int) -> bool:
        return self.values[var - 1]

    def satisfies(self, lit: Literal) -> bool:
        return self.values[lit_var(lit) - 1] == (lit > 0)

    def extends(self, cube: Cube) -> bool:
        return all(self.satisfies(lit) for lit in cube)

    def to_literals(self) -> List[Literal]:
        return [v if val else -v for v, val in enumerate(self.values, start=1)]


def canonicalize_cube(literals: Iterable[Literal]) -> Cube:
    lits = set(literals)
    var = _first_complementary_var(lits)
    if var is not None:
        raise ComplementaryPair(var)
    if not 1 <= len(lits) <= MAX_CUBE_WIDTH:
        raise WidthOutOfRange(len(lits), 1, MAX_CUBE_WIDTH)
    return Cube(sorted_literals(lits))


def normalize_clause(raw: Sequence[Literal]) -> Union[Clause, _TautologyMarker]:
    lits = set(raw)
    if not lits:
        raise EmptyClause()
    if _first_complementary_var(lits) is not None:
        return TAUTOLOGY
    if len(lits) > MAX_CLAUSE_WIDTH:
        raise WidthOutOfRange(len(lits), 1, MAX_CLAUSE_WIDTH)
    return Clause(sorted_literals(lits))


def complement_cube(c: Clause) -> Cube:
    """(x1 ∨ x2 ∨ ∼x3) becomes the rejected cube (∼x1 ∧ ∼x2 ∧ x3)."""
    return Cube(tuple(-lit for lit in c.literals))


def cova_set(t: VarTriple) -> List[Cube]:
    """The 8 width-3 cubes over ``t``; sign bits count up with positive as 0."""
    a, b, c = t
    cubes = []
    for pattern in range(8):
        signs = ((pattern >> 2) & 1, (pattern >> 1) & 1, pattern & 1)
        cubes.append(
            Cube(tuple(-v if bit else v for v, bit in zip((a, b, c), signs)))
        )
    return cubes


def sub_cubes(c: Cube, k: int) -> List[Cube]:
    if not 0 < k < c.width:
        raise WidthOutOfRange(k, 1, c.width - 1)
    return [Cube(lits) for lits in combinations(c.literals, k)]


def clause_triples(f: Formula) -> List[VarTriple]:
    """Variable triples of the width-3 clauses, in order of first occurrence."""
    seen = {}
    for clause in f.clauses:
        if clause.width == 3:
            seen.setdefault(clause.variables, None)
    return list(seen)


def all_triples(n: int) -> List[VarTriple]:
    return list(combinations(range(1, n + 1), 3))


def evaluate(f: Formula, a: Assignment) -> bool:
    if a.n < f.n:
        raise InvalidParams(f"assignment covers {a.n} of {f.n} variables")
    return all(any(a.satisfies(lit) for lit in clause) for clause in f.clauses)


def parse_dimacs(text: Union[str, TextIO]) -> Formula:
    """Parse DIMACS CNF. Clauses may span lines; a ``%`` line ends the body."""
    stream = io.StringIO(text) if isinstance(text, str) else text
    n: Optional[int] = None
    declared_m = 0
    raw_clauses: List[List[int]] = []
    current: List[int] = []

    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if n is not None:
                raise DimacsSyntaxError("duplicate header", line_no)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsSyntaxError(f"bad header `{line}`", line_no)
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsSyntaxError(f"bad header `{line}`", line_no)
            if n < 0 or declared_m < 0:
                raise DimacsSyntaxError(f"negative count in header `{line}`", line_no)
            continue
        if n is None:
            raise DimacsSyntaxError("clause data before `p cnf` header", line_no)
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise DimacsSyntaxError(f"bad token `{token}`", line_no)
            if lit == 0:
                raw_clauses.append(current)
                current = []
                continue
            if lit_var(lit) > n:
                raise VarOutOfRange(lit, n)
            current.append(lit)

    if n is None:
        raise DimacsSyntaxError("missing `p cnf` header")
    if current:
        logger.warning("⚠️ Last clause is not terminated by 0, keeping it")
        raw_clauses.append(current)
    if len(raw_clauses) != declared_m:
        logger.warning(
            f"⚠️ Header declares {declared_m} clauses, found {len(raw_clauses)}"
        )

    tautologies = 0
    for raw in raw_clauses:
        if raw and normalize_clause(raw) is TAUTOLOGY:
            tautologies += 1
    if tautologies:
        logger.warning(f"⚠️ Dropped {tautologies} tautological clause(s)")

    return Formula.build(n, raw_clauses)


def write_dimacs(f: Formula) -> str:
    lines = [f"p cnf {f.n} {f.m}"]
    for clause in f.clauses:
        lines.append(" ".join(str(lit) for lit in clause.literals) + " 0")
    return "\n".join(lines) + "\n"


def max_cova_clauses(n: int) -> int:
    return 8 * comb(n, 3)


def random_formula(n: int, m: int, seed: int) -> Formula:
    """Uniform random 3-CNF: 3 distinct variables per clause, uniform signs."""
    if n < 3:
        raise InvalidParams(f"need n >= 3, got n={n}")
    if m < 0 or m > max_cova_clauses(n):
        raise InvalidParams(f"m={m} outside [0, {max_cova_clauses(n)}] for n={n}")

    rng = random.Random(seed)
    seen = set()
    kept: List[List[int]] = []
    while len(kept) < m:
        vs = rng.sample(range(1, n + 1), 3)
        lits = [v if rng.random() < 0.5 else -v for v in vs]
        key = tuple(sorted(lits, key=literal_key))
        if key in seen:
            continue
        seen.add(key)
        kept.append(lits)
    return Formula.build(n, kept)
