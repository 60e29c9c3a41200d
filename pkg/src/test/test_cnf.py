from itertools import product

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from kra_sat.cnf import (
    TAUTOLOGY,
    Assignment,
    Clause,
    Cube,
    Formula,
    all_triples,
    canonicalize_cube,
    clause_triples,
    complement_cube,
    cova_set,
    evaluate,
    literal_key,
    normalize_clause,
    parse_dimacs,
    random_formula,
    sub_cubes,
    write_dimacs,
)
from kra_sat.errors import (
    ComplementaryPair,
    DimacsSyntaxError,
    EmptyClause,
    InvalidParams,
    VarOutOfRange,
    WidthOutOfRange,
)

from conftest import EXAMPLE_F_DIMACS


def test_canonicalize_sorts_and_dedups():
    assert canonicalize_cube([2, -3, 1]) == Cube((1, 2, -3))
    assert canonicalize_cube([1, 1, -2]) == Cube((1, -2))


def test_canonicalize_rejects_contradiction_and_width():
    with pytest.raises(ComplementaryPair):
        canonicalize_cube([1, -1])
    with pytest.raises(WidthOutOfRange):
        canonicalize_cube([])
    with pytest.raises(WidthOutOfRange):
        canonicalize_cube([1, 2, 3, 4, 5])


def test_literal_order_is_var_then_sign():
    assert sorted([3, -1, 1, -2], key=literal_key) == [-1, 1, -2, 3]


def test_normalize_clause():
    assert normalize_clause([1, 2, -3]) == Clause((1, 2, -3))
    assert normalize_clause([1, -1, 2]) is TAUTOLOGY
    assert normalize_clause([1, 1, 1]) == Clause((1,))
    with pytest.raises(EmptyClause):
        normalize_clause([])
    with pytest.raises(WidthOutOfRange):
        normalize_clause([1, 2, 3, 4])


def test_parse_simple():
    f = parse_dimacs("p cnf 3 1\n1 2 -3 0")
    assert f.n == 3
    assert f.clauses == (Clause((1, 2, -3)),)


def test_parse_worked_example(example_f):
    assert example_f.n == 5
    assert example_f.m == 5
    assert str(example_f.clauses[3]) == "(x1 ∨ ∼x4 ∨ ∼x5)"


def test_parse_multiline_comments_and_tautologies():
    text = "c hello\np cnf 4 3\n1 2\n -3 0 c\n1 -1 2 0\n4 0\n"
    with pytest.raises(DimacsSyntaxError):
        parse_dimacs(text)
    f = parse_dimacs("c hello\np cnf 4 3\n1 2\n -3 0\n1 -1 2 0\n4 0\n")
    assert [c.literals for c in f.clauses] == [(1, 2, -3), (4,)]


def test_parse_count_mismatch_is_not_fatal():
    f = parse_dimacs("p cnf 3 5\n1 2 3 0\n")
    assert f.m == 1


def test_parse_errors():
    with pytest.raises(VarOutOfRange):
        parse_dimacs("p cnf 2 1\n1 3 0")
    with pytest.raises(DimacsSyntaxError):
        parse_dimacs("p cnf x 1\n1 0")
    with pytest.raises(DimacsSyntaxError):
        parse_dimacs("1 2 0\n")
    with pytest.raises(DimacsSyntaxError):
        parse_dimacs("p cnf 3 1\n1 two 0\n")
    with pytest.raises(EmptyClause):
        parse_dimacs("p cnf 3 2\n1 2 0\n0\n")


def test_duplicate_clauses_removed():
    f = Formula.build(3, [[1, 2], [2, 1], [1, 2, 3]])
    assert f.m == 2


def test_write_dimacs():
    f = Formula.build(3, [[1, 2, -3]])
    assert write_dimacs(f) == "p cnf 3 1\n1 2 -3 0\n"


def test_write_worked_example(example_f):
    assert write_dimacs(example_f) == EXAMPLE_F_DIMACS


def test_round_trip_random():
    for seed in range(100):
        f = random_formula(4 + seed % 8, 2 + seed % 30, seed)
        assert parse_dimacs(write_dimacs(f)) == f


def test_complement_cube():
    assert complement_cube(Clause((1, 2, -3))) == Cube((-1, -2, 3))
    assert complement_cube(Clause((1,))) == Cube((-1,))
    assert complement_cube(Clause((1, 2, 3))) == Cube((-1, -2, -3))


def test_cova_set_matches_listed_expansion():
    expected = [
        (1, 2, 3), (1, 2, -3), (1, -2, 3), (1, -2, -3),
        (-1, 2, 3), (-1, 2, -3), (-1, -2, 3), (-1, -2, -3),
    ]
    assert [c.literals for c in cova_set((1, 2, 3))] == expected


def test_cova_set_contains_exactly_one_complement():
    clause = Clause((1, 2, -3))
    members = cova_set(clause.variables)
    assert len(set(members)) == 8
    assert [c for c in members if c == complement_cube(clause)] == [Cube((-1, -2, 3))]


def test_complement_is_negation_involution():
    for seed in range(20):
        for clause in random_formula(6, 10, seed).clauses:
            cube = complement_cube(clause)
            assert sorted(cube.negated()) == sorted(clause.literals)
            assert cube in cova_set(clause.variables)


def test_sub_cubes():
    assert sub_cubes(Cube((1, 2, 3)), 2) == [Cube((1, 2)), Cube((1, 3)), Cube((2, 3))]
    assert len(sub_cubes(Cube((1, 2, 3, -4)), 3)) == 4
    assert sub_cubes(Cube((1, -2)), 1) == [Cube((1,)), Cube((-2,))]
    with pytest.raises(WidthOutOfRange):
        sub_cubes(Cube((1, 2)), 2)


def test_evaluate(example_f):
    assert evaluate(example_f, Assignment((True, False, False, False, False)))
    assert not evaluate(Formula.build(1, [[1]]), Assignment((False,)))
    assert evaluate(Formula.build(2, []), Assignment.all_false(2))


@given(
    st.integers(min_value=1, max_value=4).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(
                st.lists(
                    st.builds(
                        lambda v, s: v if s else -v,
                        st.integers(min_value=1, max_value=n),
                        st.booleans(),
                    ),
                    min_size=1,
                    max_size=3,
                ),
                max_size=6,
            ),
        )
    )
)
@settings(max_examples=100)
def test_evaluate_matches_truth_table(data):
    n, raw = data
    f = Formula.build(n, raw)
    for bits in product([False, True], repeat=n):
        direct = all(
            any(bits[abs(lit) - 1] == (lit > 0) for lit in clause) for clause in raw
        )
        assert evaluate(f, Assignment(bits)) == direct


def test_random_formula_deterministic_and_well_formed():
    assert random_formula(5, 5, 1) == random_formula(5, 5, 1)
    f = random_formula(10, 43, 7)
    assert f.m == 43
    for clause in f.clauses:
        assert len(set(clause.variables)) == 3


def test_random_formula_bad_params():
    with pytest.raises(InvalidParams):
        random_formula(2, 1, 0)
    with pytest.raises(InvalidParams):
        random_formula(3, 9, 0)


def test_triples():
    f = Formula.build(4, [[3, 1, 2], [1], [-2, 4, 1], [1, 2, -3]])
    assert clause_triples(f) == [(1, 2, 3), (1, 2, 4)]
    assert len(all_triples(5)) == 10
