import pytest

from kra_sat.cnf import Formula, cova_set, parse_dimacs, random_formula

EXAMPLE_F_DIMACS = "p cnf 5 5\n1 2 3 0\n1 2 -3 0\n1 2 4 0\n1 -4 -5 0\n2 -3 5 0\n"


def all_patterns_formula() -> Formula:
    """Every sign pattern over (x1, x2, x3): each assignment kills one clause."""
    return Formula.build(3, [cube.literals for cube in cova_set((1, 2, 3))])


@pytest.fixture
def example_f() -> Formula:
    return parse_dimacs(EXAMPLE_F_DIMACS)


@pytest.fixture
def all_patterns() -> Formula:
    return all_patterns_formula()


@pytest.fixture
def small_random():
    def make(count: int, n_range=(5, 8), ratio=(3.0, 6.0), seed: int = 0):
        out = []
        for i in range(count):
            n = n_range[0] + (seed + i) % (n_range[1] - n_range[0] + 1)
            r = ratio[0] + (ratio[1] - ratio[0]) * ((i * 7) % 10) / 9
            out.append(random_formula(n, round(r * n), seed * 1000 + i))
        return out

    return make
