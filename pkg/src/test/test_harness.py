import json
from dataclasses import replace
from pathlib import Path

import pytest

from kra_sat.cnf import Formula, cova_set, max_cova_clauses, parse_dimacs
from kra_sat.decision import SolveConfig, run_kra
from kra_sat.errors import InvalidParams, PredicateNotSatisfied
from kra_sat.harness import (
    CSV_COLUMNS,
    CSV_SCHEMA,
    TIMING_COLUMNS,
    ComparisonRecord,
    InstanceSpec,
    RunConfig,
    archive_unknowns,
    compact_variables,
    compare,
    compare_instance,
    generate_family,
    generate_sweep,
    instance_specs,
    make_predicate,
    ratio_grid,
    records_csv,
    refutation_witness,
    run_comparison,
    shrink,
    summarize,
    with_engine,
)
from kra_sat.oracle import brute_force

SMALL = RunConfig(seed=3, n_min=5, n_max=7, count=12, workers=1)


def test_run_config_validation():
    with pytest.raises(InvalidParams):
        RunConfig(n_min=8, n_max=5)
    with pytest.raises(InvalidParams):
        RunConfig(n_min=2, n_max=5)
    with pytest.raises(InvalidParams):
        RunConfig(ratio_min=5.0, ratio_max=4.0)
    with pytest.raises(InvalidParams):
        RunConfig(count=0)
    with pytest.raises(InvalidParams):
        RunConfig(n_min=5, n_max=21)


def test_run_config_from_yaml():
    cfg = RunConfig.from_config()
    assert (cfg.n_min, cfg.n_max) == (5, 14)
    assert cfg.count == 1000
    assert cfg.csv_path == Path("compare.csv")


def test_instance_specs_are_deterministic():
    specs = instance_specs(SMALL)
    assert specs == instance_specs(SMALL)
    assert [s.instance_id for s in specs[:3]] == ["3-0", "3-1", "3-2"]
    for s in specs:
        assert 5 <= s.n <= 7
        assert 1 <= s.m <= max_cova_clauses(s.n)
        assert 3.0 * s.n - 1 <= s.m <= 6.0 * s.n + 1
    assert specs != instance_specs(replace(SMALL, seed=4))


def test_compare_instance_on_known_formula():
    spec = InstanceSpec("x", 6, 20, 17)
    record = compare_instance(spec, SolveConfig())
    assert (record.n, record.m) == (6, 20)
    assert not record.soundness_violation
    assert record.unsound_cubes == 0
    assert record.proof_valid
    assert record.within_bound
    assert record.oracle_verdict == ("SAT" if brute_force(spec.formula()).satisfiable else "UNSAT")
    if not record.kra_verdict.startswith("UNKNOWN"):
        assert record.agree


def test_failing_instance_is_recorded_not_raised():
    # m above 8 * C(3, 3) cannot be generated
    record = compare_instance(InstanceSpec("bad", 3, 9, 0), SolveConfig())
    assert record.kra_verdict == "UNKNOWN-other"
    assert record.oracle_verdict == "ERROR"
    assert record.error
    assert not record.soundness_violation


def test_comparison_is_sound_and_ordered():
    records = run_comparison(SMALL)
    assert [r.instance_id for r in records] == [s.instance_id for s in instance_specs(SMALL)]
    assert not any(r.soundness_violation for r in records)
    assert all(r.proof_valid and r.within_bound and not r.error for r in records)


def test_parallel_run_matches_serial_rows():
    serial = run_comparison(SMALL)
    parallel = run_comparison(replace(SMALL, workers=2))
    assert [r.row() for r in parallel] == [r.row() for r in serial]


def test_csv_layout():
    records = run_comparison(replace(SMALL, count=3))
    lines = records_csv(records).splitlines()
    assert lines[0] == CSV_SCHEMA
    assert lines[1].split(",") == CSV_COLUMNS
    assert len(lines) == 5
    timed = records_csv(records, timings=True).splitlines()
    assert timed[1].split(",") == CSV_COLUMNS + TIMING_COLUMNS


def test_csv_is_reproducible():
    cfg = replace(SMALL, count=4)
    assert records_csv(run_comparison(cfg)) == records_csv(run_comparison(cfg))


def test_summary():
    records = [
        ComparisonRecord("a", 5, 20, "SAT", "SAT", True, False, rule_firings={"R22CI": 2}),
        ComparisonRecord("b", 5, 20, "UNSAT", "UNSAT", True, False, rule_firings={"R22CI": 1, "SEED": 0}),
        ComparisonRecord("c", 5, 20, "UNKNOWN-conflict", "SAT", False, False),
        ComparisonRecord("d", 5, 20, "UNKNOWN-other", "ERROR", False, False, proof_valid=False, error="boom"),
    ]
    summary = summarize(records)
    assert summary["instances"] == 4
    assert summary["agreement_rate"] == 0.5
    # the errored record counts neither as a decision nor as UNKNOWN
    assert summary["unknown_rate"] == pytest.approx(1 / 3)
    assert summary["unknown_conflict"] == 1
    assert summary["unknown_other"] == 0
    assert summary["errors"] == 1
    assert summary["invalid_proofs"] == 0
    assert summary["kra_unsat_confirmed"] == 1
    assert summary["firings_per_rule"] == {"SEED": 0, "R22CI": 3}
    assert "timing" not in summary
    assert "timing" in summarize(records, timings=True)


def test_compare_writes_outputs(tmp_path):
    cfg = replace(
        SMALL,
        count=5,
        csv_path=tmp_path / "out.csv",
        summary_path=tmp_path / "summary.json",
        archive_dir=tmp_path / "archive",
    )
    records, summary = compare(cfg)
    assert len(records) == 5
    assert (tmp_path / "out.csv").read_text().startswith(CSV_SCHEMA)
    assert json.loads((tmp_path / "summary.json").read_text()) == summary
    assert summary["soundness_violations"] == 0


def test_archive_skips_decided_instances(tmp_path):
    specs = instance_specs(replace(SMALL, count=2))
    records = [
        ComparisonRecord(s.instance_id, s.n, s.m, "SAT", "SAT", True, False) for s in specs
    ]
    assert archive_unknowns(records, specs, SolveConfig(), tmp_path / "arch") == []
    assert (tmp_path / "arch").is_dir()


def test_shrink_to_the_unsat_core(all_patterns):
    extra = [[4, 5, 6], [-4, 5, 6], [1, -5, 6]]
    f = Formula.build(6, [c.literals for c in all_patterns.clauses] + extra)
    minimal = shrink(f, lambda g: not brute_force(g).satisfiable)
    assert minimal.n == 3
    assert minimal.clauses == all_patterns.clauses


def test_shrink_keeps_minimal_input(all_patterns):
    minimal = shrink(all_patterns, lambda g: not brute_force(g).satisfiable)
    assert minimal == all_patterns


def test_shrink_needs_the_predicate(example_f):
    with pytest.raises(PredicateNotSatisfied):
        shrink(example_f, make_predicate("unknown"))


def test_predicates(example_f):
    assert not make_predicate("unknown")(example_f)
    assert not make_predicate("disagree")(example_f)
    with pytest.raises(InvalidParams):
        make_predicate("slow")


def test_compact_variables():
    f = Formula.build(6, [[2, -5], [5, 6]])
    g = compact_variables(f)
    assert g.n == 3
    assert [c.literals for c in g.clauses] == [(1, -2), (2, 3)]


def test_generate_family(tmp_path):
    paths = generate_family(6, 20, 3, 7, tmp_path)
    assert [p.name for p in paths] == ["7-0.cnf", "7-1.cnf", "7-2.cnf"]
    first = parse_dimacs(paths[0].read_text())
    assert (first.n, first.m) == (6, 20)
    again = generate_family(6, 20, 3, 7, tmp_path / "again")
    assert [p.read_text() for p in again] == [p.read_text() for p in paths]


def test_ratio_sweep(tmp_path):
    assert ratio_grid(3.0, 4.0, 0.5) == [3.0, 3.5, 4.0]
    with pytest.raises(InvalidParams):
        ratio_grid(3.0, 4.0, 0)
    paths = generate_sweep(6, 3.0, 4.0, 0.5, 2, 7, tmp_path)
    assert len(paths) == 6
    assert paths[0].name == "7-r3.00-0.cnf"
    assert paths[-1].name == "7-r4.00-1.cnf"
    assert parse_dimacs(paths[-1].read_text()).m == 24


def test_refutation_witness(example_f, all_patterns):
    assert refutation_witness(all_patterns, run_kra(all_patterns).verdict.proof) == "triple 1 2 3"
    units = Formula.build(1, [[1], [-1]])
    assert refutation_witness(units, run_kra(units).verdict.proof) == "empty cube"
    assert refutation_witness(example_f, run_kra(example_f).store.log) is None


def test_with_engine():
    cfg = SolveConfig()
    assert with_engine(cfg) is cfg
    assert with_engine(cfg, max_width=None) is cfg
    assert with_engine(cfg, max_width=3).engine.max_width == 3


def test_every_pattern_clause_is_needed(all_patterns):
    for index in range(8):
        rest = tuple(c for i, c in enumerate(all_patterns.clauses) if i != index)
        assert brute_force(Formula(3, rest)).satisfiable
    assert len(cova_set((1, 2, 3))) == all_patterns.m
