"""Exhaustive context enumeration, timing and the scaling series."""

from __future__ import annotations

import pytest

from cgmplan import (
    CgmModel,
    Comparison,
    GeneratorConfig,
    QualityConstraint,
    brute_force_achievable,
    linear_fit,
    measure_achievability,
    random_model,
    scaling_series,
    sweep_contexts,
    worst_case_model,
)


def test_total_sets_is_two_to_the_contexts(mpers: CgmModel) -> None:
    report = sweep_contexts(mpers, budget_seconds=30.0)
    assert report.total_sets == 32
    assert report.evaluated_sets == 32
    assert report.coverage == 1.0
    assert report.complete


def test_fixture_unachievable_sets_match_oracle(mpers: CgmModel) -> None:
    report = sweep_contexts(mpers, budget_seconds=30.0)
    expected = set()
    for mask in range(32):
        active = tuple(n for i, n in enumerate(mpers.context_names) if mask >> i & 1)
        if not brute_force_achievable(mpers, active):
            expected.add(frozenset(active))
    assert {frozenset(s) for s in report.unachievable_sets} == expected
    # Which is exactly: C10 active and C5 inactive.
    for s in report.unachievable_sets:
        assert "C10" in s and "C5" not in s
    assert len(report.unachievable_sets) == 8


def test_enumeration_order_is_canonical_and_stable(mpers: CgmModel) -> None:
    a = sweep_contexts(mpers, budget_seconds=30.0)
    b = sweep_contexts(mpers, budget_seconds=30.0)
    assert a.unachievable_sets == b.unachievable_sets
    # Ascending bitmask order: the first unachievable set is the bare
    # C10, and supersets follow in mask order.
    assert a.unachievable_sets[0] == ("C10",)
    assert a.unachievable_sets[1] == ("C1", "C10")


def test_engines_agree_on_sweeps(mpers: CgmModel) -> None:
    compiled = sweep_contexts(mpers, budget_seconds=30.0, engine="compiled")
    python = sweep_contexts(mpers, budget_seconds=30.0, engine="python")
    assert compiled.unachievable_sets == python.unachievable_sets


def test_sweep_with_user_requirement(mpers: CgmModel) -> None:
    impossible = [QualityConstraint("timeSeconds", Comparison.LESS_THAN, 0.01)]
    report = sweep_contexts(mpers, budget_seconds=30.0, require=impossible)
    assert len(report.unachievable_sets) == 32


def test_sweep_on_subtree(mpers: CgmModel) -> None:
    report = sweep_contexts(mpers, budget_seconds=30.0, node="locatePatient")
    assert report.total_sets == 32
    assert {frozenset(s) for s in report.unachievable_sets} == {
        frozenset(s) for s in sweep_contexts(mpers, budget_seconds=30.0).unachievable_sets
    }


def test_budget_cuts_enumeration_short() -> None:
    model = worst_case_model(GeneratorConfig(node_count=2000, context_count=16, seed=6))
    report = sweep_contexts(model, budget_seconds=0.001, engine="python")
    assert report.evaluated_sets >= 1
    assert report.coverage < 1.0
    assert not report.complete
    assert report.total_sets == 2 ** 16


def test_parallel_jobs_match_sequential(mpers: CgmModel) -> None:
    seq = sweep_contexts(mpers, budget_seconds=30.0, jobs=1)
    par = sweep_contexts(mpers, budget_seconds=30.0, jobs=4)
    assert par.unachievable_sets == seq.unachievable_sets
    assert par.evaluated_sets == seq.evaluated_sets


def test_too_many_contexts_rejected() -> None:
    lines = ["format_version: 1", "", "contexts:"]
    lines += [f"  X{i}: flag" for i in range(63)]
    lines += ["", "goal root and", "  task t", "    provided", "      when true: timeSeconds = 1", ""]
    from cgmplan import parse_model

    model = parse_model("\n".join(lines))
    with pytest.raises(ValueError, match="62"):
        sweep_contexts(model, budget_seconds=0.1)


# ---------------------------------------------------------------------------
# measure_achievability
# ---------------------------------------------------------------------------


def test_timing_report_shape(mpers: CgmModel) -> None:
    report = measure_achievability(mpers, ("C5",), runs=20)
    assert report.runs == 20
    assert report.min_ns <= report.mean_ns <= report.max_ns
    assert report.verdict is True
    assert report.node_count == 18
    assert report.context_count == 5
    assert report.nodes_visited == 14


def test_timing_rejects_zero_runs(mpers: CgmModel) -> None:
    with pytest.raises(ValueError):
        measure_achievability(mpers, (), runs=0)


def test_timing_on_subtree(mpers: CgmModel) -> None:
    report = measure_achievability(mpers, ("C10",), runs=5, node="locatePatient")
    assert report.verdict is False
    assert report.node_count == 5  # locatePatient and its four sources


# ---------------------------------------------------------------------------
# linear_fit and scaling_series
# ---------------------------------------------------------------------------


def test_linear_fit_recovers_exact_line() -> None:
    xs = [1.0, 2.0, 3.0, 4.0]
    ys = [3.0, 5.0, 7.0, 9.0]
    fit = linear_fit(xs, ys)
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_linear_fit_rejects_degenerate_input() -> None:
    with pytest.raises(ValueError):
        linear_fit([1.0], [2.0])
    with pytest.raises(ValueError):
        linear_fit([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        linear_fit([1.0, 2.0], [1.0])


def test_scaling_series_shape() -> None:
    points = scaling_series([100, 200, 300], context_count=4, seed=2, runs=3, warmup=1)
    assert [p.node_count for p in points] == [100, 200, 300]
    for p in points:
        assert p.min_ns <= p.mean_ns <= p.max_ns
