"""Condition evaluation and the quality-constraint algebra."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgmplan import (
    And,
    Atom,
    CgmModel,
    Comparison,
    ConstraintAlgebraError,
    ContextSet,
    Interpretation,
    MissingMetricError,
    Not,
    Or,
    ProvidedQuality,
    QualityConstraint,
    TRUE,
    UndeclaredContextError,
    can_fulfill,
    effective_constraints,
    eval_condition,
    merge_constraints,
    provided_value,
    stricter_quality_constraint,
)
from cgmplan.model import Condition, InterpretationRow, ProvidedRow

LT = Comparison.LESS_THAN
LE = Comparison.LESS_OR_EQUAL
GT = Comparison.GREATER_THAN
GE = Comparison.GREATER_OR_EQUAL


def ctx(*names: str) -> ContextSet:
    return ContextSet(frozenset(names))


def qc(metric: str, cmp: Comparison, threshold: float) -> QualityConstraint:
    return QualityConstraint(metric, cmp, threshold)


# ---------------------------------------------------------------------------
# Condition evaluation
# ---------------------------------------------------------------------------


def test_eval_condition_truth_table() -> None:
    a, b = Atom("A"), Atom("B")
    assert eval_condition(TRUE, ctx())
    assert eval_condition(a, ctx("A"))
    assert not eval_condition(a, ctx("B"))
    assert eval_condition(Not(a), ctx("B"))
    assert eval_condition(And(a, b), ctx("A", "B"))
    assert not eval_condition(And(a, b), ctx("A"))
    assert eval_condition(Or(a, b), ctx("B"))
    assert not eval_condition(Or(a, b), ctx())


def test_eval_condition_nested() -> None:
    cond = And(Atom("A"), Or(Not(Atom("B")), Atom("C")))
    assert eval_condition(cond, ctx("A"))
    assert not eval_condition(cond, ctx("A", "B"))
    assert eval_condition(cond, ctx("A", "B", "C"))


def test_eval_condition_checks_declared_universe() -> None:
    declared = ContextSet(frozenset({"A"}), declared=frozenset({"A", "B"}))
    assert eval_condition(Atom("A"), declared)
    with pytest.raises(UndeclaredContextError):
        eval_condition(Atom("Z"), declared)


_LABELS = ["L0", "L1", "L2", "L3", "L4", "L5"]


def _conditions() -> st.SearchStrategy[Condition]:
    atoms = st.sampled_from(_LABELS).map(Atom)
    return st.recursive(
        atoms | st.just(TRUE),
        lambda sub: st.one_of(
            st.tuples(sub, sub).map(lambda p: And(*p)),
            st.tuples(sub, sub).map(lambda p: Or(*p)),
            sub.map(Not),
        ),
        max_leaves=8,
    )


def _assignments() -> list[ContextSet]:
    out = []
    for mask in range(2 ** len(_LABELS)):
        active = frozenset(l for i, l in enumerate(_LABELS) if mask >> i & 1)
        out.append(ContextSet(active))
    return out


_ALL_ASSIGNMENTS = _assignments()


@given(_conditions(), _conditions())
def test_de_morgan_laws(a: Condition, b: Condition) -> None:
    for assignment in _ALL_ASSIGNMENTS:
        left = eval_condition(Not(And(a, b)), assignment)
        right = eval_condition(Or(Not(a), Not(b)), assignment)
        assert left == right
        left = eval_condition(Not(Or(a, b)), assignment)
        right = eval_condition(And(Not(a), Not(b)), assignment)
        assert left == right


@given(_conditions())
def test_double_negation(a: Condition) -> None:
    for assignment in _ALL_ASSIGNMENTS:
        assert eval_condition(Not(Not(a)), assignment) == eval_condition(a, assignment)


# ---------------------------------------------------------------------------
# stricter_quality_constraint
# ---------------------------------------------------------------------------


def test_stricter_upper_bound_prefers_smaller_threshold() -> None:
    assert stricter_quality_constraint(qc("t", LT, 120), qc("t", LT, 20)) == qc("t", LT, 20)
    assert stricter_quality_constraint(qc("t", LE, 20), qc("t", LT, 120)) == qc("t", LE, 20)


def test_stricter_lower_bound_prefers_larger_threshold() -> None:
    assert stricter_quality_constraint(qc("t", GT, 5), qc("t", GT, 50)) == qc("t", GT, 50)
    assert stricter_quality_constraint(qc("t", GE, 50), qc("t", GT, 5)) == qc("t", GE, 50)


def test_stricter_equal_threshold_prefers_strict() -> None:
    assert stricter_quality_constraint(qc("t", LE, 10), qc("t", LT, 10)) == qc("t", LT, 10)
    assert stricter_quality_constraint(qc("t", GE, 10), qc("t", GT, 10)) == qc("t", GT, 10)


def test_stricter_full_tie_returns_first_argument() -> None:
    a, b = qc("t", LT, 10), qc("t", LT, 10)
    assert stricter_quality_constraint(a, b) == a


def test_stricter_rejects_mixed_directions() -> None:
    with pytest.raises(ConstraintAlgebraError):
        stricter_quality_constraint(qc("t", LT, 10), qc("t", GT, 5))


def test_stricter_rejects_different_metrics() -> None:
    with pytest.raises(ConstraintAlgebraError):
        stricter_quality_constraint(qc("a", LT, 10), qc("b", LT, 10))


# Small threshold pool keeps ties common, which is where the algebra can go
# wrong; directions are kept uniform per example as the operation requires.
_thresholds = st.sampled_from([0.0, 1.0, 2.5, 10.0])
_uppers = st.sampled_from([LT, LE])
_lowers = st.sampled_from([GT, GE])


def _same_direction_qcs(direction: st.SearchStrategy[Comparison]) -> st.SearchStrategy[QualityConstraint]:
    return st.builds(lambda c, t: qc("m", c, t), direction, _thresholds)


@given(st.one_of(
    st.tuples(_same_direction_qcs(_uppers), _same_direction_qcs(_uppers), _same_direction_qcs(_uppers)),
    st.tuples(_same_direction_qcs(_lowers), _same_direction_qcs(_lowers), _same_direction_qcs(_lowers)),
))
def test_stricter_algebraic_properties(triple: tuple[QualityConstraint, ...]) -> None:
    a, b, c = triple
    assert stricter_quality_constraint(a, b) == stricter_quality_constraint(b, a)
    assert stricter_quality_constraint(a, a) == a
    left = stricter_quality_constraint(stricter_quality_constraint(a, b), c)
    right = stricter_quality_constraint(a, stricter_quality_constraint(b, c))
    assert left == right


@given(st.one_of(
    st.tuples(_same_direction_qcs(_uppers), _same_direction_qcs(_uppers)),
    st.tuples(_same_direction_qcs(_lowers), _same_direction_qcs(_lowers)),
), st.floats(-5, 15))
def test_stricter_result_dominates_both(pair: tuple[QualityConstraint, QualityConstraint], value: float) -> None:
    a, b = pair
    strict = stricter_quality_constraint(a, b)
    if strict.comparison.satisfied_by(value, strict.threshold):
        assert a.comparison.satisfied_by(value, a.threshold)
        assert b.comparison.satisfied_by(value, b.threshold)


# ---------------------------------------------------------------------------
# effective_constraints: the context-to-requirement table of a pragmatic goal
# ---------------------------------------------------------------------------


def _location_interpretation(mpers: CgmModel) -> Interpretation:
    interp = mpers.by_id["locatePatient"].interpretation
    assert interp is not None
    return interp


def _thresholds_of(constraints: dict[str, QualityConstraint]) -> dict[str, float]:
    return {m: c.threshold for m, c in constraints.items()}


def test_quality_table_baseline(mpers: CgmModel) -> None:
    eff = effective_constraints(_location_interpretation(mpers), mpers.context_set(()))
    assert _thresholds_of(eff) == {"errorMeters": 500, "timeSeconds": 120}
    assert all(c.comparison is LT for c in eff.values())


@pytest.mark.parametrize(
    ("active", "expected"),
    [
        ((), {"errorMeters": 500, "timeSeconds": 120}),
        (("C5",), {"errorMeters": 20, "timeSeconds": 120}),
        (("C9",), {"errorMeters": 500, "timeSeconds": 240}),
        (("C10",), {"errorMeters": 200, "timeSeconds": 20}),
        (("C5", "C9"), {"errorMeters": 20, "timeSeconds": 120}),
        (("C9", "C10"), {"errorMeters": 200, "timeSeconds": 20}),
        (("C5", "C9", "C10"), {"errorMeters": 20, "timeSeconds": 20}),
        (("C1", "C2"), {"errorMeters": 500, "timeSeconds": 120}),
    ],
)
def test_quality_table_by_context(mpers: CgmModel, active: tuple[str, ...], expected: dict[str, float]) -> None:
    eff = effective_constraints(_location_interpretation(mpers), mpers.context_set(active))
    assert _thresholds_of(eff) == expected


def test_baseline_fills_only_unconstrained_metrics() -> None:
    interp = Interpretation(
        (
            InterpretationRow(TRUE, (qc("time", LT, 120), qc("error", LT, 500))),
            InterpretationRow(Atom("A"), (qc("time", LT, 240),)),
        )
    )
    eff = effective_constraints(interp, ctx("A"))
    # The applicable row overrides time entirely (even though 240 is looser
    # than the baseline's 120); error falls back to the baseline.
    assert _thresholds_of(eff) == {"time": 240, "error": 500}


def test_applicable_rows_fold_strictest_wins() -> None:
    interp = Interpretation(
        (
            InterpretationRow(TRUE, (qc("time", LT, 100),)),
            InterpretationRow(Atom("A"), (qc("time", LT, 80),)),
            InterpretationRow(Atom("B"), (qc("time", LT, 60),)),
        )
    )
    assert _thresholds_of(effective_constraints(interp, ctx("A", "B"))) == {"time": 60}
    assert _thresholds_of(effective_constraints(interp, ctx("A"))) == {"time": 80}


def test_effective_constraints_conflict_raises() -> None:
    interp = Interpretation(
        (
            InterpretationRow(TRUE, (qc("time", LT, 100),)),
            InterpretationRow(Atom("A"), (qc("time", GT, 50),)),
            InterpretationRow(Atom("B"), (qc("time", LT, 80),)),
        )
    )
    with pytest.raises(ConstraintAlgebraError):
        effective_constraints(interp, ctx("A", "B"))


def test_constraint_level_conditions_also_gate() -> None:
    # A constraint may carry its own applicability on top of the row's.
    interp = Interpretation(
        (
            InterpretationRow(TRUE, (qc("time", LT, 100),)),
            InterpretationRow(
                Atom("A"),
                (QualityConstraint("time", LT, 50, applicable=Atom("B")),),
            ),
        )
    )
    assert _thresholds_of(effective_constraints(interp, ctx("A", "B"))) == {"time": 50}
    assert _thresholds_of(effective_constraints(interp, ctx("A"))) == {"time": 100}


# ---------------------------------------------------------------------------
# merge_constraints
# ---------------------------------------------------------------------------


def test_merge_keeps_stricter_side() -> None:
    inherited = {"time": qc("time", LT, 50)}
    own = {"time": qc("time", LT, 100), "error": qc("error", LT, 10)}
    merged = merge_constraints(inherited, own)
    assert _thresholds_of(merged) == {"time": 50, "error": 10}


def test_merge_tie_prefers_inherited() -> None:
    inherited = {"time": qc("time", LT, 50)}
    own = {"time": qc("time", LT, 50)}
    merged = merge_constraints(inherited, own)
    assert merged["time"] is inherited["time"]


def test_merge_conflicting_directions_raise() -> None:
    with pytest.raises(ConstraintAlgebraError):
        merge_constraints({"t": qc("t", LT, 10)}, {"t": qc("t", GE, 1)})


# ---------------------------------------------------------------------------
# provided_value and can_fulfill
# ---------------------------------------------------------------------------


def _gps_like() -> ProvidedQuality:
    return ProvidedQuality(
        (
            ProvidedRow(Atom("C5"), "errorMeters", 10.0),
            ProvidedRow(TRUE, "errorMeters", 30.0),
            ProvidedRow(TRUE, "timeSeconds", 10.0),
        )
    )


def test_provided_value_first_matching_row_wins() -> None:
    provided = _gps_like()
    assert provided_value(provided, "errorMeters", ctx("C5")) == 10.0
    assert provided_value(provided, "errorMeters", ctx()) == 30.0
    assert provided_value(provided, "timeSeconds", ctx()) == 10.0


def test_provided_value_missing_metric_raises() -> None:
    with pytest.raises(MissingMetricError):
        provided_value(_gps_like(), "powerWatts", ctx())


def test_can_fulfill_all_requirements() -> None:
    ok, failure = can_fulfill(_gps_like(), ctx("C5"), {"errorMeters": qc("errorMeters", LT, 20)})
    assert ok and failure is None
    ok, failure = can_fulfill(_gps_like(), ctx(), {"errorMeters": qc("errorMeters", LT, 20)})
    assert not ok
    assert failure == ("errorMeters", qc("errorMeters", LT, 20), 30.0)


def test_can_fulfill_undeclared_metric_fails_with_no_value() -> None:
    ok, failure = can_fulfill(_gps_like(), ctx(), {"powerWatts": qc("powerWatts", LT, 5)})
    assert not ok
    assert failure == ("powerWatts", qc("powerWatts", LT, 5), None)


def test_can_fulfill_reports_first_failure_in_metric_order() -> None:
    # Both metrics fail; the alphabetically first one is cited so the two
    # evaluation engines agree on the reported failure.
    required = {
        "timeSeconds": qc("timeSeconds", LT, 1),
        "errorMeters": qc("errorMeters", LT, 1),
    }
    ok, failure = can_fulfill(_gps_like(), ctx(), required)
    assert not ok
    assert failure is not None and failure[0] == "errorMeters"


def test_can_fulfill_vacuous_when_nothing_required() -> None:
    ok, failure = can_fulfill(ProvidedQuality(()), ctx(), {})
    assert ok and failure is None


@given(
    st.dictionaries(
        st.sampled_from(["a", "b", "c"]),
        st.floats(0, 100),
        min_size=1,
    ),
    st.dictionaries(
        st.sampled_from(["a", "b", "c"]),
        st.floats(0, 100),
    ),
    st.floats(0, 50),
)
def test_can_fulfill_monotone_under_tightening(
    provided_values: dict[str, float],
    required_thresholds: dict[str, float],
    squeeze: float,
) -> None:
    provided = ProvidedQuality(tuple(ProvidedRow(TRUE, m, v) for m, v in provided_values.items()))
    required = {m: qc(m, LT, t) for m, t in required_thresholds.items()}
    tightened = {m: qc(m, LT, t - squeeze) for m, t in required_thresholds.items()}
    ok_tight, _ = can_fulfill(provided, ctx(), tightened)
    ok_loose, _ = can_fulfill(provided, ctx(), required)
    if ok_tight:
        assert ok_loose
