"""Achievability decisions, plans and failure traces on the reference engine.

The fixture's expected verdicts, plans and work counters are derived by
hand from the model text (see data/mpers.cgm): applicability conditions
prune subtrees before they are visited, OR nodes stop at the first
achievable child, AND nodes fail fast.
"""

from __future__ import annotations

import pytest

from cgmplan import (
    CgmModel,
    Comparison,
    FailureReason,
    OracleBoundError,
    QualityConstraint,
    applicable_children,
    brute_force_achievable,
    is_achievable,
    parse_model,
    plan_union,
)

ENGINE = "python"


def verdict(model: CgmModel, active: tuple[str, ...], **kwargs):
    return is_achievable(model, active, engine=ENGINE, **kwargs)


# ---------------------------------------------------------------------------
# Documented fixture scenarios
# ---------------------------------------------------------------------------


def test_empty_context_uses_last_known_location(mpers: CgmModel) -> None:
    out, stats = verdict(mpers, ())
    assert out.achievable
    assert out.plan is not None and out.plan.sorted() == (
        "dispatchAmbulance",
        "lastKnownLocation",
        "notifyBuzzer",
        "panicButton",
        "queryRecords",
    )
    # Visited: root, detect, panicButton, notifyCentral, notifyBuzzer,
    # centralInfo, autoInfo, locatePatient, lastKnownLocation,
    # situationData, queryRecords, medicalCare, dispatchAmbulance.
    # sensorsDetect (C1), notifySms (C2), voiceCall/gsmTriangulation (C2)
    # and gpsLock (C5) are pruned as inapplicable.
    assert stats.nodes_visited == 13
    assert stats.leaves_checked == 5


def test_arrhythmia_without_gps_is_unachievable(mpers: CgmModel) -> None:
    out, stats = verdict(mpers, ("C10",))
    assert not out.achievable
    assert out.plan is None
    # The one applicable location source misses the 200 m bound, and the
    # failure propagates up the AND spine to the root.
    assert [(e.node_id, e.reason) for e in out.trace] == [
        ("lastKnownLocation", FailureReason.QC_VIOLATED),
        ("locatePatient", FailureReason.CHILD_FAILED),
        ("autoInfo", FailureReason.CHILD_FAILED),
        ("centralInfo", FailureReason.CHILD_FAILED),
        ("root", FailureReason.CHILD_FAILED),
    ]
    first = out.trace[0]
    assert first.metric == "errorMeters"
    assert first.required == QualityConstraint("errorMeters", Comparison.LESS_THAN, 200.0)
    assert first.provided == 400.0
    assert stats.nodes_visited == 9
    assert stats.leaves_checked == 3


def test_gps_rescues_the_arrhythmia_case(mpers: CgmModel) -> None:
    out, stats = verdict(mpers, ("C5", "C9", "C10"))
    assert out.achievable
    assert out.plan is not None and "gpsLock" in out.plan.leaves
    assert "lastKnownLocation" not in out.plan.leaves
    # Same walk as the failing case plus gpsLock and the subtrees after
    # locatePatient: 14 nodes in all.
    assert stats.nodes_visited == 14


def test_relaxed_window_keeps_last_known_location(mpers: CgmModel) -> None:
    out, _ = verdict(mpers, ("C2", "C9"))
    assert out.achievable
    assert out.plan is not None
    assert "lastKnownLocation" in out.plan.leaves
    assert "notifySms" in out.plan.leaves


def test_unachievable_exactly_when_c10_without_c5(mpers: CgmModel) -> None:
    from itertools import combinations

    names = mpers.context_names
    for r in range(len(names) + 1):
        for combo in combinations(names, r):
            out, _ = verdict(mpers, combo)
            expected = not ("C10" in combo and "C5" not in combo)
            assert out.achievable is expected, combo


# ---------------------------------------------------------------------------
# Requirements passed in from outside
# ---------------------------------------------------------------------------


def test_user_requirement_can_break_achievability(mpers: CgmModel) -> None:
    tight = [QualityConstraint("timeSeconds", Comparison.LESS_THAN, 0.5)]
    out, _ = verdict(mpers, (), require=tight)
    assert not out.achievable

    loose = [QualityConstraint("timeSeconds", Comparison.LESS_THAN, 1000)]
    out, _ = verdict(mpers, (), require=loose)
    assert out.achievable


def test_user_requirement_merges_with_interpretations(mpers: CgmModel) -> None:
    # errorMeters < 350 beats the baseline 500, ruling out the 400 m
    # last-known position; without C2 or C5 no alternative applies.
    # Requirements hold for every leaf under the evaluated node, so the
    # check targets the location subtree.
    cap = [QualityConstraint("errorMeters", Comparison.LESS_THAN, 350)]
    out, _ = verdict(mpers, (), require=cap, node="locatePatient")
    assert not out.achievable
    out, _ = verdict(mpers, ("C2",), require=cap, node="locatePatient")
    assert out.achievable
    assert out.plan is not None and out.plan.sorted() == ("gsmTriangulation",)


def test_duplicate_require_entries_fold_to_strictest(mpers: CgmModel) -> None:
    doubled = [
        QualityConstraint("timeSeconds", Comparison.LESS_THAN, 1000),
        QualityConstraint("timeSeconds", Comparison.LESS_THAN, 0.5),
    ]
    out, _ = verdict(mpers, (), require=doubled)
    assert not out.achievable


def test_context_gated_requirement_rejected(mpers: CgmModel) -> None:
    from cgmplan.model import Atom

    gated = [QualityConstraint("timeSeconds", Comparison.LESS_THAN, 10, applicable=Atom("C1"))]
    with pytest.raises(ValueError, match="context"):
        verdict(mpers, (), require=gated)


# ---------------------------------------------------------------------------
# Subtree evaluation
# ---------------------------------------------------------------------------


def test_subtree_evaluation(mpers: CgmModel) -> None:
    out, stats = verdict(mpers, ("C5",), node="locatePatient")
    assert out.achievable
    assert out.plan is not None and out.plan.sorted() == ("gpsLock",)
    # locatePatient, lastKnownLocation (fails the 20 m bound), gpsLock.
    assert stats.nodes_visited == 3


def test_unknown_subtree_id_raises(mpers: CgmModel) -> None:
    with pytest.raises(KeyError):
        verdict(mpers, (), node="nope")


def test_directly_inapplicable_node() -> None:
    model = parse_model(
        """format_version: 1

contexts:
  A: a

goal root and
  task t when A
    provided
      when true: timeSeconds = 5
"""
    )
    out, _ = is_achievable(model, (), node="t", engine=ENGINE)
    assert not out.achievable
    assert [e.reason for e in out.trace] == [FailureReason.INAPPLICABLE]

    out, _ = is_achievable(model, (), engine=ENGINE)
    assert not out.achievable
    assert out.trace[-1].reason is FailureReason.INAPPLICABLE
    assert "no applicable refinement" in out.trace[-1].render()


# ---------------------------------------------------------------------------
# OR-node trace semantics
# ---------------------------------------------------------------------------


def test_or_failure_keeps_only_last_candidate_chain() -> None:
    model = parse_model(
        """format_version: 1

goal root or
  interpretation
    when true: timeSeconds < 10
  task slow
    provided
      when true: timeSeconds = 50
  task slower
    provided
      when true: timeSeconds = 99
"""
    )
    out, _ = is_achievable(model, (), engine=ENGINE)
    assert not out.achievable
    cited = [e.node_id for e in out.trace]
    assert cited == ["slower", "root"]
    assert out.trace[0].provided == 99.0


def test_or_discards_partial_plans_of_failed_candidates() -> None:
    # The first OR candidate is an AND whose first leaf succeeds and
    # second fails; its partial plan must not leak into the result.
    model = parse_model(
        """format_version: 1

goal root or
  interpretation
    when true: timeSeconds < 10
  goal pair and
    task good
      provided
        when true: timeSeconds = 1
    task bad
      provided
        when true: timeSeconds = 50
  task fallback
    provided
      when true: timeSeconds = 2
"""
    )
    out, _ = is_achievable(model, (), engine=ENGINE)
    assert out.achievable
    assert out.plan is not None and out.plan.sorted() == ("fallback",)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def test_applicable_children_filters_by_condition(mpers: CgmModel) -> None:
    detect = mpers.by_id["detect"]
    empty = mpers.context_set(())
    assert [c.id for c in applicable_children(detect, empty)] == ["panicButton"]
    with_sensors = mpers.context_set(("C1",))
    assert [c.id for c in applicable_children(detect, with_sensors)] == [
        "sensorsDetect",
        "panicButton",
    ]


def test_applicable_children_rejects_leaves(mpers: CgmModel) -> None:
    with pytest.raises(ValueError):
        applicable_children(mpers.by_id["panicButton"], mpers.context_set(()))


def test_plan_union() -> None:
    from cgmplan import Plan

    merged = plan_union(Plan(frozenset({"a"})), Plan(frozenset({"b"})))
    assert merged.leaves == frozenset({"a", "b"})


def test_oracle_bound_is_enforced(mpers: CgmModel) -> None:
    with pytest.raises(OracleBoundError):
        brute_force_achievable(mpers, (), max_nodes=5)
