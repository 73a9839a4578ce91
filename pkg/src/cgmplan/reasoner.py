"""Achievability reasoning over a contextual goal model.

The core question: given the active contexts, is there a set of
applicable tasks and delegations whose provided quality satisfies
every constraint the goal tree imposes on them?  `is_achievable`
answers it in one pass, linear in the number of refinement links:

* an inapplicable node contributes nothing,
* a task or delegation is achievable when its provided quality meets
  all inherited constraints,
* a pragmatic goal tightens the inherited constraints with its own
  interpretation before asking its children,
* an OR goal takes the first applicable child that succeeds, an AND
  goal needs every applicable child and fails fast.

`brute_force_achievable` is the independent oracle: it enumerates all
plan variants explicitly and is deliberately written as a separate,
slower algorithm so the two can check each other.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping

from .context import (
    can_fulfill,
    effective_constraints,
    eval_condition,
    merge_constraints,
    stricter_quality_constraint,
)
from .model import (
    EMPTY_PROVIDED,
    TRUE,
    AchievabilityOutcome,
    CgmModel,
    ContextSet,
    Decomposition,
    FailureReason,
    NodeKind,
    Plan,
    QualityConstraint,
    RefinementNode,
    TraceEntry,
)


@dataclass
class EvalStats:
    """Work counters for one evaluation."""

    nodes_visited: int = 0
    leaves_checked: int = 0


class OracleBoundError(Exception):
    """The brute-force oracle refused a model above its node bound."""


def plan_union(a: Plan, b: Plan) -> Plan:
    return Plan(a.leaves | b.leaves)


def applicable_children(node: RefinementNode, ctx: ContextSet) -> list[RefinementNode]:
    """Children whose applicability condition holds; goals only."""

    if node.is_leaf:
        raise ValueError(f"{node.kind} {node.id!r} has no refinements to filter")
    return [c for c in node.children if eval_condition(c.applicability, ctx)]


def _normalize_ctx(
    model: CgmModel, ctx: ContextSet | Iterable[str] | None
) -> ContextSet:
    if ctx is None:
        return model.context_set(())
    if isinstance(ctx, ContextSet):
        if ctx.declared is None:
            return model.context_set(ctx.active)
        return ctx
    return model.context_set(ctx)


def _normalize_require(
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None,
) -> dict[str, QualityConstraint]:
    if require is None:
        return {}
    items = require.values() if isinstance(require, Mapping) else require
    out: dict[str, QualityConstraint] = {}
    for qc in items:
        if qc.applicable != TRUE:
            # Caller requirements apply unconditionally; the compiled
            # engine bakes them in before any context is known, so a
            # gated one cannot be honored consistently.
            raise ValueError(
                f"user requirement on {qc.metric!r} must not carry a context "
                "condition; put context-dependent bounds in an interpretation"
            )
        if qc.metric in out:
            out[qc.metric] = stricter_quality_constraint(out[qc.metric], qc)
        else:
            out[qc.metric] = qc
    return out


def is_achievable(
    model: CgmModel,
    ctx: ContextSet | Iterable[str] | None = None,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
    *,
    node: str | None = None,
    engine: str = "auto",
) -> tuple[AchievabilityOutcome, EvalStats]:
    """Decide achievability of the model (or one subtree) in a context.

    `require` adds root-level constraints on top of any interpretations
    in the tree.  `engine` picks the evaluator: "python" for the
    reference recursion, "compiled" for the extension, "auto" for the
    fastest available.  All engines return identical outcomes.
    """

    from .engine import evaluator_for

    evaluator = evaluator_for(model, require=require, node=node, engine=engine)
    return evaluator.evaluate(_normalize_ctx(model, ctx))


def evaluate_reference(
    model: CgmModel,
    ctx: ContextSet,
    require: dict[str, QualityConstraint],
    *,
    node: str | None = None,
) -> tuple[AchievabilityOutcome, EvalStats]:
    """Pure-Python evaluation; the executable definition of the semantics."""

    start = model.root if node is None else model.node(node)
    stats = EvalStats()
    plan_ids: list[str] = []
    trace: list[TraceEntry] = []
    # Recursion tracks the tree depth; leave generous headroom for the
    # bookkeeping frames around each level.
    limit = sys.getrecursionlimit()
    needed = 4 * model.depth + 200
    if needed > limit:
        sys.setrecursionlimit(needed)
    try:
        ok = _eval_node(start, ctx, require, stats, plan_ids, trace)
    finally:
        if needed > limit:
            sys.setrecursionlimit(limit)
    if ok:
        return AchievabilityOutcome.achieved(Plan(frozenset(plan_ids))), stats
    return AchievabilityOutcome.failed(trace), stats


def _eval_node(
    node: RefinementNode,
    ctx: ContextSet,
    required: dict[str, QualityConstraint],
    stats: EvalStats,
    plan_ids: list[str],
    trace: list[TraceEntry],
) -> bool:
    stats.nodes_visited += 1

    if not eval_condition(node.applicability, ctx):
        trace.append(TraceEntry(node.id, FailureReason.INAPPLICABLE))
        return False

    if node.is_leaf:
        stats.leaves_checked += 1
        ok, violation = can_fulfill(node.provided or EMPTY_PROVIDED, ctx, required)
        if ok:
            plan_ids.append(node.id)
            return True
        metric, qc, value = violation
        # Traces carry the bound itself; any context gate on the
        # original constraint object is spent by this point.
        trace.append(
            TraceEntry(
                node.id,
                FailureReason.QC_VIOLATED,
                metric=metric,
                required=QualityConstraint(qc.metric, qc.comparison, qc.threshold),
                provided=value,
            )
        )
        return False

    considered = required
    if node.interpretation is not None:
        considered = merge_constraints(
            required, effective_constraints(node.interpretation, ctx)
        )

    children = applicable_children(node, ctx)
    if not children:
        trace.append(
            TraceEntry(
                node.id,
                FailureReason.INAPPLICABLE,
                detail="no applicable refinement in this context",
            )
        )
        return False

    if node.decomposition is Decomposition.OR:
        trace_mark = len(trace)
        plan_mark = len(plan_ids)
        for child in children:
            # Keep only the most recent candidate's failure chain.
            del trace[trace_mark:]
            del plan_ids[plan_mark:]
            if _eval_node(child, ctx, considered, stats, plan_ids, trace):
                return True
        trace.append(TraceEntry(node.id, FailureReason.CHILD_FAILED))
        return False

    for child in children:
        if not _eval_node(child, ctx, considered, stats, plan_ids, trace):
            trace.append(TraceEntry(node.id, FailureReason.CHILD_FAILED))
            return False
    return True


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_NODE_BOUND = 20


def brute_force_achievable(
    model: CgmModel,
    ctx: ContextSet | Iterable[str] | None = None,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
    *,
    node: str | None = None,
    max_nodes: int = ORACLE_NODE_BOUND,
) -> frozenset[frozenset[str]]:
    """Enumerate every achievable plan by exhaustive expansion.

    Returns the set of plans (each a frozenset of leaf ids); empty means
    unachievable.  Exponential in OR alternatives, so models larger
    than `max_nodes` are refused outright.
    """

    if model.size > max_nodes:
        raise OracleBoundError(
            f"oracle bound is {max_nodes} nodes, model has {model.size}"
        )
    context = _normalize_ctx(model, ctx)
    start = model.root if node is None else model.node(node)
    plans = _enumerate_plans(start, context, _normalize_require(require))
    return frozenset(plans)


def _enumerate_plans(
    node: RefinementNode,
    ctx: ContextSet,
    required: dict[str, QualityConstraint],
) -> set[frozenset[str]]:
    if not eval_condition(node.applicability, ctx):
        return set()

    if node.is_leaf:
        ok, _ = can_fulfill(node.provided or EMPTY_PROVIDED, ctx, required)
        return {frozenset((node.id,))} if ok else set()

    considered = required
    if node.interpretation is not None:
        considered = merge_constraints(
            required, effective_constraints(node.interpretation, ctx)
        )

    children = [c for c in node.children if eval_condition(c.applicability, ctx)]
    if not children:
        return set()

    if node.decomposition is Decomposition.OR:
        plans: set[frozenset[str]] = set()
        for child in children:
            plans |= _enumerate_plans(child, ctx, considered)
        return plans

    per_child = []
    for child in children:
        child_plans = _enumerate_plans(child, ctx, considered)
        if not child_plans:
            return set()
        per_child.append(child_plans)
    combined: set[frozenset[str]] = set()
    for combo in product(*per_child):
        combined.add(frozenset().union(*combo))
    return combined
