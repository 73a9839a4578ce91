"""Condition evaluation and the quality-constraint algebra.

This module answers three questions the reasoner keeps asking:

* does a condition hold in the current context set,
* what constraints does a pragmatic goal effectively impose right now,
* can a task's provided quality fulfill a set of required constraints.

Constraints on the same metric combine by keeping the stricter bound,
which is only defined when both point the same way; mixing an upper
bound with a lower bound for one metric is a modelling fault and
raises ConstraintAlgebraError.
"""

from __future__ import annotations

from .model import (
    TRUE,
    And,
    Atom,
    Condition,
    ContextSet,
    Interpretation,
    Not,
    Or,
    ProvidedQuality,
    QualityConstraint,
    TrueCondition,
    UndeclaredContextError,
)


class ConstraintAlgebraError(Exception):
    """Raised when constraints cannot be combined or compared."""


class MissingMetricError(Exception):
    """Raised when a quality lookup names a metric with no applicable row."""

    def __init__(self, metric: str):
        super().__init__(f"no applicable provided row for metric {metric!r}")
        self.metric = metric


def eval_condition(condition: Condition, ctx: ContextSet) -> bool:
    """Evaluate a condition against the active context set.

    Atoms must name declared labels when the context set carries its
    declaration universe; an unknown atom raises rather than silently
    evaluating false.
    """

    if isinstance(condition, TrueCondition):
        return True
    if isinstance(condition, Atom):
        if ctx.declared is not None and condition.name not in ctx.declared:
            raise UndeclaredContextError(condition.name)
        return condition.name in ctx.active
    if isinstance(condition, Not):
        return not eval_condition(condition.child, ctx)
    if isinstance(condition, And):
        return all(eval_condition(c, ctx) for c in condition.children)
    if isinstance(condition, Or):
        return any(eval_condition(c, ctx) for c in condition.children)
    raise TypeError(f"unknown condition node {type(condition).__name__}")


def stricter_quality_constraint(
    a: QualityConstraint, b: QualityConstraint
) -> QualityConstraint:
    """Return whichever constraint is harder to satisfy.

    Defined only for the same metric and same bound direction.  With
    equal thresholds the strict comparison beats the non-strict one; a
    full tie returns the first argument.
    """

    if a.metric != b.metric:
        raise ConstraintAlgebraError(
            f"cannot compare constraints on different metrics {a.metric!r} and {b.metric!r}"
        )
    if a.comparison.is_upper_bound != b.comparison.is_upper_bound:
        raise ConstraintAlgebraError(
            f"conflicting bound directions for metric {a.metric!r}: {a} versus {b}"
        )
    if a.threshold != b.threshold:
        if a.comparison.is_upper_bound:
            return a if a.threshold < b.threshold else b
        return a if a.threshold > b.threshold else b
    if a.comparison.is_strict == b.comparison.is_strict:
        return a
    return a if a.comparison.is_strict else b


def effective_constraints(
    interp: Interpretation, ctx: ContextSet
) -> dict[str, QualityConstraint]:
    """Resolve an interpretation to one constraint per metric.

    Rows whose condition holds are folded in declaration order with
    stricter_quality_constraint.  The baseline (unconditional) row only
    fills in metrics that no other applicable row mentioned, so a
    context-specific row replaces the baseline bound instead of being
    tightened by it.  A constraint that carries its own applicability
    condition participates only when that condition also holds.
    """

    effective: dict[str, QualityConstraint] = {}
    baseline: dict[str, QualityConstraint] = {}
    for row in interp.rows:
        if row.condition == TRUE:
            for qc in row.constraints:
                if qc.metric not in baseline and eval_condition(qc.applicable, ctx):
                    baseline[qc.metric] = qc
            continue
        if not eval_condition(row.condition, ctx):
            continue
        for qc in row.constraints:
            if not eval_condition(qc.applicable, ctx):
                continue
            if qc.metric in effective:
                effective[qc.metric] = stricter_quality_constraint(
                    effective[qc.metric], qc
                )
            else:
                effective[qc.metric] = qc
    for metric, qc in baseline.items():
        if metric not in effective:
            effective[metric] = qc
    return effective


def merge_constraints(
    inherited: dict[str, QualityConstraint],
    own: dict[str, QualityConstraint],
) -> dict[str, QualityConstraint]:
    """Combine inherited requirements with a goal's own constraints.

    Shared metrics keep the stricter bound; ties keep the inherited
    one.  Neither input is mutated.
    """

    merged = dict(inherited)
    for metric, qc in own.items():
        if metric in merged:
            merged[metric] = stricter_quality_constraint(merged[metric], qc)
        else:
            merged[metric] = qc
    return merged


def provided_value(provided: ProvidedQuality, metric: str, ctx: ContextSet) -> float:
    """Value a task delivers for a metric: first row whose condition holds."""

    for row in provided.rows:
        if row.metric == metric and eval_condition(row.condition, ctx):
            return float(row.value)
    raise MissingMetricError(metric)


def can_fulfill(
    provided: ProvidedQuality,
    ctx: ContextSet,
    required: dict[str, QualityConstraint],
) -> tuple[bool, tuple[str, QualityConstraint, float | None] | None]:
    """Check provided quality against every required constraint.

    Metrics are checked in sorted name order.  Returns (True, None)
    when all constraints hold, else (False, (metric, constraint,
    provided value or None if the metric is undeclared)).
    """

    for metric in sorted(required):
        qc = required[metric]
        try:
            value = provided_value(provided, metric, ctx)
        except MissingMetricError:
            return False, (metric, qc, None)
        if not qc.satisfied_by(value):
            return False, (metric, qc, value)
    return True, None
