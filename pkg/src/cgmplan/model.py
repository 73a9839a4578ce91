"""Core types for pragmatic contextual goal models.

A model is an AND/OR refinement tree whose nodes carry three kinds of
context-dependent annotations:

* an applicability condition (the node only participates when it holds),
* on goals, an optional pragmatic interpretation: quality constraints
  that say what counts as fulfilling the goal in each context,
* on tasks and delegations, the quality metrics the executor would
  deliver, again possibly varying with context.

Everything here is immutable data plus `validate_model`.  Evaluation
semantics live in `cgmplan.context` and `cgmplan.reasoner`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def _valid_name(text: object) -> bool:
    return isinstance(text, str) and _NAME_RE.match(text) is not None


# ---------------------------------------------------------------------------
# Context conditions
# ---------------------------------------------------------------------------


class Condition:
    """Boolean formula over context labels.

    Subclasses form a small closed ADT: TrueCondition, Atom, Not, And,
    Or.  Rendering is structure preserving: a nested connective of the
    same precedence is parenthesised, so parsing the rendered text
    rebuilds the identical tree.
    """

    __slots__ = ()

    def atoms(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class TrueCondition(Condition):
    """The condition that holds in every context."""

    __slots__ = ()

    def atoms(self) -> frozenset[str]:
        return frozenset()

    def __str__(self) -> str:
        return "true"


TRUE = TrueCondition()


@dataclass(frozen=True)
class Atom(Condition):
    """A single context label; holds when that context is active."""

    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("context atom needs a nonempty name")

    def atoms(self) -> frozenset[str]:
        return frozenset((self.name,))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not(Condition):
    child: Condition

    def atoms(self) -> frozenset[str]:
        return self.child.atoms()

    def __str__(self) -> str:
        if isinstance(self.child, (And, Or)):
            return f"not ({self.child})"
        return f"not {self.child}"


@dataclass(frozen=True, init=False)
class And(Condition):
    children: tuple[Condition, ...]

    def __init__(self, *children: Condition) -> None:
        if not children:
            raise ValueError("'and' needs at least one operand")
        object.__setattr__(self, "children", tuple(children))

    def atoms(self) -> frozenset[str]:
        return frozenset().union(*(c.atoms() for c in self.children))

    def __str__(self) -> str:
        parts = []
        for c in self.children:
            # Same-precedence or weaker children keep explicit parens so
            # the rendered text parses back to this exact tree.
            if isinstance(c, (And, Or)):
                parts.append(f"({c})")
            else:
                parts.append(str(c))
        return " and ".join(parts)


@dataclass(frozen=True, init=False)
class Or(Condition):
    children: tuple[Condition, ...]

    def __init__(self, *children: Condition) -> None:
        if not children:
            raise ValueError("'or' needs at least one operand")
        object.__setattr__(self, "children", tuple(children))

    def atoms(self) -> frozenset[str]:
        return frozenset().union(*(c.atoms() for c in self.children))

    def __str__(self) -> str:
        parts = []
        for c in self.children:
            if isinstance(c, Or):
                parts.append(f"({c})")
            else:
                parts.append(str(c))
        return " or ".join(parts)


# ---------------------------------------------------------------------------
# Contexts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContextLabel:
    """A declared context, e.g. C5 = mobile data connection available."""

    name: str
    description: str = ""


@dataclass(frozen=True)
class ContextSet:
    """The set of currently active contexts.

    `declared` is the model's full label universe when known; condition
    evaluation uses it to reject atoms that reference labels the model
    never declared.
    """

    active: frozenset[str]
    declared: frozenset[str] | None = None

    def __contains__(self, name: str) -> bool:
        return name in self.active

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.active))

    def __len__(self) -> int:
        return len(self.active)

    @staticmethod
    def of(*names: str) -> "ContextSet":
        return ContextSet(active=frozenset(names))


# ---------------------------------------------------------------------------
# Quality constraints and node annotations
# ---------------------------------------------------------------------------


class Comparison(Enum):
    LESS_THAN = "<"
    LESS_OR_EQUAL = "<="
    GREATER_THAN = ">"
    GREATER_OR_EQUAL = ">="

    @property
    def is_upper_bound(self) -> bool:
        return self in (Comparison.LESS_THAN, Comparison.LESS_OR_EQUAL)

    @property
    def is_strict(self) -> bool:
        return self in (Comparison.LESS_THAN, Comparison.GREATER_THAN)

    def satisfied_by(self, value: float, threshold: float) -> bool:
        if self is Comparison.LESS_THAN:
            return value < threshold
        if self is Comparison.LESS_OR_EQUAL:
            return value <= threshold
        if self is Comparison.GREATER_THAN:
            return value > threshold
        return value >= threshold

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class QualityConstraint:
    """One bound on one metric, e.g. errorMeters < 20.

    `applicable` gates the constraint by context where the constraint
    stands alone; inside an Interpretation the row condition is the
    gate and constraints carry TRUE here.
    """

    metric: str
    comparison: Comparison
    threshold: float
    applicable: Condition = TRUE

    def satisfied_by(self, value: float) -> bool:
        return self.comparison.satisfied_by(value, self.threshold)

    def __str__(self) -> str:
        return f"{self.metric} {self.comparison} {format_number(self.threshold)}"


@dataclass(frozen=True)
class InterpretationRow:
    """Constraints that a goal's interpretation imposes under a condition."""

    condition: Condition
    constraints: tuple[QualityConstraint, ...]


@dataclass(frozen=True)
class Interpretation:
    """Context-dependent meaning of fulfilling a goal.

    Exactly one row must have condition TRUE: the baseline.  Baseline
    constraints apply only to metrics that no other applicable row
    mentions; rows gated by active contexts override it per metric.
    """

    rows: tuple[InterpretationRow, ...]

    def baseline(self) -> InterpretationRow | None:
        for row in self.rows:
            if row.condition == TRUE:
                return row
        return None


@dataclass(frozen=True)
class ProvidedRow:
    """One metric value a task delivers when the condition holds."""

    condition: Condition
    metric: str
    value: float


@dataclass(frozen=True)
class ProvidedQuality:
    """Declared quality of a task or delegation, row order significant.

    For each metric, the first row whose condition holds gives the
    value; every mentioned metric must also have an unconditional row
    so lookup is total.
    """

    rows: tuple[ProvidedRow, ...] = ()

    def metrics(self) -> frozenset[str]:
        return frozenset(r.metric for r in self.rows)


EMPTY_PROVIDED = ProvidedQuality()


# ---------------------------------------------------------------------------
# Refinement tree
# ---------------------------------------------------------------------------


class NodeKind(Enum):
    GOAL = "goal"
    TASK = "task"
    DELEGATION = "delegation"

    def __str__(self) -> str:
        return self.value


class Decomposition(Enum):
    AND = "and"
    OR = "or"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RefinementNode:
    id: str
    kind: NodeKind
    label: str = ""
    applicability: Condition = TRUE
    decomposition: Decomposition | None = None
    children: tuple[RefinementNode, ...] = ()
    interpretation: Interpretation | None = None
    provided: ProvidedQuality | None = None
    actor: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind is not NodeKind.GOAL


def goal(
    id: str,
    label: str = "",
    *,
    decomposition: Decomposition,
    children: Iterable[RefinementNode],
    when: Condition = TRUE,
    interpretation: Interpretation | None = None,
    actor: str | None = None,
) -> RefinementNode:
    return RefinementNode(
        id=id,
        kind=NodeKind.GOAL,
        label=label,
        applicability=when,
        decomposition=decomposition,
        children=tuple(children),
        interpretation=interpretation,
        actor=actor,
    )


def task(
    id: str,
    label: str = "",
    *,
    provided: ProvidedQuality | Iterable[ProvidedRow] = (),
    when: Condition = TRUE,
    actor: str | None = None,
) -> RefinementNode:
    if not isinstance(provided, ProvidedQuality):
        provided = ProvidedQuality(tuple(provided))
    return RefinementNode(
        id=id,
        kind=NodeKind.TASK,
        label=label,
        applicability=when,
        provided=provided,
        actor=actor,
    )


def delegation(
    id: str,
    label: str = "",
    *,
    provided: ProvidedQuality | Iterable[ProvidedRow] = (),
    when: Condition = TRUE,
    actor: str | None = None,
) -> RefinementNode:
    if not isinstance(provided, ProvidedQuality):
        provided = ProvidedQuality(tuple(provided))
    return RefinementNode(
        id=id,
        kind=NodeKind.DELEGATION,
        label=label,
        applicability=when,
        provided=provided,
        actor=actor,
    )


def iter_tree(root: RefinementNode) -> Iterator[RefinementNode]:
    """Preorder traversal, robust against shared subtrees and cycles.

    A node object is yielded at most once, so the iterator terminates
    even on malformed inputs; validate_model reports the sharing.
    """

    seen: set[int] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(reversed(node.children))


@dataclass(frozen=True)
class CgmModel:
    contexts: tuple[ContextLabel, ...]
    root: RefinementNode

    @cached_property
    def nodes(self) -> tuple[RefinementNode, ...]:
        return tuple(iter_tree(self.root))

    @cached_property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def depth(self) -> int:
        """Longest root-to-node path, counted in nodes."""
        best = 1
        stack: list[tuple[RefinementNode, int]] = [(self.root, 1)]
        seen: set[int] = set()
        while stack:
            node, d = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            best = max(best, d)
            for child in node.children:
                stack.append((child, d + 1))
        return best

    @cached_property
    def context_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.contexts)

    @cached_property
    def declared(self) -> frozenset[str]:
        return frozenset(self.context_names)

    @cached_property
    def by_id(self) -> dict[str, RefinementNode]:
        table: dict[str, RefinementNode] = {}
        for node in self.nodes:
            table.setdefault(node.id, node)
        return table

    @cached_property
    def metrics(self) -> tuple[str, ...]:
        """All metric names the model mentions, sorted."""
        names: set[str] = set()
        for node in self.nodes:
            if node.interpretation is not None:
                for row in node.interpretation.rows:
                    names.update(c.metric for c in row.constraints)
            if node.provided is not None:
                names.update(node.provided.metrics())
        return tuple(sorted(names))

    def node(self, node_id: str) -> RefinementNode:
        return self.by_id[node_id]

    def context_set(self, names: Iterable[str] = ()) -> ContextSet:
        active = frozenset(names)
        unknown = sorted(active - self.declared)
        if unknown:
            raise UndeclaredContextError(unknown[0])
        return ContextSet(active=active, declared=self.declared)


class UndeclaredContextError(Exception):
    """A condition or context set referenced an undeclared label."""

    def __init__(self, name: str):
        super().__init__(f"context label {name!r} is not declared by the model")
        self.name = name


# ---------------------------------------------------------------------------
# Plans and outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Plan:
    """The leaves (tasks and delegations) an achievable evaluation picked."""

    leaves: frozenset[str]

    @staticmethod
    def of(*leaf_ids: str) -> "Plan":
        return Plan(frozenset(leaf_ids))

    def sorted(self) -> tuple[str, ...]:
        return tuple(sorted(self.leaves))

    def __contains__(self, leaf_id: str) -> bool:
        return leaf_id in self.leaves

    def __iter__(self) -> Iterator[str]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.leaves)


class FailureReason(Enum):
    INAPPLICABLE = "inapplicable"
    QC_VIOLATED = "qc-violated"
    CHILD_FAILED = "child-failed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TraceEntry:
    """One step in the failure chain, deepest node first."""

    node_id: str
    reason: FailureReason
    metric: str | None = None
    required: QualityConstraint | None = None
    provided: float | None = None
    detail: str = ""

    def render(self) -> str:
        if self.reason is FailureReason.QC_VIOLATED:
            have = "undeclared" if self.provided is None else format_number(self.provided)
            return f"{self.node_id}: requires {self.required}, provides {have}"
        if self.reason is FailureReason.INAPPLICABLE:
            note = self.detail or "applicability condition does not hold"
            return f"{self.node_id}: {note}"
        return f"{self.node_id}: no achievable refinement"


@dataclass(frozen=True)
class AchievabilityOutcome:
    """Result of one evaluation: a plan, or a failure trace."""

    plan: Plan | None
    trace: tuple[TraceEntry, ...] = ()

    @property
    def achievable(self) -> bool:
        return self.plan is not None

    @staticmethod
    def achieved(plan: Plan) -> "AchievabilityOutcome":
        return AchievabilityOutcome(plan=plan)

    @staticmethod
    def failed(trace: Iterable[TraceEntry]) -> "AchievabilityOutcome":
        return AchievabilityOutcome(plan=None, trace=tuple(trace))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    node_id: str | None
    code: str
    message: str

    def __str__(self) -> str:
        where = f"{self.node_id}: " if self.node_id else ""
        return f"{where}{self.message}"


def format_number(value: float) -> str:
    """Render a float the way the model format writes it."""
    if math.isfinite(value) and value == int(value):
        return str(int(value))
    return repr(float(value))


def _check_condition(
    cond: Condition,
    declared: frozenset[str],
    node_id: str | None,
    what: str,
    out: list[Violation],
) -> None:
    for atom in sorted(cond.atoms()):
        if atom not in declared:
            out.append(
                Violation(
                    node_id,
                    "undeclared-context",
                    f"{what} references undeclared context {atom!r}",
                )
            )


def validate_model(model: CgmModel) -> list[Violation]:
    """Check every structural invariant; empty list means valid.

    Violations never raise: malformed models come back as data so
    callers (the CLI, the parser) can report all problems at once.
    """

    out: list[Violation] = []

    seen_contexts: set[str] = set()
    for ctx in model.contexts:
        if not _valid_name(ctx.name):
            out.append(Violation(None, "invalid-name", f"invalid context name {ctx.name!r}"))
        elif ctx.name in ("and", "or", "not", "true"):
            # These collide with condition-expression keywords and
            # could never be referenced from a condition.
            out.append(Violation(None, "reserved-name", f"context name {ctx.name!r} is reserved"))
        elif ctx.name in seen_contexts:
            out.append(Violation(None, "duplicate-context", f"context {ctx.name!r} declared twice"))
        seen_contexts.add(ctx.name)
    declared = model.declared

    # Detect node objects reachable along two paths: the tree walk skips
    # repeats, so compare subtree-reported sizes against reachable count.
    seen_ids: set[str] = set()
    reachable: set[int] = set()
    order = list(iter_tree(model.root))
    for node in order:
        reachable.add(id(node))
    child_refs = 0
    for node in order:
        child_refs += len(node.children)
    if child_refs != len(reachable) - 1:
        out.append(
            Violation(
                None,
                "shared-subtree",
                "a node is referenced as a child more than once",
            )
        )

    for node in order:
        nid = node.id if isinstance(node.id, str) else repr(node.id)
        if not _valid_name(node.id):
            out.append(Violation(nid, "invalid-name", f"invalid node id {node.id!r}"))
        elif node.id in seen_ids:
            out.append(Violation(nid, "duplicate-id", f"node id {node.id!r} used twice"))
        seen_ids.add(nid)

        if node.actor is not None and not _valid_name(node.actor):
            out.append(Violation(nid, "invalid-name", f"invalid actor name {node.actor!r}"))

        _check_condition(node.applicability, declared, nid, "applicability condition", out)

        if node.kind is NodeKind.GOAL:
            if not node.children:
                out.append(Violation(nid, "goal-without-children", "goal has no refinements"))
            if node.decomposition is None:
                out.append(Violation(nid, "goal-without-decomposition", "goal lacks and/or decomposition"))
            if node.provided is not None and node.provided.rows:
                out.append(Violation(nid, "goal-with-provided", "goals do not provide quality values"))
            if node.interpretation is not None:
                _check_interpretation(node.interpretation, declared, nid, out)
        else:
            if node.children:
                out.append(Violation(nid, "leaf-with-children", f"{node.kind} cannot have refinements"))
            if node.decomposition is not None:
                out.append(Violation(nid, "decomposition-on-leaf", f"{node.kind} cannot carry a decomposition"))
            if node.interpretation is not None:
                out.append(Violation(nid, "leaf-with-interpretation", "only goals carry interpretations"))
            _check_provided(node.provided or EMPTY_PROVIDED, declared, nid, out)

    return out


def _check_interpretation(
    interp: Interpretation,
    declared: frozenset[str],
    nid: str,
    out: list[Violation],
) -> None:
    baseline_rows = [r for r in interp.rows if r.condition == TRUE]
    if not baseline_rows:
        out.append(Violation(nid, "interpretation-missing-baseline", "interpretation has no unconditional row"))
    elif len(baseline_rows) > 1:
        out.append(Violation(nid, "interpretation-extra-baseline", "interpretation has several unconditional rows"))
    for row in interp.rows:
        _check_condition(row.condition, declared, nid, "interpretation row condition", out)
        per_metric: set[str] = set()
        if not row.constraints:
            out.append(Violation(nid, "interpretation-empty-row", "interpretation row has no constraints"))
        for qc in row.constraints:
            if not _valid_name(qc.metric):
                out.append(Violation(nid, "invalid-name", f"invalid metric name {qc.metric!r}"))
            if qc.metric in per_metric:
                out.append(
                    Violation(
                        nid,
                        "interpretation-row-duplicate-metric",
                        f"row constrains metric {qc.metric!r} twice",
                    )
                )
            per_metric.add(qc.metric)
            if not isinstance(qc.threshold, (int, float)) or not math.isfinite(qc.threshold):
                out.append(Violation(nid, "nonfinite-threshold", f"threshold for {qc.metric!r} is not finite"))
            _check_condition(qc.applicable, declared, nid, "constraint condition", out)


def _check_provided(
    provided: ProvidedQuality,
    declared: frozenset[str],
    nid: str,
    out: list[Violation],
) -> None:
    defaults: set[str] = set()
    for row in provided.rows:
        if not _valid_name(row.metric):
            out.append(Violation(nid, "invalid-name", f"invalid metric name {row.metric!r}"))
        if not isinstance(row.value, (int, float)) or not math.isfinite(row.value):
            out.append(Violation(nid, "nonfinite-value", f"provided value for {row.metric!r} is not finite"))
        _check_condition(row.condition, declared, nid, "provided row condition", out)
        if row.condition == TRUE:
            defaults.add(row.metric)
    for metric in sorted(provided.metrics() - defaults):
        out.append(
            Violation(
                nid,
                "provided-missing-default",
                f"metric {metric!r} has no unconditional provided row",
            )
        )
