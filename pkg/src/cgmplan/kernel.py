"""Flat-array compilation of a goal model for the fast evaluator.

The compiled form is a set of numpy arrays the extension walks without
touching Python objects:

* nodes in preorder with kind, applicability condition index,
  interpretation index, child slice, provided-row slice;
* every distinct condition as a postfix token stream, evaluated once
  per context set into a boolean table (TRUE is always entry 0);
* interpretation rows and their constraints as contiguous slices;
* provided-quality rows with condition, metric index and value;
* metric names in one sorted table shared by requirements, rows and
  constraints, so the evaluator checks metrics in the same order the
  reference implementation does.

Context sets travel as bitmasks: bit i is the i-th declared context.
The same layout drives both the compiled evaluator and nothing else;
the pure-Python engine works directly on the model objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .model import (
    TRUE,
    And,
    Atom,
    CgmModel,
    Comparison,
    Condition,
    Decomposition,
    Not,
    NodeKind,
    Or,
    QualityConstraint,
    RefinementNode,
    TrueCondition,
    UndeclaredContextError,
)

# Node kinds as the kernel sees them.
KIND_AND_GOAL = 0
KIND_OR_GOAL = 1
KIND_TASK = 2
KIND_DELEGATION = 3

# Postfix condition opcodes.
OP_TRUE = 0
OP_ATOM = 1
OP_NOT = 2
OP_AND = 3
OP_OR = 4

# Comparison codes; strictly ordered so that within one bound
# direction the smaller code is the stricter comparison.
CMP_LT = 0
CMP_LE = 1
CMP_GT = 2
CMP_GE = 3

_CMP_CODE = {
    Comparison.LESS_THAN: CMP_LT,
    Comparison.LESS_OR_EQUAL: CMP_LE,
    Comparison.GREATER_THAN: CMP_GT,
    Comparison.GREATER_OR_EQUAL: CMP_GE,
}
CMP_FROM_CODE = {
    CMP_LT: Comparison.LESS_THAN,
    CMP_LE: Comparison.LESS_OR_EQUAL,
    CMP_GT: Comparison.GREATER_THAN,
    CMP_GE: Comparison.GREATER_OR_EQUAL,
}

# Failure reasons in trace records.
REASON_INAPPLICABLE = 0
REASON_QC_VIOLATED = 1
REASON_CHILD_FAILED = 2
REASON_NO_APPLICABLE = 3


class _ConditionTable:
    """Deduplicated postfix token streams; TRUE occupies index 0."""

    def __init__(self, context_index: Mapping[str, int]):
        self.context_index = context_index
        self.index: dict[Condition, int] = {}
        self.ops: list[int] = []
        self.args: list[int] = []
        self.starts: list[int] = [0]
        self.max_stack = 1
        self.add(TRUE)

    def add(self, cond: Condition) -> int:
        existing = self.index.get(cond)
        if existing is not None:
            return existing
        depth = self._emit(cond)
        self.max_stack = max(self.max_stack, depth)
        self.starts.append(len(self.ops))
        slot = len(self.index)
        self.index[cond] = slot
        return slot

    def _emit(self, cond: Condition) -> int:
        if isinstance(cond, TrueCondition):
            self.ops.append(OP_TRUE)
            self.args.append(0)
            return 1
        if isinstance(cond, Atom):
            slot = self.context_index.get(cond.name)
            if slot is None:
                raise UndeclaredContextError(cond.name)
            self.ops.append(OP_ATOM)
            self.args.append(slot)
            return 1
        if isinstance(cond, Not):
            depth = self._emit(cond.child)
            self.ops.append(OP_NOT)
            self.args.append(0)
            return depth
        if isinstance(cond, (And, Or)):
            depth = 0
            for i, child in enumerate(cond.children):
                depth = max(depth, i + self._emit(child))
            self.ops.append(OP_AND if isinstance(cond, And) else OP_OR)
            self.args.append(len(cond.children))
            return depth
        raise TypeError(f"unknown condition node {type(cond).__name__}")


@dataclass
class CompiledModel:
    """Array form of one evaluation root plus its requirement row."""

    node_ids: list[str]
    metric_names: list[str]
    context_names: tuple[str, ...]
    n_nodes: int
    n_leaves: int
    depth: int
    req_rows: int

    kind: np.ndarray
    applic: np.ndarray
    interp: np.ndarray
    child_start: np.ndarray
    child_count: np.ndarray
    children: np.ndarray
    prov_start: np.ndarray
    prov_count: np.ndarray

    prov_cond: np.ndarray
    prov_metric: np.ndarray
    prov_value: np.ndarray

    interp_row_start: np.ndarray
    row_cond: np.ndarray
    row_is_baseline: np.ndarray
    row_cstart: np.ndarray
    c_cond: np.ndarray
    c_metric: np.ndarray
    c_cmp: np.ndarray
    c_thr: np.ndarray

    cond_op: np.ndarray
    cond_arg: np.ndarray
    cond_start: np.ndarray
    cond_stack_cap: int

    req0_active: np.ndarray
    req0_cmp: np.ndarray
    req0_thr: np.ndarray

    def context_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            try:
                mask |= 1 << self.context_names.index(name)
            except ValueError:
                raise UndeclaredContextError(name) from None
        return mask


def compile_model(
    model: CgmModel,
    require: Mapping[str, QualityConstraint] | None = None,
    node: str | None = None,
) -> CompiledModel:
    """Flatten the subtree rooted at `node` (default: the model root).

    Atoms must reference declared contexts; the compiled engine checks
    this eagerly even on branches an evaluation might never reach.
    """

    require = dict(require or {})
    start = model.root if node is None else model.node(node)
    if len(model.contexts) > 64:
        raise ValueError("compiled engine supports at most 64 declared contexts")

    context_index = {name: i for i, name in enumerate(model.context_names)}
    conds = _ConditionTable(context_index)

    nodes: list[RefinementNode] = []
    stack: list[tuple[RefinementNode, int]] = [(start, 1)]
    max_depth = 0
    # model.size counts distinct node objects; a tree walk visits each
    # exactly once, so exceeding it means shared subtrees or a cycle.
    walk_budget = model.size
    while stack:
        cur, d = stack.pop()
        if len(nodes) >= walk_budget:
            raise ValueError(
                "model is not a tree (shared subtree or cycle); run validate_model"
            )
        nodes.append(cur)
        max_depth = max(max_depth, d)
        for child in reversed(cur.children):
            stack.append((child, d + 1))
    index_of = {id(n): i for i, n in enumerate(nodes)}
    n = len(nodes)

    metric_set: set[str] = set(require)
    for cur in nodes:
        if cur.interpretation is not None:
            for row in cur.interpretation.rows:
                metric_set.update(c.metric for c in row.constraints)
        if cur.provided is not None:
            metric_set.update(cur.provided.metrics())
    metric_names = sorted(metric_set)
    metric_index = {name: i for i, name in enumerate(metric_names)}

    kind = np.zeros(n, dtype=np.int8)
    applic = np.zeros(n, dtype=np.intc)
    interp = np.full(n, -1, dtype=np.intc)
    child_start = np.zeros(n, dtype=np.intc)
    child_count = np.zeros(n, dtype=np.intc)
    prov_start = np.zeros(n, dtype=np.intc)
    prov_count = np.zeros(n, dtype=np.intc)

    children: list[int] = []
    prov_cond: list[int] = []
    prov_metric: list[int] = []
    prov_value: list[float] = []

    interp_row_start: list[int] = [0]
    row_cond: list[int] = []
    row_is_baseline: list[int] = []
    row_cstart: list[int] = [0]
    c_cond: list[int] = []
    c_metric: list[int] = []
    c_cmp: list[int] = []
    c_thr: list[float] = []

    n_leaves = 0
    # Requirement rows: one per level of interpretation nesting plus
    # the base row the caller's constraints occupy.
    req_rows = 1
    lev_stack: list[tuple[RefinementNode, int]] = [(start, 0)]
    while lev_stack:
        cur, lev = lev_stack.pop()
        nxt = lev + (1 if cur.interpretation is not None else 0)
        req_rows = max(req_rows, nxt + 1)
        for child in cur.children:
            lev_stack.append((child, nxt))

    for i, cur in enumerate(nodes):
        applic[i] = conds.add(cur.applicability)
        if cur.kind is NodeKind.GOAL:
            kind[i] = KIND_OR_GOAL if cur.decomposition is Decomposition.OR else KIND_AND_GOAL
            child_start[i] = len(children)
            child_count[i] = len(cur.children)
            children.extend(index_of[id(c)] for c in cur.children)
            if cur.interpretation is not None:
                interp[i] = len(interp_row_start) - 1
                for row in cur.interpretation.rows:
                    row_cond.append(conds.add(row.condition))
                    row_is_baseline.append(1 if row.condition == TRUE else 0)
                    for qc in row.constraints:
                        # A constraint's own applicability combines with
                        # the row's; the AND is folded at compile time.
                        if qc.applicable == TRUE:
                            gate = row.condition
                        elif row.condition == TRUE:
                            gate = qc.applicable
                        else:
                            gate = And(row.condition, qc.applicable)
                        c_cond.append(conds.add(gate))
                        c_metric.append(metric_index[qc.metric])
                        c_cmp.append(_CMP_CODE[qc.comparison])
                        c_thr.append(float(qc.threshold))
                    row_cstart.append(len(c_metric))
                interp_row_start.append(len(row_cond))
        else:
            kind[i] = KIND_TASK if cur.kind is NodeKind.TASK else KIND_DELEGATION
            n_leaves += 1
            prov_start[i] = len(prov_cond)
            rows = cur.provided.rows if cur.provided is not None else ()
            prov_count[i] = len(rows)
            for row in rows:
                prov_cond.append(conds.add(row.condition))
                prov_metric.append(metric_index[row.metric])
                prov_value.append(float(row.value))

    n_metrics = len(metric_names)
    req0_active = np.zeros(n_metrics, dtype=np.uint8)
    req0_cmp = np.zeros(n_metrics, dtype=np.int8)
    req0_thr = np.zeros(n_metrics, dtype=np.float64)
    for name, qc in require.items():
        m = metric_index[name]
        req0_active[m] = 1
        req0_cmp[m] = _CMP_CODE[qc.comparison]
        req0_thr[m] = float(qc.threshold)

    return CompiledModel(
        node_ids=[nd.id for nd in nodes],
        metric_names=metric_names,
        context_names=model.context_names,
        n_nodes=n,
        n_leaves=n_leaves,
        depth=max_depth,
        req_rows=req_rows,
        kind=kind,
        applic=applic,
        interp=interp,
        child_start=child_start,
        child_count=child_count,
        children=np.asarray(children, dtype=np.intc),
        prov_start=prov_start,
        prov_count=prov_count,
        prov_cond=np.asarray(prov_cond, dtype=np.intc),
        prov_metric=np.asarray(prov_metric, dtype=np.intc),
        prov_value=np.asarray(prov_value, dtype=np.float64),
        interp_row_start=np.asarray(interp_row_start, dtype=np.intc),
        row_cond=np.asarray(row_cond, dtype=np.intc),
        row_is_baseline=np.asarray(row_is_baseline, dtype=np.uint8),
        row_cstart=np.asarray(row_cstart, dtype=np.intc),
        c_cond=np.asarray(c_cond, dtype=np.intc),
        c_metric=np.asarray(c_metric, dtype=np.intc),
        c_cmp=np.asarray(c_cmp, dtype=np.int8),
        c_thr=np.asarray(c_thr, dtype=np.float64),
        cond_op=np.asarray(conds.ops, dtype=np.int8),
        cond_arg=np.asarray(conds.args, dtype=np.intc),
        cond_start=np.asarray(conds.starts, dtype=np.intc),
        cond_stack_cap=conds.max_stack,
        req0_active=req0_active,
        req0_cmp=req0_cmp,
        req0_thr=req0_thr,
    )
