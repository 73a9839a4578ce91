"""Evaluator selection: compiled extension or pure-Python fallback.

Both engines implement the same contract and return identical
outcomes, traces and work counters; the compiled one exists purely for
speed on sweeps and benchmarks.  `evaluator_for` picks the fastest
available engine unless the caller forces one.

Context sets can be addressed as bitmasks (bit i = i-th declared
context), which is how the sweep enumerates them without rebuilding
set objects.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .context import ConstraintAlgebraError
from .kernel import CMP_FROM_CODE, CompiledModel, compile_model
from .model import (
    AchievabilityOutcome,
    CgmModel,
    ContextSet,
    FailureReason,
    Plan,
    QualityConstraint,
    TraceEntry,
)
from .reasoner import (
    EvalStats,
    _normalize_ctx,
    _normalize_require,
    evaluate_reference,
)

try:
    from . import _ckernel

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _ckernel = None
    HAVE_COMPILED = False

# The compiled evaluator recurses on the C stack; stay well below the
# usual 8 MiB limit and fall back to Python for pathologically deep
# trees.
_COMPILED_DEPTH_LIMIT = 15000


def available_engines() -> tuple[str, ...]:
    return ("python", "compiled") if HAVE_COMPILED else ("python",)


class PythonEvaluator:
    """Reference implementation wrapped in the engine interface."""

    name = "python"

    def __init__(
        self,
        model: CgmModel,
        require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
        node: str | None = None,
    ):
        self.model = model
        self.require = _normalize_require(require)
        self.node = node

    def evaluate(self, ctx: ContextSet | Iterable[str] | None) -> tuple[AchievabilityOutcome, EvalStats]:
        context = _normalize_ctx(self.model, ctx)
        return evaluate_reference(self.model, context, self.require, node=self.node)

    def verdict_mask(self, mask: int) -> bool:
        outcome, _ = self.evaluate(self._names_for(mask))
        return outcome.achievable

    def evaluate_mask(self, mask: int) -> tuple[AchievabilityOutcome, EvalStats]:
        return self.evaluate(self._names_for(mask))

    def _names_for(self, mask: int) -> tuple[str, ...]:
        names = self.model.context_names
        return tuple(names[i] for i in range(len(names)) if mask >> i & 1)


class CompiledEvaluator:
    """Extension-backed evaluator over the flat model arrays."""

    name = "compiled"

    def __init__(
        self,
        model: CgmModel,
        require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
        node: str | None = None,
    ):
        if not HAVE_COMPILED:
            raise RuntimeError("the compiled engine is not available in this install")
        self.model = model
        self.require = _normalize_require(require)
        self.node = node
        cm = compile_model(model, self.require, node)
        self.compiled = cm
        n_metrics = len(cm.metric_names)
        self._arrays = {
            "kind": cm.kind,
            "applic": cm.applic,
            "interp": cm.interp,
            "child_start": cm.child_start,
            "child_count": cm.child_count,
            "children": _nonempty(cm.children, np.intc),
            "prov_start": cm.prov_start,
            "prov_count": cm.prov_count,
            "prov_cond": _nonempty(cm.prov_cond, np.intc),
            "prov_metric": _nonempty(cm.prov_metric, np.intc),
            "prov_value": _nonempty(cm.prov_value, np.float64),
            "interp_row_start": _nonempty(cm.interp_row_start, np.intc),
            "row_cond": _nonempty(cm.row_cond, np.intc),
            "row_is_baseline": _nonempty(cm.row_is_baseline, np.uint8),
            "row_cstart": _nonempty(cm.row_cstart, np.intc),
            "c_cond": _nonempty(cm.c_cond, np.intc),
            "c_metric": _nonempty(cm.c_metric, np.intc),
            "c_cmp": _nonempty(cm.c_cmp, np.int8),
            "c_thr": _nonempty(cm.c_thr, np.float64),
            "cond_op": cm.cond_op,
            "cond_arg": cm.cond_arg,
            "cond_start": cm.cond_start,
            "req0_active": _nonempty(cm.req0_active, np.uint8),
            "req0_cmp": _nonempty(cm.req0_cmp, np.int8),
            "req0_thr": _nonempty(cm.req0_thr, np.float64),
            "n_nodes": cm.n_nodes,
            "n_conds": len(cm.cond_start) - 1,
            "n_contexts": len(cm.context_names),
            "n_metrics": n_metrics,
        }
        cols = max(n_metrics, 1)
        self._workspace = {
            "active_flags": np.zeros(max(len(cm.context_names), 1), dtype=np.uint8),
            "cond_values": np.zeros(len(cm.cond_start) - 1, dtype=np.uint8),
            "stack": np.zeros(cm.cond_stack_cap, dtype=np.uint8),
            "req_active": np.zeros((cm.req_rows, cols), dtype=np.uint8),
            "req_cmp": np.zeros((cm.req_rows, cols), dtype=np.int8),
            "req_thr": np.zeros((cm.req_rows, cols), dtype=np.float64),
            "eff_active": np.zeros(cols, dtype=np.uint8),
            "eff_cmp": np.zeros(cols, dtype=np.int8),
            "eff_thr": np.zeros(cols, dtype=np.float64),
            "plan_out": np.zeros(max(cm.n_leaves, 1), dtype=np.intc),
            "trace_node": np.zeros(cm.depth + 2, dtype=np.intc),
            "trace_reason": np.zeros(cm.depth + 2, dtype=np.int8),
            "trace_metric": np.zeros(cm.depth + 2, dtype=np.intc),
            "trace_cmp": np.zeros(cm.depth + 2, dtype=np.int8),
            "trace_thr": np.zeros(cm.depth + 2, dtype=np.float64),
            "trace_value": np.zeros(cm.depth + 2, dtype=np.float64),
            "trace_has_value": np.zeros(cm.depth + 2, dtype=np.uint8),
        }
        self._kernel = _ckernel.CEvaluator(self._arrays, self._workspace)

    def evaluate(self, ctx: ContextSet | Iterable[str] | None) -> tuple[AchievabilityOutcome, EvalStats]:
        context = _normalize_ctx(self.model, ctx)
        mask = self.compiled.context_mask(context.active)
        return self._decode(self._kernel.evaluate_mask(mask))

    def evaluate_mask(self, mask: int) -> tuple[AchievabilityOutcome, EvalStats]:
        return self._decode(self._kernel.evaluate_mask(mask))

    def verdict_mask(self, mask: int) -> bool:
        status = self._kernel.evaluate_mask(mask)
        if status < 0:
            self._raise_algebra_error()
        return status == 1

    def _decode(self, status: int) -> tuple[AchievabilityOutcome, EvalStats]:
        kern = self._kernel
        if status < 0:
            self._raise_algebra_error()
        stats = EvalStats(nodes_visited=kern.visited, leaves_checked=kern.leaves)
        cm = self.compiled
        if status == 1:
            plan_ids = frozenset(
                cm.node_ids[i] for i in self._workspace["plan_out"][: kern.plan_len]
            )
            return AchievabilityOutcome.achieved(Plan(plan_ids)), stats
        ws = self._workspace
        entries = []
        for t in range(kern.trace_len):
            node_id = cm.node_ids[ws["trace_node"][t]]
            reason = int(ws["trace_reason"][t])
            if reason == 1:
                metric = cm.metric_names[ws["trace_metric"][t]]
                qc = QualityConstraint(
                    metric,
                    CMP_FROM_CODE[int(ws["trace_cmp"][t])],
                    float(ws["trace_thr"][t]),
                )
                value = float(ws["trace_value"][t]) if ws["trace_has_value"][t] else None
                entries.append(
                    TraceEntry(
                        node_id,
                        FailureReason.QC_VIOLATED,
                        metric=metric,
                        required=qc,
                        provided=value,
                    )
                )
            elif reason == 2:
                entries.append(TraceEntry(node_id, FailureReason.CHILD_FAILED))
            elif reason == 3:
                entries.append(
                    TraceEntry(
                        node_id,
                        FailureReason.INAPPLICABLE,
                        detail="no applicable refinement in this context",
                    )
                )
            else:
                entries.append(TraceEntry(node_id, FailureReason.INAPPLICABLE))
        return AchievabilityOutcome.failed(entries), stats

    def _raise_algebra_error(self):
        metric = self.compiled.metric_names[self._kernel.err_metric]
        raise ConstraintAlgebraError(
            f"conflicting bound directions for metric {metric!r}"
        )


def _nonempty(arr: np.ndarray, dtype) -> np.ndarray:
    # Zero-length buffers still need a valid typed view.
    if arr.size == 0:
        return np.zeros(1, dtype=dtype)
    return arr


def evaluator_for(
    model: CgmModel,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
    node: str | None = None,
    engine: str = "auto",
) -> PythonEvaluator | CompiledEvaluator:
    """Build an evaluator; engine is "auto", "python" or "compiled"."""

    if engine == "python":
        return PythonEvaluator(model, require, node)
    if engine == "compiled":
        return CompiledEvaluator(model, require, node)
    if engine != "auto":
        raise ValueError(f"unknown engine {engine!r}")
    if (
        HAVE_COMPILED
        and len(model.contexts) <= 64
        and model.depth <= _COMPILED_DEPTH_LIMIT
    ):
        return CompiledEvaluator(model, require, node)
    return PythonEvaluator(model, require, node)
