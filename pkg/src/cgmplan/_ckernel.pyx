# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled achievability evaluator over the flat model arrays.

Mirrors the pure-Python reference in cgmplan.reasoner step for step:
same traversal order, same constraint folding, same failure traces,
same work counters.  Opcode, comparison and reason codes match the
constants in cgmplan.kernel; parity is enforced by the engine test
suite, not by shared headers.

The evaluator owns no Python objects on the hot path.  All buffers are
typed memoryviews handed in by cgmplan.engine, which also decodes the
plan and trace buffers back into domain objects.
"""


cdef class CEvaluator:
    # Model arrays.
    cdef signed char[:] kind
    cdef int[:] applic
    cdef int[:] interp
    cdef int[:] child_start
    cdef int[:] child_count
    cdef int[:] children
    cdef int[:] prov_start
    cdef int[:] prov_count
    cdef int[:] prov_cond
    cdef int[:] prov_metric
    cdef double[:] prov_value
    cdef int[:] interp_row_start
    cdef int[:] row_cond
    cdef unsigned char[:] row_is_baseline
    cdef int[:] row_cstart
    cdef int[:] c_cond
    cdef int[:] c_metric
    cdef signed char[:] c_cmp
    cdef double[:] c_thr
    cdef signed char[:] cond_op
    cdef int[:] cond_arg
    cdef int[:] cond_start
    cdef unsigned char[:] req0_active
    cdef signed char[:] req0_cmp
    cdef double[:] req0_thr
    cdef int n_nodes, n_conds, n_contexts, n_metrics

    # Workspaces.
    cdef unsigned char[:] active_flags
    cdef unsigned char[:] cond_values
    cdef unsigned char[:] stack
    cdef unsigned char[:, :] req_active
    cdef signed char[:, :] req_cmp
    cdef double[:, :] req_thr
    cdef unsigned char[:] eff_active
    cdef signed char[:] eff_cmp
    cdef double[:] eff_thr

    # Outputs, read by the engine after each call.
    cdef int[:] plan_out
    cdef int[:] trace_node
    cdef signed char[:] trace_reason
    cdef int[:] trace_metric
    cdef signed char[:] trace_cmp
    cdef double[:] trace_thr
    cdef double[:] trace_value
    cdef unsigned char[:] trace_has_value
    cdef public int plan_len
    cdef public int trace_len
    cdef public int visited
    cdef public int leaves
    cdef public int err_metric

    def __init__(self, model, workspace):
        self.kind = model["kind"]
        self.applic = model["applic"]
        self.interp = model["interp"]
        self.child_start = model["child_start"]
        self.child_count = model["child_count"]
        self.children = model["children"]
        self.prov_start = model["prov_start"]
        self.prov_count = model["prov_count"]
        self.prov_cond = model["prov_cond"]
        self.prov_metric = model["prov_metric"]
        self.prov_value = model["prov_value"]
        self.interp_row_start = model["interp_row_start"]
        self.row_cond = model["row_cond"]
        self.row_is_baseline = model["row_is_baseline"]
        self.row_cstart = model["row_cstart"]
        self.c_cond = model["c_cond"]
        self.c_metric = model["c_metric"]
        self.c_cmp = model["c_cmp"]
        self.c_thr = model["c_thr"]
        self.cond_op = model["cond_op"]
        self.cond_arg = model["cond_arg"]
        self.cond_start = model["cond_start"]
        self.req0_active = model["req0_active"]
        self.req0_cmp = model["req0_cmp"]
        self.req0_thr = model["req0_thr"]
        self.n_nodes = model["n_nodes"]
        self.n_conds = model["n_conds"]
        self.n_contexts = model["n_contexts"]
        self.n_metrics = model["n_metrics"]

        self.active_flags = workspace["active_flags"]
        self.cond_values = workspace["cond_values"]
        self.stack = workspace["stack"]
        self.req_active = workspace["req_active"]
        self.req_cmp = workspace["req_cmp"]
        self.req_thr = workspace["req_thr"]
        self.eff_active = workspace["eff_active"]
        self.eff_cmp = workspace["eff_cmp"]
        self.eff_thr = workspace["eff_thr"]
        self.plan_out = workspace["plan_out"]
        self.trace_node = workspace["trace_node"]
        self.trace_reason = workspace["trace_reason"]
        self.trace_metric = workspace["trace_metric"]
        self.trace_cmp = workspace["trace_cmp"]
        self.trace_thr = workspace["trace_thr"]
        self.trace_value = workspace["trace_value"]
        self.trace_has_value = workspace["trace_has_value"]

        # The caller's base requirements live in row 0 and are never
        # overwritten: resolution always writes rows >= 1.
        cdef int m
        for m in range(self.n_metrics):
            self.req_active[0, m] = self.req0_active[m]
            self.req_cmp[0, m] = self.req0_cmp[m]
            self.req_thr[0, m] = self.req0_thr[m]

    def evaluate_mask(self, unsigned long long mask):
        """Evaluate with active contexts given as a bitmask (bit i =
        i-th declared context).  Returns 1 achievable, 0 unachievable,
        -1 constraint-direction conflict (see err_metric)."""
        cdef int j
        for j in range(self.n_contexts):
            self.active_flags[j] = <unsigned char> ((mask >> j) & 1)
        return self._run()

    def evaluate_flags(self, unsigned char[:] flags):
        cdef int j
        for j in range(self.n_contexts):
            self.active_flags[j] = flags[j]
        return self._run()

    cdef int _run(self) noexcept:
        self._eval_conditions()
        self.plan_len = 0
        self.trace_len = 0
        self.visited = 0
        self.leaves = 0
        self.err_metric = -1
        return self._eval(0, 0)

    cdef void _eval_conditions(self) noexcept:
        cdef int c, t, sp, k, a
        cdef signed char op
        cdef unsigned char v
        for c in range(self.n_conds):
            sp = 0
            for t in range(self.cond_start[c], self.cond_start[c + 1]):
                op = self.cond_op[t]
                a = self.cond_arg[t]
                if op == 0:        # TRUE
                    self.stack[sp] = 1
                    sp += 1
                elif op == 1:      # ATOM
                    self.stack[sp] = self.active_flags[a]
                    sp += 1
                elif op == 2:      # NOT
                    self.stack[sp - 1] = 1 - self.stack[sp - 1]
                elif op == 3:      # AND of a operands
                    v = 1
                    for k in range(a):
                        v = v & self.stack[sp - 1 - k]
                    sp -= a
                    self.stack[sp] = v
                    sp += 1
                else:              # OR of a operands
                    v = 0
                    for k in range(a):
                        v = v | self.stack[sp - 1 - k]
                    sp -= a
                    self.stack[sp] = v
                    sp += 1
            self.cond_values[c] = self.stack[0]

    cdef void _push_fail(self, int ni, signed char reason) noexcept:
        cdef int t = self.trace_len
        self.trace_node[t] = ni
        self.trace_reason[t] = reason
        self.trace_metric[t] = -1
        self.trace_cmp[t] = 0
        self.trace_thr[t] = 0.0
        self.trace_value[t] = 0.0
        self.trace_has_value[t] = 0
        self.trace_len = t + 1

    cdef void _push_qc(self, int ni, int m, signed char cmp, double thr,
                       double value, unsigned char has_value) noexcept:
        cdef int t = self.trace_len
        self.trace_node[t] = ni
        self.trace_reason[t] = 1   # QC_VIOLATED
        self.trace_metric[t] = m
        self.trace_cmp[t] = cmp
        self.trace_thr[t] = thr
        self.trace_value[t] = value
        self.trace_has_value[t] = has_value
        self.trace_len = t + 1

    cdef int _stricter_eff(self, int m, signed char bcmp, double bthr) noexcept:
        # Fold constraint b into the eff slot for metric m; keep the
        # stricter bound, first argument wins full ties.  -1 on a
        # direction conflict.
        cdef signed char acmp = self.eff_cmp[m]
        cdef double athr = self.eff_thr[m]
        cdef bint a_up = acmp <= 1
        cdef bint b_up = bcmp <= 1
        if a_up != b_up:
            return -1
        if athr != bthr:
            if a_up:
                if bthr < athr:
                    self.eff_cmp[m] = bcmp
                    self.eff_thr[m] = bthr
            else:
                if bthr > athr:
                    self.eff_cmp[m] = bcmp
                    self.eff_thr[m] = bthr
            return 0
        # Equal thresholds: within a direction the smaller code is the
        # strict comparison.
        if bcmp < acmp:
            self.eff_cmp[m] = bcmp
        return 0

    cdef int _stricter_req(self, int row, int m, signed char bcmp, double bthr) noexcept:
        cdef signed char acmp = self.req_cmp[row, m]
        cdef double athr = self.req_thr[row, m]
        cdef bint a_up = acmp <= 1
        cdef bint b_up = bcmp <= 1
        if a_up != b_up:
            return -1
        if athr != bthr:
            if a_up:
                if bthr < athr:
                    self.req_cmp[row, m] = bcmp
                    self.req_thr[row, m] = bthr
            else:
                if bthr > athr:
                    self.req_cmp[row, m] = bcmp
                    self.req_thr[row, m] = bthr
            return 0
        if bcmp < acmp:
            self.req_cmp[row, m] = bcmp
        return 0

    cdef int _resolve(self, int ni, int src, int dst) noexcept:
        # Effective constraints of the node's interpretation, merged
        # over the inherited requirements into requirement row dst.
        cdef int it = self.interp[ni]
        cdef int r0 = self.interp_row_start[it]
        cdef int r1 = self.interp_row_start[it + 1]
        cdef int m, r, c
        for m in range(self.n_metrics):
            self.req_active[dst, m] = self.req_active[src, m]
            self.req_cmp[dst, m] = self.req_cmp[src, m]
            self.req_thr[dst, m] = self.req_thr[src, m]
            self.eff_active[m] = 0
        # Context-gated rows fold strictly, in declaration order.  Each
        # constraint's gate already includes the row condition, so a row
        # whose condition fails can be skipped wholesale.
        for r in range(r0, r1):
            if self.row_is_baseline[r]:
                continue
            if not self.cond_values[self.row_cond[r]]:
                continue
            for c in range(self.row_cstart[r], self.row_cstart[r + 1]):
                if not self.cond_values[self.c_cond[c]]:
                    continue
                m = self.c_metric[c]
                if self.eff_active[m]:
                    if self._stricter_eff(m, self.c_cmp[c], self.c_thr[c]) < 0:
                        self.err_metric = m
                        return -1
                else:
                    self.eff_active[m] = 1
                    self.eff_cmp[m] = self.c_cmp[c]
                    self.eff_thr[m] = self.c_thr[c]
        # The baseline row only fills metrics no gated row mentioned.
        for r in range(r0, r1):
            if not self.row_is_baseline[r]:
                continue
            for c in range(self.row_cstart[r], self.row_cstart[r + 1]):
                if not self.cond_values[self.c_cond[c]]:
                    continue
                m = self.c_metric[c]
                if not self.eff_active[m]:
                    self.eff_active[m] = 1
                    self.eff_cmp[m] = self.c_cmp[c]
                    self.eff_thr[m] = self.c_thr[c]
        # Merge with inherited requirements; inherited wins full ties.
        for m in range(self.n_metrics):
            if not self.eff_active[m]:
                continue
            if self.req_active[dst, m]:
                if self._stricter_req(dst, m, self.eff_cmp[m], self.eff_thr[m]) < 0:
                    self.err_metric = m
                    return -1
            else:
                self.req_active[dst, m] = 1
                self.req_cmp[dst, m] = self.eff_cmp[m]
                self.req_thr[dst, m] = self.eff_thr[m]
        return 0

    cdef int _check_leaf(self, int ni, int lev) noexcept:
        cdef int m, p, p0, p1
        cdef bint found, ok
        cdef double val = 0.0
        cdef signed char cmp
        cdef double thr
        for m in range(self.n_metrics):
            if not self.req_active[lev, m]:
                continue
            p0 = self.prov_start[ni]
            p1 = p0 + self.prov_count[ni]
            found = False
            for p in range(p0, p1):
                if self.prov_metric[p] == m and self.cond_values[self.prov_cond[p]]:
                    found = True
                    val = self.prov_value[p]
                    break
            cmp = self.req_cmp[lev, m]
            thr = self.req_thr[lev, m]
            if not found:
                self._push_qc(ni, m, cmp, thr, 0.0, 0)
                return 0
            if cmp == 0:
                ok = val < thr
            elif cmp == 1:
                ok = val <= thr
            elif cmp == 2:
                ok = val > thr
            else:
                ok = val >= thr
            if not ok:
                self._push_qc(ni, m, cmp, thr, val, 1)
                return 0
        self.plan_out[self.plan_len] = ni
        self.plan_len += 1
        return 1

    cdef int _eval(self, int ni, int lev) noexcept:
        self.visited += 1
        if not self.cond_values[self.applic[ni]]:
            self._push_fail(ni, 0)   # INAPPLICABLE
            return 0
        cdef signed char k = self.kind[ni]
        if k >= 2:                   # task or delegation
            self.leaves += 1
            return self._check_leaf(ni, lev)
        cdef int lev2 = lev
        if self.interp[ni] >= 0:
            lev2 = lev + 1
            if self._resolve(ni, lev, lev2) < 0:
                return -1
        cdef bint is_or = (k == 1)
        cdef int cs = self.child_start[ni]
        cdef int cc = self.child_count[ni]
        cdef int i, ci, r
        cdef bint any_app = False
        cdef int tmark = self.trace_len
        cdef int pmark = self.plan_len
        for i in range(cc):
            ci = self.children[cs + i]
            if not self.cond_values[self.applic[ci]]:
                continue
            any_app = True
            if is_or:
                # Only the most recent candidate's failure chain and
                # partial plan survive.
                self.trace_len = tmark
                self.plan_len = pmark
            r = self._eval(ci, lev2)
            if r < 0:
                return r
            if r == 1:
                if is_or:
                    return 1
            elif not is_or:
                self._push_fail(ni, 2)   # CHILD_FAILED
                return 0
        if not any_app:
            self._push_fail(ni, 3)       # no applicable refinement
            return 0
        if is_or:
            self._push_fail(ni, 2)
            return 0
        return 1
