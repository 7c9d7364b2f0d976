"""Solver for boolean instances: compile subtree profiles bottom-up, then pick
the best feasible plan at the root.

The quality of exploring a subtree with an all-negative readout is summarized
by the triple (f, g, r): f and g are the probabilities that every selected test
inside the subtree reads negative given the subtree root's state is 1 resp. 0,
and r is the best hypothesis posterior inside the subtree under the all-negative
outcome. The external input p is the posterior-positive probability of the
subtree root given everything selected outside the subtree. All composed values
run on grid-cell midpoints so that each node's table stays polynomial.
"""
from __future__ import annotations

import itertools
import time as _time
from dataclasses import dataclass

from .grids import GridSpec, lerp
from .model import BOOLEAN, Instance, bfs_order, tree_stats
from .profiles import (
    EMPTY_PLAN,
    CondPerf,
    Plan,
    ProfileTable,
    TableStats,
    merge_plans,
    plan_from_counts,
)
from .solution import Solution

NEG_INF = float("-inf")


@dataclass(frozen=True)
class BooleanGrids:
    """Discretization steps for the four quality coordinates (p, f, g, r)."""

    p: GridSpec
    f: GridSpec
    g: GridSpec
    r: GridSpec

    @classmethod
    def from_steps(cls, eps_p: float, eps_f: float, eps_g: float, eps_r: float) -> "BooleanGrids":
        return cls(GridSpec(eps_p), GridSpec(eps_f), GridSpec(eps_g), GridSpec(eps_r))

    @classmethod
    def from_epsilon(cls, n: int, h: int, epsilon: float) -> "BooleanGrids":
        """Step recipe guaranteeing a total gap of at most epsilon (plus the
        false-positive allowance) for a tree with n nodes and height h edges."""
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        h_eff = max(h, 1)
        return cls.from_steps(
            eps_p=epsilon / (3.0 * h_eff),
            eps_f=epsilon / (6.0 * n),
            eps_g=epsilon / (6.0 * n),
            eps_r=epsilon / 3.0,
        )

    def gap_bound(self, n: int, h: int, zeta_max: float) -> float:
        """Additive optimality-gap bound of the compiled solution."""
        eps_s = max(self.f.eps, self.g.eps)
        return h * self.p.eps + 2.0 * n * eps_s + self.r.eps + n * zeta_max

    def as_dict(self) -> dict[str, float]:
        return {"eps_p": self.p.eps, "eps_f": self.f.eps,
                "eps_g": self.g.eps, "eps_r": self.r.eps}


def _posterior01(p: float, f: float, g: float) -> float:
    """P(state=1 | summaries): p*f normalized, 0 when the evidence is impossible."""
    den = p * f + (1.0 - p) * g
    if den <= 0.0:
        return 0.0
    return p * f / den


def psi_leaf(p: float, m: int, params, is_hypothesis: bool) -> tuple[float, float, float]:
    """Quality triple of a leaf given external input p and m readings."""
    f = params.theta ** m
    g = (1.0 - params.zeta) ** m
    r = _posterior01(p, f, g) if is_hypothesis else 0.0
    return f, g, r


def psi_internal(
    p: float,
    m: int,
    params,
    is_hypothesis: bool,
    child_edges: list[tuple[float, float]],
    child_qualities: list[tuple[float, float, float]],
    formula: str = "corrected",
) -> tuple[tuple[float, float, float], list[float]]:
    """Quality triple of an internal node plus the external inputs it induces
    on each child.

    Each child external is the posterior-positive probability of the child
    given everything outside the child's subtree: the node's own readings, the
    sibling subtrees, and the node's external input p. With formula="printed"
    the Bayes normalization is applied outside the edge interpolation instead
    of to the conditioned parent posterior; that variant does not reproduce
    exact tree conditioning (it can even leave [0, 1]) and exists only for
    comparison in the diagnostics tests.
    """
    wf = params.theta ** m
    wg = (1.0 - params.zeta) ** m
    fps: list[float] = []
    gps: list[float] = []
    for (alpha, beta), (fi, gi, _ri) in zip(child_edges, child_qualities):
        fps.append(lerp(fi, gi, alpha))
        gps.append(lerp(fi, gi, beta))
    f = wf
    g = wg
    for v in fps:
        f *= v
    for v in gps:
        g *= v
    r = _posterior01(p, f, g) if is_hypothesis else 0.0
    for _fi, _gi, ri in child_qualities:
        if ri > r:
            r = ri
    externals: list[float] = []
    for i, (alpha, beta) in enumerate(child_edges):
        a_i = wf
        c_i = wg
        for j in range(len(child_edges)):
            if j != i:
                a_i *= fps[j]
                c_i *= gps[j]
        den = p * a_i + (1.0 - p) * c_i
        if formula == "printed":
            externals.append(lerp(alpha, beta, p * a_i) / den if den > 0.0 else 0.0)
        else:
            q = p * a_i / den if den > 0.0 else 0.0
            externals.append(lerp(alpha, beta, q))
    return (f, g, r), externals


@dataclass(frozen=True)
class BooleanPlanEval:
    """Exact (grid-free) recursion values for a fixed plan."""

    f: float
    g: float
    r: float
    expected_reward: float


def evaluate_plan(inst: Instance, plan: Plan, formula: str = "corrected") -> BooleanPlanEval:
    """Run the quality recursion on exact values for one fixed plan.

    This is the diagnostic counterpart of the compiled solver: no grids, no
    tables. With zero false-positive rates the returned expected_reward equals
    the true expected reward of the plan.
    """
    counts = dict(plan)
    order = bfs_order(inst)
    root = inst.node(1)
    alpha1 = root.params.alpha

    weights: dict[int, tuple[float, float]] = {}
    for nid in order:
        nd = inst.node(nid)
        m = counts.get(nid, 0)
        weights[nid] = (nd.params.theta ** m, (1.0 - nd.params.zeta) ** m)

    fg: dict[int, tuple[float, float]] = {}
    for nid in reversed(order):
        wf, wg = weights[nid]
        f, g = wf, wg
        for cid in inst.children(nid):
            cp = inst.node(cid).params
            cf, cg = fg[cid]
            f *= lerp(cf, cg, cp.alpha)
            g *= lerp(cf, cg, cp.beta)
        fg[nid] = (f, g)

    p_of: dict[int, float] = {1: alpha1}
    for nid in order:
        kids = inst.children(nid)
        if not kids:
            continue
        p = p_of[nid]
        wf, wg = weights[nid]
        fps = []
        gps = []
        for cid in kids:
            cp = inst.node(cid).params
            cf, cg = fg[cid]
            fps.append(lerp(cf, cg, cp.alpha))
            gps.append(lerp(cf, cg, cp.beta))
        for i, cid in enumerate(kids):
            a_i = wf
            c_i = wg
            for j in range(len(kids)):
                if j != i:
                    a_i *= fps[j]
                    c_i *= gps[j]
            den = p * a_i + (1.0 - p) * c_i
            cp = inst.node(cid).params
            if formula == "printed":
                p_of[cid] = lerp(cp.alpha, cp.beta, p * a_i) / den if den > 0.0 else 0.0
            else:
                q = p * a_i / den if den > 0.0 else 0.0
                p_of[cid] = lerp(cp.alpha, cp.beta, q)

    r_of: dict[int, float] = {}
    for nid in reversed(order):
        nd = inst.node(nid)
        f, g = fg[nid]
        r = _posterior01(p_of[nid], f, g) if nd.hypothesis else 0.0
        for cid in inst.children(nid):
            if r_of[cid] > r:
                r = r_of[cid]
        r_of[nid] = r

    f, g = fg[1]
    r = r_of[1]
    expected = lerp(r, 1.0, lerp(f, g, alpha1))
    return BooleanPlanEval(f=f, g=g, r=r, expected_reward=expected)


def _compile_node(inst: Instance, nid: int, grids: BooleanGrids,
                  tables: dict[int, ProfileTable]) -> ProfileTable:
    node = inst.node(nid)
    children = inst.children(nid)
    hyp = node.hypothesis
    theta = node.params.theta
    zeta = node.params.zeta
    cost = node.cost
    budget = inst.budget

    pgrid, fgrid, ggrid, rgrid = grids.p, grids.f, grids.g, grids.r
    preps = pgrid.representatives
    dp = pgrid.d
    rindex = rgrid.index
    table = ProfileTable((pgrid, fgrid, ggrid, rgrid), budget)
    insert = table.insert

    if not children:
        for m in inst.obs_options(nid):
            t0 = m * cost
            if t0 > budget:
                break
            wf = theta ** m
            wg = (1.0 - zeta) ** m
            fc = fgrid.index(wf)
            gc = ggrid.index(wg)
            own = ((nid, m),) if m else EMPTY_PLAN
            for pc in range(dp):
                p = preps[pc]
                r0 = _posterior01(p, wf, wg) if hyp else 0.0
                insert(CondPerf(own, t0, pc, (fc, gc, rindex(r0)), (wf, wg, r0)))
        return table

    freps = fgrid.representatives
    greps = ggrid.representatives
    rreps = rgrid.representatives
    pindex = pgrid.index

    # Per child: edge parameters plus its table re-indexed by (f,g) cells, then
    # by p cell, holding (r representative, time, plan) rows.
    kids = []
    for cid in children:
        cp = inst.node(cid).params
        by_fg: dict[tuple[int, int], dict[int, list[tuple[float, int, Plan]]]] = {}
        for key, entry in tables[cid].entries.items():
            cpc, cfc, cgc, crc = key
            by_fg.setdefault((cfc, cgc), {}).setdefault(cpc, []).append(
                (rreps[crc], entry.time, entry.plan)
            )
        for per_p in by_fg.values():
            for rows in per_p.values():
                rows.sort(key=lambda row: (row[1], row[2], row[0]))
        kids.append((cp.alpha, cp.beta, by_fg, sorted(by_fg)))
    k = len(kids)

    for m in inst.obs_options(nid):
        t0 = m * cost
        if t0 > budget:
            break
        wf = theta ** m
        wg = (1.0 - zeta) ** m
        own = ((nid, m),) if m else EMPTY_PLAN
        for combo in itertools.product(*(kd[3] for kd in kids)):
            fps = []
            gps = []
            for (alpha, beta, _t, _k), (cfc, cgc) in zip(kids, combo):
                fr = freps[cfc]
                gr = greps[cgc]
                fps.append(alpha * fr + (1.0 - alpha) * gr)
                gps.append(beta * fr + (1.0 - beta) * gr)
            f = wf
            g = wg
            for v in fps:
                f *= v
            for v in gps:
                g *= v
            fcell = fgrid.index(f)
            gcell = ggrid.index(g)
            excl = []
            for i in range(k):
                a_i = wf
                c_i = wg
                for j in range(k):
                    if j != i:
                        a_i *= fps[j]
                        c_i *= gps[j]
                excl.append((a_i, c_i))
            maps = [kd[2][fg_pair] for kd, fg_pair in zip(kids, combo)]

            for pc in range(dp):
                p = preps[pc]
                rows_per_child = []
                feasible = True
                for i in range(k):
                    a_i, c_i = excl[i]
                    den = p * a_i + (1.0 - p) * c_i
                    q = p * a_i / den if den > 0.0 else 0.0
                    alpha, beta = kids[i][0], kids[i][1]
                    p_i = q * alpha + (1.0 - q) * beta
                    rows = maps[i].get(pindex(p_i))
                    if rows is None:
                        feasible = False
                        break
                    rows_per_child.append(rows)
                if not feasible:
                    continue
                pf = p * f
                den = pf + (1.0 - p) * g
                r0 = pf / den if (hyp and den > 0.0) else 0.0
                if k == 1:
                    for rrep, ct, cplan in rows_per_child[0]:
                        t = t0 + ct
                        if t > budget:
                            continue
                        r = r0 if r0 >= rrep else rrep
                        plan = merge_plans((cplan, own)) if m else cplan
                        insert(CondPerf(plan, t, pc, (fcell, gcell, rindex(r)), (f, g, r)))
                else:
                    for picked in itertools.product(*rows_per_child):
                        t = t0
                        r = r0
                        for rrep, ct, _pl in picked:
                            t += ct
                            if rrep > r:
                                r = rrep
                        if t > budget:
                            continue
                        parts = [pl for _rr, _ct, pl in picked]
                        if m:
                            parts.append(own)
                        insert(CondPerf(merge_plans(parts), t, pc,
                                        (fcell, gcell, rindex(r)), (f, g, r)))
    return table


def compile_profiles(inst: Instance, grids: BooleanGrids,
                     threads: int = 1) -> tuple[ProfileTable, list[TableStats]]:
    """Compile every subtree's profile table bottom-up; return the root table.

    Subtrees at the same depth are independent and may be compiled in parallel;
    the result is identical for any thread count because each table's content
    is insertion-order independent.
    """
    if inst.kind != BOOLEAN:
        raise ValueError("compile_profiles requires a boolean instance")
    order = bfs_order(inst)
    depth = {1: 0}
    for nid in order:
        for cid in inst.children(nid):
            depth[cid] = depth[nid] + 1
    levels: dict[int, list[int]] = {}
    for nid in order:
        levels.setdefault(depth[nid], []).append(nid)

    tables: dict[int, ProfileTable] = {}
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for d in sorted(levels, reverse=True):
                nids = sorted(levels[d])
                for nid, tab in zip(
                    nids, pool.map(lambda s: _compile_node(inst, s, grids, tables), nids)
                ):
                    tables[nid] = tab
    else:
        for d in sorted(levels, reverse=True):
            for nid in sorted(levels[d]):
                tables[nid] = _compile_node(inst, nid, grids, tables)

    stats = [TableStats(nid, len(tables[nid]), tables[nid].capacity())
             for nid in sorted(tables)]
    return tables[1], stats


def utility(cp: CondPerf, alpha_1: float, budget: int, grids: BooleanGrids) -> float:
    """Composite utility of a root-table entry, -inf when inapplicable.

    An entry applies when its external-input cell matches the root prior and
    its plan is affordable; the utility mixes the all-negative-outcome reward
    with the certain reward of a positive reading.
    """
    if cp.time > budget or cp.p_cell != grids.p.index(alpha_1):
        return NEG_INF
    fc, gc, rc = cp.q_cells
    p_neg = lerp(grids.f.representatives[fc], grids.g.representatives[gc], alpha_1)
    return lerp(grids.r.representatives[rc], 1.0, p_neg)


def _pad_free_nodes(inst: Instance, plan: Plan) -> Plan:
    """Raise zero-cost measurable nodes to the maximum observation count."""
    counts = dict(plan)
    for nd in inst.nodes:
        if nd.measurable and nd.cost == 0:
            counts[nd.id] = inst.max_obs_per_node
    return plan_from_counts(counts)


def solve(inst: Instance, epsilon: float | None = None,
          grids: BooleanGrids | None = None, threads: int = 1) -> Solution:
    """Compile and select the best plan for a boolean instance.

    Exactly one of epsilon (step recipe) or explicit grids must be given.
    """
    if (epsilon is None) == (grids is None):
        raise ValueError("provide exactly one of epsilon or grids")
    n, h, _c = tree_stats(inst)
    if grids is None:
        grids = BooleanGrids.from_epsilon(n, h, epsilon)

    started = _time.perf_counter()
    root_table, stats = compile_profiles(inst, grids, threads=threads)
    alpha1 = inst.node(1).params.alpha
    best_cp = None
    best_u = NEG_INF
    for key in sorted(root_table.entries):
        cp = root_table.entries[key]
        u = utility(cp, alpha1, inst.budget, grids)
        if u == NEG_INF:
            continue
        if (best_cp is None or u > best_u
                or (u == best_u and (cp.time, cp.plan) < (best_cp.time, best_cp.plan))):
            best_cp = cp
            best_u = u
    assert best_cp is not None  # the all-zero plan is always present
    millis = int((_time.perf_counter() - started) * 1000.0)

    return Solution(
        kind=BOOLEAN,
        subset=_pad_free_nodes(inst, best_cp.plan),
        time_used=best_cp.time,
        predicted_reward=best_u,
        delta_u_bound=grids.gap_bound(n, h, inst.zeta_max),
        grids_used=grids.as_dict(),
        solver_millis=millis,
        table_stats=stats,
    )
