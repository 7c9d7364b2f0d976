"""Solver for Gaussian instances: precision message passing compiled on grids.

Subtree quality is the pair (f, r): f is the evidence precision the subtree's
readings contribute to its root (excluding the root's own prior), and r is the
worst normalized-log-precision reward over hypotheses inside the subtree. The
external input p is the precision of the subtree root given everything outside
the subtree, prior included, so a node's posterior precision is p + f. Rewards
are deterministic per plan: Gaussian posterior variances do not depend on the
observed values.
"""
from __future__ import annotations

import itertools
import time as _time
from dataclasses import dataclass

from .grids import GridSpec, logbar, precision_join
from .model import GAUSSIAN, Instance, bfs_order, tree_stats
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
class GaussianGrids:
    """Grids for (p, f, r); p and f live in normalized-log precision space."""

    p: GridSpec
    f: GridSpec
    r: GridSpec

    @classmethod
    def from_steps(cls, eps_p: float, eps_f: float, eps_r: float,
                   reward_range: tuple[float, float]) -> "GaussianGrids":
        return cls(
            GridSpec(eps_p, log_projection=reward_range),
            GridSpec(eps_f, log_projection=reward_range),
            GridSpec(eps_r),
        )

    @classmethod
    def from_epsilon(cls, h: int, epsilon: float,
                     reward_range: tuple[float, float]) -> "GaussianGrids":
        """Step recipe guaranteeing a total gap of at most epsilon for height h.

        The three bound terms h*eps_p, h*eps_f and eps_r each get a third of
        the target, mirroring the boolean recipe.
        """
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        h_eff = max(h, 1)
        return cls.from_steps(epsilon / (3.0 * h_eff), epsilon / (3.0 * h_eff),
                              epsilon / 3.0, reward_range)

    def gap_bound(self, h: int) -> float:
        return h * self.p.eps + h * self.f.eps + self.r.eps

    def as_dict(self) -> dict[str, float]:
        return {"eps_p": self.p.eps, "eps_f": self.f.eps, "eps_r": self.r.eps}


def psi_leaf(p: float, m: int, params, is_hypothesis: bool,
             reward_range: tuple[float, float]) -> tuple[float, float]:
    """(evidence precision, reward) of a leaf given external precision p."""
    f = m * params.theta
    if is_hypothesis:
        r = logbar(reward_range[0], reward_range[1], p + f)
    else:
        r = 1.0
    return f, r


def child_message(f_child: float, alpha: float, beta: float,
                  formula: str = "corrected") -> float:
    """Evidence precision a child subtree passes to its parent.

    The child is a linear function of the parent plus noise of precision beta;
    chaining the child's evidence precision with the edge noise and scaling
    through the squared edge weight gives alpha * join(f, beta). The "printed"
    variant divides by alpha instead; it fails exact covariance conditioning
    whenever the edge weight is not +-1 (see tests/test_gaussian.py) and exists
    only for comparison.
    """
    if formula == "printed":
        return precision_join(f_child, beta) / alpha if alpha > 0.0 else 0.0
    return alpha * precision_join(f_child, beta)


def child_external(s_total: float, alpha: float, beta: float,
                   formula: str = "corrected") -> float:
    """External precision a parent passes down one edge.

    s_total is the parent's precision given everything outside the child's
    subtree (own prior included). Scaling down through the edge divides by the
    squared weight before joining with the edge noise; an edge weight of zero
    decouples the child, which then keeps exactly its own conditional prior.
    The "printed" variant multiplies by alpha instead (comparison only).
    """
    if formula == "printed":
        return precision_join(beta, alpha * s_total)
    if alpha == 0.0:
        return beta
    return precision_join(beta, s_total / alpha)


def psi_internal(
    p: float,
    m: int,
    params,
    is_hypothesis: bool,
    child_edges: list[tuple[float, float]],
    child_qualities: list[tuple[float, float]],
    reward_range: tuple[float, float],
    formula: str = "corrected",
) -> tuple[tuple[float, float], list[float]]:
    """Quality pair of an internal node plus per-child external precisions."""
    own = m * params.theta
    msgs = [child_message(fi, alpha, beta, formula)
            for (alpha, beta), (fi, _ri) in zip(child_edges, child_qualities)]
    f = own + sum(msgs)
    if is_hypothesis:
        r = logbar(reward_range[0], reward_range[1], p + f)
    else:
        r = 1.0
    for _fi, ri in child_qualities:
        if ri < r:
            r = ri
    externals = []
    for i, (alpha, beta) in enumerate(child_edges):
        s_total = p + own
        for j, msg in enumerate(msgs):
            if j != i:
                s_total += msg
        externals.append(child_external(s_total, alpha, beta, formula))
    return (f, r), externals


@dataclass(frozen=True)
class GaussianPlanEval:
    """Exact (grid-free) recursion values for a fixed plan."""

    posterior_precisions: dict[int, float]
    reward: float


def evaluate_plan(inst: Instance, plan: Plan, formula: str = "corrected") -> GaussianPlanEval:
    """Run the precision recursion on exact values for one fixed plan."""
    counts = dict(plan)
    order = bfs_order(inst)

    own = {nid: counts.get(nid, 0) * inst.node(nid).params.theta for nid in order}
    f_of: dict[int, float] = {}
    for nid in reversed(order):
        f = own[nid]
        for cid in inst.children(nid):
            cp = inst.node(cid).params
            f += child_message(f_of[cid], cp.alpha, cp.beta, formula)
        f_of[nid] = f

    p_of: dict[int, float] = {1: inst.node(1).params.beta}
    for nid in order:
        kids = inst.children(nid)
        if not kids:
            continue
        msgs = []
        for cid in kids:
            cp = inst.node(cid).params
            msgs.append(child_message(f_of[cid], cp.alpha, cp.beta, formula))
        base = p_of[nid] + own[nid]
        for i, cid in enumerate(kids):
            s_total = base
            for j, msg in enumerate(msgs):
                if j != i:
                    s_total += msg
            cp = inst.node(cid).params
            p_of[cid] = child_external(s_total, cp.alpha, cp.beta, formula)

    posterior = {nid: p_of[nid] + f_of[nid] for nid in order}
    a, b = inst.reward_range
    reward = min(
        (logbar(a, b, posterior[h]) for h in inst.hypothesis_ids()), default=1.0
    )
    return GaussianPlanEval(posterior_precisions=posterior, reward=reward)


def _compile_node(inst: Instance, nid: int, grids: GaussianGrids,
                  tables: dict[int, ProfileTable]) -> ProfileTable:
    node = inst.node(nid)
    children = inst.children(nid)
    hyp = node.hypothesis
    theta = node.params.theta
    cost = node.cost
    budget = inst.budget
    a_low, b_high = inst.reward_range

    pgrid, fgrid, rgrid = grids.p, grids.f, grids.r
    preps = pgrid.representatives
    dp = pgrid.d
    rindex = rgrid.index
    table = ProfileTable((pgrid, fgrid, rgrid), budget)
    insert = table.insert

    if not children:
        for m in inst.obs_options(nid):
            t0 = m * cost
            if t0 > budget:
                break
            f = m * theta
            fc = fgrid.index(f)
            own = ((nid, m),) if m else EMPTY_PLAN
            for pc in range(dp):
                p = preps[pc]
                r = logbar(a_low, b_high, p + f) if hyp else 1.0
                insert(CondPerf(own, t0, pc, (fc, rindex(r)), (f, r)))
        return table

    freps = fgrid.representatives
    rreps = rgrid.representatives
    pindex = pgrid.index

    kids = []
    for cid in children:
        cp = inst.node(cid).params
        by_f: dict[int, dict[int, list[tuple[float, int, Plan]]]] = {}
        for key, entry in tables[cid].entries.items():
            cpc, cfc, crc = key
            by_f.setdefault(cfc, {}).setdefault(cpc, []).append(
                (rreps[crc], entry.time, entry.plan)
            )
        for per_p in by_f.values():
            for rows in per_p.values():
                rows.sort(key=lambda row: (row[1], row[2], row[0]))
        kids.append((cp.alpha, cp.beta, by_f, sorted(by_f)))
    k = len(kids)

    for m in inst.obs_options(nid):
        t0 = m * cost
        if t0 > budget:
            break
        own_prec = m * theta
        own = ((nid, m),) if m else EMPTY_PLAN
        for combo in itertools.product(*(kd[3] for kd in kids)):
            msgs = []
            for (alpha, beta, _t, _k), cfc in zip(kids, combo):
                msgs.append(child_message(freps[cfc], alpha, beta))
            f = own_prec
            for v in msgs:
                f += v
            fcell = fgrid.index(f)
            maps = [kd[2][cfc] for kd, cfc in zip(kids, combo)]

            for pc in range(dp):
                p = preps[pc]
                base = p + own_prec
                rows_per_child = []
                feasible = True
                for i in range(k):
                    s_total = base
                    for j in range(k):
                        if j != i:
                            s_total += msgs[j]
                    p_i = child_external(s_total, kids[i][0], kids[i][1])
                    rows = maps[i].get(pindex(p_i))
                    if rows is None:
                        feasible = False
                        break
                    rows_per_child.append(rows)
                if not feasible:
                    continue
                r0 = logbar(a_low, b_high, p + f) if hyp else 1.0
                if k == 1:
                    for rrep, ct, cplan in rows_per_child[0]:
                        t = t0 + ct
                        if t > budget:
                            continue
                        r = r0 if r0 <= rrep else rrep
                        plan = merge_plans((cplan, own)) if m else cplan
                        insert(CondPerf(plan, t, pc, (fcell, rindex(r)), (f, r)))
                else:
                    for picked in itertools.product(*rows_per_child):
                        t = t0
                        r = r0
                        for rrep, ct, _pl in picked:
                            t += ct
                            if rrep < r:
                                r = rrep
                        if t > budget:
                            continue
                        parts = [pl for _rr, _ct, pl in picked]
                        if m:
                            parts.append(own)
                        insert(CondPerf(merge_plans(parts), t, pc,
                                        (fcell, rindex(r)), (f, r)))
    return table


def compile_profiles(inst: Instance, grids: GaussianGrids,
                     threads: int = 1) -> tuple[ProfileTable, list[TableStats]]:
    """Compile subtree tables bottom-up for a gaussian instance."""
    if inst.kind != GAUSSIAN:
        raise ValueError("compile_profiles requires a gaussian instance")
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


def utility(cp: CondPerf, beta_1: float, budget: int, grids: GaussianGrids) -> float:
    """Reward representative of a root entry, -inf when inapplicable."""
    if cp.time > budget or cp.p_cell != grids.p.index(beta_1):
        return NEG_INF
    _fc, rc = cp.q_cells
    return grids.r.representatives[rc]


def _pad_free_nodes(inst: Instance, plan: Plan) -> Plan:
    counts = dict(plan)
    for nd in inst.nodes:
        if nd.measurable and nd.cost == 0:
            counts[nd.id] = inst.max_obs_per_node
    return plan_from_counts(counts)


def solve(inst: Instance, epsilon: float | None = None,
          grids: GaussianGrids | None = None, threads: int = 1) -> Solution:
    """Compile and select the best plan for a gaussian instance."""
    if (epsilon is None) == (grids is None):
        raise ValueError("provide exactly one of epsilon or grids")
    n, h, _c = tree_stats(inst)
    if grids is None:
        grids = GaussianGrids.from_epsilon(h, epsilon, inst.reward_range)

    started = _time.perf_counter()
    root_table, stats = compile_profiles(inst, grids, threads=threads)
    beta1 = inst.node(1).params.beta
    best_cp = None
    best_u = NEG_INF
    for key in sorted(root_table.entries):
        cp = root_table.entries[key]
        u = utility(cp, beta1, inst.budget, grids)
        if u == NEG_INF:
            continue
        if (best_cp is None or u > best_u
                or (u == best_u and (cp.time, cp.plan) < (best_cp.time, best_cp.plan))):
            best_cp = cp
            best_u = u
    assert best_cp is not None
    millis = int((_time.perf_counter() - started) * 1000.0)

    return Solution(
        kind=GAUSSIAN,
        subset=_pad_free_nodes(inst, best_cp.plan),
        time_used=best_cp.time,
        predicted_reward=best_u,
        delta_u_bound=grids.gap_bound(h),
        grids_used=grids.as_dict(),
        solver_millis=millis,
        table_stats=stats,
    )
