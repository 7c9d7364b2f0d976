"""Exact reference evaluation of observation plans, independent of the solvers.

Boolean instances are evaluated by full joint enumeration over state and test
outcomes; Gaussian instances by building the joint covariance of states and
selected readings and conditioning via a Schur complement. Neither path uses
the solvers' message recursions, so agreement between the two is meaningful
evidence of correctness.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grids import logbar
from .model import BOOLEAN, GAUSSIAN, Instance, bfs_order
from .profiles import Plan, plan_time

MAX_BOOL_NODES = 16
MAX_BOOL_READINGS = 16
MAX_BOOL_JOINT_BITS = 26  # 2^bits float64 table must stay in memory
MAX_GAUSS_NODES = 64
MAX_BRUTE_FORCE_PLANS = 2 ** 20


class GuardError(RuntimeError):
    """An enumeration guard was exceeded; the oracle refuses to run."""


@dataclass(frozen=True)
class SubsetEval:
    """Exact evaluation of one observation plan."""

    plan: Plan
    time: int
    exact_reward: float


def _costs(inst: Instance) -> dict[int, int]:
    return {nd.id: nd.cost for nd in inst.nodes}


def _readings(plan: Plan) -> list[int]:
    """Expand a plan into one entry per individual reading."""
    out: list[int] = []
    for nid, m in plan:
        out.extend([nid] * m)
    return out


def _boolean_joint(inst: Instance) -> np.ndarray:
    """Prior over all 2^n joint states; bit i-1 of the index is the value of X_i."""
    n = inst.n
    states = np.arange(2 ** n, dtype=np.int64)
    prior = np.ones(2 ** n)
    for nd in inst.nodes:
        xi = (states >> (nd.id - 1)) & 1
        if nd.parent is None:
            p1 = np.full(2 ** n, nd.params.alpha)
        else:
            xq = (states >> (nd.parent - 1)) & 1
            p1 = np.where(xq == 1, nd.params.alpha, nd.params.beta)
        prior *= np.where(xi == 1, p1, 1.0 - p1)
    return prior


def _negative_likelihoods(inst: Instance, readings: list[int]) -> list[np.ndarray]:
    """Per reading: P(reading = 0 | joint state), vectorized over states."""
    n = inst.n
    states = np.arange(2 ** n, dtype=np.int64)
    liks = []
    for nid in readings:
        nd = inst.node(nid)
        xs = (states >> (nid - 1)) & 1
        liks.append(np.where(xs == 1, nd.params.theta, 1.0 - nd.params.zeta))
    return liks


def _check_boolean_guards(inst: Instance, plan: Plan) -> None:
    total = sum(m for _, m in plan)
    if inst.n > MAX_BOOL_NODES:
        raise GuardError(f"boolean enumeration limited to {MAX_BOOL_NODES} nodes, got {inst.n}")
    if total > MAX_BOOL_READINGS:
        raise GuardError(f"boolean enumeration limited to {MAX_BOOL_READINGS} readings, got {total}")
    if inst.n + total > MAX_BOOL_JOINT_BITS:
        raise GuardError("joint outcome table too large to enumerate")


def boolean_eval_exact(inst: Instance, plan: Plan) -> SubsetEval:
    """Expected reward of a plan by enumerating joint states and test outcomes.

    The reward of one outcome is the best posterior P(X=1 | outcome) over the
    hypothesis nodes; repeated readings at a node are conditionally independent
    given the state.
    """
    if inst.kind != BOOLEAN:
        raise ValueError("boolean_eval_exact requires a boolean instance")
    _check_boolean_guards(inst, plan)

    prior = _boolean_joint(inst)
    readings = _readings(plan)
    joint = prior[np.newaxis, :]  # (outcomes, states), P(outcome, state)
    for lik0 in _negative_likelihoods(inst, readings):
        joint = np.concatenate([joint * lik0, joint * (1.0 - lik0)], axis=0)

    states = np.arange(2 ** inst.n, dtype=np.int64)
    hyp_masks = np.stack(
        [((states >> (h - 1)) & 1).astype(float) for h in inst.hypothesis_ids()],
        axis=1,
    )
    # P(X_h = 1, outcome) per hypothesis; summing the per-outcome max folds the
    # outcome probability into the expectation with no division by P(outcome).
    joint_pos = joint @ hyp_masks
    reward = float(joint_pos.max(axis=1).sum())
    return SubsetEval(plan, plan_time(plan, _costs(inst)), reward)


def boolean_outcome_probabilities(inst: Instance, plan: Plan) -> np.ndarray:
    """P(outcome) for every joint outcome of the plan's readings (diagnostics)."""
    _check_boolean_guards(inst, plan)
    prior = _boolean_joint(inst)
    joint = prior[np.newaxis, :]
    for lik0 in _negative_likelihoods(inst, _readings(plan)):
        joint = np.concatenate([joint * lik0, joint * (1.0 - lik0)], axis=0)
    return joint.sum(axis=1)


def boolean_evidence_likelihoods(inst: Instance, plan: Plan) -> tuple[float, float]:
    """(P(all readings negative | X_1=1), P(all readings negative | X_1=0)).

    Assumes a non-degenerate root prior (both root states have positive mass).
    """
    _check_boolean_guards(inst, plan)
    prior = _boolean_joint(inst)
    all_neg = np.ones_like(prior)
    for lik0 in _negative_likelihoods(inst, _readings(plan)):
        all_neg = all_neg * lik0
    states = np.arange(2 ** inst.n, dtype=np.int64)
    x1 = ((states >> 0) & 1) == 1
    f = float((prior[x1] * all_neg[x1]).sum() / prior[x1].sum())
    g = float((prior[~x1] * all_neg[~x1]).sum() / prior[~x1].sum())
    return f, g


def gaussian_state_covariance(inst: Instance) -> np.ndarray:
    """Joint covariance of all state variables, built by tree recursion."""
    n = inst.n
    cov = np.zeros((n, n))
    done: list[int] = []
    for nid in bfs_order(inst):
        nd = inst.node(nid)
        i = nid - 1
        if nd.parent is None:
            cov[i, i] = nd.params.sigma2
        else:
            q = nd.parent - 1
            for j in (jid - 1 for jid in done):
                cov[i, j] = cov[j, i] = nd.params.a * cov[q, j]
            cov[i, i] = nd.params.a ** 2 * cov[q, q] + nd.params.sigma2
        done.append(nid)
    return cov


def gaussian_posterior_precisions(inst: Instance, plan: Plan) -> np.ndarray:
    """Posterior precision of every state node given the plan's readings.

    Readings with theta = 0 are infinitely noisy and are skipped rather than
    conditioned on. Gaussian posteriors do not depend on the observed values,
    so this is deterministic per plan.
    """
    if inst.kind != GAUSSIAN:
        raise ValueError("gaussian_posterior_precisions requires a gaussian instance")
    if inst.n > MAX_GAUSS_NODES:
        raise GuardError(f"gaussian conditioning limited to {MAX_GAUSS_NODES} nodes, got {inst.n}")

    cov = gaussian_state_covariance(inst)
    readings = [nid for nid in _readings(plan) if inst.node(nid).params.theta > 0.0]
    if readings:
        idx = np.array([nid - 1 for nid in readings])
        cov_xy = cov[:, idx]
        cov_yy = cov[np.ix_(idx, idx)] + np.diag(
            [1.0 / inst.node(nid).params.theta for nid in readings]
        )
        cov = cov - cov_xy @ np.linalg.solve(cov_yy, cov_xy.T)
    return 1.0 / np.diag(cov)


def gaussian_eval_exact(inst: Instance, plan: Plan) -> SubsetEval:
    """Worst-hypothesis normalized-log-precision reward of a plan (exact)."""
    prec = gaussian_posterior_precisions(inst, plan)
    a, b = inst.reward_range
    reward = min(logbar(a, b, float(prec[h - 1])) for h in inst.hypothesis_ids())
    return SubsetEval(plan, plan_time(plan, _costs(inst)), reward)


def eval_exact(inst: Instance, plan: Plan) -> SubsetEval:
    if inst.kind == BOOLEAN:
        return boolean_eval_exact(inst, plan)
    return gaussian_eval_exact(inst, plan)


def iter_feasible_plans(inst: Instance):
    """All plans within budget, enumerated node-by-node in id order."""
    options = [inst.obs_options(nd.id) for nd in inst.nodes]
    costs = _costs(inst)
    for combo in itertools.product(*options):
        plan = tuple(
            (nid, m) for nid, m in zip(range(1, inst.n + 1), combo) if m > 0
        )
        if plan_time(plan, costs) <= inst.budget:
            yield plan


def brute_force_optimum(inst: Instance) -> SubsetEval:
    """Best feasible plan by exhaustive enumeration (ties: smallest plan)."""
    space = 1
    for nd in inst.nodes:
        space *= len(inst.obs_options(nd.id))
        if space > MAX_BRUTE_FORCE_PLANS:
            raise GuardError("plan space exceeds the brute-force enumeration guard")
    best: SubsetEval | None = None
    for plan in iter_feasible_plans(inst):
        ev = eval_exact(inst, plan)
        if best is None or ev.exact_reward > best.exact_reward or (
            ev.exact_reward == best.exact_reward and ev.plan < best.plan
        ):
            best = ev
    assert best is not None  # the empty plan is always feasible
    return best
