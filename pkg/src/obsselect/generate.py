"""Deterministic random instance generation.

Instances are pure functions of the generator arguments: one seed, one byte
stream. A knapsack mode produces mutually independent hypothesis nodes with
exact tests and heterogeneous costs, the regime in which subset selection
degenerates to a pure packing problem.
"""
from __future__ import annotations

import dataclasses
import random
import warnings

from .model import (
    BOOLEAN,
    GAUSSIAN,
    BooleanParams,
    GaussianParams,
    Instance,
    Node,
    validate_instance,
)
from . import oracle

_BOOL_DEFAULTS = {
    "prior": (0.1, 0.9),
    "edge": (0.05, 0.95),
    "theta": (0.0, 0.5),
    "p_hypothesis": 0.8,
    "p_measurable": 0.8,
}

_GAUSS_DEFAULTS = {
    "a": (-1.5, 1.5),
    "sigma2": (0.5, 2.0),
    "theta": (0.5, 4.0),
    "p_hypothesis": 0.8,
    "p_measurable": 0.8,
}


def _tree_parents(rng: random.Random, n: int, branching: int) -> list[int | None]:
    parents: list[int | None] = [None]
    child_count = [0] * (n + 1)
    for nid in range(2, n + 1):
        candidates = [j for j in range(1, nid) if child_count[j] < branching]
        parent = rng.choice(candidates)
        child_count[parent] += 1
        parents.append(parent)
    return parents


def _gaussian_reward_range(inst: Instance) -> tuple[float, float]:
    """Fit (a, b) strictly around every reachable posterior precision."""
    import numpy as np

    full_plan = tuple(
        (nid, inst.max_obs_per_node) for nid in inst.measurable_ids()
    )
    priors = 1.0 / np.diag(oracle.gaussian_state_covariance(inst))
    if inst.n <= oracle.MAX_GAUSS_NODES:
        highs = oracle.gaussian_posterior_precisions(inst, full_plan)
    else:
        # Message-inequality bound: each side of a node contributes at most the
        # adjacent conditional precision.
        highs = []
        for nd in inst.nodes:
            top = nd.params.beta + inst.max_obs_per_node * nd.params.theta
            for cid in inst.children(nd.id):
                cp = inst.node(cid).params
                top += cp.alpha * cp.beta
            highs.append(top)
        highs = np.array(highs)
    low = float(priors.min())
    high = float(max(highs.max(), priors.max()))
    return low / 2.0, high * 2.0


def generate_instance(
    kind: str,
    n: int,
    branching: int,
    seed: int,
    cost_range: tuple[int, int] = (1, 8),
    budget_fraction: float = 0.5,
    param_ranges: dict | None = None,
    max_obs_per_node: int = 1,
    zeta_max: float = 0.0,
    reward_range: tuple[float, float] | None = None,
    knapsack: bool = False,
) -> Instance:
    """Build a random valid instance, deterministically from the arguments."""
    if kind not in (BOOLEAN, GAUSSIAN):
        raise ValueError(f"unknown kind {kind!r}")
    if n < 1 or branching < 1:
        raise ValueError("n and branching must be >= 1")
    lo, hi = cost_range
    if not (isinstance(lo, int) and isinstance(hi, int) and 0 <= lo <= hi):
        raise ValueError("cost_range must be integers 0 <= lo <= hi")
    if budget_fraction < 0.0:
        raise ValueError("budget_fraction must be >= 0")
    if max_obs_per_node < 1:
        raise ValueError("max_obs_per_node must be >= 1")
    ranges = dict(_BOOL_DEFAULTS if kind == BOOLEAN else _GAUSS_DEFAULTS)
    if param_ranges:
        unknown = set(param_ranges) - set(ranges)
        if unknown:
            raise ValueError(f"unknown param_ranges keys: {sorted(unknown)}")
        ranges.update(param_ranges)

    rng = random.Random(seed)
    parents = _tree_parents(rng, n, branching)

    hyp = [True] * n if knapsack else [rng.random() < ranges["p_hypothesis"] for _ in range(n)]
    if kind == BOOLEAN:
        meas = [True] * n if knapsack else [
            hyp[i] and rng.random() < ranges["p_measurable"] for i in range(n)
        ]
    else:
        meas = [True] * n if knapsack else [
            rng.random() < ranges["p_measurable"] for _ in range(n)
        ]
    if not any(hyp):
        hyp[0] = True

    nodes = []
    for i in range(n):
        nid = i + 1
        if kind == BOOLEAN:
            if knapsack:
                prior = rng.uniform(*ranges["prior"])
                alpha = beta = prior
            elif parents[i] is None:
                alpha = beta = rng.uniform(*ranges["prior"])
            else:
                alpha = rng.uniform(*ranges["edge"])
                beta = rng.uniform(*ranges["edge"])
            if meas[i]:
                theta = 0.0 if knapsack else rng.uniform(*ranges["theta"])
                zeta = 0.0 if knapsack else rng.uniform(0.0, zeta_max)
            else:
                theta, zeta = 1.0, 0.0
            params = BooleanParams(alpha=alpha, beta=beta, theta=theta, zeta=zeta)
        else:
            a = 0.0 if (parents[i] is None or knapsack) else rng.uniform(*ranges["a"])
            sigma2 = rng.uniform(*ranges["sigma2"])
            theta = rng.uniform(*ranges["theta"]) if meas[i] else 0.0
            params = GaussianParams(a=a, sigma2=sigma2, theta=theta, mu=0.0)
        cost = rng.randint(lo, hi) if meas[i] else 0
        nodes.append(Node(nid, parents[i], hyp[i], meas[i], cost, params))

    budget = round(budget_fraction * sum(nd.cost for nd in nodes if nd.measurable))
    inst = Instance(
        kind=kind,
        nodes=tuple(nodes),
        budget=int(budget),
        max_obs_per_node=max_obs_per_node,
        zeta_max=zeta_max if kind == BOOLEAN else None,
        reward_range=(1.0, 2.0) if kind == GAUSSIAN else None,
    )
    if kind == GAUSSIAN:
        fitted = _gaussian_reward_range(inst)
        if reward_range is None:
            inst = dataclasses.replace(inst, reward_range=fitted)
        else:
            inst = dataclasses.replace(inst, reward_range=tuple(reward_range))
            a_low, b_high = reward_range
            if fitted[0] * 2.0 < a_low / 10.0 or fitted[1] / 2.0 > 10.0 * b_high:
                warnings.warn(
                    "reachable precisions fall outside [a/10, 10b]; the solver's "
                    "gap bound is only asserted in range",
                    stacklevel=2,
                )
    return validate_instance(inst)
