import pytest

from obsselect.model import (
    BOOLEAN,
    GAUSSIAN,
    BooleanParams,
    GaussianParams,
    Instance,
    Node,
    validate_instance,
)


def make_bool(nodes, budget, zeta_max=0.0, max_obs=1):
    """nodes: (id, parent, hyp, meas, cost, alpha, beta, theta, zeta)."""
    built = tuple(
        Node(nid, parent, hyp, meas, cost,
             BooleanParams(alpha=a, beta=b, theta=t, zeta=z))
        for nid, parent, hyp, meas, cost, a, b, t, z in nodes
    )
    return validate_instance(Instance(
        kind=BOOLEAN, nodes=built, budget=budget,
        max_obs_per_node=max_obs, zeta_max=zeta_max,
    ))


def make_gauss(nodes, budget, reward_range, max_obs=1):
    """nodes: (id, parent, hyp, meas, cost, a, sigma2, theta)."""
    built = tuple(
        Node(nid, parent, hyp, meas, cost,
             GaussianParams(a=a, sigma2=s2, theta=t))
        for nid, parent, hyp, meas, cost, a, s2, t in nodes
    )
    return validate_instance(Instance(
        kind=GAUSSIAN, nodes=built, budget=budget,
        max_obs_per_node=max_obs, reward_range=reward_range,
    ))


@pytest.fixture
def single_root_bool():
    """One measurable hypothesis root: prior 0.6, exact test, cost 1."""
    def build(budget):
        return make_bool(
            [(1, None, True, True, 1, 0.6, 0.6, 0.0, 0.0)], budget=budget
        )
    return build


@pytest.fixture
def two_hypotheses_bool():
    """Two independent hypotheses with priors 0.6 / 0.5, exact unit-cost tests."""
    return make_bool(
        [
            (1, None, True, True, 1, 0.6, 0.6, 0.0, 0.0),
            (2, 1, True, True, 1, 0.5, 0.5, 0.0, 0.0),
        ],
        budget=1,
    )


@pytest.fixture
def chain2_gauss():
    """Root -> child chain, unit variances, unit edge, exact-ish child test."""
    return make_gauss(
        [
            (1, None, True, False, 0, 0.0, 1.0, 0.0),
            (2, 1, True, True, 1, 1.0, 1.0, 1.0),
        ],
        budget=1,
        reward_range=(0.25, 8.0),
    )


@pytest.fixture
def balanced7_gauss():
    """Balanced binary tree on 7 nodes, all hypotheses, leaves measurable."""
    rows = []
    for nid in range(1, 8):
        parent = None if nid == 1 else nid // 2
        measurable = nid >= 4
        rows.append((nid, parent, True, measurable, 2 if measurable else 0,
                     0.0 if nid == 1 else 0.8, 1.0, 1.5 if measurable else 0.0))
    return make_gauss(rows, budget=4, reward_range=(0.05, 20.0))
