"""Tree-shaped Bayesian network instances for budgeted observation selection.

An instance is an out-tree of state variables rooted at node 1. Measurable
nodes carry an attached test that can be bought (possibly several times) at an
integer time cost; the budget caps the total time spent. Boolean instances use
noisy binary tests, Gaussian instances use additive-noise measurements with a
fixed precision per reading.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

BOOLEAN = "boolean"
GAUSSIAN = "gaussian"


class InstanceError(ValueError):
    """Raised for malformed documents and invalid instances."""


@dataclass(frozen=True)
class BooleanParams:
    """CPT parameters of one binary node and its test.

    alpha / beta are P(X=1 | parent=1) and P(X=1 | parent=0); for the root both
    equal the prior P(X=1). theta is the false-negative rate P(Y=0 | X=1) of one
    test reading, zeta the false-positive rate P(Y=1 | X=0).
    """

    alpha: float
    beta: float
    theta: float
    zeta: float


@dataclass(frozen=True)
class GaussianParams:
    """Linear-Gaussian parameters of one node and its test.

    The node is a + noise regression on its parent: X = mu + a*(parent - parent_mu)
    + N(0, sigma2). theta is the precision of a single test reading (0 means the
    reading carries no information). mu never affects any variance or reward.
    """

    a: float
    sigma2: float
    theta: float
    mu: float = 0.0

    @property
    def alpha(self) -> float:
        """Squared edge weight; scales precision through the edge."""
        return self.a * self.a

    @property
    def beta(self) -> float:
        """Conditional precision 1/sigma2."""
        return 1.0 / self.sigma2


@dataclass(frozen=True)
class Node:
    id: int
    parent: int | None
    hypothesis: bool
    measurable: bool
    cost: int
    params: BooleanParams | GaussianParams


@dataclass(frozen=True)
class Instance:
    """A validated problem instance. Immutable; safe to share across workers."""

    kind: str
    nodes: tuple[Node, ...]
    budget: int
    max_obs_per_node: int = 1
    zeta_max: float | None = None          # boolean only
    reward_range: tuple[float, float] | None = None  # gaussian only
    _children: dict[int, tuple[int, ...]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self):
        kids: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None and n.parent in kids:
                kids[n.parent].append(n.id)
        object.__setattr__(
            self, "_children", {i: tuple(sorted(c)) for i, c in kids.items()}
        )

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node(self, nid: int) -> Node:
        return self.nodes[nid - 1]

    def children(self, nid: int) -> tuple[int, ...]:
        return self._children[nid]

    def obs_options(self, nid: int) -> range:
        """Allowed observation counts at a node (0..max for measurable nodes)."""
        if self.node(nid).measurable:
            return range(self.max_obs_per_node + 1)
        return range(1)

    def measurable_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.measurable)

    def hypothesis_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.hypothesis)


def bfs_order(inst: Instance) -> list[int]:
    """Node ids root-first, every parent before its children."""
    order = []
    queue = deque([1])
    while queue:
        nid = queue.popleft()
        order.append(nid)
        queue.extend(inst.children(nid))
    return order


def tree_stats(inst: Instance) -> tuple[int, int, int]:
    """Return (node count, height in edges, max branching factor)."""
    depth = {1: 0}
    queue = deque([1])
    height = 0
    branching = 0
    while queue:
        nid = queue.popleft()
        kids = inst.children(nid)
        branching = max(branching, len(kids))
        for c in kids:
            depth[c] = depth[nid] + 1
            height = max(height, depth[c])
            queue.append(c)
    return inst.n, height, branching


def _fail(msg: str) -> None:
    raise InstanceError(msg)


def validate_instance(inst: Instance) -> Instance:
    """Check every structural and parameter invariant; raise InstanceError."""
    if inst.kind not in (BOOLEAN, GAUSSIAN):
        _fail(f"unknown kind {inst.kind!r}")
    if not inst.nodes:
        _fail("instance has no nodes")
    if not isinstance(inst.budget, int) or inst.budget < 0:
        _fail("budget must be a non-negative integer")
    if not isinstance(inst.max_obs_per_node, int) or inst.max_obs_per_node < 1:
        _fail("max_obs_per_node must be an integer >= 1")

    ids = [n.id for n in inst.nodes]
    if ids != list(range(1, len(ids) + 1)):
        _fail("node ids must be dense 1..n in order")

    if inst.kind == BOOLEAN:
        if inst.zeta_max is None or not 0.0 <= inst.zeta_max <= 1.0:
            _fail("zeta_max must be in [0, 1] for boolean instances")
        if inst.reward_range is not None:
            _fail("reward_range is not a boolean-instance field")
    else:
        if inst.reward_range is None:
            _fail("gaussian instances require reward_range")
        lo, hi = inst.reward_range
        if not 0.0 < lo < hi:
            _fail("reward_range: a_low >= b_high or a_low <= 0")
        if inst.zeta_max is not None:
            _fail("zeta_max is not a gaussian-instance field")

    for nd in inst.nodes:
        where = f"node {nd.id}"
        if nd.id == 1:
            if nd.parent is not None:
                _fail(f"{where}: root with parent {nd.parent}")
        else:
            if nd.parent is None:
                _fail(f"{where}: only node 1 may be the root")
            if not 1 <= nd.parent <= inst.n:
                _fail(f"{where}: parent {nd.parent} does not exist (orphan node)")
        if not isinstance(nd.cost, int) or nd.cost < 0:
            _fail(f"{where}: field cost must be a non-negative integer")

        p = nd.params
        if inst.kind == BOOLEAN:
            if not isinstance(p, BooleanParams):
                _fail(f"{where}: boolean params expected")
            for name in ("alpha", "beta", "theta", "zeta"):
                v = getattr(p, name)
                if not 0.0 <= v <= 1.0:
                    _fail(f"{where}: field {name} out of range [0, 1]")
            if nd.id == 1 and p.alpha != p.beta:
                _fail(f"{where}: field beta: root requires alpha == beta (the prior)")
            if not nd.measurable and (p.theta != 1.0 or p.zeta != 0.0):
                _fail(f"{where}: field theta/zeta: non-measurable nodes need theta=1, zeta=0")
            if p.zeta > inst.zeta_max:
                _fail(f"{where}: field zeta exceeds zeta_max")
            if nd.measurable and not nd.hypothesis:
                _fail(f"{where}: measurable nodes must be hypothesis nodes")
        else:
            if not isinstance(p, GaussianParams):
                _fail(f"{where}: gaussian params expected")
            if not p.sigma2 > 0.0:
                _fail(f"{where}: field sigma2 must be > 0")
            if p.theta < 0.0:
                _fail(f"{where}: field theta must be >= 0")
            if not nd.measurable and p.theta != 0.0:
                _fail(f"{where}: field theta: non-measurable nodes need theta=0")

    # Parent pointers must form a single tree hanging off node 1: walk each
    # node towards the root, flagging revisits on the active path as cycles.
    state = {i: 0 for i in ids}  # 0 unseen, 1 on current path, 2 done
    for start in ids:
        path = []
        nid = start
        while state[nid] == 0:
            state[nid] = 1
            path.append(nid)
            parent = inst.node(nid).parent
            if parent is None:
                break
            nid = parent
        if state[nid] == 1 and inst.node(nid).parent is not None:
            _fail(f"cycle at node {nid}")
        for seen in path:
            state[seen] = 2

    if not any(n.hypothesis for n in inst.nodes):
        _fail("at least one hypothesis node is required")
    return inst


_TOP_FIELDS = {"kind", "budget", "max_obs_per_node", "zeta_max", "reward_range", "nodes"}
_NODE_FIELDS = {"id", "parent", "hypothesis", "measurable", "cost"}
_BOOL_PARAM_FIELDS = {"alpha", "beta", "theta", "zeta"}
_GAUSS_PARAM_FIELDS = {"a", "sigma2", "theta", "mu"}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceError(msg)


def _as_float(obj: dict, key: str, where: str) -> float:
    v = obj.get(key)
    _require(isinstance(v, (int, float)) and not isinstance(v, bool),
             f"{where}: field {key} must be a number")
    return float(v)


def _as_int(obj: dict, key: str, where: str) -> int:
    v = obj.get(key)
    _require(isinstance(v, int) and not isinstance(v, bool),
             f"{where}: field {key} must be an integer")
    return v


def _as_bool(obj: dict, key: str, where: str) -> bool:
    v = obj.get(key)
    _require(isinstance(v, bool), f"{where}: field {key} must be a boolean")
    return v


def parse_instance(text: str) -> Instance:
    """Parse and validate one JSON instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    _require(isinstance(doc, dict), "top-level document must be an object")

    unknown = set(doc) - _TOP_FIELDS
    _require(not unknown, f"unknown top-level fields: {sorted(unknown)}")
    kind = doc.get("kind")
    _require(kind in (BOOLEAN, GAUSSIAN), "field kind must be 'boolean' or 'gaussian'")
    budget = _as_int(doc, "budget", "document")
    max_obs = _as_int(doc, "max_obs_per_node", "document") if "max_obs_per_node" in doc else 1

    zeta_max = None
    reward_range = None
    if kind == BOOLEAN:
        _require("zeta_max" in doc, "boolean documents require zeta_max")
        _require("reward_range" not in doc, "reward_range is not a boolean field")
        zeta_max = _as_float(doc, "zeta_max", "document")
    else:
        _require("reward_range" in doc, "gaussian documents require reward_range")
        _require("zeta_max" not in doc, "zeta_max is not a gaussian field")
        rr = doc.get("reward_range")
        _require(isinstance(rr, list) and len(rr) == 2
                 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rr),
                 "field reward_range must be [a_low, b_high]")
        reward_range = (float(rr[0]), float(rr[1]))

    raw_nodes = doc.get("nodes")
    _require(isinstance(raw_nodes, list) and raw_nodes, "field nodes must be a non-empty list")

    param_fields = _BOOL_PARAM_FIELDS if kind == BOOLEAN else _GAUSS_PARAM_FIELDS
    nodes = []
    for obj in raw_nodes:
        _require(isinstance(obj, dict), "node entries must be objects")
        nid = _as_int(obj, "id", "node")
        where = f"node {nid}"
        unknown = set(obj) - _NODE_FIELDS - param_fields
        _require(not unknown, f"{where}: unknown fields: {sorted(unknown)}")

        parent = obj.get("parent")
        if parent is not None:
            _require(isinstance(parent, int) and not isinstance(parent, bool),
                     f"{where}: field parent must be an integer or null")
            if parent == nid:
                raise InstanceError(f"cycle at node {nid}")
        hypothesis = _as_bool(obj, "hypothesis", where)
        measurable = _as_bool(obj, "measurable", where)
        cost = _as_int(obj, "cost", where)

        if kind == BOOLEAN:
            params = BooleanParams(
                alpha=_as_float(obj, "alpha", where),
                beta=_as_float(obj, "beta", where),
                theta=_as_float(obj, "theta", where),
                zeta=_as_float(obj, "zeta", where),
            )
        else:
            if parent is None:
                _require(obj.get("a") is None,
                         f"{where}: field a: the root has no incoming edge")
                a = 0.0
            else:
                a = _as_float(obj, "a", where)
            params = GaussianParams(
                a=a,
                sigma2=_as_float(obj, "sigma2", where),
                theta=_as_float(obj, "theta", where),
                mu=_as_float(obj, "mu", where) if "mu" in obj else 0.0,
            )
        nodes.append(Node(nid, parent, hypothesis, measurable, cost, params))

    nodes.sort(key=lambda nd: nd.id)
    _require(len({nd.id for nd in nodes}) == len(nodes), "duplicate node ids")
    inst = Instance(
        kind=kind,
        nodes=tuple(nodes),
        budget=budget,
        max_obs_per_node=max_obs,
        zeta_max=zeta_max,
        reward_range=reward_range,
    )
    return validate_instance(inst)


def serialize_instance(inst: Instance) -> str:
    """Render the canonical JSON document for an instance (stable bytes)."""
    doc: dict = {"kind": inst.kind, "budget": inst.budget,
                 "max_obs_per_node": inst.max_obs_per_node}
    if inst.kind == BOOLEAN:
        doc["zeta_max"] = inst.zeta_max
    else:
        doc["reward_range"] = list(inst.reward_range)
    out_nodes = []
    for nd in inst.nodes:
        obj: dict = {
            "id": nd.id,
            "parent": nd.parent,
            "hypothesis": nd.hypothesis,
            "measurable": nd.measurable,
            "cost": nd.cost,
        }
        if inst.kind == BOOLEAN:
            obj.update(alpha=nd.params.alpha, beta=nd.params.beta,
                       theta=nd.params.theta, zeta=nd.params.zeta)
        else:
            if nd.parent is not None:
                obj["a"] = nd.params.a
            obj.update(sigma2=nd.params.sigma2, theta=nd.params.theta, mu=nd.params.mu)
        out_nodes.append(obj)
    doc["nodes"] = out_nodes
    return json.dumps(doc, indent=2) + "\n"
