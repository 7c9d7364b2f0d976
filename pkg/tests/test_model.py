import json

import pytest

from obsselect.model import InstanceError, parse_instance, serialize_instance, tree_stats
from obsselect.generate import generate_instance

from conftest import make_bool, make_gauss


SINGLE_BOOL_DOC = json.dumps({
    "kind": "boolean",
    "budget": 1,
    "max_obs_per_node": 1,
    "zeta_max": 0.0,
    "nodes": [
        {"id": 1, "parent": None, "hypothesis": True, "measurable": True,
         "cost": 1, "alpha": 0.6, "beta": 0.6, "theta": 0.0, "zeta": 0.0},
    ],
})


def gauss_balanced7_doc():
    nodes = []
    for nid in range(1, 8):
        obj = {
            "id": nid,
            "parent": None if nid == 1 else nid // 2,
            "hypothesis": True,
            "measurable": nid >= 4,
            "cost": 2 if nid >= 4 else 0,
            "sigma2": 1.0,
            "theta": 1.5 if nid >= 4 else 0.0,
        }
        if nid > 1:
            obj["a"] = 0.8
        nodes.append(obj)
    return json.dumps({
        "kind": "gaussian", "budget": 4, "max_obs_per_node": 1,
        "reward_range": [0.05, 20.0], "nodes": nodes,
    })


class TestParse:
    def test_single_node_boolean(self):
        inst = parse_instance(SINGLE_BOOL_DOC)
        assert inst.n == 1
        assert inst.node(1).hypothesis and inst.node(1).measurable
        assert inst.node(1).params.alpha == 0.6
        assert inst.budget == 1

    def test_self_parent_is_a_cycle(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"] = [
            dict(doc["nodes"][0]),
            {"id": 2, "parent": 1, "hypothesis": True, "measurable": False,
             "cost": 0, "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0},
            {"id": 3, "parent": 3, "hypothesis": True, "measurable": False,
             "cost": 0, "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0},
        ]
        with pytest.raises(InstanceError, match="cycle at node 3"):
            parse_instance(json.dumps(doc))

    def test_two_cycle_detected(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"] = [
            dict(doc["nodes"][0]),
            {"id": 2, "parent": 3, "hypothesis": False, "measurable": False,
             "cost": 0, "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0},
            {"id": 3, "parent": 2, "hypothesis": False, "measurable": False,
             "cost": 0, "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0},
        ]
        with pytest.raises(InstanceError, match="cycle at node"):
            parse_instance(json.dumps(doc))

    def test_balanced_gaussian_tree_height(self):
        inst = parse_instance(gauss_balanced7_doc())
        assert tree_stats(inst) == (7, 2, 2)

    def test_malformed_json(self):
        with pytest.raises(InstanceError, match="malformed JSON"):
            parse_instance("{nope")

    def test_unknown_field_rejected(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["surprise"] = 1
        with pytest.raises(InstanceError, match="unknown top-level fields"):
            parse_instance(json.dumps(doc))
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["sigma2"] = 1.0
        with pytest.raises(InstanceError, match="unknown fields"):
            parse_instance(json.dumps(doc))

    def test_orphan_parent(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"].append({"id": 2, "parent": 9, "hypothesis": False,
                             "measurable": False, "cost": 0,
                             "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0})
        with pytest.raises(InstanceError, match="orphan"):
            parse_instance(json.dumps(doc))

    def test_root_self_parent_is_a_cycle(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["parent"] = 1
        with pytest.raises(InstanceError, match="cycle at node 1"):
            parse_instance(json.dumps(doc))

    def test_root_with_parent(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["parent"] = 2
        doc["nodes"].append({"id": 2, "parent": 1, "hypothesis": True,
                             "measurable": False, "cost": 0,
                             "alpha": 0.5, "beta": 0.4, "theta": 1.0, "zeta": 0.0})
        with pytest.raises(InstanceError, match="root with parent"):
            parse_instance(json.dumps(doc))

    def test_probability_out_of_range(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["alpha"] = 1.2
        doc["nodes"][0]["beta"] = 1.2
        with pytest.raises(InstanceError, match="node 1: field alpha"):
            parse_instance(json.dumps(doc))

    def test_sigma2_positive(self):
        doc = json.loads(gauss_balanced7_doc())
        doc["nodes"][2]["sigma2"] = 0.0
        with pytest.raises(InstanceError, match="node 3: field sigma2"):
            parse_instance(json.dumps(doc))

    def test_reward_range_ordering(self):
        doc = json.loads(gauss_balanced7_doc())
        doc["reward_range"] = [2.0, 2.0]
        with pytest.raises(InstanceError, match="reward_range"):
            parse_instance(json.dumps(doc))

    def test_root_alpha_beta_must_match(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["beta"] = 0.5
        with pytest.raises(InstanceError, match="root requires alpha == beta"):
            parse_instance(json.dumps(doc))

    def test_measurable_requires_hypothesis_boolean(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["hypothesis"] = False
        with pytest.raises(InstanceError, match="measurable nodes must be hypothesis"):
            parse_instance(json.dumps(doc))

    def test_root_edge_weight_rejected(self):
        doc = json.loads(gauss_balanced7_doc())
        doc["nodes"][0]["a"] = 0.5
        with pytest.raises(InstanceError, match="root has no incoming edge"):
            parse_instance(json.dumps(doc))

    def test_zeta_capped_by_zeta_max(self):
        doc = json.loads(SINGLE_BOOL_DOC)
        doc["nodes"][0]["zeta"] = 0.05
        with pytest.raises(InstanceError, match="zeta exceeds zeta_max"):
            parse_instance(json.dumps(doc))


class TestSerialize:
    def test_round_trip_identity(self):
        for doc in (SINGLE_BOOL_DOC, gauss_balanced7_doc()):
            inst = parse_instance(doc)
            text = serialize_instance(inst)
            again = parse_instance(text)
            assert again == inst
            # canonical text is a fixed point
            assert serialize_instance(again) == text

    def test_serialized_fields_match_document(self):
        inst = parse_instance(gauss_balanced7_doc())
        doc = json.loads(serialize_instance(inst))
        assert doc["kind"] == "gaussian"
        assert doc["reward_range"] == [0.05, 20.0]
        assert "a" not in doc["nodes"][0]        # root has no edge weight
        assert doc["nodes"][1]["a"] == 0.8
        assert doc["nodes"][0]["mu"] == 0.0      # optional field always emitted


class TestTreeStats:
    def test_single_node(self, single_root_bool):
        assert tree_stats(single_root_bool(0)) == (1, 0, 0)

    def test_chain_of_five(self):
        rows = [(1, None, True, False, 0, 0.5, 0.5, 1.0, 0.0)]
        rows += [(i, i - 1, False, False, 0, 0.5, 0.4, 1.0, 0.0) for i in range(2, 6)]
        inst = make_bool(rows, budget=0)
        assert tree_stats(inst) == (5, 4, 1)

    def test_bounds(self):
        for seed in range(10):
            inst = generate_instance("boolean", n=7, branching=3, seed=seed)
            n, h, c = tree_stats(inst)
            assert h <= n - 1 and c <= n - 1


class TestGenerate:
    def test_single_root(self):
        inst = generate_instance("boolean", n=1, branching=1, seed=5)
        assert inst.n == 1 and inst.node(1).parent is None

    def test_same_seed_same_bytes(self):
        a = serialize_instance(generate_instance("gaussian", n=9, branching=2, seed=42))
        b = serialize_instance(generate_instance("gaussian", n=9, branching=2, seed=42))
        assert a == b

    def test_parse_serialize_round_trip(self):
        inst = generate_instance("boolean", n=8, branching=2, seed=42)
        assert parse_instance(serialize_instance(inst)) == inst

    def test_branching_respected(self):
        for seed in range(5):
            inst = generate_instance("boolean", n=10, branching=1, seed=seed)
            assert tree_stats(inst) == (10, 9, 1)
            inst = generate_instance("gaussian", n=10, branching=2, seed=seed)
            assert tree_stats(inst)[2] <= 2

    def test_budget_formula(self):
        inst = generate_instance("boolean", n=8, branching=2, seed=3,
                                 budget_fraction=0.5)
        total = sum(nd.cost for nd in inst.nodes if nd.measurable)
        assert inst.budget == round(0.5 * total)

    def test_knapsack_mode_is_independent_and_exact(self):
        inst = generate_instance("boolean", n=6, branching=2, seed=9, knapsack=True)
        for nd in inst.nodes:
            assert nd.hypothesis and nd.measurable
            assert nd.params.alpha == nd.params.beta
            assert nd.params.theta == 0.0 and nd.params.zeta == 0.0

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            generate_instance("boolean", n=0, branching=1, seed=0)
        with pytest.raises(ValueError):
            generate_instance("boolean", n=3, branching=1, seed=0, cost_range=(5, 2))

    def test_gaussian_reward_range_covers_reachable(self):
        from obsselect import oracle
        inst = generate_instance("gaussian", n=7, branching=2, seed=17)
        a, b = inst.reward_range
        full = tuple((nid, 1) for nid in inst.measurable_ids())
        lo = oracle.gaussian_posterior_precisions(inst, ()).min()
        hi = oracle.gaussian_posterior_precisions(inst, full).max()
        assert a < lo <= hi < b
