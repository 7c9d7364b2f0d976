import dataclasses
import random

import pytest

from obsselect import gaussian, oracle
from obsselect.gaussian import GaussianGrids
from obsselect.generate import generate_instance
from obsselect.grids import logbar, precision_join
from obsselect.model import GaussianParams, tree_stats
from obsselect.profiles import CondPerf, plan_from_counts

from conftest import make_gauss

AB = (1.0, 100.0)


def random_plan(rng, inst):
    return plan_from_counts(
        {nid: rng.randint(0, inst.max_obs_per_node) for nid in inst.measurable_ids()}
    )


class TestPsiLeaf:
    def test_no_observation_non_hypothesis(self):
        params = GaussianParams(a=0.5, sigma2=1.0, theta=2.0)
        assert gaussian.psi_leaf(3.0, 0, params, False, AB) == (0.0, 1.0)

    def test_unit_reading_at_reward_floor(self):
        params = GaussianParams(a=0.5, sigma2=1.0, theta=1.0)
        f, r = gaussian.psi_leaf(0.0, 1, params, True, AB)
        assert f == 1.0
        assert r == 0.0  # logbar(1, 100, 1)

    def test_linear_in_reading_count(self):
        params = GaussianParams(a=0.5, sigma2=1.0, theta=1.5)
        assert gaussian.psi_leaf(0.0, 2, params, True, AB)[0] == 3.0


class TestPsiInternal:
    def test_no_evidence_children(self):
        params = GaussianParams(a=0.0, sigma2=1.0, theta=0.0)
        edges = [(4.0, 2.0)]  # alpha = a^2 = 4, beta = 2
        quals = [(0.0, 1.0)]
        (f, r), externals = gaussian.psi_internal(
            3.0, 0, params, False, edges, quals, AB
        )
        assert f == 0.0  # join(0, beta) = 0 passes nothing up
        # down the edge: parent precision 3 scales through a^2 then joins noise
        assert externals[0] == pytest.approx(precision_join(2.0, 3.0 / 4.0), rel=1e-12)

    def test_chain_posterior_precision(self, chain2_gauss):
        child = chain2_gauss.node(2).params
        f2, _r2 = gaussian.psi_leaf(0.0, 1, child, True, AB)
        (f, _r), _ = gaussian.psi_internal(
            1.0, 0, chain2_gauss.node(1).params, True,
            [(child.alpha, child.beta)], [(f2, 1.0)], AB,
        )
        assert f == pytest.approx(0.5, rel=1e-12)     # join(1, 1) / 1
        assert 1.0 + f == pytest.approx(1.5, rel=1e-12)  # Var(X1|Y2) = 2/3
        prec = oracle.gaussian_posterior_precisions(chain2_gauss, ((2, 1),))
        assert 1.0 + f == pytest.approx(prec[0], rel=1e-12)

    def test_reward_is_min(self):
        params = GaussianParams(a=0.0, sigma2=1.0, theta=0.0)
        edges = [(1.0, 1.0), (1.0, 1.0)]
        quals = [(0.0, 0.2), (0.0, 0.9)]
        (f, r), _ = gaussian.psi_internal(50.0, 0, params, True, edges, quals, AB)
        assert r == 0.2  # r_0 = logbar(1,100,50) ~ 0.85; children dominate

    def test_zero_weight_edge_decouples_child(self):
        inst = make_gauss(
            [
                (1, None, True, True, 1, 0.0, 1.0, 4.0),
                (2, 1, True, False, 0, 0.0, 2.0, 0.0),  # a = 0: independent child
            ],
            budget=1, reward_range=(0.1, 10.0),
        )
        ev = gaussian.evaluate_plan(inst, ((1, 1),))
        # the child keeps exactly its own conditional prior precision
        assert ev.posterior_precisions[2] == pytest.approx(0.5, rel=1e-12)
        prec = oracle.gaussian_posterior_precisions(inst, ((1, 1),))
        assert ev.posterior_precisions[2] == pytest.approx(prec[1], rel=1e-12)

    def test_printed_variant_diverges_off_unit_edges(self):
        inst = make_gauss(
            [
                (1, None, True, False, 0, 0.0, 1.0, 0.0),
                (2, 1, True, True, 1, 2.0, 1.0, 1.0),
            ],
            budget=1, reward_range=(0.05, 50.0),
        )
        prec = oracle.gaussian_posterior_precisions(inst, ((2, 1),))
        corrected = gaussian.evaluate_plan(inst, ((2, 1),))
        printed = gaussian.evaluate_plan(inst, ((2, 1),), formula="printed")
        assert corrected.posterior_precisions[1] == pytest.approx(prec[0], rel=1e-12)
        assert abs(printed.posterior_precisions[1] - prec[0]) > 0.1


class TestEvaluatePlan:
    def test_matches_covariance_conditioning(self):
        rng = random.Random(42)
        for trial in range(40):
            inst = generate_instance(
                "gaussian", n=rng.randint(2, 8), branching=rng.randint(1, 3),
                seed=trial, budget_fraction=1.0,
            )
            plan = random_plan(rng, inst)
            ev = gaussian.evaluate_plan(inst, plan)
            prec = oracle.gaussian_posterior_precisions(inst, plan)
            for nid in range(1, inst.n + 1):
                assert ev.posterior_precisions[nid] == pytest.approx(
                    prec[nid - 1], rel=1e-9
                )
            assert ev.reward == pytest.approx(
                oracle.gaussian_eval_exact(inst, plan).exact_reward, abs=1e-9
            )

    def test_precisions_nonnegative_and_reward_in_unit_interval(self):
        rng = random.Random(9)
        for trial in range(15):
            inst = generate_instance("gaussian", n=6, branching=2,
                                     seed=600 + trial, budget_fraction=1.0)
            ev = gaussian.evaluate_plan(inst, random_plan(rng, inst))
            assert all(v >= 0.0 for v in ev.posterior_precisions.values())
            assert 0.0 <= ev.reward <= 1.0


class TestCompile:
    def test_budget_zero_only_empty_plans(self, balanced7_gauss):
        inst = dataclasses.replace(balanced7_gauss, budget=0)
        grids = GaussianGrids.from_epsilon(2, 0.1, inst.reward_range)
        table, _stats = gaussian.compile_profiles(inst, grids)
        assert all(cp.plan == () and cp.time == 0 for cp in table.entries.values())
        sol = gaussian.solve(inst, epsilon=0.1)
        assert sol.subset == ()
        ev = oracle.gaussian_eval_exact(inst, ())
        assert sol.predicted_reward == pytest.approx(ev.exact_reward, abs=0.2)

    def test_single_node_reading_entry(self):
        inst = make_gauss(
            [(1, None, True, True, 1, 0.0, 1.0, 1.0)],
            budget=1, reward_range=AB,
        )
        grids = GaussianGrids.from_epsilon(0, 0.1, AB)
        table, _stats = gaussian.compile_profiles(inst, grids)
        pc = grids.p.index(1.0)
        f_at_one = grids.f.index(1.0)
        hits = [cp for key, cp in table.items()
                if cp.p_cell == pc and key[1] == f_at_one and cp.plan == ((1, 1),)]
        assert hits and hits[0].time == 1

    def test_capacity_formula(self):
        inst = generate_instance("gaussian", n=7, branching=2, seed=5,
                                 budget_fraction=0.5)
        _n, h, _c = tree_stats(inst)
        eps = 0.1
        sol = gaussian.solve(inst, epsilon=eps)
        import math
        cap = math.ceil(3 * max(h, 1) / eps) ** 2 * math.ceil(3 / eps)
        for st in sol.table_stats:
            assert st.entries <= st.capacity <= cap


class TestUtility:
    def test_wrong_p_cell_and_over_budget(self):
        grids = GaussianGrids.from_steps(0.25, 0.25, 0.25, AB)
        good_pc = grids.p.index(2.0)
        cp = CondPerf((), 0, good_pc + 1, (0, 1), (0.0, 0.3))
        assert gaussian.utility(cp, 2.0, 10, grids) == float("-inf")
        cp = CondPerf(((1, 1),), 11, good_pc, (0, 1), (0.0, 0.3))
        assert gaussian.utility(cp, 2.0, 10, grids) == float("-inf")

    def test_matching_entry_reads_reward_representative(self):
        grids = GaussianGrids.from_steps(0.25, 0.25, 0.25, AB)
        pc = grids.p.index(2.0)
        cp = CondPerf((), 0, pc, (0, 2), (0.0, 0.6))
        assert gaussian.utility(cp, 2.0, 10, grids) == grids.r.representative(2)


class TestSolve:
    def test_budget_zero_selects_nothing(self, balanced7_gauss):
        inst = dataclasses.replace(balanced7_gauss, budget=0)
        assert gaussian.solve(inst, epsilon=0.1).subset == ()

    def test_chain3_matches_brute_force(self):
        inst = make_gauss(
            [
                (1, None, True, False, 0, 0.0, 1.0, 0.0),
                (2, 1, True, True, 2, 0.9, 0.8, 1.2),
                (3, 2, True, True, 3, 1.1, 1.2, 2.0),
            ],
            budget=3, reward_range=(0.1, 12.0),
        )
        best = oracle.brute_force_optimum(inst)
        sol = gaussian.solve(inst, epsilon=0.05)
        exact = oracle.gaussian_eval_exact(inst, sol.subset).exact_reward
        assert best.exact_reward - exact <= sol.delta_u_bound + 1e-9
        # a single affordable test: solver should find the brute-force argmax
        assert sol.subset == best.plan

    def test_gap_within_bound(self):
        rng = random.Random(5)
        for trial in range(10):
            inst = generate_instance(
                "gaussian", n=rng.randint(4, 8), branching=rng.choice([1, 2, 3]),
                seed=200 + trial, budget_fraction=rng.uniform(0.2, 0.7),
            )
            opt = oracle.brute_force_optimum(inst).exact_reward
            for eps in (0.2, 0.1):
                sol = gaussian.solve(inst, epsilon=eps)
                exact = oracle.gaussian_eval_exact(inst, sol.subset).exact_reward
                assert opt - exact <= sol.delta_u_bound + 1e-9
                assert sol.time_used <= inst.budget

    def test_bound_formula(self):
        inst = generate_instance("gaussian", n=6, branching=2, seed=2)
        _n, h, _ = tree_stats(inst)
        sol = gaussian.solve(inst, epsilon=0.1)
        g = sol.grids_used
        assert sol.delta_u_bound == pytest.approx(
            h * g["eps_p"] + h * g["eps_f"] + g["eps_r"], rel=1e-12
        )

    def test_deterministic_across_threads(self):
        inst = generate_instance("gaussian", n=8, branching=2, seed=11,
                                 budget_fraction=0.5)
        a = gaussian.solve(inst, epsilon=0.1, threads=1)
        b = gaussian.solve(inst, epsilon=0.1, threads=4)
        assert a.to_json() == b.to_json()
