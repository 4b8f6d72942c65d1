import itertools
import random
from fractions import Fraction as F

import pytest

from budgetcontracts.core import Action, Contract, Instance
from budgetcontracts.equilibria import best_response, is_nash, \
    min_incentivizing_contract, ne_from_demand
from budgetcontracts.generators import random_additive_instance, \
    random_explicit_monotone_instance, random_gs_instance, random_oxs_instance
from budgetcontracts.hardness import HardnessParams, build_hardness, good_action
from budgetcontracts.objectives import PROFIT, REWARD, WELFARE
from budgetcontracts.rewards import AdditiveOracle, value_table
from budgetcontracts.solvers import (
    NotAnEquilibriumError,
    additive_fptas,
    brute_force_opt,
    build_dp_table,
    downsize,
    gs_constant_factor,
    gs_single_agent_exact,
    max_reward_bounded_brute,
    scale_costs,
    single_agent_demand_breakpoints,
    single_agent_fptas,
)


def all_subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, r))


# -- brute-force oracle ----------------------------------------------------------


def test_brute_force_nothing_affordable():
    inst = Instance(1, (Action(0, 0, F(3, 4)),), AdditiveOracle([F(1, 2)]))
    r = brute_force_opt(inst, F(1, 2), PROFIT)  # needs alpha = 3/2 > budget
    assert r.profile == frozenset() and r.value == 0


def test_brute_force_single_agent_single_action():
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    r = brute_force_opt(inst, F(1), PROFIT)
    assert r.contract.alpha == (F(1, 2),)
    assert r.profile == frozenset({0})
    assert r.value == F(1, 4)


def test_brute_force_hardness_profit_floor():
    budget = F(1, 2)
    params = HardnessParams.make(4, budget)
    inst = build_hardness(params)
    r = brute_force_opt(inst, budget, PROFIT)
    assert r.value >= (1 - budget) / 2
    assert good_action(4) in r.profile


def test_fast_contract_enumeration_matches_generic_operation():
    from budgetcontracts.rewards import mask_to_set
    from budgetcontracts.solvers import iter_min_contracts

    rng = random.Random(0)
    for t in range(25):
        if t % 2:
            inst = random_gs_instance(rng.randint(0, 10 ** 7),
                                      num_agents=rng.randint(1, 4),
                                      num_actions=rng.randint(2, 6))
        else:
            inst = random_explicit_monotone_instance(
                rng.randint(0, 10 ** 7), num_agents=rng.randint(1, 3),
                num_actions=rng.randint(2, 5))
        table = value_table(inst.oracle)
        fast = dict(iter_min_contracts(inst, table))
        for mask in range(1 << inst.num_actions):
            generic = min_incentivizing_contract(inst, mask_to_set(mask),
                                                 table=table)
            if generic is None:
                assert mask not in fast
            else:
                assert fast[mask] == generic


def test_brute_force_output_is_feasible_equilibrium():
    rng = random.Random(2)
    for _ in range(10):
        inst = random_gs_instance(rng.randint(0, 10 ** 6), num_agents=2,
                                  num_actions=4)
        budget = F(rng.randint(1, 4), 4)
        for obj in (PROFIT, REWARD, WELFARE):
            r = brute_force_opt(inst, budget, obj)
            assert r.contract.total() <= budget
            assert is_nash(inst, r.contract, r.profile).ok


# -- discretized payment table ------------------------------------------------


def test_dp_table_single_action_zero_column():
    inst = Instance(1, (Action(0, 0, F(1, 8)),), AdditiveOracle([F(1, 2)]))
    dp = build_dp_table(inst, "f", F(1, 2), F(1, 2))
    assert dp.payment(0, 0) == 0
    assert dp.payment(1, 0) == 0
    assert all(dp.payment(0, t) is None for t in range(1, dp.t_max + 1))


def test_dp_table_matches_prefix_enumeration():
    # one agent, two actions, weights (1/2, 1/2), costs (1/8, 1/4), eps = 1/2:
    # delta*b = 1/8, discretized singletons = 4 steps each; the three
    # prefixes cost 0, 1/4 and 1/2
    inst = Instance(1, (Action(0, 0, F(1, 8)), Action(1, 0, F(1, 4))),
                    AdditiveOracle([F(1, 2), F(1, 2)]))
    dp = build_dp_table(inst, "f", F(1, 2), F(1, 2))
    assert dp.delta * dp.b == F(1, 8)  # delta = eps/|T| = 1/4, b = 1/2
    expected = {}
    for t in range(dp.t_max + 1):
        # cheapest prefix whose discretized weight reaches t steps
        best = None
        for ell, (weight, ratio) in enumerate([(0, F(0)), (4, F(1, 4)), (8, F(1, 2))]):
            if weight >= t and (best is None or ratio < best):
                best = ratio
        expected[t] = best
    for t in range(dp.t_max + 1):
        assert dp.payment(1, t) == expected[t]


def test_dp_table_monotone_rows():
    rng = random.Random(3)
    for _ in range(10):
        inst = random_additive_instance(rng.randint(0, 10 ** 6))
        table = value_table(inst.oracle)
        for basis in ("f", "f-c"):
            dp = build_dp_table(inst, basis, F(1, 4), F(1, 4), table=table)
            row = [dp.payment(inst.num_agents, t) for t in range(dp.t_max + 1)]
            seen = [p for p in row if p is not None]
            assert all(x <= y for x, y in zip(seen, seen[1:]))
            # None entries only at the top end
            tail = row[row.index(None):] if None in row else []
            assert all(p is None for p in tail)


def test_dp_reconstruction_matches_table_payment():
    rng = random.Random(5)
    for _ in range(10):
        inst = random_additive_instance(rng.randint(0, 10 ** 6), num_agents=2)
        table = value_table(inst.oracle)
        dp = build_dp_table(inst, "f", F(1, 2), F(1, 4), table=table)
        for t in range(dp.t_max + 1):
            if dp.payment(inst.num_agents, t) is None:
                continue
            alpha, profile = dp.reconstruct(inst, t)
            assert alpha.total() == dp.payment(inst.num_agents, t)
            assert is_nash(inst, alpha, profile, table=table).ok


# -- additive FPTAS -------------------------------------------------------------


def test_fptas_zero_budget_positive_costs():
    inst = Instance(2, (Action(0, 0, F(1, 8)), Action(1, 1, F(1, 4))),
                    AdditiveOracle([F(1, 2), F(1, 4)]))
    for obj in (PROFIT, REWARD, WELFARE):
        r = additive_fptas(inst, F(0), F(1, 10), obj)
        assert r.contract.total() == 0 and r.profile == frozenset()


def test_fptas_within_guarantee_small():
    rng = random.Random(7)
    for _ in range(15):
        inst = random_additive_instance(rng.randint(0, 10 ** 6), num_agents=2,
                                        num_actions=4)
        table = value_table(inst.oracle)
        budget = F(rng.randint(1, 4), 4)
        eps = F(1, 10)
        for obj in (PROFIT, REWARD, WELFARE):
            opt = brute_force_opt(inst, budget, obj, table=table)
            got = additive_fptas(inst, budget, eps, obj, table=table)
            assert got.value >= (1 - eps) * opt.value
            assert got.contract.total() <= budget
            assert is_nash(inst, got.contract, got.profile, table=table).ok


# -- single-agent FPTAS ----------------------------------------------------------


def test_single_agent_one_action_example():
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    r = single_agent_fptas(inst, F(1), F(1, 10))
    assert r.value >= F(9, 10) * F(1, 4)


def test_single_agent_worthless_actions():
    inst = Instance(1, (Action(0, 0, F(1, 2)),), AdditiveOracle([F(1, 4)]))
    r = single_agent_fptas(inst, F(1), F(1, 4))
    assert r.value == 0 and r.profile == frozenset()


def test_single_agent_all_costs_zero():
    inst = Instance(1, (Action(0, 0, F(0)), Action(1, 0, F(0))),
                    AdditiveOracle([F(1, 4), F(1, 2)]))
    r = single_agent_fptas(inst, F(1, 2), F(1, 4))
    assert r.profile == frozenset({0, 1})
    assert r.contract.total() == 0
    assert r.value == F(3, 4)


def test_single_agent_vs_brute_random_tables():
    rng = random.Random(11)
    for _ in range(12):
        inst = random_explicit_monotone_instance(rng.randint(0, 10 ** 6),
                                                 num_actions=rng.randint(2, 6))
        budget = F(rng.randint(2, 4), 4)
        opt = brute_force_opt(inst, budget, PROFIT)
        for eps in (F(1, 4), F(1, 10)):
            got = single_agent_fptas(inst, budget, eps)
            assert got.value >= (1 - eps) * opt.value
            assert got.contract.total() <= budget


def test_breakpoint_sweep_is_monotone_in_f():
    rng = random.Random(13)
    for _ in range(8):
        inst = random_explicit_monotone_instance(rng.randint(0, 10 ** 6),
                                                 num_actions=4)
        breaks = single_agent_demand_breakpoints(inst)
        probes = sorted(set([F(0), F(1)] + breaks))
        last = F(-1)
        for alpha in probes:
            if alpha < 0 or alpha > 1:
                continue
            response = best_response(inst, 0, alpha, frozenset(), gs=False)
            f_val = inst.oracle.value(response)
            assert f_val >= last
            last = f_val


# -- downsizing ------------------------------------------------------------------


def test_downsize_rejects_non_equilibrium():
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    with pytest.raises(NotAnEquilibriumError):
        downsize(inst, 3, Contract.zero(1), frozenset({0}))


def test_downsize_empty_profile_trivial():
    inst = Instance(2, (Action(0, 0, F(1, 4)), Action(1, 1, F(1, 4))),
                    AdditiveOracle([F(1, 4), F(1, 4)]))
    alpha = Contract.zero(2)
    new_alpha, new_profile = downsize(inst, 3, alpha, frozenset())
    assert new_profile == frozenset() and new_alpha.total() == 0


def _check_downsize_guarantees(inst, m_param, alpha, profile, table):
    new_alpha, new_profile = downsize(inst, m_param, alpha, profile, table=table)
    f_old = inst.oracle.value(profile)
    f_new = inst.oracle.value(new_profile)
    assert (2 * m_param - 2) * f_new >= f_old
    assert is_nash(inst, new_alpha, new_profile, table=table).ok
    small_payment = m_param * new_alpha.total() <= 5 * alpha.total()
    single = any(
        new_alpha.alpha == tuple(alpha[j] if j == i else F(0)
                                 for j in range(inst.num_agents))
        and new_profile <= inst.agent_actions[i]
        for i in range(inst.num_agents))
    assert small_payment or single
    return new_alpha, new_profile


def test_downsize_guarantees_across_m_values():
    rng = random.Random(17)
    for _ in range(10):
        inst = random_gs_instance(rng.randint(0, 10 ** 6),
                                  num_agents=rng.randint(2, 4),
                                  num_actions=rng.randint(3, 6))
        table = value_table(inst.oracle)
        alpha = Contract.of([F(rng.randint(0, 6), 8)
                             for _ in range(inst.num_agents)])
        profile = ne_from_demand(inst, alpha, table=table)
        for m_param in (3, 6, 14):
            _check_downsize_guarantees(inst, m_param, alpha, profile, table)


def test_downsize_oxs_m6_dichotomy():
    inst = random_oxs_instance(23, num_agents=3, num_actions=6)
    table = value_table(inst.oracle)
    alpha = Contract.of([F(1, 4), F(1, 8), F(1, 2)])
    profile = ne_from_demand(inst, alpha, table=table)
    _check_downsize_guarantees(inst, 6, alpha, profile, table)


# -- single-agent exact and reward-bounded solvers --------------------------------


def test_gs_single_agent_no_actions():
    inst = Instance(2, (Action(0, 1, F(1, 8)),), AdditiveOracle([F(1, 2)]))
    r = gs_single_agent_exact(inst, 0, REWARD, F(1))
    assert r.profile == frozenset() and r.value == 0


def test_gs_single_agent_budget_blocks_action():
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    r = gs_single_agent_exact(inst, 0, PROFIT, F(1, 3))  # needs 1/2 > 1/3
    assert r.profile == frozenset() and r.value == 0


def test_gs_single_agent_matches_brute_when_alone():
    rng = random.Random(29)
    for _ in range(8):
        inst = random_gs_instance(rng.randint(0, 10 ** 6), num_agents=1,
                                  num_actions=4)
        budget = F(rng.randint(1, 4), 4)
        for obj in (PROFIT, REWARD):
            exact = gs_single_agent_exact(inst, 0, obj, budget)
            brute = brute_force_opt(inst, budget, obj)
            assert exact.value == brute.value


def test_max_reward_bounded_zero_budget():
    inst = Instance(1, (Action(0, 0, F(1, 8)),), AdditiveOracle([F(1, 2)]))
    r = max_reward_bounded_brute(inst, F(0))
    assert r.value == 0


def test_max_reward_bounded_respects_cap():
    # the only valuable profile needs alpha = 1/2 > (3/4) * (1/2)
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    capped = max_reward_bounded_brute(inst, F(1, 2))
    assert capped.value == 0
    uncapped = brute_force_opt(inst, F(1, 2), REWARD)
    assert uncapped.value == F(1, 2)


def test_max_reward_bounded_hardness_upper_bound():
    params = HardnessParams.make(4, F(1, 2))
    inst = build_hardness(params)
    r = max_reward_bounded_brute(inst, F(1, 2))
    assert r.value <= (F(4, 2) + 2) * params.eps
    assert good_action(4) not in r.profile


def test_scale_costs():
    inst = Instance(1, (Action(0, 0, F(1, 4)),), AdditiveOracle([F(1, 2)]))
    assert scale_costs(inst, F(1)).cost_of[0] == F(1, 4)
    assert scale_costs(inst, F(2)).cost_of[0] == F(1, 2)
    factor = F(4, 3) * (F(1) / F(1, 2))
    assert factor == F(8, 3)


# -- constant-factor pipeline ------------------------------------------------------


def test_gs_constant_factor_within_certified_bound():
    rng = random.Random(31)
    for _ in range(6):
        inst = random_gs_instance(rng.randint(0, 10 ** 6), num_agents=2,
                                  num_actions=4)
        budget = F(rng.randint(1, 4), 4)
        for obj in (PROFIT, REWARD):
            got = gs_constant_factor(inst, budget, obj)
            opt = brute_force_opt(inst, budget, obj)
            assert 6001 * got.value >= opt.value
            assert got.contract.total() <= budget
            assert is_nash(inst, got.contract, got.profile).ok


def test_gs_constant_factor_unbudgeted_profit():
    inst = random_additive_instance(37, num_agents=2, num_actions=5)
    got = gs_constant_factor(inst, F(1), PROFIT)
    opt = brute_force_opt(inst, F(1), PROFIT)
    assert 6001 * got.value >= opt.value


def test_gs_constant_factor_single_agent_carries_reward():
    # all value sits with agent 0; the single-agent branch must surface it
    inst = Instance(2, (Action(0, 0, F(1, 8)), Action(1, 0, F(1, 8)),
                        Action(2, 1, F(1, 2))),
                    AdditiveOracle([F(1, 2), F(1, 4), F(1, 100)]))
    budget = F(1, 2)
    got = gs_constant_factor(inst, budget, REWARD)
    single = gs_single_agent_exact(inst, 0, REWARD, budget)
    assert got.value >= single.value > 0


def test_gs_constant_factor_zero_budget_exact():
    inst = Instance(1, (Action(0, 0, F(0)), Action(1, 0, F(1, 4))),
                    AdditiveOracle([F(1, 4), F(1, 2)]))
    r = gs_constant_factor(inst, F(0), REWARD)
    assert r.profile == frozenset({0})
    assert r.value == F(1, 4)


def test_decomposition_inequality_spot():
    rng = random.Random(41)
    for _ in range(6):
        inst = random_gs_instance(rng.randint(0, 10 ** 6), num_agents=2,
                                  num_actions=4)
        table = value_table(inst.oracle)
        budget = F(rng.randint(1, 4), 4)
        for obj in (PROFIT, REWARD):
            opt = brute_force_opt(inst, budget, obj, table=table).value
            mrb = max_reward_bounded_brute(inst, budget, table=table).value
            best_single = max(
                gs_single_agent_exact(inst, i, obj, budget, table=table).value
                for i in range(inst.num_agents))
            assert opt <= 2 * mrb + best_single
