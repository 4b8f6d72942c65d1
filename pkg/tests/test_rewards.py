import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from budgetcontracts.core import GroundSetTooLargeError
from budgetcontracts.hardness import HardnessOracle, bad_action, good_action
from budgetcontracts.rewards import (
    AdditiveOracle,
    AssignmentOracle,
    CoverageOracle,
    ElementAlreadyPresentError,
    ExplicitOracle,
    PriceVector,
    UniformKDemandOracle,
    UnitDemandOracle,
    brute_force_demand,
    demand_with_base,
    gs_greedy_demand,
    is_gross_substitutes,
    is_monotone,
    is_submodular,
    oracle_from_spec,
    oracle_to_spec,
    value_table,
)

EPS = F(1, 32)


def hardness_oracle(n=4, hidden=(0, 1), eps=EPS):
    return HardnessOracle(n, eps, frozenset(hidden))


def all_subsets(m):
    for r in range(m + 1):
        yield from (frozenset(c) for c in itertools.combinations(range(m), r))


# -- values and marginals ------------------------------------------------------


def test_value_empty_is_zero_everywhere():
    oracles = [
        AdditiveOracle([F(1, 4), F(1, 2)]),
        UnitDemandOracle([F(1, 2), F(1, 3)]),
        UniformKDemandOracle(3, 2, F(1, 4)),
        AssignmentOracle([[F(1, 4)], [F(1, 2)]]),
        CoverageOracle(4, [{0, 1}, {2}]),
        hardness_oracle(),
    ]
    for o in oracles:
        assert o.value(frozenset()) == 0


def test_additive_value_and_marginal():
    o = AdditiveOracle([F(1, 4), F(1, 2)])
    assert o.value({0, 1}) == F(3, 4)
    for s in (frozenset(), frozenset({1})):
        assert o.marginal(0, s) == F(1, 4)


def test_uniform_k_demand_marginal_capped():
    o = UniformKDemandOracle(3, 1, F(1, 2))
    assert o.marginal(0, {1}) == 0
    assert o.marginal(0, frozenset()) == F(1, 2)


def test_marginal_element_already_present():
    o = AdditiveOracle([F(1, 4)])
    with pytest.raises(ElementAlreadyPresentError):
        o.marginal(0, {0})


def test_hardness_value_good_singleton():
    o = hardness_oracle()
    assert o.value({good_action(4)}) == F(1, 2)


def test_hardness_marginal_bad_given_hidden():
    # f1 + f2 gain of 2*eps, penalty onset of eps/2: net (3/2) eps
    o = hardness_oracle()
    assert o.marginal(bad_action(4), {0, 1}) == F(3, 2) * EPS


def test_assignment_oracle_is_max_matching():
    o = AssignmentOracle([[F(1, 2), F(0)], [F(1, 2), F(1, 4)]])
    # both actions prefer column 0; the matching routes one to column 1
    assert o.value({0, 1}) == F(3, 4)
    assert o.value({0}) == F(1, 2)


def test_query_counter_increments_once_per_call():
    o = AdditiveOracle([F(1, 4), F(1, 2)])
    o.value({0})
    o.value({0})
    o.marginal(1, {0})  # two value queries
    assert o.value_queries == 4
    assert o.demand_queries == 0


def test_hardness_demand_counts_queries():
    o = hardness_oracle()
    prices = PriceVector.of({a: F(1, 64) for a in range(6)})
    o.demand(prices)
    assert o.demand_queries == 1
    assert 1 <= o.value_queries <= 12


# -- demand computations -------------------------------------------------------


def test_brute_demand_high_prices_empty():
    o = AdditiveOracle([F(1, 4), F(1, 2)])
    assert brute_force_demand(o, PriceVector.of({0: F(2), 1: F(2)})) == frozenset()


def test_brute_demand_negative_prices_full():
    o = UnitDemandOracle([F(1, 2), F(1, 3)])
    got = brute_force_demand(o, PriceVector.of({0: F(-1), 1: F(-1)}))
    assert got == frozenset({0, 1})


def test_brute_demand_additive_example():
    o = AdditiveOracle([F(1, 2), F(1, 4)])
    got = brute_force_demand(o, PriceVector.of({0: F(1, 4), 1: F(1, 2)}))
    assert got == frozenset({0})


def test_brute_demand_cap():
    o = UniformKDemandOracle(6, 2, F(1, 8))
    with pytest.raises(GroundSetTooLargeError):
        brute_force_demand(o, PriceVector.of({a: F(1) for a in range(6)}),
                           enum_cap=4)


def test_greedy_demand_high_prices_empty():
    o = AdditiveOracle([F(1, 4), F(1, 2)])
    assert gs_greedy_demand(o, PriceVector.of({0: F(2), 1: F(2)})) == frozenset()


def test_greedy_demand_unit_demand_example():
    o = UnitDemandOracle([F(1, 2), F(1, 3)])
    got = gs_greedy_demand(o, PriceVector.of({0: F(1, 10), 1: F(1, 10)}))
    assert got == frozenset({0})


def _utility(o, table, s, prices):
    return table[sum(1 << a for a in s)] - prices.total(s)


@pytest.mark.parametrize("make_oracle", [
    lambda rng: AdditiveOracle([F(rng.randint(0, 6), 32) for _ in range(5)]),
    lambda rng: UnitDemandOracle([F(rng.randint(0, 32), 32) for _ in range(5)]),
    lambda rng: UniformKDemandOracle(5, rng.randint(1, 4), F(1, 8)),
    lambda rng: AssignmentOracle([[F(rng.randint(0, 10), 30) for _ in range(3)]
                                  for _ in range(5)]),
])
def test_greedy_matches_brute_on_gs(make_oracle):
    rng = random.Random(7)
    for _ in range(40):
        o = make_oracle(rng)
        table = value_table(o)
        prices = PriceVector.of(
            {a: F(rng.randint(-8, 40), 32) for a in range(o.num_actions)})
        greedy = gs_greedy_demand(o, prices, table=table)
        brute = brute_force_demand(o, prices, table=table)
        assert _utility(o, table, greedy, prices) == _utility(o, table, brute, prices)


def test_demand_with_base_empty_base_matches_plain():
    o = UnitDemandOracle([F(1, 2), F(1, 3), F(1, 8)])
    prices = PriceVector.of({0: F(1, 10), 1: F(1, 10), 2: F(1, 10)})
    table = value_table(o)
    got = demand_with_base(o, prices, frozenset())
    assert _utility(o, table, got, prices) == \
        _utility(o, table, brute_force_demand(o, prices), prices)


def test_demand_with_base_full_base_returns_base():
    o = AdditiveOracle([F(1, 4), F(1, 4)])
    base = frozenset({0, 1})
    assert demand_with_base(o, PriceVector({}), base) == base


def test_demand_with_base_contains_base_when_base_unattractive():
    # price makes item 1 a loss; the base keeps it anyway
    o = AdditiveOracle([F(1, 4), F(1, 8)])
    prices = PriceVector.of({0: F(1, 8)})
    got = demand_with_base(o, prices, frozenset({1}))
    assert got == frozenset({0, 1})


def test_demand_with_base_brute_cross_check():
    rng = random.Random(11)
    for _ in range(25):
        o = AssignmentOracle([[F(rng.randint(0, 10), 40) for _ in range(2)]
                              for _ in range(5)])
        table = value_table(o)
        prices = PriceVector.of({a: F(rng.randint(0, 20), 64) for a in range(5)})
        base = frozenset(a for a in range(5) if rng.random() < 0.3)
        pv = PriceVector({a: p for a, p in prices.prices.items() if a not in base})
        greedy = demand_with_base(o, pv, base, gs=True, table=table)
        brute = demand_with_base(o, pv, base, gs=False, table=table)
        assert base <= greedy and base <= brute
        paid = lambda s: pv.total(s - base)
        assert table[sum(1 << a for a in greedy)] - paid(greedy) == \
            table[sum(1 << a for a in brute)] - paid(brute)


# -- membership testers --------------------------------------------------------


def test_monotone_all_builtins():
    oracles = [
        AdditiveOracle([F(1, 8), F(1, 4), F(1, 8)]),
        UnitDemandOracle([F(1, 2), F(1, 4), F(3, 4)]),
        UniformKDemandOracle(4, 2, F(1, 4)),
        AssignmentOracle([[F(1, 4), F(1, 8)] for _ in range(4)]),
        CoverageOracle(5, [{0, 1}, {1, 2}, {3}]),
        hardness_oracle(),
    ]
    for o in oracles:
        ok, witness = is_monotone(o)
        assert ok, witness


def test_submodular_all_builtins():
    oracles = [
        AdditiveOracle([F(1, 8), F(1, 4), F(1, 8)]),
        UnitDemandOracle([F(1, 2), F(1, 4), F(3, 4)]),
        UniformKDemandOracle(4, 2, F(1, 4)),
        AssignmentOracle([[F(1, 4), F(1, 8)] for _ in range(4)]),
        CoverageOracle(5, [{0, 1}, {1, 2}, {3}]),
        hardness_oracle(),
    ]
    for o in oracles:
        ok, witness = is_submodular(o)
        assert ok, witness


def test_square_cardinality_not_submodular():
    # f(S) = |S|^2 / 9 on three items: strictly supermodular
    values = [F(len([b for b in range(3) if mask & (1 << b)]) ** 2, 9)
              for mask in range(8)]
    o = ExplicitOracle(values)
    ok, witness = is_submodular(o)
    assert not ok
    s, a, b = witness
    gain_small = o.value(s | {a}) - o.value(s)
    gain_large = o.value(s | {a, b}) - o.value(s | {b})
    assert gain_small < gain_large


def test_gs_membership_positive():
    assert is_gross_substitutes(AdditiveOracle([F(1, 4), F(1, 2), F(1, 8)]))[0]
    assert is_gross_substitutes(UnitDemandOracle([F(1, 2), F(1, 3), F(1, 5)]))[0]
    assert is_gross_substitutes(UniformKDemandOracle(4, 2, F(1, 4)))[0]
    assert is_gross_substitutes(
        AssignmentOracle([[F(1, 4), F(1, 6)] for _ in range(4)]))[0]


def _check_gs_witness(oracle, witness):
    """Independent certification: enumerate demands at p and q."""
    m = oracle.num_actions

    def demands(pv):
        best = None
        out = []
        for s in all_subsets(m):
            if s & pv.excluded:
                continue
            u = oracle.value(s) - pv.total(s)
            if best is None or u > best:
                best, out = u, [s]
            elif u == best:
                out.append(s)
        return out

    assert witness.p is not None and witness.q is not None
    raised = {a for a in range(m)
              if witness.q.prices[a] != witness.p.prices[a]}
    for a in range(m):
        assert witness.q.prices[a] >= witness.p.prices[a]
    d_p = demands(witness.p)
    d_q = demands(witness.q)
    assert witness.demand_set in d_p
    retained = witness.demand_set - raised
    assert not any(retained <= s for s in d_q)


def test_gs_membership_hardness_negative_with_witness():
    o = hardness_oracle()
    ok, witness = is_gross_substitutes(o)
    assert not ok
    _check_gs_witness(o, witness)


def test_gs_membership_supermodular_negative_with_witness():
    values = [F(0), F(1, 8), F(1, 8), F(1, 2)]  # complements: f(ab) > f(a)+f(b)
    o = ExplicitOracle(values)
    ok, witness = is_gross_substitutes(o)
    assert not ok
    _check_gs_witness(o, witness)


@settings(deadline=None, max_examples=25)
@given(st.lists(st.fractions(min_value=0, max_value=F(1, 4)), min_size=2,
                max_size=4))
def test_additive_oracle_monotone_property(weights):
    o = AdditiveOracle(weights)
    ok, _ = is_monotone(o)
    assert ok


# -- descriptors ---------------------------------------------------------------


@pytest.mark.parametrize("oracle", [
    AdditiveOracle([F(1, 4), F(1, 2)]),
    UnitDemandOracle([F(1, 2), F(1, 3)]),
    UniformKDemandOracle(3, 2, F(1, 4)),
    AssignmentOracle([[F(1, 4), F(0)], [F(1, 8), F(1, 8)]]),
    CoverageOracle(4, [{0, 1}, {2}]),
    ExplicitOracle([F(0), F(1, 4), F(1, 2), F(1, 2)]),
    hardness_oracle(),
])
def test_descriptor_roundtrip(oracle):
    back = oracle_from_spec(oracle_to_spec(oracle))
    assert type(back) is type(oracle)
    for s in all_subsets(oracle.num_actions):
        assert back.value(s) == oracle.value(s)
