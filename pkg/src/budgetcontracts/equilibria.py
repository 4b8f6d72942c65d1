"""Best responses, Nash equilibria, subset stability, contract transforms.

Equilibrium checks use weak inequalities throughout: an agent indifferent
between the prescribed actions and a deviation counts as best-responding,
matching the knife-edge equalities that minimal incentivizing contracts
produce.  All functions are pure; ``table`` arguments accept a full value
table (bitmask order) as an algorithm-side cache.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from budgetcontracts.core import (
    ActionProfile,
    Contract,
    GeneralContract,
    GroundSetTooLargeError,
    Instance,
    ZERO,
    cost,
)
from budgetcontracts.rewards import PriceVector, brute_force_demand, demand_with_base, \
    gs_greedy_demand, set_to_mask


def _value_fn(inst: Instance, table: Optional[Sequence[Fraction]]):
    if table is None:
        return lambda s: inst.oracle.value(s)
    return lambda s: table[set_to_mask(s)]


def _subsets(items: Sequence[int]):
    n = len(items)
    for mask in range(1 << n):
        yield frozenset(items[b] for b in range(n) if mask & (1 << b))


def agent_utility(inst: Instance, alpha: Contract, profile: Iterable[int],
                  agent: int, *, table: Optional[Sequence[Fraction]] = None) -> Fraction:
    """alpha_i * f(S) - c(S_i)."""
    s = frozenset(profile)
    val = _value_fn(inst, table)
    return alpha[agent] * val(s) - cost(inst, inst.agent_part(s, agent))


def best_response(inst: Instance, agent: int, alpha_i: Fraction,
                  s_minus_i: Iterable[int], *, gs: Optional[bool] = None,
                  enum_cap: int = 20,
                  table: Optional[Sequence[Fraction]] = None) -> frozenset[int]:
    """A utility-maximizing action set for one agent, others' actions fixed.

    For alpha_i > 0 this is a demand computation over the agent's own
    actions at prices c_a / alpha_i, on top of the fixed outside actions:
    greedy when the oracle is gross substitutes, exhaustive otherwise.  The
    exhaustive path resolves utility ties toward the larger reward (the
    agent breaks indifference in the principal's favor, which is what makes
    knife-edge minimal contracts come out as prescribed), then toward the
    lexicographically smallest set.  At alpha_i = 0 the canonical response
    is the empty set (the agent is indifferent among all zero-cost sets).
    """
    s_other = frozenset(s_minus_i)
    own = inst.agent_actions[agent]
    if s_other & own:
        raise ValueError("s_minus_i intersects the agent's own actions")
    if alpha_i == 0:
        return frozenset()
    use_greedy = inst.oracle.is_gs_class if gs is None else gs
    if use_greedy:
        prices = PriceVector(
            {a: inst.cost_of[a] / alpha_i for a in own},
            excluded=inst.ground_set - own - s_other,
        )
        result = demand_with_base(inst.oracle, prices, s_other, gs=True,
                                  enum_cap=enum_cap, table=table)
        return result - s_other
    items = sorted(own)
    if len(items) > enum_cap:
        raise GroundSetTooLargeError(f"agent {agent} has {len(items)} actions")
    val = _value_fn(inst, table)
    best = None
    for dev in _subsets(items):
        full = dev | s_other
        f_full = val(full)
        u = alpha_i * f_full - cost(inst, dev)
        key = tuple(sorted(dev))
        rank = (u, f_full)
        if best is None or rank > best[0] or (rank == best[0] and key < best[1]):
            best = (rank, key, dev)
    return best[2]


@dataclass(frozen=True)
class NeCertificate:
    """Per-agent evidence for (or against) an equilibrium claim.

    ``utilities[i]`` is agent i's utility at the prescribed profile and
    ``best_deviations[i]`` a utility-maximizing alternative with its value;
    the profile is a Nash equilibrium iff no alternative strictly improves.
    """

    ok: bool
    profile: ActionProfile
    utilities: tuple[Fraction, ...]
    best_deviations: tuple[tuple[frozenset[int], Fraction], ...]
    violator: Optional[int] = None


def is_nash(inst: Instance, alpha: Contract, profile: Iterable[int], *,
            enum_cap: int = 20,
            table: Optional[Sequence[Fraction]] = None) -> NeCertificate:
    """Check the weak Nash condition by per-agent enumeration of deviations."""
    s = frozenset(profile)
    val = _value_fn(inst, table)
    utilities = []
    best_devs = []
    violator = None
    for i in range(inst.num_agents):
        own = sorted(inst.agent_actions[i])
        if len(own) > enum_cap:
            raise GroundSetTooLargeError(f"agent {i} has {len(own)} actions")
        s_i = s & inst.agent_actions[i]
        s_other = s - s_i
        u_i = alpha[i] * val(s) - cost(inst, s_i)
        best_u = None
        best_set: frozenset[int] = frozenset()
        for dev in _subsets(own):
            u = alpha[i] * val(dev | s_other) - cost(inst, dev)
            if best_u is None or u > best_u:
                best_u, best_set = u, dev
        utilities.append(u_i)
        best_devs.append((best_set, best_u))
        if best_u > u_i and violator is None:
            violator = i
    return NeCertificate(violator is None, s, tuple(utilities),
                         tuple(best_devs), violator)


def ne_from_demand(inst: Instance, alpha: Contract, *, gs: Optional[bool] = None,
                   enum_cap: int = 20,
                   table: Optional[Sequence[Fraction]] = None) -> frozenset[int]:
    """An equilibrium of ``alpha`` from one demand query.

    Prices each action at c_a / alpha_i for its owner i and excludes the
    actions of zero-payment agents; any demand set at these prices is a
    Nash equilibrium of ``alpha``.
    """
    prices: dict[int, Fraction] = {}
    excluded = set()
    for a in sorted(inst.ground_set):
        i = inst.owner_of[a]
        if alpha[i] > 0:
            prices[a] = inst.cost_of[a] / alpha[i]
        else:
            excluded.add(a)
    pv = PriceVector(prices, frozenset(excluded))
    use_greedy = inst.oracle.is_gs_class if gs is None else gs
    if use_greedy:
        return gs_greedy_demand(inst.oracle, pv, table=table)
    return brute_force_demand(inst.oracle, pv, enum_cap=enum_cap, table=table)


def is_subset_stable(inst: Instance, alpha: Contract, profile: Iterable[int], *,
                     table: Optional[Sequence[Fraction]] = None):
    """Check stability against own-subset deviations only.

    Returns (ok, witness) with witness = (agent, subset) for the first
    profitable shrink found.
    """
    s = frozenset(profile)
    val = _value_fn(inst, table)
    for i in range(inst.num_agents):
        s_i = s & inst.agent_actions[i]
        s_other = s - s_i
        u_i = alpha[i] * val(s) - cost(inst, s_i)
        for dev in _subsets(sorted(s_i)):
            if alpha[i] * val(dev | s_other) - cost(inst, dev) > u_i:
                return False, (i, dev)
    return True, None


def doubling_epsilon(budget: Fraction, num_agents: int) -> Fraction:
    """Default per-agent bump for the doubling transform: B / (4n)."""
    return Fraction(budget, 4 * num_agents)


def double_contract(inst: Instance, alpha: Contract, epsilon: Fraction, *,
                    gs: Optional[bool] = None, enum_cap: int = 20,
                    table: Optional[Sequence[Fraction]] = None):
    """The doubled contract 2*alpha + epsilon and one equilibrium of it.

    For submodular f and a subset-stable (alpha, S), every equilibrium of
    the returned contract retains at least half of f(S).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    doubled = alpha.scale(Fraction(2)).add_everyone(epsilon)
    profile = ne_from_demand(inst, doubled, gs=gs, enum_cap=enum_cap, table=table)
    return doubled, profile


def min_incentivizing_contract(inst: Instance, profile: Iterable[int], *,
                               enum_cap: int = 20,
                               table: Optional[Sequence[Fraction]] = None
                               ) -> Optional[Contract]:
    """The cheapest contract making ``profile`` a weak Nash equilibrium.

    Per agent, each deviation S' with f(S) > f(S' + S_-i) forces
    alpha_i >= (c(S_i) - c(S')) / (f(S) - f(S' + S_-i)), and each deviation
    with f(S) < f(S' + S_-i) caps alpha_i from above by the same ratio;
    equal-f deviations must not be strictly cheaper.  Returns None when some
    agent's bounds cross (the profile cannot be incentivized at any payment).
    """
    s = frozenset(profile)
    val = _value_fn(inst, table)
    f_s = val(s)
    entries = []
    for i in range(inst.num_agents):
        own = sorted(inst.agent_actions[i])
        if len(own) > enum_cap:
            raise GroundSetTooLargeError(f"agent {i} has {len(own)} actions")
        s_i = s & inst.agent_actions[i]
        s_other = s - s_i
        c_i = cost(inst, s_i)
        lo = ZERO
        hi: Optional[Fraction] = None
        for dev in _subsets(own):
            if dev == s_i:
                continue
            delta_f = f_s - val(dev | s_other)
            delta_c = c_i - cost(inst, dev)
            if delta_f > 0:
                ratio = delta_c / delta_f
                if ratio > lo:
                    lo = ratio
            elif delta_f == 0:
                if delta_c > 0:
                    return None
            else:
                ratio = delta_c / delta_f
                if hi is None or ratio < hi:
                    hi = ratio
        if hi is not None and lo > hi:
            return None
        entries.append(lo)
    return Contract(tuple(entries))


def linearize(contract: GeneralContract) -> Contract:
    """Componentwise linearization: alpha_i = max(0, pay(1) - pay(0)).

    Every equilibrium of the general contract remains an equilibrium of the
    linearized one.
    """
    return Contract(tuple(
        max(ZERO, s - f)
        for f, s in zip(contract.pay_on_failure, contract.pay_on_success)
    ))


def is_nash_general(inst: Instance, contract: GeneralContract,
                    profile: Iterable[int], *, enum_cap: int = 20,
                    table: Optional[Sequence[Fraction]] = None) -> bool:
    """Weak Nash check under a general (success/failure payment) contract."""
    s = frozenset(profile)
    val = _value_fn(inst, table)

    def utility(i: int, dev: frozenset[int], s_other: frozenset[int]) -> Fraction:
        f = val(dev | s_other)
        t0 = contract.pay_on_failure[i]
        t1 = contract.pay_on_success[i]
        return t1 * f + t0 * (1 - f) - cost(inst, dev)

    for i in range(inst.num_agents):
        own = sorted(inst.agent_actions[i])
        if len(own) > enum_cap:
            raise GroundSetTooLargeError(f"agent {i} has {len(own)} actions")
        s_i = s & inst.agent_actions[i]
        s_other = s - s_i
        u_i = utility(i, s_i, s_other)
        for dev in _subsets(own):
            if utility(i, dev, s_other) > u_i:
                return False
    return True
