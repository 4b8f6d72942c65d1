"""The hidden-set instance family behind the submodular inapproximability gap.

The family has n unit-action agents plus one special agent owning a bad and
a good action.  The reward composite is a unit-demand term over the special
actions, plus a capped count of everything else, minus a tiny penalty that
fires when the queried set, ignoring the good action, is exactly the hidden
half of the unit actions together with the bad action.  Only that hidden
half, working alongside the good action, can be incentivized within budget
to a reward above epsilon scale; identifying the hidden set through value
queries is the hard part, and the experiment below measures a solver's
success rate at it.

Making the penalty insensitive to the good action keeps the composite
submodular (a penalty on the single bad set alone is not: the good action
would shield it, creating a complementarity) while still revealing the
hidden set only to queries that pin it exactly, so each query rules out at
most one candidate.

The hidden set lives behind the oracle boundary: solvers run against a
query-counting view exposing only value and demand answers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Optional

from budgetcontracts.core import (
    Action,
    Contract,
    Instance,
    ModelError,
    ONE,
    ZERO,
)
from budgetcontracts.equilibria import is_nash, min_incentivizing_contract
from budgetcontracts.objectives import PROFIT, evaluate
from budgetcontracts.rewards import (
    PriceVector,
    RewardOracle,
    brute_force_demand,
    mask_to_set,
    value_table,
)

HALF = Fraction(1, 2)


class InvalidEpsilonError(ModelError):
    pass


class OddNError(ModelError):
    pass


class BadHiddenSetSizeError(ModelError):
    pass


class QueryBudgetExceededError(ModelError):
    pass


def bad_action(n: int) -> int:
    return n


def good_action(n: int) -> int:
    return n + 1


def default_epsilon(n: int, budget: Fraction, approx_target: Fraction) -> Fraction:
    """Half the binding upper bound on epsilon, as an exact rational.

    Bounds enforced: the gap condition (1-B)/(K(n+4)) and 4n/B, plus
    1/(n+2) so the top reward value stays inside [0, 1], and eps^2 < 2B/n
    so the good action's cost stays positive; strict inequalities need
    slack, hence the halving.
    """
    bound = min(
        (ONE - budget) / (approx_target * (n + 4)),
        Fraction(4 * n) / budget,
        Fraction(1, n + 2),
    )
    eps = bound / 2
    while eps * eps >= Fraction(2) * budget / n:
        eps /= 2
    return eps


@dataclass(frozen=True)
class HardnessParams:
    n: int
    budget: Fraction
    approx_target: Fraction
    eps: Fraction
    hidden: frozenset[int]

    def __post_init__(self) -> None:
        if self.n <= 0 or self.n % 2 != 0:
            raise OddNError(f"n must be a positive even integer, got {self.n}")
        if not 0 < self.budget < 1:
            raise ModelError("budget must lie strictly inside (0, 1)")
        if self.approx_target < 1:
            raise ModelError("approximation target must be >= 1")
        if len(self.hidden) != self.n // 2 or not self.hidden <= set(range(self.n)):
            raise BadHiddenSetSizeError(
                f"hidden set must be {self.n // 2} of the unit agents")
        e = self.eps
        if e <= 0:
            raise InvalidEpsilonError("eps must be > 0")
        if e >= (ONE - self.budget) / (self.approx_target * (self.n + 4)):
            raise InvalidEpsilonError("eps too large for the gap condition")
        if e >= Fraction(4 * self.n) / self.budget:
            raise InvalidEpsilonError("eps violates the 4n/B condition")
        if e > Fraction(1, self.n + 2):
            raise InvalidEpsilonError("eps > 1/(n+2) pushes f above 1")
        if e * e >= Fraction(2) * self.budget / self.n:
            raise InvalidEpsilonError("eps^2 must stay below 2B/n")

    @staticmethod
    def make(n: int, budget: Fraction, approx_target: Fraction = ONE,
             eps: Optional[Fraction] = None,
             hidden: Optional[Iterable[int]] = None,
             seed: int = 0) -> "HardnessParams":
        if eps is None:
            eps = default_epsilon(n, budget, approx_target)
        if hidden is None:
            hidden = random.Random(seed).sample(range(n), n // 2)
        return HardnessParams(n, budget, approx_target, eps, frozenset(hidden))


class HardnessOracle(RewardOracle):
    """Value oracle for the composite reward, with a native demand query.

    The demand simulation sorts unit actions by price, takes the best
    feasible prefix length tau (capped at n/2 + 1), and scores the twelve
    candidates {prefix tau, prefix tau-1, prefix tau-2 plus the tau-th}
    crossed with the four special-action options, spending at most twelve
    value queries.  That recipe is exact for the nonnegative prices the
    model produces; with more than n/2 + 1 negatively priced unit actions
    it would under-buy, so that regime falls back to brute force.
    """

    function_class = "submodular"
    has_native_demand = True

    def __init__(self, n: int, eps: Fraction, hidden: frozenset[int]):
        if n <= 0 or n % 2 != 0:
            raise OddNError(f"n must be a positive even integer, got {n}")
        if len(frozenset(hidden)) != n // 2 or not frozenset(hidden) <= set(range(n)):
            raise BadHiddenSetSizeError("hidden set must be n/2 unit agents")
        if not 0 < Fraction(eps) <= Fraction(1, n + 2):
            raise InvalidEpsilonError("eps must lie in (0, 1/(n+2)]")
        super().__init__(n + 2)
        self.n = n
        self.eps = Fraction(eps)
        self._hidden = frozenset(hidden)
        self._penalty_core = self._hidden | {bad_action(n)}

    def reveals_hidden(self, subset: frozenset[int]) -> bool:
        """Queries on which the oracle differs from the penalty-free one."""
        return subset - {good_action(self.n)} == self._penalty_core

    def _value(self, subset: frozenset[int]) -> Fraction:
        n, eps = self.n, self.eps
        f1 = ZERO
        if good_action(n) in subset:
            f1 = HALF
        elif bad_action(n) in subset:
            f1 = eps
        others = len(subset) - (1 if good_action(n) in subset else 0)
        f2 = eps * min(others, n // 2 + 1)
        f3 = eps / 2 if self.reveals_hidden(subset) else ZERO
        return f1 + f2 - f3

    def base_value(self, subset: frozenset[int]) -> Fraction:
        """The penalty-free composite (what every non-revealing query sees)."""
        n, eps = self.n, self.eps
        f1 = ZERO
        if good_action(n) in subset:
            f1 = HALF
        elif bad_action(n) in subset:
            f1 = eps
        others = len(subset) - (1 if good_action(n) in subset else 0)
        return f1 + eps * min(others, n // 2 + 1)

    def _demand(self, prices: PriceVector) -> frozenset[int]:
        return hardness_demand(self, prices)


def hardness_demand(oracle: HardnessOracle, prices: PriceVector) -> frozenset[int]:
    """Demand via the twelve-candidate simulation (see HardnessOracle)."""
    n, eps = oracle.n, oracle.eps
    units = [a for a in range(n) if a not in prices.excluded]
    for a in units:
        if a not in prices.prices:
            raise ModelError(f"unit action {a} neither priced nor excluded")
    negatives = sum(1 for a in units if prices.prices[a] < 0)
    if negatives > n // 2 + 1:
        return brute_force_demand(oracle, prices)
    order = sorted(units, key=lambda a: (prices.prices[a], a))
    k = sum(1 for a in order if prices.prices[a] < eps)
    tau = min(k, n // 2 + 1)
    unit_options = {frozenset(order[:tau])}
    if tau >= 1:
        unit_options.add(frozenset(order[:tau - 1]))
    if tau >= 2:
        unit_options.add(frozenset(order[:tau - 2]) | {order[tau - 1]})
    special_options = [frozenset()]
    for special in (good_action(n), bad_action(n)):
        if special not in prices.excluded:
            if special not in prices.prices:
                raise ModelError(f"action {special} neither priced nor excluded")
            special_options += [opt | {special} for opt in list(special_options)]
    best_u = None
    best: frozenset[int] = frozenset()
    candidates = sorted(
        {u | sp for u in unit_options for sp in special_options},
        key=lambda s: tuple(sorted(s)))
    for cand in candidates:
        u = oracle.value(cand) - prices.total(cand)
        if best_u is None or u > best_u:
            best_u, best = u, cand
    return best


def build_hardness(params: HardnessParams) -> Instance:
    """The full instance: unit agents 0..n-1, special agent n with two actions."""
    n, eps, budget = params.n, params.eps, params.budget
    actions = [Action(i, i, eps ** 3) for i in range(n)]
    actions.append(Action(bad_action(n), n, Fraction(3, 2) * eps * budget))
    actions.append(Action(good_action(n), n, HALF * (budget - Fraction(n, 2) * eps * eps)))
    oracle = HardnessOracle(n, eps, params.hidden)
    return Instance(n + 1, tuple(actions), oracle)


def good_contract(params: HardnessParams) -> tuple[Contract, frozenset[int]]:
    """The one budget-exhausting pair that reaches reward 1/2.

    Pays eps^2 to each hidden unit agent and the remaining budget to the
    special agent; the prescribed profile is the hidden set plus the good
    action.
    """
    n, eps, budget = params.n, params.eps, params.budget
    alpha = [ZERO] * (n + 1)
    for i in params.hidden:
        alpha[i] = eps * eps
    alpha[n] = budget - Fraction(n, 2) * eps * eps
    profile = frozenset(params.hidden) | {good_action(n)}
    return Contract(tuple(alpha)), profile


@dataclass(frozen=True)
class GapReport:
    ok: bool
    bound: Fraction
    max_other_value: Fraction
    gap_ratio: Fraction
    feasible_profiles: int
    violations: tuple[frozenset[int], ...]


def verify_gap_exhaustive(params: HardnessParams, *, enum_cap: int = 12) -> GapReport:
    """Check that every budget-feasible non-good profile stays below the bound.

    Enumerates all profiles, prices each with its minimal incentivizing
    contract, and asserts f <= (n/2 + 2) * eps for every feasible profile
    other than the good one.  The gap ratio compares the good pair's profit
    floor (1-B)/2 against that bound.
    """
    n = params.n
    if n > enum_cap - 2:
        raise ModelError(f"n = {n} too large for exhaustive gap verification")
    inst = build_hardness(params)
    table = value_table(inst.oracle)
    good_profile = frozenset(params.hidden) | {good_action(n)}
    bound = (Fraction(n, 2) + 2) * params.eps
    max_other = ZERO
    feasible = 0
    violations = []
    for mask in range(1 << (n + 2)):
        profile = mask_to_set(mask)
        if profile == good_profile:
            continue
        alpha = min_incentivizing_contract(inst, profile, table=table)
        if alpha is None or alpha.total() > params.budget:
            continue
        feasible += 1
        f_s = table[mask]
        if f_s > max_other:
            max_other = f_s
        if f_s > bound:
            violations.append(profile)
    gap_ratio = ((ONE - params.budget) / 2) / bound
    return GapReport(not violations, bound, max_other, gap_ratio, feasible,
                     tuple(violations))


def indistinguishability_check(params: HardnessParams,
                               queries: Iterable[Iterable[int]]) -> bool:
    """True iff every non-revealing query sees the penalty-free value.

    A query reveals the hidden set exactly when, ignoring the good action,
    it equals hidden+bad; any other query answers identically on the real
    oracle and on the penalty-free composite, so a solver that never asks a
    revealing query cannot tell the instances apart.
    """
    oracle = HardnessOracle(params.n, params.eps, params.hidden)
    for q in queries:
        s = frozenset(q)
        if oracle.reveals_hidden(s):
            continue
        if oracle._value(s) != oracle.base_value(s):
            return False
    return True


# -- adversarial experiment ---------------------------------------------------


@dataclass(frozen=True)
class HardnessPublicInfo:
    """Everything a solver may see besides oracle answers."""

    n: int
    budget: Fraction
    approx_target: Fraction
    eps: Fraction
    unit_cost: Fraction
    bad_cost: Fraction
    good_cost: Fraction
    hidden: Optional[frozenset[int]] = None  # populated only in sanity mode


class OracleView:
    """Query-counting facade; the solver under test sees nothing else.

    Each value or demand call the solver issues costs one unit against the
    query budget (the oracle's own internal value spending of a simulated
    demand is tracked on the oracle's counters, not here).
    """

    def __init__(self, oracle: RewardOracle, query_budget: int):
        self._oracle = oracle
        self.query_budget = query_budget
        self.issued = 0

    def _spend(self) -> None:
        if self.issued >= self.query_budget:
            raise QueryBudgetExceededError(
                f"query budget of {self.query_budget} exhausted")
        self.issued += 1

    def value(self, subset: Iterable[int]) -> Fraction:
        self._spend()
        return self._oracle.value(subset)

    def demand(self, prices: PriceVector) -> frozenset[int]:
        self._spend()
        return self._oracle.demand(prices)


Solver = Callable[[OracleView, HardnessPublicInfo], tuple[Contract, frozenset[int]]]


def _pair_for_guess(pub: HardnessPublicInfo,
                    guess: frozenset[int]) -> tuple[Contract, frozenset[int]]:
    n, eps = pub.n, pub.eps
    alpha = [ZERO] * (n + 1)
    for i in guess:
        alpha[i] = eps * eps
    alpha[n] = pub.budget - Fraction(n, 2) * eps * eps
    return Contract(tuple(alpha)), frozenset(guess) | {good_action(n)}


def make_random_guess_solver(seed: int) -> Solver:
    """Baseline: guess the hidden set uniformly, no queries at all."""
    rng = random.Random(seed)

    def solver(view: OracleView, pub: HardnessPublicInfo):
        guess = frozenset(rng.sample(range(pub.n), pub.n // 2))
        return _pair_for_guess(pub, guess)

    return solver


def cheating_solver(view: OracleView, pub: HardnessPublicInfo):
    """Harness sanity check: reads the hidden set handed over out-of-band."""
    if pub.hidden is None:
        raise ModelError("cheating solver needs reveal_hidden=True")
    return _pair_for_guess(pub, pub.hidden)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    success: bool
    approx_fraction: Fraction  # achieved value / good pair's value
    issued_queries: int
    oracle_value_queries: int
    oracle_demand_queries: int
    budget_exceeded: bool


@dataclass(frozen=True)
class ExperimentReport:
    n: int
    budget: Fraction
    approx_target: Fraction
    eps: Fraction
    trials: int
    query_budget: int
    successes: int
    baseline_prob: Fraction
    mean_approx_fraction: Fraction
    records: tuple[TrialRecord, ...] = field(repr=False)

    @property
    def success_rate(self) -> Fraction:
        return Fraction(self.successes, self.trials) if self.trials else ZERO


def adversary_experiment(solver: Solver, n: int, budget: Fraction,
                         approx_target: Fraction, trials: int,
                         query_budget: int, seed: int, *,
                         eps: Optional[Fraction] = None,
                         reveal_hidden: bool = False) -> ExperimentReport:
    """Run the hidden-set game: can the solver find the good equilibrium?

    Per trial, draws the hidden set uniformly among the (n choose n/2)
    candidates, hands the solver a counting oracle view capped at
    ``query_budget`` issued queries, and scores success as: the returned
    pair is budget-feasible, is a Nash equilibrium, and its profit times
    the approximation target reaches the good pair's profit floor (1-B)/2.
    A blown query budget records as a failed trial, not a crash.
    """
    if eps is None:
        eps = default_epsilon(n, budget, approx_target)
    rng = random.Random(seed)
    records = []
    successes = 0
    total_fraction = ZERO
    floor = (ONE - budget) / 2
    for t in range(trials):
        hidden = frozenset(rng.sample(range(n), n // 2))
        params = HardnessParams(n, budget, approx_target, eps, hidden)
        inst = build_hardness(params)
        pub = HardnessPublicInfo(
            n, budget, approx_target, eps,
            unit_cost=eps ** 3,
            bad_cost=Fraction(3, 2) * eps * budget,
            good_cost=HALF * (budget - Fraction(n, 2) * eps * eps),
            hidden=hidden if reveal_hidden else None)
        view = OracleView(inst.oracle, query_budget)
        exceeded = False
        try:
            alpha, profile = solver(view, pub)
        except QueryBudgetExceededError:
            alpha, profile = Contract.zero(n + 1), frozenset()
            exceeded = True
        vq, dq = inst.oracle.value_queries, inst.oracle.demand_queries
        value = ZERO
        if alpha.total() <= budget and is_nash(inst, alpha, profile).ok:
            value = evaluate(PROFIT, inst, alpha, profile)
        good_alpha, good_profile = good_contract(params)
        good_value = evaluate(PROFIT, inst, good_alpha, good_profile)
        success = value * approx_target >= floor
        fraction = value / good_value if good_value > 0 else ZERO
        successes += success
        total_fraction += fraction
        records.append(TrialRecord(t, success, fraction, view.issued, vq, dq,
                                   exceeded))
    baseline = Fraction(1, comb(n, n // 2))
    mean_fraction = total_fraction / trials if trials else ZERO
    return ExperimentReport(n, budget, approx_target, eps, trials,
                            query_budget, successes, baseline,
                            mean_fraction, tuple(records))


# -- JSON descriptor ----------------------------------------------------------


def hardness_oracle_from_spec(spec) -> HardnessOracle:
    from budgetcontracts.core import parse_rational

    n = int(spec["n"])
    if "eps" in spec:
        eps = parse_rational(spec["eps"])
    else:
        budget = parse_rational(spec["budget"])
        target = parse_rational(spec.get("approx_target", "1"))
        eps = default_epsilon(n, budget, target)
    if "hidden" in spec:
        hidden = frozenset(int(i) for i in spec["hidden"])
    else:
        hidden = frozenset(random.Random(int(spec.get("seed", 0))).sample(
            range(n), n // 2))
    return HardnessOracle(n, eps, hidden)


def hardness_oracle_to_spec(oracle: HardnessOracle) -> dict:
    from budgetcontracts.core import format_rational as fr

    return {"type": "hardness", "n": oracle.n, "eps": fr(oracle.eps),
            "hidden": sorted(oracle._hidden)}


def hardness_instance_from_spec(spec) -> Instance:
    """Build the full instance (agents, costs, oracle) from a descriptor."""
    from budgetcontracts.core import parse_rational

    n = int(spec["n"])
    budget = parse_rational(spec["budget"])
    target = parse_rational(spec.get("approx_target", "1"))
    eps = parse_rational(spec["eps"]) if "eps" in spec \
        else default_epsilon(n, budget, target)
    if "hidden" in spec:
        hidden = frozenset(int(i) for i in spec["hidden"])
    else:
        hidden = frozenset(random.Random(int(spec.get("seed", 0))).sample(
            range(n), n // 2))
    return build_hardness(HardnessParams(n, budget, target, eps, hidden))
