"""Optimization algorithms: exact brute force, FPTAS variants, downsizing,
and the constant-factor pipeline for gross-substitutes rewards.

Every solver returns a :class:`SolveResult` whose contract/profile pair is a
weak Nash equilibrium within budget, the objective value evaluated exactly,
and a certified approximation factor (``gamma`` meaning value >= OPT/gamma,
or the string "exact").  Solvers are deterministic: enumeration runs in
bitmask order and ties keep the first candidate found.

The poly-time structure of the algorithms is preserved at desk scale; the
external poly-time base solver the reduction pipeline would call for
Max-Profit(1) is stood in for by the exact brute-force oracle (gamma = 1),
and the certified constant accounts for that.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from budgetcontracts.core import (
    Action,
    Contract,
    GroundSetTooLargeError,
    Instance,
    ModelError,
    ONE,
    ZERO,
    cost,
    restrict_contract,
)
from budgetcontracts.equilibria import is_nash, min_incentivizing_contract, \
    ne_from_demand
from budgetcontracts.objectives import Objective, PROFIT, REWARD, evaluate
from budgetcontracts.rewards import PriceVector, demand_with_base, mask_to_set, \
    set_to_mask, value_table


class NotAnEquilibriumError(ModelError):
    pass


@dataclass(frozen=True)
class SolveResult:
    contract: Contract
    profile: frozenset[int]
    value: Fraction
    factor: Fraction | str  # gamma with value >= OPT/gamma, or "exact"
    objective: str
    budget: Fraction
    value_queries: int = 0
    demand_queries: int = 0


def _maybe_table(inst: Instance, table, cap: int = 14):
    if table is not None:
        return table
    if inst.num_actions <= cap:
        return value_table(inst.oracle)
    return None


def _submasks(mask: int) -> list[int]:
    out = [0]
    sub = mask
    while sub:
        out.append(sub)
        sub = (sub - 1) & mask
    return out


def iter_min_contracts(inst: Instance, table: Sequence[Fraction], *,
                       budget: Optional[Fraction] = None):
    """Yield (profile mask, minimal incentivizing Contract) for every
    incentivizable profile, in ascending mask order.

    Same bound algebra as :func:`min_incentivizing_contract`, run on
    integers over a common denominator so profile enumeration stays cheap;
    falls back to exact Fractions when the denominators do not fit.
    ``budget`` prunes profiles whose partial payment already exceeds it.
    """
    m = inst.num_actions
    n = inst.num_agents
    den = 1
    for v in table:
        den = den * v.denominator // math.gcd(den, v.denominator)
        if den > 10 ** 24:
            break
    for a in range(m):
        c = inst.cost_of[a].denominator
        den = den * c // math.gcd(den, c)
        if den > 10 ** 24:
            break
    if den > 10 ** 24:  # unwieldy common denominator: generic path
        for mask in range(1 << m):
            profile = mask_to_set(mask)
            alpha = min_incentivizing_contract(inst, profile, table=table)
            if alpha is None or (budget is not None and alpha.total() > budget):
                continue
            yield mask, alpha
        return

    f_int = [int(v * den) for v in table]
    own_masks = [set_to_mask(inst.agent_actions[i]) for i in range(n)]
    own_subs = [_submasks(om) for om in own_masks]
    cost_int: list[dict[int, int]] = []
    for i in range(n):
        by_mask = {}
        for sub in own_subs[i]:
            by_mask[sub] = sum(int(inst.cost_of[a] * den)
                               for a in mask_to_set(sub))
        cost_int.append(by_mask)

    for mask in range(1 << m):
        entries = []
        total = ZERO
        feasible = True
        f_s = f_int[mask]
        for i in range(n):
            om = own_masks[i]
            s_i = mask & om
            rest = mask & ~om
            c_i = cost_int[i][s_i]
            lo_n, lo_d = 0, 1
            hi = None  # (numerator, positive denominator)
            for dev in own_subs[i]:
                if dev == s_i:
                    continue
                df = f_s - f_int[rest | dev]
                dc = c_i - cost_int[i][dev]
                if df > 0:
                    if dc > 0 and dc * lo_d > lo_n * df:
                        lo_n, lo_d = dc, df
                elif df == 0:
                    if dc > 0:
                        feasible = False
                        break
                else:
                    cand = (-dc, -df)
                    if hi is None or cand[0] * hi[1] < hi[0] * cand[1]:
                        hi = cand
            if not feasible or (hi is not None and lo_n * hi[1] > hi[0] * lo_d):
                feasible = False
                break
            alpha_i = Fraction(lo_n, lo_d)
            total += alpha_i
            if budget is not None and total > budget:
                feasible = False
                break
            entries.append(alpha_i)
        if feasible:
            yield mask, Contract(tuple(entries))


def _count_queries(inst: Instance, before: tuple[int, int]) -> tuple[int, int]:
    return (inst.oracle.value_queries - before[0],
            inst.oracle.demand_queries - before[1])


def brute_force_opt(inst: Instance, budget: Fraction, obj: Objective, *,
                    enum_cap: int = 20,
                    table: Optional[Sequence[Fraction]] = None) -> SolveResult:
    """Exact optimum over all budget-feasible contract/equilibrium pairs.

    Enumerates every profile, prices it with its minimal incentivizing
    contract, keeps the budget-feasible ones and returns the objective
    maximizer.  Ground truth for everything else in this module.
    """
    m = inst.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    table = _maybe_table(inst, table)
    if table is None:
        table = value_table(inst.oracle, enum_cap=enum_cap)
    best_alpha = Contract.zero(inst.num_agents)
    best_profile: frozenset[int] = frozenset()
    best_value = evaluate(obj, inst, best_alpha, best_profile, table=table)
    for mask, alpha in iter_min_contracts(inst, table, budget=budget):
        profile = mask_to_set(mask)
        v = evaluate(obj, inst, alpha, profile, table=table)
        if v > best_value:
            best_alpha, best_profile, best_value = alpha, profile, v
    vq, dq = _count_queries(inst, before)
    return SolveResult(best_alpha, best_profile, best_value, "exact",
                       str(obj), budget, vq, dq)


def max_reward_bounded_brute(inst: Instance, budget: Fraction, *,
                             enum_cap: int = 20,
                             table: Optional[Sequence[Fraction]] = None
                             ) -> SolveResult:
    """Exact reward maximization with the per-agent cap alpha_i <= 3B/4."""
    m = inst.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    table = _maybe_table(inst, table)
    if table is None:
        table = value_table(inst.oracle, enum_cap=enum_cap)
    cap = Fraction(3, 4) * budget
    best_alpha = Contract.zero(inst.num_agents)
    best_profile: frozenset[int] = frozenset()
    best_value = ZERO
    for mask, alpha in iter_min_contracts(inst, table, budget=budget):
        if any(a > cap for a in alpha.alpha):
            continue
        v = table[mask]
        if v > best_value:
            best_alpha, best_profile, best_value = alpha, mask_to_set(mask), v
    vq, dq = _count_queries(inst, before)
    return SolveResult(best_alpha, best_profile, best_value, "exact",
                       "reward-bounded", budget, vq, dq)


def gs_single_agent_exact(inst: Instance, agent: int, obj: Objective,
                          budget: Fraction, *, enum_cap: int = 20,
                          table: Optional[Sequence[Fraction]] = None
                          ) -> SolveResult:
    """Exact best single-agent pair: pay only ``agent``, who acts alone.

    Desk-scale realization of the critical-point method: every subset of the
    agent's actions is priced at its minimal incentivizing payment and the
    feasible objective maximizer wins.
    """
    own = sorted(inst.agent_actions[agent])
    if len(own) > enum_cap:
        raise GroundSetTooLargeError(f"agent {agent} has {len(own)} actions")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    table = _maybe_table(inst, table)
    best_alpha = Contract.zero(inst.num_agents)
    best_profile: frozenset[int] = frozenset()
    best_value = evaluate(obj, inst, best_alpha, best_profile, table=table)
    for mask in range(1 << len(own)):
        profile = frozenset(own[b] for b in range(len(own)) if mask & (1 << b))
        alpha = min_incentivizing_contract(inst, profile, table=table)
        if alpha is None or alpha[agent] > budget:
            continue
        v = evaluate(obj, inst, alpha, profile, table=table)
        if v > best_value:
            best_alpha, best_profile, best_value = alpha, profile, v
    vq, dq = _count_queries(inst, before)
    return SolveResult(best_alpha, best_profile, best_value, "exact",
                       str(obj), budget, vq, dq)


def scale_costs(inst: Instance, factor: Fraction) -> Instance:
    """The same instance with every action cost multiplied by ``factor``."""
    if factor <= 0:
        raise ModelError("cost scale factor must be > 0")
    actions = tuple(Action(a.action_id, a.owner, a.cost * factor)
                    for a in inst.actions)
    return Instance(inst.num_agents, actions, inst.oracle)


# -- additive FPTAS ----------------------------------------------------------


@dataclass(frozen=True)
class DpTable:
    """Minimal-payment table A(j, x) for incentivizing discretized value x.

    ``basis`` is "f" (reward) or "f-c" (welfare); x ranges over integer
    multiples t * delta * b for t = 0..t_max.  Payments are stored as
    integers over the common denominator ``den`` (exact; the hot loop stays
    on machine integers), with None marking unreachable entries - never a
    large sentinel number.  ``choice[j][t]`` stores the prefix length taken
    by agent j and the previous column, for reconstruction.  Actions with
    zero singleton value are dropped up front; actions whose payment ratio
    exceeds the budget survive the table and are filtered by the budget
    selection downstream.
    """

    basis: str
    b: Fraction
    eps: Fraction
    delta: Fraction
    t_max: int
    den: int
    scaled_payments: tuple[tuple[Optional[int], ...], ...]
    choice: tuple[tuple[Optional[tuple[int, int]], ...], ...]
    agent_order: tuple[tuple[int, ...], ...]
    prefix_ratio: tuple[tuple[Fraction, ...], ...]
    prefix_weight: tuple[tuple[int, ...], ...]

    @property
    def x_values(self) -> list[Fraction]:
        return [t * self.delta * self.b for t in range(self.t_max + 1)]

    def payment(self, j: int, t: int) -> Optional[Fraction]:
        scaled = self.scaled_payments[j][t]
        return None if scaled is None else Fraction(scaled, self.den)

    def reconstruct(self, inst: Instance, t: int) -> tuple[Contract, frozenset[int]]:
        """The payment-minimal (contract, profile) behind column ``t``."""
        n = inst.num_agents
        if self.scaled_payments[n][t] is None:
            raise ModelError(f"column {t} is unreachable")
        alpha = [ZERO] * n
        chosen: set[int] = set()
        col = t
        for j in range(n, 0, -1):
            ell, prev = self.choice[j][col]
            if ell > 0:
                alpha[j - 1] = self.prefix_ratio[j - 1][ell]
                chosen.update(self.agent_order[j - 1][:ell])
            col = prev
        return Contract(tuple(alpha)), frozenset(chosen)


def build_dp_table(inst: Instance, basis: str, b: Fraction, eps: Fraction, *,
                   budget: Optional[Fraction] = None,
                   table: Optional[Sequence[Fraction]] = None) -> DpTable:
    """Fill the dynamic program for additive f at scale ``b``.

    Per agent, actions sort ascending by payment ratio c_a / f({a}); a
    contract then incentivizes exactly a prefix, whose payment is the last
    prefix member's ratio.  Column arguments below zero clamp to column
    zero.  Passing ``budget`` drops prefixes whose own ratio already
    exceeds it; this only changes entries that the budget selection would
    discard anyway.
    """
    if not 0 < eps < 1:
        raise ModelError("eps must lie in (0, 1)")
    if b <= 0:
        raise ModelError("b must be > 0")
    if basis not in ("f", "f-c"):
        raise ModelError('basis must be "f" or "f-c"')
    n = inst.num_agents
    m = inst.num_actions
    delta = eps / m
    step = delta * b

    def singleton(a: int) -> Fraction:
        if table is not None:
            return table[1 << a]
        return inst.oracle.value(frozenset({a}))

    agent_order: list[tuple[int, ...]] = []
    prefix_ratio: list[list[Fraction]] = []
    prefix_weight: list[list[int]] = []
    for i in range(n):
        kept = [a for a in sorted(inst.agent_actions[i]) if singleton(a) > 0]
        kept.sort(key=lambda a: (inst.cost_of[a] / singleton(a), a))
        if budget is not None:
            kept = [a for a in kept if inst.cost_of[a] / singleton(a) <= budget]
        agent_order.append(tuple(kept))
        ratios = [ZERO]
        weights = [0]
        acc = 0
        for a in kept:
            ratios.append(inst.cost_of[a] / singleton(a))
            phi = singleton(a) - inst.cost_of[a] if basis == "f-c" else singleton(a)
            acc += math.floor(phi / step)
            weights.append(acc)
        prefix_ratio.append(ratios)
        prefix_weight.append(weights)

    t_cap = math.ceil(Fraction(m * m) / eps)
    reachable = sum(max(w) for w in prefix_weight)
    t_max = min(t_cap, max(reachable, 0))

    den = 1
    for ratios in prefix_ratio:
        for r in ratios:
            den = den * r.denominator // math.gcd(den, r.denominator)
    scaled: list[list[list[int]]] = [
        [int(r * den) for r in ratios] for ratios in prefix_ratio
    ]

    rows: list[list[Optional[int]]] = [[None] * (t_max + 1)]
    rows[0][0] = 0
    choices: list[list[Optional[tuple[int, int]]]] = [[None] * (t_max + 1)]
    for j in range(1, n + 1):
        prev = rows[j - 1]
        row: list[Optional[int]] = [None] * (t_max + 1)
        ch: list[Optional[tuple[int, int]]] = [None] * (t_max + 1)
        weights = prefix_weight[j - 1]
        pay = scaled[j - 1]
        for t in range(t_max + 1):
            best = None
            best_ch = None
            for ell, w in enumerate(weights):
                idx = t - w
                if idx < 0:
                    idx = 0
                elif idx > t_max:
                    continue
                base = prev[idx]
                if base is None:
                    continue
                cand = base + pay[ell]
                if best is None or cand < best:
                    best, best_ch = cand, (ell, idx)
            row[t] = best
            ch[t] = best_ch
        rows.append(row)
        choices.append(ch)
    return DpTable(basis, b, eps, delta, t_max, den,
                   tuple(tuple(r) for r in rows),
                   tuple(tuple(c) for c in choices),
                   tuple(agent_order),
                   tuple(tuple(r) for r in prefix_ratio),
                   tuple(tuple(w) for w in prefix_weight))


def additive_fptas(inst: Instance, budget: Fraction, eps: Fraction,
                   obj: Objective, *,
                   table: Optional[Sequence[Fraction]] = None) -> SolveResult:
    """(1-eps)-approximation for additive f under any budget in [0, 1].

    Sweeps the scale b over every candidate singleton value (f singletons
    for profit and reward, f-c singletons for welfare), fills the payment
    table per scale, and selects the column: the largest budget-feasible
    one for reward and welfare, the (1 - payment) * value maximizer below
    it for profit.  Welfare mirrors the reward selection rule.
    """
    if obj.kind not in ("profit", "reward", "welfare"):
        raise ModelError("additive FPTAS supports profit, reward, welfare")
    if not 0 <= budget <= 1:
        raise ModelError("budget must lie in [0, 1]")
    if not 0 < eps < 1:
        raise ModelError("eps must lie in (0, 1)")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    table = _maybe_table(inst, table)
    basis = "f-c" if obj.kind == "welfare" else "f"

    def singleton(a: int) -> Fraction:
        if table is not None:
            return table[1 << a]
        return inst.oracle.value(frozenset({a}))

    candidates = set()
    for a in range(inst.num_actions):
        f_a = singleton(a)
        if f_a <= 0:
            continue
        b = f_a - inst.cost_of[a] if basis == "f-c" else f_a
        if b > 0:
            candidates.add(b)

    best_alpha = Contract.zero(inst.num_agents)
    best_profile: frozenset[int] = frozenset()
    best_value = evaluate(obj, inst, best_alpha, best_profile, table=table)
    for b in sorted(candidates, reverse=True):
        dp = build_dp_table(inst, basis, b, eps, budget=budget, table=table)
        row = dp.scaled_payments[inst.num_agents]
        # scaled integer comparisons: A(n, t) <= B  <=>  row[t] * q <= p * den
        b_num = budget.numerator * dp.den
        b_den = budget.denominator
        t_bar = -1
        for t in range(dp.t_max, -1, -1):
            if row[t] is not None and row[t] * b_den <= b_num:
                t_bar = t
                break
        if t_bar < 0:
            continue
        if obj.kind == "profit":
            best_score = -1
            t_star = 0
            for t in range(t_bar + 1):
                if row[t] is None:
                    continue
                score = (dp.den - row[t]) * t
                if score >= best_score:
                    best_score, t_star = score, t
        else:
            t_star = t_bar
        alpha, profile = dp.reconstruct(inst, t_star)
        v = evaluate(obj, inst, alpha, profile, table=table)
        if v > best_value:
            best_alpha, best_profile, best_value = alpha, profile, v
    vq, dq = _count_queries(inst, before)
    return SolveResult(best_alpha, best_profile, best_value,
                       1 / (1 - eps), str(obj), budget, vq, dq)


# -- single-agent FPTAS ------------------------------------------------------


def _single_agent_lines(inst: Instance,
                        table: Sequence[Fraction]) -> list[tuple[Fraction, Fraction, int]]:
    """Utility lines alpha -> alpha * f(S) - c(S), one per action subset."""
    lines = []
    for mask in range(1 << inst.num_actions):
        f_s = table[mask]
        c_s = cost(inst, mask_to_set(mask))
        lines.append((f_s, -c_s, mask))
    return lines


def _upper_envelope(lines: list[tuple[Fraction, Fraction, int]]):
    """Upper envelope of lines; among ties prefers the larger slope.

    Returns (hull, breaks): hull[i] active on (breaks[i-1], breaks[i]];
    querying at a breakpoint picks the right-hand (larger-f) line.
    """
    by_slope: dict[Fraction, tuple[Fraction, int]] = {}
    for slope, intercept, mask in sorted(lines):
        cur = by_slope.get(slope)
        if cur is None or intercept > cur[0]:
            by_slope[slope] = (intercept, mask)
    distinct = [(s, b, m) for s, (b, m) in sorted(by_slope.items())]
    hull: list[tuple[Fraction, Fraction, int]] = []
    for line in distinct:
        while hull:
            s1, b1, _ = hull[-1]
            s2, b2, _ = line
            if len(hull) == 1:
                if b2 >= b1:
                    hull.pop()
                    continue
                break
            s0, b0, _ = hull[-2]
            x_new = (b0 - b2) / (s2 - s0)
            x_old = (b0 - b1) / (s1 - s0)
            if x_new <= x_old:
                hull.pop()
                continue
            break
        hull.append(line)
    breaks = []
    for (s1, b1, _), (s2, b2, _) in zip(hull, hull[1:]):
        breaks.append((b1 - b2) / (s2 - s1))
    return hull, breaks


def single_agent_demand_breakpoints(inst: Instance, *,
                                    enum_cap: int = 16) -> list[Fraction]:
    """Payment levels at which the single agent's best response changes."""
    if inst.num_agents != 1:
        raise ModelError("single-agent analysis needs exactly one agent")
    if inst.num_actions > enum_cap:
        raise GroundSetTooLargeError("too many actions to enumerate")
    table = value_table(inst.oracle)
    _, breaks = _upper_envelope(_single_agent_lines(inst, table))
    return breaks


def single_agent_fptas(inst: Instance, budget: Fraction, eps: Fraction, *,
                       enum_cap: int = 16,
                       table: Optional[Sequence[Fraction]] = None) -> SolveResult:
    """Profit FPTAS for one agent with monotone f under budget B <= 1.

    Computes the welfare benchmark from a demand query at prices c_a / B,
    then sweeps the geometric payment grid
    alpha_{j,k} = min(B, 1 - (1-eps)^(k+1) * SW / (c_j + SW)) over actions j
    with positive cost and k below ceil(log_{1/(1-eps)} m 2^m), keeping the
    most profitable best response.  Best responses resolve ties toward the
    larger f, which also pins SW exactly.  All-zero costs degenerate to the
    full action set at alpha = 0.
    """
    if inst.num_agents != 1:
        raise ModelError("single-agent FPTAS needs exactly one agent")
    if not 0 <= budget <= 1:
        raise ModelError("budget must lie in [0, 1]")
    if not 0 < eps < 1:
        raise ModelError("eps must lie in (0, 1)")
    m = inst.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    if table is None:
        table = value_table(inst.oracle)

    full = frozenset(range(m))
    if all(inst.cost_of[a] == 0 for a in range(m)):
        v = table[set_to_mask(full)]
        vq, dq = _count_queries(inst, before)
        return SolveResult(Contract.of([ZERO]), full, v, "exact", "profit",
                           budget, vq, dq)
    if budget == 0:
        free = frozenset(a for a in range(m) if inst.cost_of[a] == 0)
        v = table[set_to_mask(free)]
        vq, dq = _count_queries(inst, before)
        return SolveResult(Contract.zero(1), free, v, "exact", "profit",
                           budget, vq, dq)

    hull, breaks = _upper_envelope(_single_agent_lines(inst, table))

    def best_response_at(alpha: Fraction) -> tuple[frozenset[int], Fraction]:
        idx = bisect_right(breaks, alpha)
        _, _, mask = hull[idx]
        return mask_to_set(mask), table[mask]

    # S-dagger maximizes B*f - c; among ties the larger f also maximizes f-c
    s_dagger, _ = best_response_at(budget)
    sw = table[set_to_mask(s_dagger)] - cost(inst, s_dagger)
    if sw <= 0:
        vq, dq = _count_queries(inst, before)
        return SolveResult(Contract.zero(1), frozenset(), ZERO, "exact",
                           "profit", budget, vq, dq)

    target = Fraction(m * (1 << m))
    k_count = 0
    acc = ONE
    limit = 1 / target
    while acc > limit:
        acc *= (1 - eps)
        k_count += 1

    # zero-payment baseline: the agent still performs its free actions
    best_alpha = ZERO
    best_set, f_zero = best_response_at(ZERO)
    best_profit = f_zero
    seen: set[Fraction] = {ZERO}
    for c_j in sorted({inst.cost_of[a] for a in range(m) if inst.cost_of[a] > 0}):
        shrink = ONE
        for _ in range(k_count):
            shrink *= (1 - eps)
            alpha = min(budget, 1 - shrink * sw / (c_j + sw))
            if alpha in seen:
                continue
            seen.add(alpha)
            s_alpha, f_alpha = best_response_at(alpha)
            profit = (1 - alpha) * f_alpha
            if profit > best_profit:
                best_alpha, best_set, best_profit = alpha, s_alpha, profit
    vq, dq = _count_queries(inst, before)
    return SolveResult(Contract.of([best_alpha]), best_set, best_profit,
                       1 / (1 - eps), "profit", budget, vq, dq)


# -- downsizing and the GS pipeline ------------------------------------------


def downsize(inst: Instance, m_param: int, alpha: Contract,
             profile: Iterable[int], *, gs: Optional[bool] = None,
             enum_cap: int = 20,
             table: Optional[Sequence[Fraction]] = None
             ) -> tuple[Contract, frozenset[int]]:
    """Shrink total payment while keeping a 1/(2M-2) fraction of the reward.

    Implements the grouping transform: agents paid more than p/M are
    checked for the single-agent exit (their equilibrium actions extended
    through a demand query over their own actions); otherwise agents pack
    greedily into payment-bounded groups until a group alone carries a
    1/(M-1) reward share, and the surviving group's doubled-plus-epsilon
    contract is re-equilibrated through one demand query.  f on a group of
    agents means f of the union of their equilibrium actions.  A zero-
    payment input is returned unchanged (its guarantees hold trivially).
    """
    if m_param < 3:
        raise ModelError("M must be an integer >= 3")
    s = frozenset(profile)
    table = _maybe_table(inst, table)
    cert = is_nash(inst, alpha, s, enum_cap=enum_cap, table=table)
    if not cert.ok:
        raise NotAnEquilibriumError(
            f"agent {cert.violator} prefers a deviation under the input contract")
    p = alpha.total()
    if p == 0:
        return alpha, s
    val = (lambda sub: table[set_to_mask(sub)]) if table is not None \
        else (lambda sub: inst.oracle.value(sub))
    f_s = val(s)
    threshold = p / m_param
    share = f_s / (m_param - 1)
    big = [i for i in range(inst.num_agents) if alpha[i] > threshold]
    for i in big:
        s_i = s & inst.agent_actions[i]
        if val(s_i) >= share:
            prices = PriceVector(
                {a: inst.cost_of[a] / alpha[i] for a in inst.agent_actions[i]},
                excluded=inst.ground_set - inst.agent_actions[i])
            s_prime = demand_with_base(inst.oracle, prices, s_i, gs=gs,
                                       enum_cap=enum_cap, table=table)
            return restrict_contract(alpha, {i}), s_prime

    def group_actions(agents: list[int]) -> frozenset[int]:
        out: set[int] = set()
        for i in agents:
            out |= s & inst.agent_actions[i]
        return frozenset(out)

    pool = [i for i in range(inst.num_agents) if i not in big]
    survivors = pool  # alias: whatever remains after carving groups out
    for _ in range(max(0, m_param - len(big) - 2)):
        if not pool:
            break
        group: list[int] = []
        total = ZERO
        while pool and total <= threshold:
            agent = pool.pop(0)
            group.append(agent)
            total += alpha[agent]
        if val(group_actions(group)) >= share:
            survivors = group
            break
    epsilon = p / (inst.num_agents * m_param)
    new_alpha = restrict_contract(alpha, survivors).scale(Fraction(2)) \
        .add_everyone(epsilon)
    s_prime = ne_from_demand(inst, new_alpha, gs=gs, enum_cap=enum_cap,
                             table=table)
    return new_alpha, s_prime


def gs_constant_factor(inst: Instance, budget: Fraction, obj: Objective, *,
                       enum_cap: int = 20,
                       table: Optional[Sequence[Fraction]] = None,
                       force: bool = False) -> SolveResult:
    """Constant-factor approximation for gross-substitutes rewards.

    Pipeline: (a) solve profit maximization at budget 1 on the instance
    with costs scaled by (4/3)(1/B), (b) rescale that contract by 3B/4 and
    race it against the exact single-agent solutions for reward to get a
    reward-bounded candidate, (c) downsize the winner with M = 6 and race
    the result against the exact single-agent solutions for the target
    objective.  With the exact base solver the certified factor is
    120 * 50 + 1 = 6001, independent of instance size.
    """
    if not (force or inst.oracle.is_gs_class):
        raise ModelError("oracle not declared gross substitutes (use force=True)")
    if not 0 <= budget <= 1:
        raise ModelError("budget must lie in [0, 1]")
    before = (inst.oracle.value_queries, inst.oracle.demand_queries)
    table = _maybe_table(inst, table)
    if budget == 0:
        free = frozenset(a for a in inst.ground_set if inst.cost_of[a] == 0)
        zero = Contract.zero(inst.num_agents)
        v = evaluate(obj, inst, zero, free, table=table)
        vq, dq = _count_queries(inst, before)
        return SolveResult(zero, free, v, "exact", str(obj), budget, vq, dq)

    scaled = scale_costs(inst, Fraction(4, 3) / budget)
    base = brute_force_opt(scaled, ONE, PROFIT, enum_cap=enum_cap, table=table)
    rescaled = (base.contract.scale(Fraction(3, 4) * budget), base.profile)

    singles_reward = [gs_single_agent_exact(inst, i, REWARD, budget,
                                            enum_cap=enum_cap, table=table)
                      for i in range(inst.num_agents)]
    mrb_candidates = [rescaled] + [(r.contract, r.profile) for r in singles_reward]
    mrb_alpha, mrb_profile = max(
        mrb_candidates,
        key=lambda pair: evaluate(REWARD, inst, pair[0], pair[1], table=table))

    down_alpha, down_profile = downsize(inst, 6, mrb_alpha, mrb_profile,
                                        enum_cap=enum_cap, table=table)
    singles_obj = [gs_single_agent_exact(inst, i, obj, budget,
                                         enum_cap=enum_cap, table=table)
                   for i in range(inst.num_agents)]
    final_candidates = [(down_alpha, down_profile)] + \
        [(r.contract, r.profile) for r in singles_obj]
    best_alpha, best_profile = max(
        final_candidates,
        key=lambda pair: evaluate(obj, inst, pair[0], pair[1], table=table))
    value = evaluate(obj, inst, best_alpha, best_profile, table=table)
    vq, dq = _count_queries(inst, before)
    return SolveResult(best_alpha, best_profile, value, Fraction(6001),
                       str(obj), budget, vq, dq)
