"""Reward oracles, demand queries, and function-class membership testers.

Every oracle answers exact value queries f(S) in [0, 1] over a ground set of
actions 0..m-1 and keeps separate counters for value and demand queries (one
increment per call; a simulated demand reports the value queries it spends).
Counters are the only mutable state; confine each oracle to one task at a
time or give each task its own oracle.

Price vectors may contain negative entries, and may mark actions as excluded
(unpurchasable) instead of pricing them; exclusion plays the role of an
infinite price while keeping all arithmetic exact and total.

The gross-substitutes tester decides membership with the exact local
characterization (pairwise submodularity plus the three-item exchange
condition, checked exhaustively on the ground set).  Demand correspondences
move only at breakpoint prices, so when a violation exists the tester also
searches a small breakpoint price grid (marginal values and midpoints of the
violating items) for a certified pair p <= q and a demand set at p that no
demand set at q retains, verified by exhaustive demand enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from budgetcontracts.core import (
    GroundSetTooLargeError,
    ModelError,
    OracleRangeViolationError,
    UnknownActionIdError,
    ZERO,
)


class ElementAlreadyPresentError(ModelError):
    pass


@dataclass(frozen=True)
class PriceVector:
    """Per-action prices; actions in ``excluded`` cannot be purchased."""

    prices: dict[int, Fraction]
    excluded: frozenset[int] = frozenset()

    @staticmethod
    def of(prices: Mapping[int, Fraction | int | str],
           excluded: Iterable[int] = ()) -> "PriceVector":
        return PriceVector({int(a): Fraction(p) for a, p in prices.items()},
                           frozenset(excluded))

    @staticmethod
    def uniform(actions: Iterable[int], price: Fraction) -> "PriceVector":
        return PriceVector({a: price for a in actions})

    def price(self, action: int) -> Fraction:
        return self.prices[action]

    def total(self, subset: Iterable[int]) -> Fraction:
        return sum((self.prices[a] for a in subset), ZERO)


def set_to_mask(subset: Iterable[int]) -> int:
    mask = 0
    for a in subset:
        mask |= 1 << a
    return mask


def mask_to_set(mask: int) -> frozenset[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


class RewardOracle:
    """Base value-query interface; subclasses implement ``_value``.

    ``function_class`` declares the strongest class the construction
    guarantees ("additive", "gross_substitutes", "submodular", "monotone").
    Greedy demand shortcuts are only trusted when the class implies GS.
    """

    function_class = "monotone"
    has_native_demand = False

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self.value_queries = 0
        self.demand_queries = 0

    # -- queries ---------------------------------------------------------

    def value(self, subset: Iterable[int]) -> Fraction:
        s = frozenset(subset)
        for a in s:
            if not 0 <= a < self.num_actions:
                raise UnknownActionIdError(f"action {a} outside ground set")
        self.value_queries += 1
        return self._value(s)

    def marginal(self, action: int, subset: Iterable[int]) -> Fraction:
        """f({action} | subset) = f(subset + action) - f(subset)."""
        s = frozenset(subset)
        if action in s:
            raise ElementAlreadyPresentError(f"action {action} already in set")
        return self.value(s | {action}) - self.value(s)

    def demand(self, prices: PriceVector) -> frozenset[int]:
        """Native demand query; only some oracles provide one."""
        if not self.has_native_demand:
            raise ModelError(f"{type(self).__name__} has no native demand oracle")
        self.demand_queries += 1
        return self._demand(prices)

    def reset_counters(self) -> None:
        self.value_queries = 0
        self.demand_queries = 0

    @property
    def is_gs_class(self) -> bool:
        return self.function_class in ("additive", "gross_substitutes")

    # -- to be provided by subclasses -------------------------------------

    def _value(self, subset: frozenset[int]) -> Fraction:
        raise NotImplementedError

    def _demand(self, prices: PriceVector) -> frozenset[int]:
        raise NotImplementedError


class AdditiveOracle(RewardOracle):
    function_class = "additive"

    def __init__(self, weights: Sequence[Fraction]):
        super().__init__(len(weights))
        self.weights = tuple(Fraction(w) for w in weights)
        if any(w < 0 for w in self.weights):
            raise OracleRangeViolationError("additive weights must be >= 0")
        if sum(self.weights, ZERO) > 1:
            raise OracleRangeViolationError("additive weights must sum to <= 1")

    def _value(self, subset: frozenset[int]) -> Fraction:
        return sum((self.weights[a] for a in subset), ZERO)


class UnitDemandOracle(RewardOracle):
    function_class = "gross_substitutes"

    def __init__(self, weights: Sequence[Fraction]):
        super().__init__(len(weights))
        self.weights = tuple(Fraction(w) for w in weights)
        if any(not 0 <= w <= 1 for w in self.weights):
            raise OracleRangeViolationError("unit-demand weights must lie in [0, 1]")

    def _value(self, subset: frozenset[int]) -> Fraction:
        return max((self.weights[a] for a in subset), default=ZERO)


class UniformKDemandOracle(RewardOracle):
    """f(S) = min(|S|, k) * unit_value."""

    function_class = "gross_substitutes"

    def __init__(self, num_actions: int, k: int, unit_value: Fraction):
        super().__init__(num_actions)
        if k < 1:
            raise ModelError("k must be >= 1")
        self.k = k
        self.unit_value = Fraction(unit_value)
        if not 0 <= self.unit_value * min(k, num_actions) <= 1:
            raise OracleRangeViolationError("k * unit_value must lie in [0, 1]")

    def _value(self, subset: frozenset[int]) -> Fraction:
        return min(len(subset), self.k) * self.unit_value


class AssignmentOracle(RewardOracle):
    """OXS valuation: max-weight matching of actions to value columns.

    ``values[a][c]`` is the value of assigning action ``a`` to column ``c``;
    each column takes at most one action, unmatched actions contribute 0.
    Gross substitutes by construction.
    """

    function_class = "gross_substitutes"

    def __init__(self, values: Sequence[Sequence[Fraction]]):
        super().__init__(len(values))
        self.values = tuple(tuple(Fraction(v) for v in row) for row in values)
        cols = {len(row) for row in self.values}
        if len(cols) != 1:
            raise ModelError("all rows need the same number of columns")
        self.num_columns = cols.pop()
        if self.num_columns > 12:
            raise GroundSetTooLargeError("too many assignment columns to enumerate")
        if any(v < 0 for row in self.values for v in row):
            raise OracleRangeViolationError("assignment values must be >= 0")
        full = self._value(frozenset(range(self.num_actions)))
        if full > 1:
            raise OracleRangeViolationError(f"f(ground set) = {full} exceeds 1")

    def _value(self, subset: frozenset[int]) -> Fraction:
        best = {0: ZERO}
        for a in sorted(subset):
            nxt = dict(best)
            for mask, val in best.items():
                for c in range(self.num_columns):
                    if mask & (1 << c):
                        continue
                    cand = val + self.values[a][c]
                    key = mask | (1 << c)
                    if cand > nxt.get(key, ZERO - 1):
                        nxt[key] = cand
            best = nxt
        return max(best.values())


class CoverageOracle(RewardOracle):
    """f(S) = |union of the actions' element sets| / universe size."""

    function_class = "submodular"

    def __init__(self, universe_size: int, covers: Sequence[Iterable[int]]):
        super().__init__(len(covers))
        if universe_size < 1:
            raise ModelError("universe must be nonempty")
        self.universe_size = universe_size
        self.covers = tuple(frozenset(c) for c in covers)
        for c in self.covers:
            if any(not 0 <= e < universe_size for e in c):
                raise ModelError("cover element outside universe")

    def _value(self, subset: frozenset[int]) -> Fraction:
        covered: set[int] = set()
        for a in subset:
            covered |= self.covers[a]
        return Fraction(len(covered), self.universe_size)


class ExplicitOracle(RewardOracle):
    """A full table of 2^m values in subset-bitmask order."""

    function_class = "monotone"

    def __init__(self, values: Sequence[Fraction], validate: bool = True):
        size = len(values)
        m = size.bit_length() - 1
        if size != 1 << m:
            raise ModelError("explicit table length must be a power of two")
        super().__init__(m)
        self.values = tuple(Fraction(v) for v in values)
        if validate:
            if self.values[0] != 0:
                raise ModelError("explicit table must have f(empty) = 0")
            for mask, v in enumerate(self.values):
                if not 0 <= v <= 1:
                    raise OracleRangeViolationError(f"table value {v} outside [0, 1]")
                for b in range(m):
                    if not mask & (1 << b) and self.values[mask | (1 << b)] < v:
                        raise ModelError("explicit table is not monotone")

    def _value(self, subset: frozenset[int]) -> Fraction:
        return self.values[set_to_mask(subset)]


# -- demand computation ----------------------------------------------------


def _check_prices(oracle: RewardOracle, prices: PriceVector,
                  base: frozenset[int] = frozenset()) -> list[int]:
    """Validate coverage and return the purchasable items, ascending."""
    items = []
    for a in range(oracle.num_actions):
        if a in prices.excluded or a in base:
            continue
        if a not in prices.prices:
            raise ModelError(f"action {a} neither priced nor excluded")
        items.append(a)
    return items


def brute_force_demand(oracle: RewardOracle, prices: PriceVector, *,
                       enum_cap: int = 20,
                       table: Optional[Sequence[Fraction]] = None) -> frozenset[int]:
    """Exact demand by enumerating all subsets of the purchasable items.

    Ties break toward the lexicographically smallest sorted id sequence, so
    the empty set wins any tie it is part of.  When ``table`` (a full value
    table in bitmask order) is given, values come from it and no value
    queries are issued; otherwise each subset costs one value query.
    """
    items = _check_prices(oracle, prices)
    if len(items) > enum_cap:
        raise GroundSetTooLargeError(f"{len(items)} items exceed cap {enum_cap}")
    if table is not None:
        return _demand_from_table(table, items, prices)
    best_u = None
    best_key: tuple[int, ...] = ()
    best_set: frozenset[int] = frozenset()
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            s = frozenset(combo)
            u = oracle.value(s) - prices.total(s)
            if best_u is None or u > best_u or (u == best_u and combo < best_key):
                best_u, best_key, best_set = u, combo, s
    return best_set


def _demand_from_table(table: Sequence[Fraction], items: list[int],
                       prices: PriceVector) -> frozenset[int]:
    umask = set_to_mask(items)
    psum: dict[int, Fraction] = {0: ZERO}
    best_u = table[0]
    best_mask = 0
    sub = umask
    masks = []
    while True:
        masks.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & umask
    for mask in sorted(masks):
        if mask:
            low = mask & -mask
            psum[mask] = psum[mask ^ low] + prices.prices[low.bit_length() - 1]
        u = table[mask] - psum[mask]
        if u > best_u or (u == best_u and _lex_key(mask) < _lex_key(best_mask)):
            best_u, best_mask = u, mask
    return mask_to_set(best_mask)


def _lex_key(mask: int) -> tuple[int, ...]:
    return tuple(sorted(mask_to_set(mask)))


def gs_greedy_demand(oracle: RewardOracle, prices: PriceVector, *,
                     table: Optional[Sequence[Fraction]] = None) -> frozenset[int]:
    """Greedy demand: repeatedly add the best positive-marginal-utility item.

    Ties break toward the smallest action id; the loop stops when no
    remaining item has strictly positive marginal utility.  Matches
    brute-force demand utility whenever the oracle is gross substitutes.
    """
    items = _check_prices(oracle, prices)
    chosen: set[int] = set()
    val = lambda s: table[set_to_mask(s)] if table is not None else oracle.value(s)
    current = val(chosen)
    while True:
        # ascending scan + strict improvement: ties go to the smallest id
        best_gain = ZERO
        best_item = None
        for a in items:
            if a in chosen:
                continue
            gain = val(chosen | {a}) - current - prices.prices[a]
            if gain > best_gain:
                best_gain, best_item = gain, a
        if best_item is None:
            return frozenset(chosen)
        chosen.add(best_item)
        current = val(chosen)


def demand_with_base(oracle: RewardOracle, prices: PriceVector,
                     base: Iterable[int], *, gs: Optional[bool] = None,
                     enum_cap: int = 20,
                     table: Optional[Sequence[Fraction]] = None) -> frozenset[int]:
    """Demand constrained to contain ``base``.

    Maximizes f(X | base) - p(X) over X disjoint from base and returns
    base + X.  Greedy on the marginal function when the oracle is GS
    (f(. | base) is then GS as well), brute force otherwise.  When some
    globally demanded set contains ``base`` this attains global demand
    utility; in every case the result contains ``base``.
    """
    base_set = frozenset(base)
    items = _check_prices(oracle, prices, base_set)
    use_greedy = oracle.is_gs_class if gs is None else gs
    val = lambda s: table[set_to_mask(s)] if table is not None else oracle.value(s)
    if use_greedy:
        chosen = set(base_set)
        current = val(chosen)
        while True:
            best_gain = ZERO
            best_item = None
            for a in items:
                if a in chosen:
                    continue
                gain = val(chosen | {a}) - current - prices.prices[a]
                if gain > best_gain:
                    best_gain, best_item = gain, a
            if best_item is None:
                return frozenset(chosen)
            chosen.add(best_item)
            current = val(chosen)
    if len(items) > enum_cap:
        raise GroundSetTooLargeError(f"{len(items)} items exceed cap {enum_cap}")
    base_val = val(base_set)
    best_u = ZERO
    best_key: tuple[int, ...] = ()
    best_set = base_set
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            s = frozenset(combo)
            u = val(base_set | s) - base_val - prices.total(s)
            if u > best_u or (u == best_u and combo < best_key):
                best_u, best_key, best_set = u, combo, base_set | s
    return best_set


def value_table(oracle: RewardOracle, *, enum_cap: int = 20) -> list[Fraction]:
    """All 2^m values in bitmask order (one value query per subset)."""
    m = oracle.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    return [oracle.value(mask_to_set(mask)) for mask in range(1 << m)]


# -- class membership testers ----------------------------------------------


def is_monotone(oracle: RewardOracle, *, enum_cap: int = 16):
    """Exhaustive monotonicity check; returns (ok, witness (S, a) or None)."""
    m = oracle.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    table = value_table(oracle)
    for mask in range(1 << m):
        for b in range(m):
            if not mask & (1 << b) and table[mask | (1 << b)] < table[mask]:
                return False, (mask_to_set(mask), b)
    return True, None


def is_submodular(oracle: RewardOracle, *, enum_cap: int = 16):
    """Exhaustive diminishing-marginals check.

    Uses the pairwise characterization: f(a | S) >= f(a | S + b) for every S
    and distinct a, b outside S, which is equivalent to the full condition
    over nested pairs of sets.  Returns (ok, witness) where the witness is
    (S, a, b) meaning f(a | S) < f(a | S + b).
    """
    m = oracle.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    table = value_table(oracle)
    for mask in range(1 << m):
        outside = [b for b in range(m) if not mask & (1 << b)]
        for a in outside:
            gain_a = table[mask | (1 << a)] - table[mask]
            for b in outside:
                if b == a:
                    continue
                with_b = mask | (1 << b)
                if table[with_b | (1 << a)] - table[with_b] > gain_a:
                    return False, (mask_to_set(mask), a, b)
    return True, None


@dataclass(frozen=True)
class GsWitness:
    """Evidence that an oracle is not gross substitutes.

    ``kind`` says which exact condition failed; when a certified price pair
    exists, raising prices from ``p`` to ``q`` evicts some member of
    ``demand_set`` (a demand bundle at ``p``) whose price did not change,
    from every demand bundle at ``q``.
    """

    kind: str
    context: frozenset[int]
    items: tuple[int, ...]
    p: Optional[PriceVector] = None
    q: Optional[PriceVector] = None
    demand_set: Optional[frozenset[int]] = None


def is_gross_substitutes(oracle: RewardOracle, *, enum_cap: int = 12):
    """Exact GS membership with a certified price witness on failure.

    Decides via the local characterization: submodularity plus, for every S
    and distinct a, b, c outside S,
    f(S+ab) + f(S+c) <= max(f(S+ac) + f(S+b), f(S+bc) + f(S+a)).
    On failure, searches the violating items' breakpoint price grid for a
    pair p <= q (q raising some prices) and a demand set at p that no demand
    set at q retains; the returned witness is verified by enumeration.
    """
    m = oracle.num_actions
    if m > enum_cap:
        raise GroundSetTooLargeError(f"{m} actions exceed cap {enum_cap}")
    ok, wit = is_monotone(oracle, enum_cap=enum_cap)
    if not ok:
        return False, GsWitness("not-monotone", wit[0], (wit[1],))
    ok, wit = is_submodular(oracle, enum_cap=enum_cap)
    if not ok:
        ctx, a, b = wit
        p, q, dset = _search_price_witness(oracle, ctx, (a, b))
        return False, GsWitness("not-submodular", ctx, (a, b), p, q, dset)
    table = value_table(oracle)
    for mask in range(1 << m):
        outside = [x for x in range(m) if not mask & (1 << x)]
        for a, b, c in itertools.combinations(outside, 3):
            for x, y, z in ((a, b, c), (a, c, b), (b, c, a)):
                lhs = table[mask | (1 << x) | (1 << y)] + table[mask | (1 << z)]
                alt1 = table[mask | (1 << x) | (1 << z)] + table[mask | (1 << y)]
                alt2 = table[mask | (1 << y) | (1 << z)] + table[mask | (1 << x)]
                if lhs > alt1 and lhs > alt2:
                    ctx = mask_to_set(mask)
                    p, q, dset = _search_price_witness(oracle, ctx, (x, y, z))
                    return False, GsWitness("exchange", ctx, (x, y, z), p, q, dset)
    return True, None


def _search_price_witness(oracle: RewardOracle, ctx: frozenset[int],
                          items: tuple[int, ...]):
    """Find (p, q, S*) violating the GS demand-retention condition.

    Restricts attention to the violating items: the context is forced into
    every demand bundle with price -2 (f is monotone here), everything else
    is priced out at 2 > max f.  Item prices sweep the breakpoint grid of
    their marginal values plus midpoints; q raises one or two coordinates.
    """
    g_cache: dict[frozenset[int], Fraction] = {}

    def g(sub: frozenset[int]) -> Fraction:
        if sub not in g_cache:
            g_cache[sub] = oracle.value(ctx | sub)
        return g_cache[sub]

    def grid_for(item: int) -> list[Fraction]:
        others = [i for i in items if i != item]
        marginals = set()
        for r in range(len(others) + 1):
            for combo in itertools.combinations(others, r):
                s = frozenset(combo)
                marginals.add(g(s | {item}) - g(s))
        pts = sorted(marginals)
        grid = set(pts)
        grid.add(pts[0] - 1)
        grid.add(pts[-1] + 1)
        for lo, hi in zip(pts, pts[1:]):
            grid.add((lo + hi) / 2)
        return sorted(grid)

    def demand_sets(pr: dict[int, Fraction]) -> list[frozenset[int]]:
        best = None
        out: list[frozenset[int]] = []
        for r in range(len(items) + 1):
            for combo in itertools.combinations(items, r):
                s = frozenset(combo)
                u = g(s) - sum((pr[i] for i in combo), ZERO)
                if best is None or u > best:
                    best, out = u, [s]
                elif u == best:
                    out.append(s)
        return out

    grids = {i: grid_for(i) for i in items}

    def full_vector(pr: dict[int, Fraction]) -> PriceVector:
        prices = {a: Fraction(2) for a in range(oracle.num_actions)}
        for s in ctx:
            prices[s] = Fraction(-2)
        prices.update(pr)
        return PriceVector(prices)

    def check(pr: dict[int, Fraction], raised: tuple[int, ...], qr: dict[int, Fraction]):
        d_p = demand_sets(pr)
        d_q = demand_sets(qr)
        unchanged = set(items) - set(raised)
        for star in d_p:
            retained = star & unchanged
            if not any(retained <= dq for dq in d_q):
                return full_vector(pr), full_vector(qr), ctx | star
        return None

    for combo in itertools.product(*(grids[i] for i in items)):
        pr = dict(zip(items, combo))
        for k in (1, 2):
            for raised in itertools.combinations(items, k):
                higher = [
                    [v for v in grids[i] if v > pr[i]] for i in raised
                ]
                for newvals in itertools.product(*higher):
                    qr = dict(pr)
                    qr.update(zip(raised, newvals))
                    hit = check(pr, raised, qr)
                    if hit is not None:
                        return hit
    return None, None, None


# -- JSON descriptors --------------------------------------------------------


def oracle_from_spec(spec: Mapping) -> RewardOracle:
    """Build an oracle from its JSON descriptor (see module docstrings)."""
    from budgetcontracts.core import parse_rational

    kind = spec.get("type")
    if kind == "additive":
        return AdditiveOracle([parse_rational(w) for w in spec["weights"]])
    if kind == "unit_demand":
        return UnitDemandOracle([parse_rational(w) for w in spec["weights"]])
    if kind == "uniform_k_demand":
        return UniformKDemandOracle(int(spec["num_actions"]), int(spec["k"]),
                                    parse_rational(spec["v"]))
    if kind == "oxs":
        return AssignmentOracle([[parse_rational(v) for v in row]
                                 for row in spec["values"]])
    if kind == "coverage":
        return CoverageOracle(int(spec["universe_size"]),
                              [list(map(int, c)) for c in spec["covers"]])
    if kind == "explicit":
        return ExplicitOracle([parse_rational(v) for v in spec["values"]])
    if kind == "hardness":
        from budgetcontracts.hardness import hardness_oracle_from_spec

        return hardness_oracle_from_spec(spec)
    raise ModelError(f"unknown reward descriptor type: {kind!r}")


def oracle_to_spec(oracle: RewardOracle) -> dict:
    from budgetcontracts.core import format_rational as fr

    if isinstance(oracle, AdditiveOracle):
        return {"type": "additive", "weights": [fr(w) for w in oracle.weights]}
    if isinstance(oracle, UnitDemandOracle):
        return {"type": "unit_demand", "weights": [fr(w) for w in oracle.weights]}
    if isinstance(oracle, UniformKDemandOracle):
        return {"type": "uniform_k_demand", "num_actions": oracle.num_actions,
                "k": oracle.k, "v": fr(oracle.unit_value)}
    if isinstance(oracle, AssignmentOracle):
        return {"type": "oxs",
                "values": [[fr(v) for v in row] for row in oracle.values]}
    if isinstance(oracle, CoverageOracle):
        return {"type": "coverage", "universe_size": oracle.universe_size,
                "covers": [sorted(c) for c in oracle.covers]}
    if isinstance(oracle, ExplicitOracle):
        return {"type": "explicit", "values": [fr(v) for v in oracle.values]}
    from budgetcontracts.hardness import HardnessOracle, hardness_oracle_to_spec

    if isinstance(oracle, HardnessOracle):
        return hardness_oracle_to_spec(oracle)
    raise ModelError(f"cannot serialize oracle {type(oracle).__name__}")
