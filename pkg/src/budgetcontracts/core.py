"""Core model types: instances, contracts, action profiles.

Conventions shared by every other module:

* numbers in decision logic are ``fractions.Fraction`` (arbitrary precision,
  canonical reduced form, positive denominator); no floats ever enter a
  comparison,
* agents are ``0 .. num_agents-1``, actions are ``0 .. num_actions-1``, each
  action owned by exactly one agent (agents' action sets are disjoint),
* an action profile is a plain ``frozenset[int]`` of action ids; the slice
  belonging to agent ``i`` is its intersection with that agent's action set.

All types are immutable after construction and safe to share across
concurrent tasks; the operations here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from budgetcontracts.rewards import RewardOracle

ActionProfile = frozenset[int]

ZERO = Fraction(0)
ONE = Fraction(1)


class ModelError(ValueError):
    """Base class for domain errors raised by this package."""


class DuplicateActionIdError(ModelError):
    pass


class NegativeCostError(ModelError):
    pass


class OracleRangeViolationError(ModelError):
    pass


class NonzeroEmptyValueError(ModelError):
    pass


class UnknownActionIdError(ModelError):
    pass


class UnknownAgentIdError(ModelError):
    pass


class GroundSetTooLargeError(ModelError):
    pass


class RationalParseError(ModelError):
    pass


def parse_rational(text: str) -> Fraction:
    """Parse a "p/q" (or plain integer) string into an exact rational."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise RationalParseError(f"not a valid rational: {text!r}") from exc


def format_rational(value: Fraction) -> str:
    """Serialize a rational as a "p/q" string (integers stay bare)."""
    return str(value)


@dataclass(frozen=True)
class Action:
    """A single costly action with a global id and an owning agent."""

    action_id: int
    owner: int
    cost: Fraction


@dataclass(frozen=True)
class Instance:
    """A contract-design instance: agents, owned actions, reward oracle.

    ``agent_actions[i]`` is agent ``i``'s action set T_i; ``ground_set`` is
    the disjoint union of all of them.
    """

    num_agents: int
    actions: tuple[Action, ...]
    oracle: "RewardOracle"
    owner_of: dict[int, int] = field(init=False, repr=False, compare=False)
    cost_of: dict[int, Fraction] = field(init=False, repr=False, compare=False)
    agent_actions: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)
    ground_set: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        owner = {a.action_id: a.owner for a in self.actions}
        costs = {a.action_id: a.cost for a in self.actions}
        per_agent: list[set[int]] = [set() for _ in range(self.num_agents)]
        for a in self.actions:
            if 0 <= a.owner < self.num_agents:
                per_agent[a.owner].add(a.action_id)
        object.__setattr__(self, "owner_of", owner)
        object.__setattr__(self, "cost_of", costs)
        object.__setattr__(self, "agent_actions", tuple(frozenset(s) for s in per_agent))
        object.__setattr__(self, "ground_set", frozenset(owner))

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def agent_part(self, profile: Iterable[int], agent: int) -> frozenset[int]:
        """S_i: the actions of ``profile`` owned by ``agent``."""
        if not 0 <= agent < self.num_agents:
            raise UnknownAgentIdError(f"agent {agent} out of range")
        return frozenset(profile) & self.agent_actions[agent]

    def others_part(self, profile: Iterable[int], agent: int) -> frozenset[int]:
        """S_{-i}: the actions of ``profile`` owned by everyone else."""
        if not 0 <= agent < self.num_agents:
            raise UnknownAgentIdError(f"agent {agent} out of range")
        return frozenset(profile) - self.agent_actions[agent]


@dataclass(frozen=True)
class Contract:
    """A linear contract: per-agent reward share, one entry per agent."""

    alpha: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if any(a < 0 for a in self.alpha):
            raise ModelError("contract entries must be >= 0")

    @staticmethod
    def zero(num_agents: int) -> "Contract":
        return Contract(tuple(ZERO for _ in range(num_agents)))

    @staticmethod
    def of(values: Iterable[Fraction | int | str]) -> "Contract":
        return Contract(tuple(Fraction(v) for v in values))

    def __getitem__(self, agent: int) -> Fraction:
        return self.alpha[agent]

    def __len__(self) -> int:
        return len(self.alpha)

    def total(self) -> Fraction:
        return sum(self.alpha, ZERO)

    def budget_feasible(self, budget: Fraction) -> bool:
        return self.total() <= budget

    def scale(self, factor: Fraction) -> "Contract":
        return Contract(tuple(a * factor for a in self.alpha))

    def add_everyone(self, eps: Fraction) -> "Contract":
        return Contract(tuple(a + eps for a in self.alpha))


@dataclass(frozen=True)
class GeneralContract:
    """Per-agent payments on failure and on success (both nonnegative)."""

    pay_on_failure: tuple[Fraction, ...]
    pay_on_success: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.pay_on_failure) != len(self.pay_on_success):
            raise ModelError("payment tuples must have equal length")
        if any(t < 0 for t in self.pay_on_failure) or any(t < 0 for t in self.pay_on_success):
            raise ModelError("payments must be >= 0")

    def __len__(self) -> int:
        return len(self.pay_on_success)


def validate_instance(inst: Instance) -> None:
    """Check every structural invariant; raise a specific error otherwise.

    Verifies: unique contiguous action ids, owners in range, costs >= 0,
    f(empty) = 0, and every singleton oracle value inside [0, 1].
    """
    seen: set[int] = set()
    for a in inst.actions:
        if a.action_id in seen:
            raise DuplicateActionIdError(f"action id {a.action_id} appears twice")
        seen.add(a.action_id)
        if not 0 <= a.owner < inst.num_agents:
            raise UnknownAgentIdError(f"action {a.action_id} owned by unknown agent {a.owner}")
        if a.cost < 0:
            raise NegativeCostError(f"action {a.action_id} has cost {a.cost} < 0")
    if seen != set(range(len(inst.actions))):
        raise DuplicateActionIdError("action ids must be exactly 0..m-1")
    if inst.num_agents <= 0:
        raise ModelError("need at least one agent")
    if inst.oracle.num_actions != len(inst.actions):
        raise ModelError(
            f"oracle covers {inst.oracle.num_actions} actions, "
            f"instance has {len(inst.actions)}")
    empty = inst.oracle.value(frozenset())
    if empty != 0:
        raise NonzeroEmptyValueError(f"f(empty set) = {empty}, expected 0")
    for a in inst.actions:
        v = inst.oracle.value(frozenset({a.action_id}))
        if not (0 <= v <= 1):
            raise OracleRangeViolationError(f"f({{{a.action_id}}}) = {v} outside [0, 1]")


def cost(inst: Instance, profile: Iterable[int]) -> Fraction:
    """Total cost of a profile: the sum of its member actions' costs."""
    total = ZERO
    for a in profile:
        if a not in inst.cost_of:
            raise UnknownActionIdError(f"unknown action id {a}")
        total += inst.cost_of[a]
    return total


def restrict_contract(alpha: Contract, agents: Iterable[int]) -> Contract:
    """The contract paying alpha_i inside ``agents`` and 0 elsewhere."""
    keep = set(agents)
    for i in keep:
        if not 0 <= i < len(alpha):
            raise UnknownAgentIdError(f"agent {i} out of range")
    return Contract(tuple(a if i in keep else ZERO for i, a in enumerate(alpha.alpha)))
