"""MAA: posted-price sequential allocation for indivisible multi-slot jobs.

The highest-value agent ``b`` is served first with its favourite start and
pays the best value of anyone else.  Every other agent, in a fixed order,
faces slot prices ``pi0 * r**Q_j`` (``Q_j`` = jobs already placed on slot j,
``b`` excluded) and takes the start that maximizes value minus the summed
prices of the slots the job covers, if that surplus is positive.  The price
schedule keeps every slot within capacity without ever checking it.

Prices are floats; valuations remain scaled integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    Allocation,
    InvalidInput,
    MultiSlotInstance,
    Outcome,
    UnsupportedConfiguration,
    outcome_to_dict,
)

TOLERANCE = 1e-9  # absolute, in units of the value scale


class DegenerateInstance(ValueError):
    pass


@dataclass(frozen=True)
class PriceParams:
    pi0: float
    r: float
    v_max: int
    b: int
    v_max_minus_b: int


@dataclass
class PriceState:
    pi0: float
    r: float
    Q: list[int]
    P: list[float] = field(default_factory=list)

    @classmethod
    def fresh(cls, params: PriceParams, m: int) -> "PriceState":
        state = cls(params.pi0, params.r, [0] * m)
        state.reprice()
        return state

    def reprice(self):
        self.P = [self.pi0 * self.r ** q for q in self.Q]

    def occupy(self, start: int, length: int):
        for j in range(start, start + length):
            self.Q[j] += 1
            self.P[j] = self.pi0 * self.r ** self.Q[j]


def _require_capacity(k: int):
    if k < 3:
        raise UnsupportedConfiguration(
            f"MAA needs slot capacity k >= 3 (got k={k}): the price growth "
            "factor (6m(k-1))**(1/(k-2)) is undefined below that"
        )


def growth_factor(m: int, k: int) -> float:
    _require_capacity(k)
    return (6 * m * (k - 1)) ** (1.0 / (k - 2))


def compute_price_params(instance: MultiSlotInstance) -> PriceParams:
    m, k = instance.m, instance.capacity
    _require_capacity(k)
    best = [max(row) for row in instance.values]
    v_max = max(best)
    if v_max <= 0:
        raise DegenerateInstance("all valuations are zero")
    b = best.index(v_max)
    v_max_minus_b = max((v for i, v in enumerate(best) if i != b), default=0)
    return PriceParams(
        pi0=v_max / (6 * m * (k - 1)),
        r=growth_factor(m, k),
        v_max=v_max,
        b=b,
        v_max_minus_b=v_max_minus_b,
    )


def best_start(values_i: Sequence[int], length: int, prices: Sequence[float], tol=0.0, counter=None):
    """Utility-maximizing start for one job, or None if no start has positive surplus.

    Window price sums come from a running sum so the scan is O(m).  A later
    start must beat the incumbent by more than ``tol`` to replace it, so
    float noise never breaks a tie away from the earliest start.
    """
    m = len(prices)
    window = sum(prices[:length])
    best = None
    for s in range(m - length + 1):
        if s:
            window += prices[s + length - 1] - prices[s - 1]
        u = values_i[s] - window
        if counter is not None:
            counter[0] += 1
        if u > tol and (best is None or u > best[1] + tol):
            best = (s, u)
    return best


@dataclass(frozen=True)
class MaaTrace:
    outcome: Outcome
    params: PriceParams
    order: tuple[int, ...]
    prices_seen: dict
    prices_final: tuple[float, ...]
    occupancy: tuple[int, ...]
    Q: tuple[int, ...]
    operations: int


def maa_trace(instance: MultiSlotInstance, order: Sequence[int] | None = None) -> MaaTrace:
    if not isinstance(instance, MultiSlotInstance):
        raise InvalidInput("MAA runs on multi-slot instances")
    n, m = instance.n, instance.m
    params = compute_price_params(instance)
    order = tuple(range(n)) if order is None else tuple(order)
    if sorted(order) != list(range(n)):
        raise InvalidInput("order must be a permutation of the agents")

    starts = [None] * n
    delays = [0.0] * n
    b = params.b
    lb = instance.lengths[b]
    row_b = instance.values[b]
    s_b = max(range(m - lb + 1), key=lambda s: (row_b[s], -s))
    starts[b] = s_b
    delays[b] = float(params.v_max_minus_b)
    occupancy = [0] * m
    for j in range(s_b, s_b + lb):
        occupancy[j] += 1

    state = PriceState.fresh(params, m)
    counter = [0]
    tol = TOLERANCE * instance.scale
    seen = {}
    for i in order:
        if i == b:
            continue
        # Prices are fixed before agent i's report is looked at.
        prices = tuple(state.P)
        seen[i] = prices
        li = instance.lengths[i]
        pick = best_start(instance.values[i], li, prices, tol, counter)
        if pick is None:
            continue
        s, _ = pick
        starts[i] = s
        delays[i] = math.fsum(prices[s : s + li])
        state.occupy(s, li)
        counter[0] += li
        for j in range(s, s + li):
            occupancy[j] += 1

    outcome = Outcome(Allocation("multi", tuple(starts)), tuple(delays))
    return MaaTrace(
        outcome=outcome,
        params=params,
        order=order,
        prices_seen=seen,
        prices_final=tuple(state.P),
        occupancy=tuple(occupancy),
        Q=tuple(state.Q),
        operations=counter[0],
    )


def run_maa(instance: MultiSlotInstance, order: Sequence[int] | None = None) -> Outcome:
    return maa_trace(instance, order).outcome


def approx_bound(m: int, k: int) -> float:
    """Worst-case OPT/MAA welfare ratio, 3((k-1)(r-1)+1)."""
    if m < 1:
        raise InvalidInput("m must be >= 1")
    r = growth_factor(m, k)
    return 3 * ((k - 1) * (r - 1) + 1)


def trace_json(instance: MultiSlotInstance, trace: MaaTrace) -> dict:
    doc = outcome_to_dict(instance, trace.outcome)
    doc["prices_final"] = list(trace.prices_final)
    doc["occupancy"] = list(trace.occupancy)
    doc["order"] = [instance.ids[i] for i in trace.order]
    return doc
