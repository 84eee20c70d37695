"""VCG-T: welfare-maximizing slot allocation with VCG time delays.

Delays follow the Clarke pivot rule.  For agent i::

    d_i = W(optimum without i) - (W(optimum) - v_i(optimum))

i.e. the welfare the others lose because i is present.  All quantities are
scaled integers, so delays are exact.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .core import (
    Allocation,
    DivisibleInstance,
    Instance,
    Outcome,
    SingleSlotInstance,
    agent_value,
    outcome_to_dict,
    welfare,
)
from .flow_matching import (
    build_network,
    cost_without_agent,
    extract_allocation,
    solve_max_weight_matching,
)

Allocator = Callable[[Instance], Allocation]


@dataclass(frozen=True)
class VcgtReport:
    outcome: Outcome
    welfare_with: int
    welfare_without: tuple[int, ...]


def allocate_single(instance: SingleSlotInstance) -> Allocation:
    result = solve_max_weight_matching(build_network(instance))
    return extract_allocation(result, instance)


def allocate_divisible(instance: DivisibleInstance) -> Allocation:
    result = solve_max_weight_matching(build_network(instance))
    return extract_allocation(result, instance)


def allocate(instance: Instance) -> Allocation:
    if isinstance(instance, (SingleSlotInstance, DivisibleInstance)):
        return allocate_single(instance) if instance.kind == "single" else allocate_divisible(instance)
    raise TypeError("VCG-T only handles single-slot and divisible jobs")


def without_agent(instance: Instance, agent: int) -> Instance:
    """Same instance with ``agent`` removed (used for the pivot term)."""
    keep = [i for i in range(instance.n) if i != agent]
    kw = dict(
        capacity=instance.capacity,
        values=[instance.values[i] for i in keep],
        scale=instance.scale,
        ids=tuple(instance.ids[i] for i in keep),
    )
    if instance.kind != "single":
        kw["lengths"] = tuple(instance.lengths[i] for i in keep)
    return type(instance)(**kw)


def vcg_delays(instance: Instance, allocator: Allocator = allocate, jobs: int = 1) -> list[int]:
    """Clarke-pivot delays from n+1 independent allocator calls.

    ``allocator`` must return a welfare-maximizing allocation for the
    instance kind (e.g. the flow solver or a brute-force oracle).
    """
    base = allocator(instance)
    w = welfare(instance, base)
    if instance.n == 1:
        return [0]

    def pivot(i):
        reduced = without_agent(instance, i)
        return welfare(reduced, allocator(reduced))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            w_minus = list(pool.map(pivot, range(instance.n)))
    else:
        w_minus = [pivot(i) for i in range(instance.n)]
    return [w_minus[i] - (w - agent_value(instance, base, i)) for i in range(instance.n)]


def vcgt_report(instance: Instance) -> VcgtReport:
    """Run VCG-T with warm-started pivot solves.

    The allocation is solved once; each ``W(optimum without i)`` is obtained
    by re-optimizing that flow after deleting agent i rather than solving
    from scratch.
    """
    network = build_network(instance)
    result = solve_max_weight_matching(network)
    allocation = extract_allocation(result, instance)
    w = -result.total_cost
    w_minus = tuple(-cost_without_agent(network, result, i) for i in range(instance.n))
    delays = tuple(
        w_minus[i] - (w - agent_value(instance, allocation, i)) for i in range(instance.n)
    )
    if min(delays, default=0) < 0:
        raise AssertionError("negative VCG delay")
    return VcgtReport(Outcome(allocation, delays), w, w_minus)


def run_vcgt(instance: Instance) -> Outcome:
    return vcgt_report(instance).outcome


def outcome_json(instance: Instance, outcome: Outcome) -> dict:
    return outcome_to_dict(instance, outcome)
