"""Exhaustive reference solvers and strategic-behaviour probes.

Everything here is deliberately naive: depth-first enumeration with a
remaining-value bound.  These are the ground truth the fast mechanisms are
tested against, so they share no code with ``flow_matching`` or ``mia``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .core import (
    Allocation,
    DivisibleInstance,
    Instance,
    MultiSlotInstance,
    Outcome,
    SingleSlotInstance,
    agent_value,
    occupancy,
    utility,
    welfare,
)
from .mia import DegenerateInstance

ENUMERATION_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


def _guard(option_counts):
    total = math.prod(option_counts)
    if total > ENUMERATION_LIMIT:
        raise InstanceTooLarge(
            f"{total} candidate assignments exceeds the enumeration limit {ENUMERATION_LIMIT}"
        )


def _search(options, capacity, m):
    """Best choice per agent.

    ``options[i]`` is a list of (value, slots) pairs; an implicit "nothing"
    option (0, ()) is tried last.  Earlier options win ties.
    """
    n = len(options)
    best_rest = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        best_rest[i] = best_rest[i + 1] + max((v for v, _ in options[i]), default=0)
    load = [0] * m
    choice = [None] * n
    best = [-1, None]

    def dfs(i, acc):
        if acc + best_rest[i] <= best[0]:
            return
        if i == n:
            best[0] = acc
            best[1] = list(choice)
            return
        for idx, (v, slots) in enumerate(options[i]):
            if all(load[j] < capacity for j in slots):
                for j in slots:
                    load[j] += 1
                choice[i] = idx
                dfs(i + 1, acc + v)
                for j in slots:
                    load[j] -= 1
        choice[i] = None
        dfs(i + 1, acc)

    dfs(0, 0)
    return best[1], best[0]


def brute_force_single(instance: SingleSlotInstance) -> tuple[Allocation, int]:
    m = instance.m
    _guard([m + 1] * instance.n)
    options = [[(row[j], (j,)) for j in range(m)] for row in instance.values]
    picks, value = _search(options, instance.capacity, m)
    slots = tuple(None if p is None else options[i][p][1][0] for i, p in enumerate(picks))
    return Allocation("single", slots), value


def brute_force_mia(instance: MultiSlotInstance) -> tuple[Allocation, int]:
    m = instance.m
    _guard([m - l + 2 for l in instance.lengths])
    options = [
        [(row[s], tuple(range(s, s + l))) for s in range(m - l + 1)]
        for row, l in zip(instance.values, instance.lengths)
    ]
    picks, value = _search(options, instance.capacity, m)
    starts = tuple(None if p is None else options[i][p][1][0] for i, p in enumerate(picks))
    return Allocation("multi", starts), value


def brute_force_divisible(instance: DivisibleInstance) -> tuple[Allocation, int]:
    # Zero-valued slots never raise welfare, so subsets are drawn from the
    # agent's positively valued slots only.
    options = []
    for row, l in zip(instance.values, instance.lengths):
        useful = [j for j, v in enumerate(row) if v > 0]
        opts = []
        for size in range(min(l, len(useful)), 0, -1):
            for subset in combinations(useful, size):
                opts.append((sum(row[j] for j in subset), subset))
        options.append(opts)
    _guard([len(o) + 1 for o in options])
    picks, value = _search(options, instance.capacity, instance.m)
    held = tuple(
        frozenset() if p is None else frozenset(options[i][p][1]) for i, p in enumerate(picks)
    )
    return Allocation("divisible", held), value


def brute_force(instance: Instance) -> tuple[Allocation, int]:
    return {
        "single": brute_force_single,
        "multi": brute_force_mia,
        "divisible": brute_force_divisible,
    }[instance.kind](instance)


# --- multi-unit combinatorial auction -----------------------------------------


@dataclass(frozen=True)
class MucaInstance:
    """Goods 0..g-1 with ``supply[j]`` units; each agent demands one bundle.

    ``demand[i]`` is a tuple of (bundle, value) with bundles as sorted
    tuples of goods.
    """

    supply: tuple[int, ...]
    demand: tuple[tuple[tuple[tuple[int, ...], int], ...], ...]


def reduce_mia_to_muca(instance: MultiSlotInstance) -> MucaInstance:
    m = instance.m
    demand = []
    for row, l in zip(instance.values, instance.lengths):
        demand.append(tuple((tuple(range(s, s + l)), row[s]) for s in range(m - l + 1)))
    return MucaInstance((instance.capacity,) * m, tuple(demand))


def brute_force_muca(muca: MucaInstance) -> tuple[tuple, int]:
    """Exhaustive winner determination; returns per-agent bundle (or None)."""
    _guard([len(d) + 1 for d in muca.demand])
    g = len(muca.supply)
    best_rest = [0]
    for d in reversed(muca.demand):
        best_rest.append(best_rest[-1] + max((w for _, w in d), default=0))
    best_rest.reverse()
    used = [0] * g
    pick = [None] * len(muca.demand)
    best = [-1, ()]

    def dfs(i, acc):
        if acc + best_rest[i] <= best[0]:
            return
        if i == len(muca.demand):
            best[0], best[1] = acc, tuple(pick)
            return
        for bundle, w in muca.demand[i]:
            if all(used[q] < muca.supply[q] for q in bundle):
                for q in bundle:
                    used[q] += 1
                pick[i] = bundle
                dfs(i + 1, acc + w)
                for q in bundle:
                    used[q] -= 1
        pick[i] = None
        dfs(i + 1, acc)

    dfs(0, 0)
    return best[1], best[0]


# --- mechanism wrappers used by the probes -------------------------------------


def _mechanism(name: str) -> Callable[[Instance], Outcome]:
    from . import mia, vcgt

    if name in ("vcgt-single", "vcgt-divisible", "vcgt"):
        return vcgt.run_vcgt
    if name == "maa":
        return mia.run_maa
    raise ValueError(f"unknown mechanism {name!r}")


def check_ir(mechanism: str, instance: Instance) -> bool:
    outcome = _mechanism(mechanism)(instance)
    tol = 1e-9 * instance.scale if mechanism == "maa" else 0
    return all(utility(instance, outcome, i) >= -tol for i in range(instance.n))


def check_epp(instance: Instance, mechanism: str | None = None) -> bool:
    """Does the mechanism's allocation reach the brute-force optimum?"""
    if mechanism is None:
        mechanism = "maa" if instance.kind == "multi" else "vcgt"
    outcome = _mechanism(mechanism)(instance)
    return welfare(instance, outcome.allocation) == brute_force(instance)[1]


# --- truthfulness probes -------------------------------------------------------

VALUE_MISREPORTS = ("zero-entry", "double-entry", "swap-entries", "copy-row")


@dataclass
class Violation:
    trial: int
    agent: int
    misreport: str
    truthful_utility: float
    deviating_utility: float


@dataclass
class ProbeReport:
    mechanism: str
    trials: int
    tolerance: float
    root_seed: int = 0
    violations: list[Violation] = field(default_factory=list)
    max_gain: float = 0.0

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "trials": self.trials,
            "tolerance": self.tolerance,
            "root_seed": self.root_seed,
            "max_gain": self.max_gain,
            "violations": [vars(v) for v in self.violations],
        }


def misreport_values(row, instance: Instance, agent: int, kind: str, rng) -> tuple[list[int], str]:
    """Apply one member of the value-misreport family to ``row``."""
    row = list(row)
    m = len(row)
    if kind == "zero-entry":
        j = int(rng.integers(m))
        row[j] = 0
        return row, f"zero-entry[{j}]"
    if kind == "double-entry":
        j = int(rng.integers(m))
        row[j] *= 2
        return row, f"double-entry[{j}]"
    if kind == "swap-entries":
        a, b = (int(x) for x in rng.integers(m, size=2))
        row[a], row[b] = row[b], row[a]
        return row, f"swap-entries[{a},{b}]"
    if kind == "copy-row":
        other = int(rng.integers(instance.n))
        return list(instance.values[other]), f"copy-row[{other}]"
    if kind == "identity":
        return row, "identity"
    raise ValueError(kind)


def _with_report(instance: Instance, agent: int, row, length=None) -> Instance:
    values = [list(r) for r in instance.values]
    values[agent] = list(row)
    if isinstance(instance, SingleSlotInstance):
        return SingleSlotInstance(instance.capacity, values, instance.scale, instance.ids)
    if isinstance(instance, DivisibleInstance):
        return DivisibleInstance(
            instance.capacity, values, instance.scale, instance.ids, lengths=instance.lengths
        )
    lengths = list(instance.lengths)
    if length is not None:
        lengths[agent] = length
    return MultiSlotInstance.truncated(
        instance.capacity, values, lengths, scale=instance.scale, ids=instance.ids
    )


def true_utility_under(instance: Instance, reported: Instance, outcome: Outcome, agent: int):
    """Agent's utility, measured with true values, from an outcome computed on reports.

    For multi-slot jobs a start that reserves fewer slots than the true job
    length completes nothing and is worth 0.
    """
    if instance.kind != "multi":
        return agent_value(instance, outcome.allocation, agent) - outcome.delays[agent]
    start = outcome.allocation.assignment[agent]
    if start is None:
        value = 0
    elif reported.lengths[agent] < instance.lengths[agent]:
        value = 0
    else:
        value = instance.values[agent][start]
    return value - outcome.delays[agent]


def single_deviation(mechanism, instance, agent, reported, truthful=None):
    run = _mechanism(mechanism)
    if truthful is None:
        truthful = run(instance)
    u_true = utility(instance, truthful, agent)
    try:
        u_dev = true_utility_under(instance, reported, run(reported), agent)
    except DegenerateInstance:
        # The lie zeroed every valuation: nothing is scheduled or charged.
        u_dev = 0
    return u_true, u_dev


def probe_truthfulness(
    mechanism: str,
    generator: Callable[[np.random.Generator], Instance],
    trials: int,
    rng: np.random.Generator | int,
    families: tuple[str, ...] | None = None,
) -> ProbeReport:
    """Sample (instance, agent, misreport) triples and record profitable lies.

    Each trial draws its own generator from a child of the root seed, so
    trial ``t`` is reproducible on its own.
    """
    root = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(
        rng if isinstance(rng, int) else int(rng.integers(2**32))
    )
    if families is None:
        families = VALUE_MISREPORTS + (("length",) if mechanism == "maa" else ())
    run = _mechanism(mechanism)
    report = ProbeReport(mechanism, trials, 0.0, root_seed=int(root.entropy))
    for t, child in enumerate(root.spawn(trials)):
        trng = np.random.default_rng(child)
        instance = generator(trng)
        tol = 1e-9 * instance.scale if mechanism == "maa" else 0
        report.tolerance = tol
        agent = int(trng.integers(instance.n))
        family = families[int(trng.integers(len(families)))]
        if family == "length":
            choices = [l for l in range(1, instance.m + 1) if l != instance.lengths[agent]]
            if not choices:
                family = "identity"
            else:
                length = choices[int(trng.integers(len(choices)))]
                reported = _with_report(instance, agent, instance.values[agent], length)
                label = f"length[{length}]"
        if family != "length":
            row, label = misreport_values(instance.values[agent], instance, agent, family, trng)
            reported = _with_report(instance, agent, row)
        u_true, u_dev = single_deviation(mechanism, instance, agent, reported, run(instance))
        gain = u_dev - u_true
        report.max_gain = max(report.max_gain, float(gain))
        if gain > tol:
            report.violations.append(
                Violation(t, agent, label, float(u_true), float(u_dev))
            )
    return report


# --- random instance families and verification suites ----------------------------


def random_single(rng, n_max=6, m_max=4, k_max=3, v_max=9, scale=1000) -> SingleSlotInstance:
    n, m, k = (int(rng.integers(1, x + 1)) for x in (n_max, m_max, k_max))
    values = (rng.integers(0, v_max + 1, size=(n, m)) * scale).tolist()
    return SingleSlotInstance(k, values, scale)


def random_divisible(rng, n_max=6, m_max=4, k_max=3, l_max=3, v_max=9, scale=1000) -> DivisibleInstance:
    n, m, k = (int(rng.integers(1, x + 1)) for x in (n_max, m_max, k_max))
    values = (rng.integers(0, v_max + 1, size=(n, m)) * scale).tolist()
    lengths = tuple(int(rng.integers(1, min(l_max, m) + 1)) for _ in range(n))
    return DivisibleInstance(k, values, scale, lengths=lengths)


def random_multi(rng, n_max=5, m_max=5, ks=(3, 4, 5), l_max=3, v_max=9, scale=1000) -> MultiSlotInstance:
    """Multi-slot instance with at least one positive value (MAA needs v_max > 0)."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    k = int(ks[int(rng.integers(len(ks)))])
    lengths = [int(rng.integers(1, min(l_max, m) + 1)) for _ in range(n)]
    values = (rng.integers(0, v_max + 1, size=(n, m)) * scale).tolist()
    values[0][0] = max(values[0][0], scale)
    return MultiSlotInstance.truncated(k, values, lengths, scale=scale)


GENERATORS = {
    "vcgt-single": random_single,
    "vcgt-divisible": random_divisible,
    "maa": random_multi,
}


@dataclass
class SuiteReport:
    suite: str
    mechanism: str
    trials: int
    root_seed: int
    violations: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "mechanism": self.mechanism,
            "trials": self.trials,
            "root_seed": self.root_seed,
            "violations": self.violations,
        }


def _trial_rngs(seed, trials):
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(trials)]


def ir_suite(mechanism: str, trials: int, seed: int) -> SuiteReport:
    """Every truthful utility and every delay is non-negative."""
    run = _mechanism(mechanism)
    report = SuiteReport("ir", mechanism, trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, trials)):
        inst = GENERATORS[mechanism](rng)
        out = run(inst)
        tol = 1e-9 * inst.scale if mechanism == "maa" else 0
        for i in range(inst.n):
            u = utility(inst, out, i)
            if u < -tol or out.delays[i] < 0:
                report.violations.append(
                    {"trial": t, "agent": i, "utility": float(u), "delay": float(out.delays[i])}
                )
    return report


def epp_suite(mechanism: str, trials: int, seed: int) -> SuiteReport:
    run = _mechanism(mechanism)
    report = SuiteReport("epp", mechanism, trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, trials)):
        inst = GENERATORS[mechanism](rng)
        got = welfare(inst, run(inst).allocation)
        best = brute_force(inst)[1]
        if got != best:
            report.violations.append({"trial": t, "welfare": got, "optimum": best})
    return report


def capacity_suite(trials: int, seed: int) -> SuiteReport:
    """MAA never overfills a slot, and non-b load stays within k-1."""
    from .mia import maa_trace

    report = SuiteReport("capacity", "maa", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, trials)):
        # Many more jobs than capacity so the price schedule has to do the work.
        inst = random_multi(rng, n_max=30, m_max=6)
        tr = maa_trace(inst)
        k = inst.capacity
        load = occupancy(inst, tr.outcome.allocation)
        if max(load) > k or max(tr.Q) > k - 1:
            report.violations.append(
                {"trial": t, "k": k, "occupancy": list(tr.occupancy), "Q": list(tr.Q)}
            )
    return report
