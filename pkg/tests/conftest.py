from __future__ import annotations

import itertools
import math
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
S = 1000


def enumerate_single(values, k):
    """Plain product enumeration of slot-or-none choices; returns best welfare."""
    n, m = len(values), len(values[0])
    best = 0
    for choice in itertools.product([None, *range(m)], repeat=n):
        load = [0] * m
        for j in choice:
            if j is not None:
                load[j] += 1
        if max(load) <= k:
            best = max(best, sum(values[i][j] for i, j in enumerate(choice) if j is not None))
    return best


def enumerate_mia(values, lengths, k):
    n, m = len(values), len(values[0])
    best = 0
    best_choice = None
    per_agent = [[None, *range(m - l + 1)] for l in lengths]
    for choice in itertools.product(*per_agent):
        load = [0] * m
        for i, s in enumerate(choice):
            if s is not None:
                for j in range(s, s + lengths[i]):
                    load[j] += 1
        if max(load) <= k:
            w = sum(values[i][s] for i, s in enumerate(choice) if s is not None)
            if w > best:
                best, best_choice = w, choice
    return best, best_choice


def enumerate_divisible(values, lengths, k):
    n, m = len(values), len(values[0])
    per_agent = []
    for l in lengths:
        subs = [c for size in range(l + 1) for c in itertools.combinations(range(m), size)]
        per_agent.append(subs)
    best = 0
    for choice in itertools.product(*per_agent):
        load = [0] * m
        for sub in choice:
            for j in sub:
                load[j] += 1
        if max(load) <= k:
            best = max(best, sum(values[i][j] for i, sub in enumerate(choice) for j in sub))
    return best


def literal_maa(values, lengths, k):
    """Direct transcription of the posted-price loop, used as a second route.

    Returns (starts, charges, final prices).  Uses fresh exponentiation and
    fsum everywhere, no running sums.
    """
    n, m = len(values), len(values[0])
    v_max = max(max(r) for r in values)
    b = min(i for i in range(n) if max(values[i]) == v_max)
    others = [max(values[i]) for i in range(n) if i != b]
    pi0 = v_max / (6 * m * (k - 1))
    r = (6 * m * (k - 1)) ** (1 / (k - 2))
    starts = [None] * n
    charges = [0.0] * n
    feasible_b = range(m - lengths[b] + 1)
    starts[b] = max(feasible_b, key=lambda s: (values[b][s], -s))
    charges[b] = float(max(others, default=0))
    Q = [0] * m
    tol = 1e-9 * S
    for i in range(n):
        if i == b:
            continue
        P = [pi0 * r ** Q[j] for j in range(m)]
        best = None
        for s in range(m - lengths[i] + 1):
            u = values[i][s] - math.fsum(P[s : s + lengths[i]])
            if u > tol and (best is None or u > best[1] + tol):
                best = (s, u)
        if best is None:
            continue
        s = best[0]
        starts[i] = s
        charges[i] = math.fsum(P[s : s + lengths[i]])
        for j in range(s, s + lengths[i]):
            Q[j] += 1
    return starts, charges, [pi0 * r ** q for q in Q]


@pytest.fixture
def draft():
    from slotmech.core import SingleSlotInstance

    return SingleSlotInstance(1, [[51 * S, 50 * S], [50 * S, 0]], S, ("A", "B"))


@pytest.fixture
def three_agents():
    from slotmech.core import SingleSlotInstance

    return SingleSlotInstance(1, [[4 * S, 1 * S], [3 * S, 3 * S], [2 * S, 2 * S]], S)


@pytest.fixture
def instance_w():
    from slotmech.core import MultiSlotInstance

    return MultiSlotInstance(
        3, [[10 * S, 8 * S, 0], [5 * S, 9 * S, 7 * S], [6 * S, 6 * S, 0]], S, ("1", "2", "3"),
        lengths=(2, 1, 2),
    )


# --- acceptance verdicts ----------------------------------------------------------

VERDICTS: list[str] = []


def verdict(criterion: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}"
    VERDICTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
