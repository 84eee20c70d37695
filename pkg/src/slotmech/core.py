"""Domain types and exact welfare/utility arithmetic.

Valuations are fixed-point integers: a value of ``v`` with scale ``S`` means
``v / S`` waiting periods.  Keeping them as Python ints makes every welfare
comparison in the VCG-T paths exact.  Slot and agent indices are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, Union

DEFAULT_SCALE = 1000

KINDS = ("single", "multi", "divisible")


class InvalidInput(ValueError):
    """Instance, allocation or outcome that violates the model."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message)
        self.violations = list(violations)


class UnsupportedConfiguration(ValueError):
    """A mechanism was asked to run outside the parameters it supports."""


def _violations(kind, capacity, values, lengths) -> list[str]:
    out = []
    if kind not in KINDS:
        out.append(f"unknown kind {kind!r}")
    if not isinstance(capacity, int) or capacity < 1:
        out.append("capacity must be >= 1")
    if len(values) < 1:
        out.append("need at least one agent")
        return out
    m = len(values[0])
    if m < 1:
        out.append("need at least one slot")
    for i, row in enumerate(values):
        if len(row) != m:
            out.append(f"agent {i}: expected {m} values, got {len(row)}")
            continue
        for j, v in enumerate(row):
            if not isinstance(v, int) or isinstance(v, bool):
                out.append(f"agent {i} slot {j}: value must be a scaled integer")
            elif v < 0:
                out.append(f"agent {i} slot {j}: negative value")
    if lengths is not None:
        if len(lengths) != len(values):
            out.append("one length per agent required")
        for i, (row, length) in enumerate(zip(values, lengths)):
            if not isinstance(length, int) or length < 1:
                out.append(f"agent {i}: length must be >= 1")
            elif length > m:
                out.append(f"agent {i}: length {length} exceeds slot count {m}")
            elif kind == "multi":
                for j in range(m - length + 1, len(row)):
                    if row[j] != 0:
                        out.append(
                            f"agent {i} slot {j}: nonzero infeasible start value"
                        )
    return out


@dataclass(frozen=True)
class _Instance:
    capacity: int
    values: tuple[tuple[int, ...], ...]
    scale: int = DEFAULT_SCALE
    ids: tuple[str, ...] = ()

    kind = "abstract"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(tuple(r) for r in self.values))
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i) for i in range(len(self.values))))
        else:
            object.__setattr__(self, "ids", tuple(self.ids))
        problems = _violations(self.kind, self.capacity, self.values, self._lengths())
        if len(self.ids) != len(self.values):
            problems.append("one id per agent required")
        if problems:
            raise InvalidInput(f"invalid {self.kind} instance: {problems[0]}", problems)

    def _lengths(self):
        return None

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return len(self.values[0])

    @property
    def k(self) -> int:
        return self.capacity


@dataclass(frozen=True)
class SingleSlotInstance(_Instance):
    kind = "single"

    @property
    def lengths(self) -> tuple[int, ...]:
        return (1,) * self.n


@dataclass(frozen=True)
class MultiSlotInstance(_Instance):
    """``values[i][s]`` is agent i's value for a job *starting* at slot s."""

    lengths: tuple[int, ...] = field(default=())
    kind = "multi"

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(self.lengths) or (1,) * len(self.values))
        super().__post_init__()

    def _lengths(self):
        return self.lengths

    @classmethod
    def truncated(cls, capacity, values, lengths, **kw) -> "MultiSlotInstance":
        """Build an instance, zeroing start values that would spill past the period."""
        m = len(values[0])
        clean = [
            [v if s <= m - l else 0 for s, v in enumerate(row)]
            for row, l in zip(values, lengths)
        ]
        return cls(capacity, clean, lengths=tuple(lengths), **kw)


@dataclass(frozen=True)
class DivisibleInstance(_Instance):
    lengths: tuple[int, ...] = field(default=())
    kind = "divisible"

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(self.lengths) or (1,) * len(self.values))
        super().__post_init__()

    def _lengths(self):
        return self.lengths


Instance = Union[SingleSlotInstance, MultiSlotInstance, DivisibleInstance]


@dataclass(frozen=True)
class Allocation:
    """Per-agent assignment.

    ``single``: slot index or None.  ``multi``: start slot or None.
    ``divisible``: frozenset of slot indices (possibly empty).
    """

    kind: str
    assignment: tuple

    @classmethod
    def empty(cls, instance: Instance) -> "Allocation":
        if instance.kind == "divisible":
            return cls("divisible", (frozenset(),) * instance.n)
        return cls(instance.kind, (None,) * instance.n)

    def slots_of(self, agent: int, instance: Instance) -> list[int]:
        """Slots physically occupied by ``agent``."""
        a = self.assignment[agent]
        if self.kind == "divisible":
            return sorted(a)
        if a is None:
            return []
        if self.kind == "multi":
            return list(range(a, a + instance.lengths[agent]))
        return [a]

    def is_allocated(self, agent: int) -> bool:
        a = self.assignment[agent]
        return bool(a) if self.kind == "divisible" else a is not None


@dataclass(frozen=True)
class Outcome:
    allocation: Allocation
    delays: tuple


def _check_dims(instance: Instance, allocation: Allocation):
    if allocation.kind != instance.kind:
        raise InvalidInput(f"allocation kind {allocation.kind} != instance kind {instance.kind}")
    if len(allocation.assignment) != instance.n:
        raise InvalidInput("allocation length does not match agent count")


def agent_value(instance: Instance, allocation: Allocation, agent: int) -> int:
    a = allocation.assignment[agent]
    row = instance.values[agent]
    if instance.kind == "divisible":
        return sum(row[j] for j in a)
    return 0 if a is None else row[a]


def utility(instance: Instance, outcome: Outcome, agent: int):
    """Quasi-linear utility: allocated value minus delay."""
    _check_dims(instance, outcome.allocation)
    if len(outcome.delays) != instance.n:
        raise InvalidInput("delay vector length does not match agent count")
    return agent_value(instance, outcome.allocation, agent) - outcome.delays[agent]


def occupancy(instance: Instance, allocation: Allocation) -> list[int]:
    load = [0] * instance.m
    for i in range(instance.n):
        for j in allocation.slots_of(i, instance):
            if 0 <= j < instance.m:
                load[j] += 1
    return load


def check_feasible(instance: Instance, allocation: Allocation) -> bool:
    if allocation.kind != instance.kind or len(allocation.assignment) != instance.n:
        return False
    m = instance.m
    for i, a in enumerate(allocation.assignment):
        if instance.kind == "divisible":
            if not isinstance(a, frozenset) or len(a) > instance.lengths[i]:
                return False
            if any(not 0 <= j < m for j in a):
                return False
        elif a is not None:
            if not 0 <= a < m:
                return False
            if instance.kind == "multi" and a + instance.lengths[i] > m:
                return False
    return max(occupancy(instance, allocation)) <= instance.capacity


def welfare(instance: Instance, allocation: Allocation) -> int:
    if not check_feasible(instance, allocation):
        raise InvalidInput("infeasible allocation")
    return sum(agent_value(instance, allocation, i) for i in range(instance.n))


def validate_instance(obj: Any) -> list[str]:
    """Return every model violation of an instance object or instance dict.

    An empty list means the instance is well formed.
    """
    if isinstance(obj, _Instance):
        return _violations(obj.kind, obj.capacity, obj.values, obj._lengths())
    try:
        kind = obj.get("kind")
        agents = obj.get("agents", [])
        values = [tuple(a.get("values", [])) for a in agents]
        lengths = None
        if kind in ("multi", "divisible"):
            lengths = [a.get("length", 1) for a in agents]
        problems = _violations(kind, obj.get("capacity"), values, lengths)
        slots = obj.get("slots")
        if values and slots is not None and len(values[0]) != slots:
            problems.append(f"declared {slots} slots, values have {len(values[0])}")
        scale = obj.get("scale", DEFAULT_SCALE)
        if not isinstance(scale, int) or scale < 1:
            problems.append("scale must be a positive integer")
        return problems
    except AttributeError:
        return ["instance must be a JSON object"]


# --- JSON -------------------------------------------------------------------

_CLASSES = {
    "single": SingleSlotInstance,
    "multi": MultiSlotInstance,
    "divisible": DivisibleInstance,
}


def instance_from_dict(doc: dict) -> Instance:
    problems = validate_instance(doc)
    if problems:
        raise InvalidInput(f"invalid instance: {problems[0]}", problems)
    agents = doc["agents"]
    kw = dict(
        capacity=doc["capacity"],
        values=[a["values"] for a in agents],
        scale=doc.get("scale", DEFAULT_SCALE),
        ids=tuple(str(a.get("id", i)) for i, a in enumerate(agents)),
    )
    if doc["kind"] != "single":
        kw["lengths"] = tuple(a.get("length", 1) for a in agents)
    return _CLASSES[doc["kind"]](**kw)


def instance_to_dict(instance: Instance) -> dict:
    agents = []
    for i in range(instance.n):
        a = {"id": instance.ids[i]}
        if instance.kind != "single":
            a["length"] = instance.lengths[i]
        a["values"] = list(instance.values[i])
        agents.append(a)
    return {
        "kind": instance.kind,
        "slots": instance.m,
        "capacity": instance.capacity,
        "scale": instance.scale,
        "agents": agents,
    }


def load_instance(path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(doc)


def outcome_to_dict(instance: Instance, outcome: Outcome) -> dict:
    rows = []
    for i, a in enumerate(outcome.allocation.assignment):
        if instance.kind == "divisible":
            rows.append({"agent": instance.ids[i], "slots": sorted(a)})
        else:
            rows.append({"agent": instance.ids[i], "slot": a})
    return {
        "allocation": rows,
        "delays": list(outcome.delays),
        "welfare": welfare(instance, outcome.allocation),
        "scale": instance.scale,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"
