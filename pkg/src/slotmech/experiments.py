"""Desk-scale replications of the congestion, approximation, priority-delay
and scalability studies.

Every experiment is a pure function of its config: repetition ``rep`` draws
from ``SeedSequence([seed, <experiment code>, <grid point>, rep])``.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_SCALE,
    InvalidInput,
    MultiSlotInstance,
    SingleSlotInstance,
    occupancy,
    welfare,
)
from .mia import approx_bound, run_maa
from .oracle import brute_force_mia
from .vcgt import allocate_single, vcgt_report

OPEN_HOUR, CLOSE_HOUR = 7, 21
N_SLOTS = CLOSE_HOUR - OPEN_HOUR  # 14 hourly slots
PEAK_MEANS = (38.0, 48.63, 52.83)  # 5-6 PM, 6-7 PM, 7-8 PM
PEAK_SLOTS = (10, 11, 12)
HOURLY_MEAN = 26.5
CLASSES = (3, 2, 1)  # high, medium, low
STORE_CLASS_PROBS = (0.1, 0.3, 0.6)
UNIFORM_CLASS_PROBS = (1 / 3, 1 / 3, 1 / 3)
DEFAULT_DELTA = 0.65

_CODES = {"congestion": 1, "approx": 2, "priority": 3, "scale": 4, "footfall": 5}


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


# --- footfall ----------------------------------------------------------------


@dataclass(frozen=True)
class FootfallRow:
    date: str
    hour: int
    count: int

    @property
    def slot(self) -> int:
        return self.hour - OPEN_HOUR


@dataclass(frozen=True)
class FootfallTable:
    rows: tuple[FootfallRow, ...]

    def days(self) -> list[str]:
        return sorted({r.date for r in self.rows})

    def day_counts(self) -> dict[str, list[int]]:
        out = {d: [0] * N_SLOTS for d in self.days()}
        for r in self.rows:
            out[r.date][r.slot] += r.count
        return out

    def slot_means(self) -> list[float]:
        counts = self.day_counts()
        if not counts:
            return [0.0] * N_SLOTS
        return [float(np.mean([c[j] for c in counts.values()])) for j in range(N_SLOTS)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "hour", "count"])
        for r in self.rows:
            w.writerow([r.date, r.hour, r.count])
        return buf.getvalue()


def ingest_footfall(path) -> FootfallTable:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["date", "hour", "count"]:
            raise InvalidInput(f"{path}: expected header date,hour,count")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise InvalidInput(f"{path}:{lineno}: expected 3 fields, got {len(rec)}")
            date, hour, count = (x.strip() for x in rec)
            try:
                dt.date.fromisoformat(date)
                hour, count = int(hour), int(count)
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: {exc}") from None
            if not OPEN_HOUR <= hour < CLOSE_HOUR:
                raise InvalidInput(
                    f"{path}:{lineno}: hour {hour} outside {OPEN_HOUR}..{CLOSE_HOUR - 1}"
                )
            if count < 0:
                raise InvalidInput(f"{path}:{lineno}: negative count")
            rows.append(FootfallRow(date, hour, count))
    return FootfallTable(tuple(rows))


def default_profile(peak_means=PEAK_MEANS, hourly_mean=HOURLY_MEAN) -> list[float]:
    """Per-slot means: the three evening peaks, everything else flat.

    The off-peak level is chosen so the mean over all 14 slots is
    ``hourly_mean``.
    """
    off = (hourly_mean * N_SLOTS - sum(peak_means)) / (N_SLOTS - len(peak_means))
    profile = [off] * N_SLOTS
    for j, mu in zip(PEAK_SLOTS, peak_means):
        profile[j] = mu
    return profile


def synthesize_footfall(
    days: int,
    peak_means=PEAK_MEANS,
    offpeak_mean: float | None = None,
    rng: np.random.Generator | int = 0,
    start: dt.date = dt.date(2020, 7, 1),
) -> FootfallTable:
    if isinstance(rng, int):
        rng = stream(rng, _CODES["footfall"])
    profile = default_profile(peak_means)
    if offpeak_mean is not None:
        profile = [offpeak_mean if j not in PEAK_SLOTS else mu for j, mu in enumerate(profile)]
    rows = []
    for d in range(days):
        date = (start + dt.timedelta(days=d)).isoformat()
        counts = rng.poisson(profile)
        rows += [FootfallRow(date, OPEN_HOUR + j, int(c)) for j, c in enumerate(counts)]
    return FootfallTable(tuple(rows))


# --- valuation model -------------------------------------------------------------


def preference_order(favourite: int, m: int) -> list[int]:
    """Slots ordered by distance from the favourite; earlier slot wins ties."""
    return sorted(range(m), key=lambda j: (abs(j - favourite), j))


def class_values(cls: int, favourite: int, m: int, delta: float, scale: int) -> list[int]:
    values = [0] * m
    for t, j in enumerate(preference_order(favourite, m)):
        values[j] = round(cls * delta**t * scale)
    return values


@dataclass(frozen=True)
class Population:
    instance: SingleSlotInstance
    classes: tuple[int, ...]
    favourites: tuple[int, ...]

    def rank(self, agent: int, slot: int) -> int:
        """1-based position of ``slot`` in the agent's preference order."""
        return preference_order(self.favourites[agent], self.instance.m).index(slot) + 1


def _draw_classes(n, dist, rng) -> list[int]:
    probs = np.asarray(dist, dtype=float)
    if not math.isclose(probs.sum(), 1.0, rel_tol=1e-9):
        raise InvalidInput("class probabilities must sum to 1")
    return [CLASSES[c] for c in rng.choice(len(CLASSES), size=n, p=probs)]


def build_population(favourites, classes, m, capacity, delta, scale=DEFAULT_SCALE) -> Population:
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    values = [class_values(c, f, m, delta, scale) for c, f in zip(classes, favourites)]
    inst = SingleSlotInstance(capacity, values, scale)
    return Population(inst, tuple(classes), tuple(favourites))


def sample_population(
    day_counts, dist=STORE_CLASS_PROBS, delta=DEFAULT_DELTA, rng=None, capacity=1,
    scale=DEFAULT_SCALE,
) -> Population:
    """One agent per observed arrival; the arrival slot is its favourite."""
    favourites = [j for j, c in enumerate(day_counts) for _ in range(c)]
    if not favourites:
        raise InvalidInput("empty day: no agents to schedule")
    classes = _draw_classes(len(favourites), dist, rng)
    return build_population(favourites, classes, len(day_counts), capacity, delta, scale)


# --- CSV -------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return x


def write_csv(rows: list[dict], path=None, columns=None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _map(fn, items, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --- congestion ------------------------------------------------------------------

CONGESTION_COLUMNS = ["day", "slot", "before", "after", "unallocated"]


@dataclass
class CongestionConfig:
    capacity: int = 28
    delta: float = DEFAULT_DELTA
    days: int = 31
    seed: int = 0
    dist: tuple = STORE_CLASS_PROBS
    footfall: FootfallTable | None = None
    jobs: int = 1


def _congestion_day(args):
    day_index, date, counts, cfg = args
    rng = stream(cfg.seed, _CODES["congestion"], cfg.capacity, day_index)
    pop = sample_population(counts, cfg.dist, cfg.delta, rng, capacity=cfg.capacity)
    # The rows only need the allocation; delays would not change it.
    alloc = allocate_single(pop.instance)
    after = occupancy(pop.instance, alloc)
    unallocated = sum(1 for a in alloc.assignment if a is None)
    return [
        dict(day=date, slot=j, before=counts[j], after=after[j], unallocated=unallocated)
        for j in range(len(counts))
    ]


def congestion_experiment(cfg: CongestionConfig) -> list[dict]:
    table = cfg.footfall or synthesize_footfall(cfg.days, rng=stream(cfg.seed, _CODES["footfall"]))
    per_day = table.day_counts()
    work = [(d, date, per_day[date], cfg) for d, date in enumerate(sorted(per_day))]
    rows = []
    for chunk in _map(_congestion_day, work, cfg.jobs):
        rows += chunk
    return rows


def peak_reduction(rows: list[dict]) -> dict:
    """Summaries of how much the busiest hours were relieved.

    ``daily_peak``: mean over days of 1 - max_j(after)/max_j(before), the
    relief of each day's busiest hour.  ``slot_means``: per peak slot,
    1 - mean(after)/mean(before).
    """
    days = {}
    for r in rows:
        days.setdefault(r["day"], []).append(r)
    daily = []
    for recs in days.values():
        b = max(r["before"] for r in recs)
        a = max(r["after"] for r in recs)
        if b > 0:
            daily.append(1 - a / b)
    per_slot = {}
    for j in PEAK_SLOTS:
        b = np.mean([r["before"] for r in rows if r["slot"] == j])
        a = np.mean([r["after"] for r in rows if r["slot"] == j])
        per_slot[j] = float(1 - a / b) if b else 0.0
    return {"daily_peak": float(np.mean(daily)) if daily else 0.0, "slot_means": per_slot}


# --- approximation ratio of MAA -------------------------------------------------

APPROX_COLUMNS = ["m", "rep", "t_opt", "t_maa", "welfare_opt", "welfare_maa"]


@dataclass
class ApproxConfig:
    n: int = 6
    k: int = 5
    ms: tuple = (3, 4, 5, 6, 7, 8)
    reps: int = 100
    seed: int = 0
    delta: float = DEFAULT_DELTA
    dist: tuple = UNIFORM_CLASS_PROBS
    max_length: int = 3
    jobs: int = 1


def random_multi_instance(n, m, k, rng, delta=DEFAULT_DELTA, dist=UNIFORM_CLASS_PROBS,
                          max_length=3, scale=DEFAULT_SCALE) -> MultiSlotInstance:
    """Class-valued start slots: favourite feasible start, then by proximity."""
    classes = _draw_classes(n, dist, rng)
    lengths, values = [], []
    for c in classes:
        l = int(rng.integers(1, min(max_length, m) + 1))
        starts = m - l + 1
        fav = int(rng.integers(starts))
        row = class_values(c, fav, starts, delta, scale) + [0] * (l - 1)
        lengths.append(l)
        values.append(row)
    return MultiSlotInstance(k, values, scale, lengths=tuple(lengths))


def _approx_point(args):
    m, rep, cfg = args
    rng = stream(cfg.seed, _CODES["approx"], m, rep)
    inst = random_multi_instance(cfg.n, m, cfg.k, rng, cfg.delta, cfg.dist, cfg.max_length)
    (_, w_opt), t_opt = timed(brute_force_mia, inst)
    out, t_maa = timed(run_maa, inst)
    return dict(
        m=m, rep=rep, t_opt=t_opt, t_maa=t_maa,
        welfare_opt=w_opt, welfare_maa=welfare(inst, out.allocation),
    )


def timed(fn, *args, min_time=2e-3):
    """Call ``fn`` repeatedly for at least ``min_time`` seconds; return (result, seconds per call)."""
    calls = 0
    t0 = time.perf_counter()
    while True:
        result = fn(*args)
        calls += 1
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time:
            return result, elapsed / calls


def approx_experiment(cfg: ApproxConfig) -> list[dict]:
    work = [(m, rep, cfg) for m in cfg.ms for rep in range(cfg.reps)]
    return _map(_approx_point, work, cfg.jobs)


def approx_summary(rows: list[dict], k: int) -> dict:
    ratios = [r["welfare_opt"] / r["welfare_maa"] for r in rows]
    over = [r for r in rows if r["welfare_opt"] > approx_bound(r["m"], k) * r["welfare_maa"]]
    return {"mean_ratio": float(np.mean(ratios)), "max_ratio": float(max(ratios)),
            "bound_violations": len(over)}


# --- priority / delay trade-off -----------------------------------------------------

PRIORITY_COLUMNS = ["n", "rep", "class", "mean_pref_rank", "mean_delay"]


@dataclass
class PriorityConfig:
    m: int = 5
    k: int = 4
    delta: float = DEFAULT_DELTA
    ns: tuple | None = None
    reps: int = 100
    seed: int = 0
    dist: tuple = UNIFORM_CLASS_PROBS
    jobs: int = 1

    def grid(self):
        return self.ns or tuple(range(2, math.ceil(1.1 * self.m * self.k) + 1))


def _priority_point(args):
    n, rep, cfg = args
    rng = stream(cfg.seed, _CODES["priority"], n, rep)
    favourites = [int(x) for x in rng.integers(cfg.m, size=n)]
    classes = _draw_classes(n, cfg.dist, rng)
    pop = build_population(favourites, classes, cfg.m, cfg.k, cfg.delta)
    report = vcgt_report(pop.instance)
    alloc, delays = report.outcome.allocation, report.outcome.delays
    scale = pop.instance.scale
    rows = []
    for c in CLASSES:
        members = [i for i in range(n) if classes[i] == c and alloc.assignment[i] is not None]
        if not members:
            continue
        rows.append(dict(
            n=n, rep=rep, **{"class": c},
            mean_pref_rank=float(np.mean([pop.rank(i, alloc.assignment[i]) for i in members])),
            mean_delay=float(np.mean([delays[i] for i in members])) / scale,
        ))
    return rows


def priority_delay_experiment(cfg: PriorityConfig) -> list[dict]:
    work = [(n, rep, cfg) for n in cfg.grid() for rep in range(cfg.reps)]
    rows = []
    for chunk in _map(_priority_point, work, cfg.jobs):
        rows += chunk
    return rows


def priority_summary(rows: list[dict], min_n: int = 0) -> dict:
    """Per-class means of rank and delay over rows with n >= min_n."""
    out = {}
    for c in CLASSES:
        sel = [r for r in rows if r["class"] == c and r["n"] >= min_n]
        out[c] = (
            float(np.mean([r["mean_pref_rank"] for r in sel])),
            float(np.mean([r["mean_delay"] for r in sel])),
        )
    return out


# --- scalability ---------------------------------------------------------------------

SCALE_COLUMNS = ["m", "n", "rep", "wall_time"]


@dataclass
class ScaleConfig:
    k: int = 12
    ms: tuple = (2, 4, 6, 8, 10, 12, 14)
    reps: int = 3
    seed: int = 0
    delta: float = DEFAULT_DELTA
    dist: tuple = STORE_CLASS_PROBS


def scale_instance(m, k, rng, delta=DEFAULT_DELTA, dist=STORE_CLASS_PROBS) -> SingleSlotInstance:
    n = m * k
    favourites = [int(x) for x in rng.integers(m, size=n)]
    classes = _draw_classes(n, dist, rng)
    return build_population(favourites, classes, m, k, delta).instance


def scalability_experiment(cfg: ScaleConfig) -> list[dict]:
    # Timed runs stay in-process and sequential so they do not compete.
    rows = []
    for m in cfg.ms:
        for rep in range(cfg.reps):
            inst = scale_instance(m, cfg.k, stream(cfg.seed, _CODES["scale"], m, rep),
                                  cfg.delta, cfg.dist)
            t0 = time.perf_counter()
            vcgt_report(inst)
            rows.append(dict(m=m, n=inst.n, rep=rep, wall_time=time.perf_counter() - t0))
    return rows
