"""Evaluation statistics: hit ratios, retention, fairness, hop stretch,
eviction churn, and the unit-link access-cost model.
"""
from __future__ import annotations

import csv
import io
import statistics
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Mapping, Sequence

from .errors import RoutingError, UndefinedMetricError
from .routing import bfs_distances


@dataclass
class Counters:
    requests: int = 0
    server_hits: int = 0
    cache_hits: int = 0
    router_hops: int = 0
    shortest_hops: int = 0
    as_hops: int = 0
    evictions: int = 0

    def add(self, other: "Counters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def copy(self) -> "Counters":
        return Counters(**asdict(self))


@dataclass
class Window:
    end: int  # requests processed when the window closed
    counters: Counters


@dataclass
class AsStats:
    as_id: int
    observed: int  # |D_p| for this AS
    cached: int  # |D_q| for this AS
    retention: float | None
    jain: float | None


@dataclass
class MetricsReport:
    totals: Counters = field(default_factory=Counters)
    windows: list[Window] = field(default_factory=list)
    per_as: list[AsStats] = field(default_factory=list)
    observed_objects: int = 0
    cached_objects: int = 0
    cache_slots: int = 0
    population: int = 0
    scatter: list[tuple[int, int, int, int]] = field(default_factory=list)  # (rank, object, requests, in_cache)

    @property
    def retention(self) -> float | None:
        return self.cached_objects / self.observed_objects if self.observed_objects else None

    @property
    def ideal_retention(self) -> float | None:
        return min(1.0, self.cache_slots / self.population) if self.population else None

    @property
    def median_as_retention(self) -> float | None:
        vals = [s.retention for s in self.per_as if s.retention is not None]
        return statistics.median(vals) if vals else None

    @property
    def mean_jain(self) -> float | None:
        vals = [s.jain for s in self.per_as if s.jain is not None]
        return statistics.fmean(vals) if vals else None


def _counters(x) -> Counters:
    return x.totals if isinstance(x, MetricsReport) else x


def server_hit_ratio(report) -> float:
    c = _counters(report)
    if c.requests <= 0:
        raise UndefinedMetricError("server hit ratio undefined without requests")
    return c.server_hits / c.requests


def cache_hit_ratio(report) -> float:
    return 1.0 - server_hit_ratio(report)


def hopcount_ratio(report) -> float:
    c = _counters(report)
    if c.shortest_hops <= 0:
        raise UndefinedMetricError("hopcount ratio undefined with zero shortest hops")
    return c.router_hops / c.shortest_hops


def eviction_rate(report) -> float:
    """Evictions per million requests."""
    c = _counters(report)
    if c.requests <= 0:
        raise UndefinedMetricError("eviction rate undefined without requests")
    return 1e6 * c.evictions / c.requests


def as_hops_per_request(report) -> float:
    c = _counters(report)
    if c.requests <= 0:
        raise UndefinedMetricError("AS hops per request undefined without requests")
    return c.as_hops / c.requests


def retention_ratio(caches: Iterable[Iterable[int]], observed: Iterable[int]) -> float:
    """Distinct objects held by ``caches`` over distinct ``observed`` objects."""
    observed = set(observed)
    if not observed:
        raise UndefinedMetricError("retention undefined when nothing was observed")
    held = set()
    for c in caches:
        held.update(c)
    return len(held) / len(observed)


def jain_index(values: Sequence[float]) -> float:
    """``(sum x)^2 / (n * sum x^2)``; 1 when all values are equal."""
    if len(values) < 1:
        raise UndefinedMetricError("Jain index needs at least one value")
    if any(v < 0 for v in values):
        raise ValueError("Jain index needs non-negative values")
    sq = sum(v * v for v in values)
    if sq == 0:
        raise UndefinedMetricError("Jain index undefined for all-zero values")
    return sum(values) ** 2 / (len(values) * sq)


def distinct_utilization(router_contents: Sequence[Iterable[int]]) -> list[int]:
    """Per router, how many of its objects no other router in the group holds."""
    sets = [set(c) for c in router_contents]
    counts: dict[int, int] = {}
    for s in sets:
        for o in s:
            counts[o] = counts.get(o, 0) + 1
    return [sum(1 for o in s if counts[o] == 1) for s in sets]


def total_access_cost(placement: Mapping, demand: Mapping, topology, origin) -> float:
    """Rate-weighted hop cost of serving every demand from its nearest replica.

    Parameters
    ----------
    placement : mapping node -> object or iterable of objects
        Cache contents.
    demand : mapping object -> (rate, iterable of client nodes)
    topology : Graph or adjacency mapping
        Unit-cost links; clients and origins are nodes of this graph.
    origin : node, or mapping object -> node
        Where each object is permanently available.
    """
    holders: dict = {}
    for node, objs in placement.items():
        if isinstance(objs, (str, int)) or not isinstance(objs, Iterable):
            objs = (objs,)
        for o in objs:
            holders.setdefault(o, set()).add(node)
    dist_cache: dict = {}
    total = 0
    for obj, (rate, clients) in demand.items():
        replicas = set(holders.get(obj, ()))
        src = origin.get(obj) if isinstance(origin, Mapping) else origin
        if src is not None:
            replicas.add(src)
        if not replicas:
            raise RoutingError(f"object {obj!r} is not available anywhere")
        for c in clients:
            d = dist_cache.get(c)
            if d is None:
                d = dist_cache[c] = bfs_distances(topology, c)
            reach = [d[r] for r in replicas if r in d]
            if not reach:
                raise RoutingError(f"no replica of {obj!r} reachable from {c!r}")
            total = total + rate * min(reach)
    return total


# -- CSV emission -------------------------------------------------------------

SUMMARY_COLUMNS = (
    "policy", "seed", "topology_seed", "workload_seed", "n_ases", "routers_per_as", "capacity",
    "n_c", "n_p", "n_requests", "alpha", "q", "requests", "server_hits", "cache_hits",
    "server_hit_ratio", "cache_hit_ratio", "hopcount_ratio", "as_hops_per_request", "evictions",
    "evictions_per_million", "retention_ratio", "ideal_retention", "median_as_retention",
    "mean_jain", "workload_hash",
)
WINDOW_COLUMNS = (
    "policy", "window_end", "requests", "server_hits", "cache_hits", "router_hops",
    "shortest_hops", "as_hops", "evictions", "server_hit_ratio", "cache_hit_ratio",
    "hopcount_ratio", "as_hops_per_request", "evictions_per_million",
)
PER_AS_COLUMNS = ("policy", "as_id", "observed", "cached", "retention_ratio", "jain_index")
SCATTER_COLUMNS = ("rank", "object_id", "requests", "in_cache")


def fmt(value) -> str:
    """Stable text form for CSV cells (``repr`` for floats, empty for None)."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _safe(fn, arg):
    try:
        return fn(arg)
    except UndefinedMetricError:
        return None


def ratio_fields(c: Counters) -> dict:
    return {
        "server_hit_ratio": _safe(server_hit_ratio, c),
        "cache_hit_ratio": _safe(cache_hit_ratio, c),
        "hopcount_ratio": _safe(hopcount_ratio, c),
        "as_hops_per_request": _safe(as_hops_per_request, c),
        "evictions_per_million": _safe(eviction_rate, c),
    }


def summary_row(report: MetricsReport, meta: Mapping) -> dict:
    t = report.totals
    row = dict(meta)
    row.update(requests=t.requests, server_hits=t.server_hits, cache_hits=t.cache_hits, evictions=t.evictions)
    row.update(ratio_fields(t))
    row.update(
        retention_ratio=report.retention,
        ideal_retention=report.ideal_retention,
        median_as_retention=report.median_as_retention,
        mean_jain=report.mean_jain,
    )
    return row


def window_rows(report: MetricsReport, policy: str) -> list[dict]:
    rows = []
    for w in report.windows:
        row = {"policy": policy, "window_end": w.end, **asdict(w.counters)}
        row.update(ratio_fields(w.counters))
        rows.append(row)
    return rows


def per_as_rows(report: MetricsReport, policy: str) -> list[dict]:
    return [
        {"policy": policy, "as_id": s.as_id, "observed": s.observed, "cached": s.cached,
         "retention_ratio": s.retention, "jain_index": s.jain}
        for s in report.per_as
    ]


def scatter_rows(report: MetricsReport) -> list[dict]:
    return [{"rank": r, "object_id": o, "requests": n, "in_cache": c} for r, o, n, c in report.scatter]


def write_csv(rows: Iterable[Mapping], columns: Sequence[str], fh) -> None:
    """UTF-8, LF line endings, mandatory header."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])


def csv_text(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    write_csv(rows, columns, buf)
    return buf.getvalue()
