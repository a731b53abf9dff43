"""Per-router LRU object stores and the placement decision for every policy."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .policy import PolicyConfig, PolicyKind


class CacheState:
    """Unit-size LRU store.

    Capacity 0 is legal: such a router only forwards, every lookup misses
    and inserts are no-ops.
    """

    __slots__ = ("capacity", "_entries", "hits", "misses", "insertions", "evictions")

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._entries: OrderedDict[int, None] = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.insertions = 0
        self.evictions = 0

    def __len__(self):
        return len(self._entries)

    def __contains__(self, obj):
        return obj in self._entries

    def __iter__(self):
        """Entries from most to least recently used."""
        return reversed(self._entries)

    def __repr__(self):
        return f"CacheState(capacity={self.capacity}, entries={list(self)})"

    def lookup(self, obj: int) -> bool:
        entries = self._entries
        if obj in entries:
            entries.move_to_end(obj)
            self.hits += 1
            return True
        self.misses += 1
        return False

    def insert(self, obj: int) -> int | None:
        """Insert (or refresh) ``obj``; return the evicted id, if any."""
        entries = self._entries
        if obj in entries:
            entries.move_to_end(obj)
            return None
        if self.capacity == 0:
            return None
        evicted = None
        if len(entries) >= self.capacity:
            evicted, _ = entries.popitem(last=False)
            self.evictions += 1
        entries[obj] = None
        self.insertions += 1
        return evicted

    def contents(self) -> list[int]:
        return list(self)


def lookup(cache: CacheState, obj: int) -> bool:
    return cache.lookup(obj)


def insert(cache: CacheState, obj: int) -> int | None:
    return cache.insert(obj)


@dataclass
class CacheContext:
    """What a router knows when a response passes through it.

    ``path_position`` is the router's 1-based index counted from the server
    side of the response path and ``path_length`` the number of candidate
    caching routers on it; ``downstream_capacity_sum`` adds up capacities
    from this router to the consumer end inclusive.
    """

    as_is_interested: bool = False
    router_is_designated: bool = False
    path_position: int = 1
    path_length: int = 1
    downstream_capacity_sum: float = 0.0
    avg_cache_size: float = 0.0
    rng: np.random.Generator | None = None


def probcache_probability(ctx: CacheContext, target_times: float = 10.0) -> float:
    """ProbCache caching probability, clamped to ``[0, 1]``.

    ``times_in * cache_weight`` with ``times_in = downstream_capacity_sum /
    (target_times * avg_cache_size)`` and ``cache_weight = x / c``.
    """
    if ctx.avg_cache_size <= 0 or ctx.path_length <= 0:
        return 0.0
    times_in = ctx.downstream_capacity_sum / (target_times * ctx.avg_cache_size)
    p = times_in * ctx.path_position / ctx.path_length
    return min(1.0, max(0.0, p))


def should_cache(policy: PolicyConfig, ctx: CacheContext) -> bool:
    kind = policy.kind
    if kind is PolicyKind.CEE:
        return True
    if kind is PolicyKind.SCENE1:
        return ctx.router_is_designated
    if kind in (PolicyKind.SCENE2, PolicyKind.SCENE3):
        return ctx.router_is_designated and (policy.cache_all_ases or ctx.as_is_interested)
    p = probcache_probability(ctx, policy.probcache_target_times)
    if p >= 1.0:
        return True
    if p <= 0.0:
        return False
    return bool(ctx.rng.random() < p)


def dump_caches(caches: dict[int, CacheState], router_as: dict[int, int]) -> str:
    """CSV ``router_id,as_id,object_id,recency_rank`` (rank 0 = most recent)."""
    lines = ["router_id,as_id,object_id,recency_rank"]
    for r in sorted(caches):
        for rank, obj in enumerate(caches[r]):
            lines.append(f"{r},{router_as[r]},{obj},{rank}")
    return "\n".join(lines) + "\n"


def duplicate_objects_per_as(caches: dict[int, CacheState], router_as: dict[int, int],
                             routers: Iterable[int] | None = None) -> dict[int, set[int]]:
    """Objects held by more than one router of the same AS, keyed by AS."""
    seen: dict[tuple[int, int], int] = {}
    dup: dict[int, set[int]] = {}
    for r in (caches if routers is None else routers):
        a = router_as[r]
        for obj in caches[r]:
            if (a, obj) in seen:
                dup.setdefault(a, set()).add(obj)
            else:
                seen[(a, obj)] = r
    return dup
