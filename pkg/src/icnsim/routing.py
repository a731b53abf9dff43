"""Shortest paths, AS-path selection per scenario, interest ranges and
designated-router resolution.

Determinism rules used throughout:

* all links cost 1; a shortest path's predecessor of node ``v`` is the
  lowest-id neighbour of ``v`` that is one hop closer to the source (the
  same choice a Dijkstra run makes when it breaks distance ties by node id);
* sets of equal-length AS paths are ordered lexicographically by their AS
  id sequence, and "the first shortest path" is the first in that order.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AggregationError, ParseError, RoutingError, TopologyError
from .hashring import HashRing
from .policy import PolicyKind
from .topology import Graph, Topology

Adjacency = Mapping[int, Sequence[int]]


def _adj(graph) -> Adjacency:
    return graph.adjacency if isinstance(graph, Graph) else graph


# -- shortest paths ------------------------------------------------------------


def bfs_distances(graph, src: int) -> dict[int, int]:
    adj = _adj(graph)
    if src not in adj:
        raise RoutingError(f"unknown node {src}")
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if w not in dist:
                dist[w] = du
                queue.append(w)
    return dist


def _walk_back(adj: Adjacency, dist: Mapping[int, int], dst: int) -> list[int]:
    path = [dst]
    node = dst
    while dist[node]:
        want = dist[node] - 1
        node = min(w for w in adj[node] if dist.get(w) == want)
        path.append(node)
    path.reverse()
    return path


def shortest_path(graph, src: int, dst: int) -> list[int]:
    """Minimal-hop path from ``src`` to ``dst`` with lowest-id tie-breaking."""
    adj = _adj(graph)
    if dst not in adj:
        raise RoutingError(f"unknown node {dst}")
    dist = bfs_distances(adj, src)
    if dst not in dist:
        raise RoutingError(f"{dst} unreachable from {src}")
    return _walk_back(adj, dist, dst)


def _lex_first(adj: Adjacency, to_dst: Mapping[int, int], src: int) -> list[int]:
    # greedy descent on distance-to-destination visits paths in lexicographic order
    path = [src]
    u = src
    while to_dst[u]:
        want = to_dst[u] - 1
        u = min(w for w in adj[u] if to_dst.get(w) == want)
        path.append(u)
    return path


def all_shortest_as_paths(topology: Topology, src_as: int, dst_as: int) -> list[tuple[int, ...]]:
    """Every minimal AS path from ``src_as`` to ``dst_as``, lexicographically sorted."""
    adj = topology.as_graph.adjacency
    for a in (src_as, dst_as):
        if a not in adj:
            raise RoutingError(f"unknown AS {a}")
    to_dst = bfs_distances(adj, dst_as)
    if src_as not in to_dst:
        raise RoutingError(f"AS {dst_as} unreachable from AS {src_as}")
    out = []

    def walk(u, prefix):
        if u == dst_as:
            out.append(tuple(prefix))
            return
        want = to_dst[u] - 1
        for w in adj[u]:
            if to_dst.get(w) == want:
                prefix.append(w)
                walk(w, prefix)
                prefix.pop()

    walk(src_as, [src_as])
    return out


# -- interest ranges -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class InterestRange:
    """Inclusive contiguous sector ``[lo, hi]`` of the object id space."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interest range [{self.lo}, {self.hi}]")

    def __contains__(self, obj: int) -> bool:
        return self.lo <= obj <= self.hi

    def __len__(self):
        return self.hi - self.lo + 1


def aggregate_interest(ranges: Iterable[InterestRange]) -> InterestRange:
    """Merge overlapping or touching ranges into one covering range.

    ``[100, 200]`` and ``[200, 500]`` aggregate to ``[100, 500]``; so do
    ``[100, 199]`` and ``[200, 500]`` (adjacent). A gap raises.
    """
    rs = sorted(ranges)
    if not rs:
        raise AggregationError("nothing to aggregate")
    lo, hi = rs[0].lo, rs[0].hi
    for r in rs[1:]:
        if r.lo > hi + 1:
            raise AggregationError(f"gap between {hi} and {r.lo}")
        hi = max(hi, r.hi)
    return InterestRange(lo, hi)


class InterestRegistry:
    """Read-only map from AS id to the single range that AS advertises."""

    def __init__(self, ranges: Mapping[int, InterestRange] | None = None):
        self._ranges = dict(sorted((ranges or {}).items()))
        self._memo: dict[int, tuple[int, ...]] = {}

    def __len__(self):
        return len(self._ranges)

    def __contains__(self, as_id):
        return as_id in self._ranges

    def __eq__(self, other):
        return isinstance(other, InterestRegistry) and self._ranges == other._ranges

    def get(self, as_id: int) -> InterestRange | None:
        return self._ranges.get(as_id)

    def items(self):
        return self._ranges.items()

    def covers(self, as_id: int, obj: int) -> bool:
        r = self._ranges.get(as_id)
        return r is not None and r.lo <= obj <= r.hi

    def covering(self, obj: int) -> tuple[int, ...]:
        """Sorted ids of the ASes whose range contains ``obj``."""
        hit = self._memo.get(obj)
        if hit is None:
            hit = tuple(a for a, r in self._ranges.items() if r.lo <= obj <= r.hi)
            self._memo[obj] = hit
        return hit

    def dump(self) -> str:
        return "".join(f"{a} {r.lo} {r.hi}\n" for a, r in self._ranges.items())

    @classmethod
    def load(cls, text: str) -> "InterestRegistry":
        ranges = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'ASID lo hi'", lineno)
            try:
                a, lo, hi = (int(p) for p in parts)
                r = InterestRange(lo, hi)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if a in ranges:
                raise ParseError(f"AS {a} advertises more than one range", lineno)
            ranges[a] = r
        return cls(ranges)


INTEREST_STRATEGIES = ("partition", "full", "none")


def assign_interest(
    topology: Topology, n_p: int, strategy: str = "partition", fraction: float = 1.0, seed=None
) -> InterestRegistry:
    """Build the static registry used for a run.

    ``partition`` splits ``[0, n_p)`` into contiguous sectors, one per
    interested AS in AS-id order, sized in proportion to each AS's total
    cache capacity. ``full`` makes every interested AS advertise the whole
    id space. ``none`` yields an empty registry. ``fraction`` of the ASes
    (at least one, drawn with ``seed``) are interested.
    """
    if strategy not in INTEREST_STRATEGIES:
        raise ValueError(f"unknown interest strategy {strategy!r}")
    if not 0 <= fraction <= 1:
        raise ValueError("interest fraction must lie in [0, 1]")
    if strategy == "none" or fraction == 0 or n_p < 1:
        return InterestRegistry()
    ids = [a.id for a in topology.ases]
    k = max(1, round(fraction * len(ids)))
    if k < len(ids):
        rng = np.random.default_rng(seed)
        ids = sorted(int(ids[i]) for i in rng.choice(len(ids), size=k, replace=False))
    if strategy == "full":
        return InterestRegistry({a: InterestRange(0, n_p - 1) for a in ids})
    caps = [topology.as_by_id[a].total_capacity for a in ids]
    if sum(caps) == 0:
        caps = [1] * len(ids)
    total = sum(caps)
    ranges = {}
    cum = 0
    for a, c in zip(ids, caps):
        lo = n_p * cum // total
        cum += c
        hi = n_p * cum // total - 1
        if hi >= lo:
            ranges[a] = InterestRange(lo, hi)
    return InterestRegistry(ranges)


# -- designated routers -------------------------------------------------------------


def designated_router(rings: Mapping[int, HashRing], as_id: int, object_id: int) -> int:
    """Router of ``as_id`` responsible for ``object_id`` on that AS's ring."""
    try:
        ring = rings[as_id]
    except KeyError:
        raise RoutingError(f"no hash ring for AS {as_id}") from None
    return ring.lookup(object_id)


def build_rings(topology: Topology, vnodes: int = 64) -> dict[int, HashRing]:
    return {a.id: HashRing(a.routers, vnodes) for a in topology.ases}


class DesignatedRouters:
    """Resolve ``(AS, object) -> router`` for the designated scenarios.

    In ``"sector"`` mode, objects inside the AS's own advertised range are
    split over its routers in contiguous sub-sectors proportional to router
    capacity (router ``i`` serves ids whose position falls in ``r_i``);
    every other object falls back to the AS's consistent-hash ring. In
    ``"ring"`` mode the ring is used for everything.
    """

    def __init__(self, topology: Topology, registry: InterestRegistry | None = None,
                 vnodes: int = 64, mode: str = "sector"):
        if mode not in ("sector", "ring"):
            raise ValueError(f"unknown designated-router mode {mode!r}")
        self.mode = mode
        self.rings = build_rings(topology, vnodes)
        self._sectors: dict[int, tuple[list[int], tuple[int, ...]]] = {}
        if mode == "sector" and registry is not None:
            for as_id, r in registry.items():
                a = topology.as_by_id.get(as_id)
                if a is None or a.total_capacity == 0:
                    continue
                size, total = len(r), a.total_capacity
                bounds, cum = [], 0
                for _ in a.routers:
                    bounds.append(r.lo + size * cum // total)
                    cum += a.cache_capacity_per_router
                self._sectors[as_id] = (bounds, r, a.routers)

    def __call__(self, as_id: int, obj: int) -> int:
        sec = self._sectors.get(as_id)
        if sec is not None:
            bounds, r, routers = sec
            if r.lo <= obj <= r.hi:
                return routers[bisect.bisect_right(bounds, obj) - 1]
        return designated_router(self.rings, as_id, obj)


# -- AS path selection ----------------------------------------------------------------


class PathOracle:
    """Memoized shortest-path queries over one topology.

    All memo tables are pure caches: a key always maps to the same value.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        self._as_adj = topology.as_graph.adjacency
        self._as_dist: dict[int, dict[int, int]] = {}
        self._intra: dict[tuple[int, int], dict[int, int]] = {}
        self._router_dist: dict[int, dict[int, int]] = {}
        self._paths: dict[tuple, tuple[int, ...]] = {}

    def as_dist_from(self, as_id: int) -> dict[int, int]:
        d = self._as_dist.get(as_id)
        if d is None:
            if as_id not in self._as_adj:
                raise RoutingError(f"unknown AS {as_id}")
            d = self._as_dist[as_id] = bfs_distances(self._as_adj, as_id)
        return d

    def as_distance(self, a: int, b: int) -> int:
        d = self.as_dist_from(b).get(a)
        if d is None:
            raise RoutingError(f"AS {b} unreachable from AS {a}")
        return d

    def first_shortest(self, src_as: int, dst_as: int) -> tuple[int, ...]:
        key = (src_as, dst_as)
        p = self._paths.get(key)
        if p is None:
            to_dst = self.as_dist_from(dst_as)
            if src_as not in to_dst:
                raise RoutingError(f"AS {dst_as} unreachable from AS {src_as}")
            p = self._paths[key] = tuple(_lex_first(self._as_adj, to_dst, src_as))
        return p

    def first_shortest_via_any(self, src_as: int, dst_as: int, candidates: Sequence[int]):
        """First minimal path containing at least one of ``candidates``, or None."""
        key = (src_as, dst_as, tuple(candidates))
        if key in self._paths:
            return self._paths[key]
        to_dst = self.as_dist_from(dst_as)
        if src_as not in to_dst:
            raise RoutingError(f"AS {dst_as} unreachable from AS {src_as}")
        total = to_dst[src_as]
        # candidates lying on some minimal src->dst path
        on_path = [c for c in candidates if c in to_dst and self.as_distance(src_as, c) + to_dst[c] == total]
        result = None
        if on_path:
            cand_set = set(on_path)

            def reaches(w):
                if w in cand_set:
                    return True
                dw = self.as_dist_from(w)
                return any(dw[c] + to_dst[c] == to_dst[w] for c in on_path)

            seen = src_as in cand_set
            path = [src_as]
            u = src_as
            while to_dst[u]:
                want = to_dst[u] - 1
                u = min(w for w in self._as_adj[u] if to_dst.get(w) == want and (seen or reaches(w)))
                seen = seen or u in cand_set
                path.append(u)
            result = tuple(path)
        self._paths[key] = result
        return result

    def nearest(self, from_as: int, candidates: Sequence[int]) -> int | None:
        best = None
        for c in candidates:
            d = self.as_dist_from(c).get(from_as)
            if d is not None and (best is None or (d, c) < best):
                best = (d, c)
        return None if best is None else best[1]

    # router level

    def intra_dist(self, as_id: int, src: int) -> dict[int, int]:
        key = (as_id, src)
        d = self._intra.get(key)
        if d is None:
            d = self._intra[key] = bfs_distances(self.topology.as_by_id[as_id].graph, src)
        return d

    def intra_path(self, as_id: int, src: int, dst: int) -> list[int]:
        g = self.topology.as_by_id[as_id].graph
        d = self.intra_dist(as_id, src)
        if dst not in d:
            raise RoutingError(f"router {dst} unreachable from {src} inside AS {as_id}")
        return _walk_back(g.adjacency, d, dst)

    def router_distance(self, src: int, dst: int) -> int:
        """Network-wide shortest router-hop distance (memoized by ``dst``)."""
        d = self._router_dist.get(dst)
        if d is None:
            d = self._router_dist[dst] = bfs_distances(self.topology.router_graph, dst)
        if src not in d:
            raise RoutingError(f"router {dst} unreachable from {src}")
        return d[src]


def nearest_interested_as(registry: InterestRegistry, topology: Topology, from_as: int, object_id: int,
                          oracle: PathOracle | None = None) -> int | None:
    """Covering AS closest to ``from_as`` in AS hops; ties go to the lower id."""
    oracle = oracle or PathOracle(topology)
    return oracle.nearest(from_as, registry.covering(object_id))


def select_as_path(scenario, object_id: int, requester_as: int, server_as: int, topology: Topology,
                   registry: InterestRegistry, oracle: PathOracle | None = None) -> tuple[int, ...]:
    """AS path a request follows under ``scenario``.

    SCENE1 (and the CEE/PROBCACHE baselines) take the first shortest path.
    SCENE2 takes the first shortest path that contains an AS covering the
    object. SCENE3 goes to the nearest covering AS and from there to the
    server, each leg a first shortest path; the joined path may revisit ASes.
    SCENE2/3 fall back to the SCENE1 path when no AS qualifies.
    """
    kind = PolicyKind.parse(str(scenario))
    oracle = oracle or PathOracle(topology)
    default = oracle.first_shortest(requester_as, server_as)
    if kind is PolicyKind.SCENE2:
        covering = registry.covering(object_id)
        if covering:
            p = oracle.first_shortest_via_any(requester_as, server_as, covering)
            if p is not None:
                return p
    elif kind is PolicyKind.SCENE3:
        via = oracle.nearest(requester_as, registry.covering(object_id))
        if via is not None:
            return oracle.first_shortest(requester_as, via) + oracle.first_shortest(via, server_as)[1:]
    return default


def intra_as_route(topology: Topology, as_id: int, ingress: int, via: int, egress: int,
                   oracle: PathOracle | None = None) -> list[int]:
    """Router path ingress -> via -> egress inside one AS.

    Both legs are shortest paths; they share the ``via`` node once.
    """
    a = topology.as_by_id.get(as_id)
    if a is None:
        raise TopologyError(f"unknown AS {as_id}")
    members = set(a.routers)
    for r in (ingress, via, egress):
        if r not in members:
            raise RoutingError(f"router {r} is not in AS {as_id}")
    oracle = oracle or PathOracle(topology)
    return oracle.intra_path(as_id, ingress, via) + oracle.intra_path(as_id, via, egress)[1:]
