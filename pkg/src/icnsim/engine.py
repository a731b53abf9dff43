"""Request-driven execution of the caching/routing lifecycle.

One request at a time: choose the AS path, walk it forward looking for a
cached copy, then walk back from the serving point to the requester and
let the placement policy decide where the object is stored. Runs are
strictly sequential and deterministic for fixed seeds.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .cache import CacheContext, CacheState, duplicate_objects_per_as, should_cache
from .errors import IcnSimError
from .metrics import AsStats, Counters, MetricsReport, Window, distinct_utilization, jain_index
from .policy import PolicyConfig, PolicyKind
from .routing import DesignatedRouters, InterestRegistry, PathOracle, select_as_path
from .topology import Topology
from .traffic import RequestEvent

log = logging.getLogger(__name__)


@dataclass
class RequestOutcome:
    seq: int
    object: int
    served_by: int | None  # caching router, or None for the origin server
    router_hops: int
    as_hops: int
    shortest_router_hops: int
    evictions_caused: int
    as_path: tuple[int, ...]

    @property
    def from_server(self) -> bool:
        return self.served_by is None


class InvariantViolation(IcnSimError, AssertionError):
    pass


class Simulation:
    """Mutable state of one run: caches, counters and routing memo tables.

    Parameters
    ----------
    topology : Topology
        Must carry servers covering every requested object.
    policy : PolicyConfig
    registry : InterestRegistry, optional
        Static interest ranges; empty when omitted.
    vnodes : int
        Virtual nodes per router on each AS's hash ring.
    designated_mode : {"sector", "ring"}
        How an AS maps objects of its own interest range to routers.
    window : int
        Requests per metrics window.
    debug_every : int
        When positive, audit designated-router uniqueness every that many
        requests (designated scenarios only).
    trace : text file, optional
        Receives one line per request.
    """

    def __init__(self, topology: Topology, policy: PolicyConfig, registry: InterestRegistry | None = None, *,
                 vnodes: int = 64, designated_mode: str = "sector", window: int = 1000,
                 debug_every: int = 0, trace: TextIO | None = None):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.topology = topology
        self.policy = policy
        self.registry = registry or InterestRegistry()
        self.oracle = PathOracle(topology)
        self.designated = DesignatedRouters(topology, self.registry, vnodes, designated_mode)
        self.caches = {r: CacheState(topology.capacity(r)) for r in topology.routers}
        self.rng = np.random.default_rng(policy.seed)
        self.window = window
        self.debug_every = debug_every
        self.trace = trace
        self.totals = Counters()
        self._current = Counters()
        self.windows: list[Window] = []
        self.seen_per_as: dict[int, set[int]] = {a.id: set() for a in topology.ases}
        self.request_counts: Counter[int] = Counter()
        self.audits = 0
        self._router_paths: dict[tuple[int, int], tuple[int, ...]] = {}
        self._route_kind = PolicyKind.SCENE1 if not policy.kind.designated else policy.kind
        if trace is not None:
            trace.write("seq,object,policy,as_path,served_by,router_hops\n")

    # -- forward/reverse walks ------------------------------------------------

    def _participates(self, as_id: int, obj: int) -> bool:
        kind = self.policy.kind
        if kind is PolicyKind.SCENE1 or self.policy.cache_all_ases:
            return True
        return self.registry.covers(as_id, obj)

    def _designated_walk(self, src: int, obj: int, server, as_path) -> tuple:
        topo, oracle, caches = self.topology, self.oracle, self.caches
        hops = 0
        ingress = src
        visited: set[int] = set()
        stops = []
        served_by = None
        last = len(as_path) - 1
        as_hops = last
        for i, a in enumerate(as_path):
            self.seen_per_as[a].add(obj)
            if i == last:
                egress = server.router_id
                nxt_ingress = None
            else:
                egress, nxt_ingress = topo.border_pair(a, as_path[i + 1])
            first = a not in visited
            visited.add(a)
            if first and self._participates(a, obj):
                d = self.designated(a, obj)
                to_d = oracle.intra_dist(a, d)
                if caches[d].lookup(obj):
                    hops += to_d[ingress]
                    served_by = d
                    as_hops = i
                    break
                stops.append((a, d))
                hops += to_d[ingress] + to_d[egress]
            else:
                hops += oracle.intra_dist(a, egress)[ingress]
            if nxt_ingress is not None:
                hops += 1
                ingress = nxt_ingress
        evictions = 0
        ctx = CacheContext(router_is_designated=True)
        for a, d in reversed(stops):
            ctx.as_is_interested = self.registry.covers(a, obj)
            if should_cache(self.policy, ctx) and caches[d].insert(obj) is not None:
                evictions += 1
        return served_by, hops, as_hops, evictions

    def default_router_path(self, src: int, server_router: int) -> tuple[int, ...]:
        """Router path along the first shortest AS path, shortest inside each AS."""
        key = (src, server_router)
        path = self._router_paths.get(key)
        if path is None:
            topo, oracle = self.topology, self.oracle
            as_path = oracle.first_shortest(topo.router_as[src], topo.router_as[server_router])
            out = []
            ingress = src
            for i, a in enumerate(as_path):
                if i == len(as_path) - 1:
                    out.extend(oracle.intra_path(a, ingress, server_router))
                else:
                    egress, nxt = topo.border_pair(a, as_path[i + 1])
                    out.extend(oracle.intra_path(a, ingress, egress))
                    ingress = nxt
            path = self._router_paths[key] = tuple(out)
        return path

    def _onpath_walk(self, src: int, obj: int, server) -> tuple:
        caches = self.caches
        router_as = self.topology.router_as
        path = self.default_router_path(src, server.router_id)
        hit = None
        for idx, r in enumerate(path):
            if caches[r].lookup(obj):
                hit = idx
                break
        end = len(path) - 1 if hit is None else hit
        as_hops = 0
        prev_as = None
        for r in path[: end + 1]:
            a = router_as[r]
            if a != prev_as:
                if prev_as is not None:
                    as_hops += 1
                self.seen_per_as[a].add(obj)
                prev_as = a
        candidates = path if hit is None else path[:hit]
        evictions = 0
        if self.policy.kind is PolicyKind.CEE:
            for r in reversed(candidates):
                if caches[r].insert(obj) is not None:
                    evictions += 1
        elif candidates:
            caps = [caches[r].capacity for r in candidates]
            c = len(candidates)
            ctx = CacheContext(path_length=c, avg_cache_size=sum(caps) / c, rng=self.rng)
            prefix = 0
            downstream = []
            for cap in caps:
                prefix += cap
                downstream.append(prefix)
            for j in range(c - 1, -1, -1):
                ctx.path_position = c - j
                ctx.downstream_capacity_sum = downstream[j]
                if should_cache(self.policy, ctx) and caches[candidates[j]].insert(obj) is not None:
                    evictions += 1
        served_by = None if hit is None else path[hit]
        return served_by, end, as_hops, evictions

    # -- public API --------------------------------------------------------------

    def execute(self, event: RequestEvent) -> RequestOutcome:
        obj = event.object
        src = event.source_router
        server = self.topology.server_for(obj)
        self.request_counts[obj] += 1
        if self.policy.kind.designated:
            as_path = select_as_path(self._route_kind, obj, self.topology.router_as[src], server.as_id,
                                     self.topology, self.registry, self.oracle)
            served_by, hops, as_hops, ev = self._designated_walk(src, obj, server, as_path)
        else:
            as_path = self.oracle.first_shortest(self.topology.router_as[src], server.as_id)
            served_by, hops, as_hops, ev = self._onpath_walk(src, obj, server)
        out = RequestOutcome(event.seq, obj, served_by, hops, as_hops,
                             self.oracle.router_distance(src, server.router_id), ev, as_path)
        self._account(out)
        if self.trace is not None:
            where = "server" if served_by is None else f"cache:{served_by}"
            self.trace.write(f"{event.seq},{obj},{self.policy.label},{'-'.join(map(str, as_path))},{where},{hops}\n")
        if self.debug_every and self.policy.kind.designated and self.totals.requests % self.debug_every == 0:
            self.audit()
        return out

    def _account(self, out: RequestOutcome) -> None:
        for c in (self._current, self.totals):
            c.requests += 1
            if out.served_by is None:
                c.server_hits += 1
            else:
                c.cache_hits += 1
            c.router_hops += out.router_hops
            c.shortest_hops += out.shortest_router_hops
            c.as_hops += out.as_hops
            c.evictions += out.evictions_caused
        if self._current.requests >= self.window:
            self._close_window()

    def _close_window(self) -> None:
        if self._current.requests:
            self.windows.append(Window(self.totals.requests, self._current))
            self._current = Counters()

    def audit(self) -> None:
        """Raise if any AS holds one object in more than one router."""
        self.audits += 1
        dup = duplicate_objects_per_as(self.caches, self.topology.router_as)
        if dup:
            a, objs = next(iter(sorted(dup.items())))
            raise InvariantViolation(f"AS {a} caches {sorted(objs)[:5]} at several routers")

    def run(self, events: Iterable[RequestEvent]) -> MetricsReport:
        for e in events:
            self.execute(e)
        return self.report()

    def report(self) -> MetricsReport:
        self._close_window()
        topo = self.topology
        per_as = []
        held_all: set[int] = set()
        for a in topo.ases:
            contents = [self.caches[r].contents() for r in a.routers]
            held = set().union(*contents)
            held_all |= held
            seen = self.seen_per_as[a.id]
            util = distinct_utilization(contents)
            jain = jain_index(util) if any(util) else None
            per_as.append(AsStats(a.id, len(seen), len(held), len(held) / len(seen) if seen else None, jain))
        ranked = sorted(self.request_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        scatter = [(i, o, n, int(o in held_all)) for i, (o, n) in enumerate(ranked, start=1)]
        return MetricsReport(
            totals=self.totals.copy(),
            windows=list(self.windows),
            per_as=per_as,
            observed_objects=len(self.request_counts),
            cached_objects=len(held_all),
            cache_slots=topo.n_c,
            population=topo.n_p,
            scatter=scatter,
        )


def run_simulation(topology: Topology, policy: PolicyConfig, events: Iterable[RequestEvent],
                   registry: InterestRegistry | None = None, **kwargs) -> MetricsReport:
    return Simulation(topology, policy, registry, **kwargs).run(events)
