"""Request workloads: Zipf-Mandelbrot popularity, request streams, traces.

Popularity rank ``k`` (1-based) has probability proportional to
``(k + q) ** -alpha``. Ranks are mapped to object ids through a seeded
permutation of ``[0, n_p)`` so that popularity is unrelated to id order.
"""
from __future__ import annotations

import csv
import hashlib
import io
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .topology import Topology

_CHUNK = 4096

# Stream tags: one seed drives several independent generators.
_DRAWS, _PERMUTATION, _SOURCES, _SUBSET = range(4)


def stream(seed, tag: int) -> np.random.Generator:
    """Generator for one purpose of ``seed``; distinct tags never share bits."""
    if seed is None or isinstance(seed, np.random.Generator):
        return np.random.default_rng(seed)
    return np.random.default_rng([int(seed), tag])


def zm_weights(alpha: float, q: float, n_p: int) -> np.ndarray:
    ranks = np.arange(1, n_p + 1, dtype=float)
    return (ranks + q) ** -alpha


def zm_pmf(k: int, alpha: float, q: float, n_p: int) -> float:
    """Zipf-Mandelbrot probability of rank ``k`` among ``n_p`` objects."""
    if not 1 <= k <= n_p:
        raise ValueError(f"rank {k} outside [1, {n_p}]")
    if alpha <= 0 or q < 0:
        raise ValueError("need alpha > 0 and q >= 0")
    w = zm_weights(alpha, q, n_p)
    return float(w[k - 1] / w.sum())


class ZmSampler:
    """Inverse-CDF sampler over object ids.

    Parameters
    ----------
    n_p : int
        Population size.
    alpha, q : float
        Skew exponent and flatness shift.
    seed : int
        Seed of the draw stream.
    permutation_seed : int, optional
        Seed of the rank-to-id permutation; defaults to ``seed`` (on a
        stream independent of the draws).
    """

    def __init__(self, n_p: int, alpha: float = 0.8, q: float = 5.0, seed=0, permutation_seed=None):
        if n_p < 1:
            raise ValueError("n_p must be >= 1")
        if alpha <= 0 or q < 0:
            raise ValueError("need alpha > 0 and q >= 0")
        self.n_p = n_p
        self.alpha = alpha
        self.q = q
        w = zm_weights(alpha, q, n_p)
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        self.cdf = cdf
        self.pmf = w / w.sum()
        self._rng = stream(seed, _DRAWS)
        perm_rng = stream(seed if permutation_seed is None else permutation_seed, _PERMUTATION)
        self.rank_to_id = perm_rng.permutation(n_p)
        self.id_to_rank = np.empty(n_p, dtype=np.int64)
        self.id_to_rank[self.rank_to_id] = np.arange(1, n_p + 1)

    def sample_ranks(self, size: int) -> np.ndarray:
        """1-based ranks."""
        u = self._rng.random(size)
        idx = np.searchsorted(self.cdf, u, side="right")
        return np.minimum(idx, self.n_p - 1) + 1

    def sample_many(self, size: int) -> np.ndarray:
        return self.rank_to_id[self.sample_ranks(size) - 1]

    def sample(self) -> int:
        return int(self.sample_many(1)[0])


class RequestEvent(NamedTuple):
    seq: int
    source_router: int
    object: int


def client_routers(topology: Topology, source_strategy="all", seed=None) -> tuple[int, ...]:
    """Routers that originate requests.

    ``"all"`` uses every router; an integer ``k`` draws a fixed subset of
    ``k`` routers with ``seed``; a sequence is used as given.
    """
    routers = topology.routers
    if source_strategy == "all":
        return routers
    if isinstance(source_strategy, (int, np.integer)):
        k = int(source_strategy)
        if not 1 <= k <= len(routers):
            raise ValueError(f"source subset size {k} outside [1, {len(routers)}]")
        rng = stream(seed, _SUBSET)
        return tuple(sorted(routers[i] for i in rng.choice(len(routers), size=k, replace=False)))
    chosen = tuple(sorted(set(source_strategy)))
    unknown = set(chosen) - set(routers)
    if not chosen or unknown:
        raise ValueError(f"invalid source routers {sorted(unknown) or chosen}")
    return chosen


def generate_workload(n_requests: int, topology: Topology, sampler: ZmSampler,
                      source_strategy="all", seed=None) -> Iterator[RequestEvent]:
    """Lazily yield ``n_requests`` events with uniformly drawn source routers."""
    if n_requests < 0:
        raise ValueError("n_requests must be >= 0")
    sources = np.asarray(client_routers(topology, source_strategy, seed))
    rng = stream(seed, _SOURCES)
    seq = 0
    while seq < n_requests:
        k = min(_CHUNK, n_requests - seq)
        src = sources[rng.integers(0, len(sources), size=k)]
        objs = sampler.sample_many(k)
        for s, o in zip(src.tolist(), objs.tolist()):
            yield RequestEvent(seq, s, o)
            seq += 1


TRACE_HEADER = ("seq", "source_router", "object_id")


def write_trace(events: Iterable[RequestEvent], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for e in events:
        w.writerow((e.seq, e.source_router, e.object))


def trace_to_text(events: Iterable[RequestEvent]) -> str:
    buf = io.StringIO()
    write_trace(events, buf)
    return buf.getvalue()


def read_trace(fh) -> Iterator[RequestEvent]:
    r = csv.reader(fh)
    header = next(r, None)
    if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
        raise ValueError(f"trace header must be {','.join(TRACE_HEADER)}")
    for row in r:
        if row:
            yield RequestEvent(int(row[0]), int(row[1]), int(row[2]))


def trace_hash(events: Iterable[RequestEvent]) -> str:
    """SHA-256 of the trace's CSV serialization."""
    h = hashlib.sha256()
    h.update((",".join(TRACE_HEADER) + "\n").encode())
    for e in events:
        h.update(f"{e.seq},{e.source_router},{e.object}\n".encode())
    return h.hexdigest()


class Persistence(NamedTuple):
    persistent_after: int | None

    @property
    def transient(self) -> bool:
        return self.persistent_after is None


def classify_persistence(trace: Sequence, obj: int, tau: float) -> Persistence:
    """First request index whose gap to the next request of ``obj`` is < ``tau``.

    ``trace`` holds :class:`RequestEvent` items (or ``(seq, object)`` pairs)
    sorted by ``seq``. Objects that never get such a gap are transient.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    prev = None
    for e in trace:
        seq, o = (e.seq, e.object) if isinstance(e, RequestEvent) else (e[0], e[1])
        if o != obj:
            continue
        if prev is not None and seq - prev < tau:
            return Persistence(prev)
        prev = seq
    return Persistence(None)


def default_tau(n_c: int, n_p: int) -> float:
    return 2.0 * n_c / n_p
