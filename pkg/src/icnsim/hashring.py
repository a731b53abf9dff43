"""Consistent-hash ring mapping object ids to the caching routers of one AS.

Positions are 64-bit FNV-1a digests of ASCII strings, so placement is
identical in any language:

* an object id ``k`` is hashed as the decimal string ``str(k)``
  (e.g. ``b"42"``);
* virtual node ``i`` of router ``r`` is hashed as ``f"{r}#{i}"``
  (e.g. ``b"17#3"``).

FNV-1a: ``h = 0xcbf29ce484222325``; for every byte ``h ^= byte`` then
``h = (h * 0x100000001b3) mod 2**64``. The FNV digest is then passed
through the MurmurHash3 ``fmix64`` finalizer (all arithmetic mod 2**64)::

    h ^= h >> 33; h *= 0xff51afd7ed558ccd
    h ^= h >> 33; h *= 0xc4ceb9fe1a85ec53
    h ^= h >> 33

Plain FNV-1a leaves the high bits of short decimal strings poorly mixed,
which skews ring load badly; the finalizer fixes that.

An id belongs to the first virtual node whose position is strictly greater
than the id's digest, wrapping around past the largest position. Equal
positions are ordered by router id.
"""
from __future__ import annotations

from bisect import bisect_right
from typing import Iterable

from .errors import RoutingError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK
    return h


def fmix64(h: int) -> int:
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & _MASK
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & _MASK
    h ^= h >> 33
    return h


def digest(key: str) -> int:
    """Ring position of an ASCII key."""
    return fmix64(fnv1a_64(key.encode("ascii")))


def id_digest(obj: int) -> int:
    return digest(str(obj))


class HashRing:
    """Immutable ring over a set of routers with ``vnodes`` points each."""

    def __init__(self, routers: Iterable[int], vnodes: int = 64):
        routers = tuple(sorted(set(routers)))
        if not routers:
            raise RoutingError("hash ring needs at least one router")
        if vnodes < 1:
            raise ValueError("vnodes must be >= 1")
        self.routers = routers
        self.vnodes = vnodes
        points = sorted(
            (digest(f"{r}#{i}"), r) for r in routers for i in range(vnodes)
        )
        self._positions = [p for p, _ in points]
        self._owners = [r for _, r in points]
        self._memo: dict[int, int] = {}

    def __len__(self):
        return len(self.routers)

    def __contains__(self, router):
        return router in self.routers

    def __eq__(self, other):
        return isinstance(other, HashRing) and (self.routers, self.vnodes) == (other.routers, other.vnodes)

    def __hash__(self):
        return hash((self.routers, self.vnodes))

    def __repr__(self):
        return f"HashRing(routers={list(self.routers)}, vnodes={self.vnodes})"

    def lookup(self, obj: int) -> int:
        r = self._memo.get(obj)
        if r is None:
            if len(self.routers) == 1:
                r = self.routers[0]
            else:
                i = bisect_right(self._positions, id_digest(obj))
                r = self._owners[i % len(self._owners)]
            self._memo[obj] = r
        return r

    def without(self, router: int) -> "HashRing":
        if router not in self.routers:
            raise RoutingError(f"router {router} is not on the ring")
        if len(self.routers) == 1:
            raise RoutingError("cannot remove the last router from a ring")
        return HashRing((r for r in self.routers if r != router), self.vnodes)

    def with_router(self, router: int) -> "HashRing":
        return HashRing(self.routers + (router,), self.vnodes)


def ring_remove_router(ring: HashRing, router: int) -> HashRing:
    """Return a new ring without ``router``; only its ids move."""
    return ring.without(router)
