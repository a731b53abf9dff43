"""Caching/routing policy identifiers and their configuration."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class PolicyKind(str, enum.Enum):
    CEE = "CEE"
    PROBCACHE = "PROBCACHE"
    SCENE1 = "SCENE1"
    SCENE2 = "SCENE2"
    SCENE3 = "SCENE3"

    def __str__(self):
        return self.value

    @property
    def designated(self) -> bool:
        """True for the hash-designated scenarios."""
        return self in (PolicyKind.SCENE1, PolicyKind.SCENE2, PolicyKind.SCENE3)

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown policy {text!r}; expected one of {[p.value for p in cls]}") from None


@dataclass(frozen=True)
class PolicyConfig:
    """Placement policy of one run.

    ``cache_all_ases`` selects the T variant of SCENE2/SCENE3 (every on-path
    AS caches at its designated router); False is the F variant (only ASes
    whose interest range covers the object cache). Ignored for other kinds.
    """

    kind: PolicyKind = PolicyKind.SCENE1
    cache_all_ases: bool = False
    probcache_target_times: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.kind, PolicyKind):
            object.__setattr__(self, "kind", PolicyKind.parse(str(self.kind)))
        if not self.probcache_target_times > 0:
            raise ValueError("probcache_target_times must be positive")

    @property
    def label(self) -> str:
        if self.kind in (PolicyKind.SCENE2, PolicyKind.SCENE3):
            return f"{self.kind.value}_{'T' if self.cache_all_ases else 'F'}"
        return self.kind.value
