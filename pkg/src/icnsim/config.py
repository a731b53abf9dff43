"""Flat ``section.key = value`` run configuration.

Every key lives in :data:`SCHEMA` with its type and default. Loading
materializes all defaults, so :meth:`RunConfig.emit` writes a
self-contained effective configuration that loads back to an equal object.
Blank lines and ``#`` comments are ignored.

Profiles bundle topology sizes. ``run.profile`` is applied first and every
explicit key overrides it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .errors import ConfigError
from .policy import PolicyConfig, PolicyKind


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text: str):
    text = text.strip()
    return None if text in ("", "none") else int(text)


def _sources(text: str):
    """``all``, an integer subset size, or a comma-separated router list."""
    text = text.strip()
    if text == "all":
        return "all"
    if "," in text:
        return tuple(int(x) for x in text.split(",") if x.strip())
    return int(text)


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(map(str, value)) + ("," if len(value) == 1 else "")
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    required: bool = False
    choices: tuple = ()


SCHEMA: dict[str, Key] = {
    "run.profile": Key(str, "desk", choices=("desk", "paper-scale", "caida-1/100")),
    "run.window": Key(int, 1000),
    "run.debug_every": Key(int, 0),
    "run.output_dir": Key(str, "runs"),
    "run.allow_large": Key(_bool, False),
    "topology.source": Key(str, "generate", choices=("generate", "file")),
    "topology.file": Key(str, ""),
    "topology.router_counts_file": Key(str, ""),
    "topology.as_model": Key(str, "waxman", choices=("waxman", "ba")),
    "topology.n_ases": Key(int, 20),
    "topology.routers_per_as": Key(int, 10),
    "topology.capacity": Key(int, 5),
    "topology.border_count": Key(int, 2),
    "topology.as_alpha": Key(float, 0.15),
    "topology.as_beta": Key(float, 0.2),
    "topology.as_m": Key(int, 2),
    "topology.router_alpha": Key(float, 0.15),
    "topology.router_beta": Key(float, 0.2),
    "topology.router_m": Key(int, 0),
    "topology.n_servers": Key(int, 1),
    "topology.as_level_only": Key(_bool, False),
    "topology.seed": Key(int, 1),
    "policy.kind": Key(str, None, required=True, choices=tuple(k.value for k in PolicyKind)),
    "policy.cache_all_ases": Key(_bool, False),
    "policy.probcache_target_times": Key(float, 10.0),
    "policy.seed": Key(int, 0),
    "interest.strategy": Key(str, "partition", choices=("partition", "full", "none")),
    "interest.fraction": Key(float, 1.0),
    "interest.seed": Key(int, 0),
    "routing.vnodes": Key(int, 64),
    "routing.designated_mode": Key(str, "sector", choices=("sector", "ring")),
    "workload.n_p": Key(int, None, required=True),
    "workload.n_requests": Key(int, None, required=True),
    "workload.alpha": Key(float, 0.8),
    "workload.q": Key(float, 5.0),
    "workload.sources": Key(_sources, "all"),
    "workload.seed": Key(int, 0),
    "workload.permutation_seed": Key(_opt_int, None),
}

PROFILES: dict[str, dict[str, Any]] = {
    "desk": {"topology.n_ases": 20, "topology.routers_per_as": 10, "topology.capacity": 5},
    "paper-scale": {"topology.n_ases": 20, "topology.routers_per_as": 100, "topology.capacity": 5},
    # Skitter-derived AS graph at 1/100 of the large-scale population and
    # request count; the AS-links file has to be supplied by the user.
    "caida-1/100": {
        "topology.source": "file",
        "topology.as_level_only": True,
        "topology.capacity": 5,
        "workload.n_p": 2_640_000,
        "workload.n_requests": 200_000,
    },
}
LARGE_PROFILES = frozenset({"caida-1/100"})


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully materialized configuration (``key -> typed value``)."""

    values: Mapping[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def replace(self, **changes) -> "RunConfig":
        """Copy with ``section__key=value`` overrides, revalidated."""
        vals = dict(self.values)
        for k, v in changes.items():
            name = k.replace("__", ".")
            if name not in SCHEMA:
                raise ConfigError(f"unknown configuration key {name!r}")
            vals[name] = v
        return _validate(vals)

    def with_values(self, mapping: Mapping[str, Any]) -> "RunConfig":
        return self.replace(**{k.replace(".", "__"): v for k, v in mapping.items()})

    @property
    def policy(self) -> PolicyConfig:
        return PolicyConfig(
            kind=PolicyKind.parse(self["policy.kind"]),
            cache_all_ases=self["policy.cache_all_ases"],
            probcache_target_times=self["policy.probcache_target_times"],
            seed=self["policy.seed"],
        )

    @property
    def permutation_seed(self) -> int:
        p = self["workload.permutation_seed"]
        return self["workload.seed"] if p is None else p

    def emit(self) -> str:
        return "".join(f"{k} = {_fmt(self.values[k])}\n" for k in SCHEMA)


def _validate(vals: dict[str, Any]) -> RunConfig:
    missing = [k for k, spec in SCHEMA.items() if spec.required and vals.get(k) is None]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    for k, spec in SCHEMA.items():
        if spec.choices and vals[k] not in spec.choices:
            raise ConfigError(f"{k} must be one of {', '.join(spec.choices)}; got {vals[k]!r}")
    checks = [
        ("run.window", vals["run.window"] >= 1),
        ("run.debug_every", vals["run.debug_every"] >= 0),
        ("topology.capacity", vals["topology.capacity"] >= 0),
        ("topology.n_servers", vals["topology.n_servers"] >= 1),
        ("workload.n_p", vals["workload.n_p"] >= 1),
        ("workload.n_requests", vals["workload.n_requests"] >= 0),
        ("workload.alpha", vals["workload.alpha"] > 0),
        ("workload.q", vals["workload.q"] >= 0),
        ("interest.fraction", 0 <= vals["interest.fraction"] <= 1),
        ("routing.vnodes", vals["routing.vnodes"] >= 1),
        ("policy.probcache_target_times", vals["policy.probcache_target_times"] > 0),
    ]
    bad = [k for k, ok in checks if not ok]
    if bad:
        raise ConfigError("out-of-range values for: " + ", ".join(f"{k}={vals[k]!r}" for k in bad))
    if vals["topology.source"] == "file":
        path = vals["topology.file"]
        if not path:
            raise ConfigError("topology.source = file needs topology.file")
        if not Path(path).is_file():
            raise ConfigError(f"topology.file {path!r} does not exist")
        rc = vals["topology.router_counts_file"]
        if rc and not Path(rc).is_file():
            raise ConfigError(f"topology.router_counts_file {rc!r} does not exist")
    if vals["run.profile"] in LARGE_PROFILES and not vals["run.allow_large"]:
        raise ConfigError(f"profile {vals['run.profile']!r} is gated; set run.allow_large = true")
    return RunConfig(dict(vals))


def parse_pairs(lines: Iterable[str]) -> dict[str, str]:
    """Raw ``key -> text`` pairs; unknown and repeated keys are errors."""
    raw: dict[str, str] = {}
    unknown = []
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in text.split("=", 1))
        if key not in SCHEMA:
            unknown.append(key)
            continue
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))
    return raw


def config_from_pairs(raw: Mapping[str, str]) -> RunConfig:
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
    vals = {k: spec.default for k, spec in SCHEMA.items()}
    profile = raw.get("run.profile", SCHEMA["run.profile"].default).strip()
    if profile not in PROFILES:
        raise ConfigError(f"run.profile must be one of {', '.join(PROFILES)}; got {profile!r}")
    vals.update(PROFILES[profile])
    for key, text in raw.items():
        try:
            vals[key] = SCHEMA[key].parse(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return _validate(vals)


def parse_config(text: str) -> RunConfig:
    return config_from_pairs(parse_pairs(text.splitlines()))


def load_config(path, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Read ``path``; ``overrides`` (raw text values) win over file entries."""
    raw = parse_pairs(Path(path).read_text(encoding="utf-8").splitlines())
    if overrides:
        raw.update(parse_pairs(f"{k} = {v}" for k, v in overrides.items()))
    return config_from_pairs(raw)
