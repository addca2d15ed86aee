"""Run configuration: typed key=value settings with layered precedence.

Settings resolve as defaults < config file < command-line flags.  Config
files are plain ``key=value`` lines with ``#`` comments; every run
serializes its fully resolved settings into the output headers so a CSV
is reproducible from its own preamble.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

__all__ = ["RunConfig", "parse_config_file", "resolve_settings"]

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: subcommand, seed, output root, settings."""

    subcommand: str
    seed: int
    out_dir: str
    settings: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.subcommand:
            raise ValueError("subcommand must be a nonempty name")
        if not 0 <= int(self.seed) <= _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit nonnegative integer, got {self.seed}")
        object.__setattr__(self, "settings", MappingProxyType(dict(self.settings)))

    def metadata(self) -> dict[str, object]:
        """Header view of the resolved run, keyed for report preambles."""
        meta: dict[str, object] = {"subcommand": self.subcommand, "seed": self.seed}
        meta.update(self.settings)
        return meta


def parse_config_file(path: str) -> dict[str, str]:
    """Read ``key=value`` lines; ``#`` starts a comment, blanks are skipped."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key.isidentifier():
                raise ValueError(f"{path}:{lineno}: invalid setting name {key!r}")
            values[key] = value
    return values


def resolve_settings(
    defaults: Mapping[str, object],
    coercers: Mapping[str, Callable[[str], object]],
    file_values: Mapping[str, str] | None = None,
    flag_values: Mapping[str, object | None] | None = None,
) -> dict[str, object]:
    """Layer file and flag values over defaults.

    File values are strings and pass through the per-key coercer; flag
    values are already typed and only override when not None.  Unknown
    keys in the file are errors (typos must not silently vanish).
    """
    resolved = dict(defaults)
    for key, text in (file_values or {}).items():
        if key not in resolved:
            raise ValueError(f"unknown setting {key!r}; known: {', '.join(sorted(resolved))}")
        try:
            resolved[key] = coercers[key](text)
        except (TypeError, ValueError) as err:
            raise ValueError(f"setting {key}={text!r} is not a valid value: {err}") from err
    for key, value in (flag_values or {}).items():
        if value is None:
            continue
        if key not in resolved:
            raise ValueError(f"unknown setting {key!r}")
        resolved[key] = value
    return resolved
