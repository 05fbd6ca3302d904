"""Size caps guarding every exhaustive enumeration.

Defaults can be overridden through ``TOPOSCALC_SIZE_CAP``.  The variable is
either a bare integer (applied to all three caps) or a comma separated list
of ``key=value`` pairs with keys ``arrows``, ``carrier`` and ``sieves``::

    TOPOSCALC_SIZE_CAP="arrows=64,carrier=32"
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from functools import lru_cache

from .errors import SizeCapExceeded

ENV_VAR = "TOPOSCALC_SIZE_CAP"


@dataclass(frozen=True)
class SizeCaps:
    arrows: int = 256
    carrier: int = 64
    sieves: int = 2**20

    @classmethod
    def from_env(cls, environ=None) -> "SizeCaps":
        environ = os.environ if environ is None else environ
        raw = environ.get(ENV_VAR, "").strip()
        caps = cls()
        if not raw:
            return caps
        if raw.isdigit():
            n = int(raw)
            return cls(arrows=n, carrier=n, sieves=n)
        updates = {}
        for part in raw.split(","):
            key, sep, value = part.partition("=")
            key = key.strip()
            if not sep or key not in ("arrows", "carrier", "sieves"):
                raise ValueError(f"bad {ENV_VAR} entry: {part!r}")
            updates[key] = int(value)
        return replace(caps, **updates)


@lru_cache(maxsize=8)
def _parse(raw: str) -> SizeCaps:
    return SizeCaps.from_env({ENV_VAR: raw})


def current() -> SizeCaps:
    return _parse(os.environ.get(ENV_VAR, ""))


def check(kind: str, size: int, what: str = "") -> None:
    limit = getattr(current(), kind)
    if size > limit:
        label = f" ({what})" if what else ""
        raise SizeCapExceeded(f"{kind} size {size} exceeds cap {limit}{label}")
