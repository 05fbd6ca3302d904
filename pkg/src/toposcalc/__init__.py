"""Topologies, sheafification and forcing on finite presheaf topoi."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import ToposError  # noqa: E402
from .fincat import FinCat, validate_category  # noqa: E402
from .presheaf import Presheaf, PresheafMap, yoneda  # noqa: E402
from .topology import GrothTopology, LTTopology, enumerate_topologies  # noqa: E402
from .sheaf import LocalizationHandle, sheafify  # noqa: E402
from .forcing import compile_forcing, forcing  # noqa: E402

__all__ = [
    "FinCat",
    "GrothTopology",
    "LTTopology",
    "LocalizationHandle",
    "Presheaf",
    "PresheafMap",
    "ToposError",
    "compile_forcing",
    "enumerate_topologies",
    "forcing",
    "sheafify",
    "validate_category",
    "yoneda",
]
