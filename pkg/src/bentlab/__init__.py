"""Canonical NPT states, rank-two distillability tests, separability certificates and k-positive maps."""
from importlib.metadata import PackageNotFoundError, version

from .errors import (BentlabError, BracketError, DegenerateProjection, InvalidInput, NotNpt,
                     SingularFilter, SizeLimit)
from .kernels import BACKEND

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "BACKEND",
    "BentlabError",
    "BracketError",
    "DegenerateProjection",
    "InvalidInput",
    "NotNpt",
    "SingularFilter",
    "SizeLimit",
    "__version__",
]
