"""Numeric tolerances and size caps shared by every module."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

MAX_DIM_ENV = "BENTLAB_MAX_DIM"


def _env_max_dim() -> int | None:
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None or raw.strip() == "":
        return None
    return int(raw)


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances and caps threaded through constructors.

    ``construct_tol`` guards Hermiticity and trace on construction,
    ``algebra_tol`` is used for algebraic identities and ``eig_tol`` for
    eigensolver residuals.  ``max_entries`` bounds the number of entries of
    any tensor product.  ``max_dim`` bounds the bipartite dimension
    ``D_A * D_B`` handed to the rank-two optimizer; ``stress_dim`` replaces it
    when stress mode is requested.
    """

    construct_tol: float = 1e-12
    algebra_tol: float = 1e-10
    eig_tol: float = 1e-9
    max_entries: int = 2**20
    max_dim: int = field(default_factory=lambda: _env_max_dim() or 81)
    stress_dim: int = 729

    def dim_cap(self, stress: bool = False) -> int:
        if stress:
            return max(self.max_dim, self.stress_dim)
        return self.max_dim


DEFAULT_POLICY = NumericPolicy()
