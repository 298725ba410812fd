"""Slow, independent reference computations used to cross-check the fast paths."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .qmat import BipartiteState, as_matrix, haar_unitary


def plane_from_normal(n: np.ndarray) -> np.ndarray:
    """Orthonormal basis (3 x 2) of the complement of the unit vector ``n`` in C^3."""
    n = np.asarray(n, dtype=np.complex128)
    q, _ = np.linalg.qr(np.column_stack([n, np.eye(3, dtype=np.complex128)]))
    return q[:, 1:3]


def _normal(theta, phi, alpha=0.0, beta=0.0) -> np.ndarray:
    return np.array([np.cos(theta),
                     np.sin(theta) * np.cos(phi) * np.exp(1j * alpha),
                     np.sin(theta) * np.sin(phi) * np.exp(1j * beta)])


def grid_rank2_min(M, step: float = np.pi / 60, phases: bool = True,
                   phase_step: float | None = None, polish: bool = True) -> float:
    """Rank-two minimum on ``3 (x) DB`` by scanning Alice 2-planes.

    A 2-plane in C^3 is the complement of a unit normal
    ``(cos t, sin t cos p e^{i a}, sin t sin p e^{i b})``.  With ``phases=False``
    the normal is taken real and non-negative, which loses nothing when ``M``
    commutes with every ``D (x) conj(D)`` for diagonal unitary ``D``.  The best
    grid cell is refined by Nelder-Mead.
    """
    M = as_matrix(M)
    DB = M.shape[0] // 3
    M4 = np.ascontiguousarray(M.reshape(3, DB, 3, DB))
    ang = np.arange(0.0, np.pi / 2 + 1e-12, step)
    if phases:
        ps = phase_step or step
        ph = np.arange(0.0, 2 * np.pi - 1e-12, ps)
        grid = [(t, p, a, b) for t in ang for p in ang for a in ph for b in ph]
    else:
        grid = [(t, p, 0.0, 0.0) for t in ang for p in ang]
    planes = np.array([plane_from_normal(_normal(*g)) for g in grid])
    vals = kernels.grid_plane_min(M4, planes)
    best = int(np.argmin(vals))
    if not polish:
        return float(vals[best])

    def objective(x):
        g = x if phases else (x[0], x[1], 0.0, 0.0)
        return float(kernels.grid_plane_min(M4, plane_from_normal(_normal(*g))[None])[0])

    x0 = np.array(grid[best] if phases else grid[best][:2])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    return float(min(res.fun, vals[best]))


def mc_diagonal_twirl(rho: BipartiteState, samples: int, seed: int) -> np.ndarray:
    """Average of ``(D (x) D) rho (D (x) D)^dagger`` over random diagonal phase unitaries."""
    d = rho.dA
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(rho.mat)
    for _ in range(samples):
        phase = np.exp(2j * np.pi * rng.random(d))
        u = np.kron(phase, phase)
        acc += u[:, None] * rho.mat * u.conj()[None, :]
    return acc / samples


def mc_full_twirl(rho: BipartiteState, samples: int, seed: int) -> np.ndarray:
    """Average of ``(U (x) U) rho (U (x) U)^dagger`` over Haar-random ``U``."""
    d = rho.dA
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(rho.mat)
    for _ in range(samples):
        u = haar_unitary(d, rng)
        uu = np.kron(u, u)
        acc += uu @ rho.mat @ uu.conj().T
    return acc / samples
