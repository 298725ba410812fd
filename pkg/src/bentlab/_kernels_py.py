"""Pure-Python reference for the compiled kernels in ``_kernels.pyx``.

Both modules expose the same two functions with the same argument
conventions.  ``M4`` is a Hermitian operator on ``C^DA (x) C^DB`` reshaped to
``(DA, DB, DA, DB)``; an Alice plane is a ``(DA, k)`` matrix with orthonormal
columns.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg.lapack import zheevr

BACKEND = "python"

_SMALL = 1e-12


def _orth(Q: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of ``Q``.

    Columns that vanish against the earlier ones are replaced by the first
    standard basis vector that is not yet spanned.
    """
    m, k = Q.shape
    out = np.array(Q, dtype=np.complex128, copy=True)
    scale = max(float(np.max(np.linalg.norm(out, axis=0))), 1e-300)
    e = 0
    for j in range(k):
        v = out[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v -= np.vdot(out[:, i], v) * out[:, i]
        nrm = np.linalg.norm(v)
        while nrm <= _SMALL * scale:
            v = np.zeros(m, dtype=np.complex128)
            v[e] = 1.0
            e += 1
            for _ in range(2):
                for i in range(j):
                    v -= np.vdot(out[:, i], v) * out[:, i]
            nrm = np.linalg.norm(v)
            scale = 1.0
        out[:, j] = v / nrm
    return out


def _min_eigpair(K: np.ndarray) -> tuple[float, np.ndarray]:
    w, v, _, _, info = zheevr(K, compute_v=1, range="I", lower=0, il=1, iu=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"zheevr failed with info={info}")
    y = v[:, 0]
    piv = y[int(np.argmax(np.abs(y)))]
    return float(w[0]), y * (np.conj(piv) / abs(piv))


def _compress_alice(M4: np.ndarray, V: np.ndarray) -> np.ndarray:
    DA, DB = M4.shape[0], M4.shape[1]
    k = V.shape[1]
    # K[(s,b),(t,d)] = sum_{a,c} conj(V[a,s]) M[a,b,c,d] V[c,t]
    Mr = M4.transpose(1, 3, 0, 2).reshape(DB * DB, DA, DA)
    blk = V.conj().T @ Mr @ V
    return blk.reshape(DB, DB, k, k).transpose(2, 0, 3, 1).reshape(k * DB, k * DB)


def _compress_bob(M4: np.ndarray, W: np.ndarray) -> np.ndarray:
    DA, DB = M4.shape[0], M4.shape[1]
    k = W.shape[1]
    # K[(a,s),(c,t)] = sum_{b,d} conj(W[b,s]) M[a,b,c,d] W[d,t]
    Mr = M4.transpose(0, 2, 1, 3).reshape(DA * DA, DB, DB)
    blk = W.conj().T @ Mr @ W
    return blk.reshape(DA, DA, k, k).transpose(0, 2, 1, 3).reshape(DA * k, DA * k)


def seesaw_restart(M4, V0, max_iters: int, tol: float, patience: int):
    """One restart of the alternating rank-k minimization.

    Returns ``(value, psi, iterations, history)`` where ``psi`` is the unit
    minimizer of Schmidt rank at most ``k`` flattened in ``a * DB + b`` order
    and ``history`` lists the value after each half-step.
    """
    M4 = np.ascontiguousarray(M4, dtype=np.complex128)
    DA, DB = M4.shape[0], M4.shape[1]
    V = _orth(np.asarray(V0, dtype=np.complex128))
    k = V.shape[1]
    history = []
    psi = None
    stall = 0
    prev = np.inf
    for it in range(max_iters):
        if it % 2 == 0:
            val, y = _min_eigpair(_compress_alice(M4, V))
            Y = y.reshape(k, DB)
            psi = V @ Y
            W = _orth(Y.T)
        else:
            val, x = _min_eigpair(_compress_bob(M4, W))
            X = x.reshape(DA, k)
            psi = X @ W.T
            V = _orth(X)
        history.append(val)
        stall = stall + 1 if prev - val < tol else 0
        prev = val
        if stall >= patience:
            break
    return float(history[-1]), psi.reshape(-1), len(history), np.asarray(history)


def grid_plane_min(M4, planes):
    """Smallest eigenvalue of the Alice-compressed block for each plane."""
    M4 = np.ascontiguousarray(M4, dtype=np.complex128)
    planes = np.asarray(planes, dtype=np.complex128)
    out = np.empty(planes.shape[0])
    for n in range(planes.shape[0]):
        w, _, _, _, info = zheevr(_compress_alice(M4, planes[n]), compute_v=0, range="I",
                                  lower=0, il=1, iu=1)
        out[n] = w[0]
    return out
