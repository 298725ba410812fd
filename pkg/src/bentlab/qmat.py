"""Dense complex linear algebra and bipartite operations.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  States
wrap a read-only matrix together with its ``(dA, dB)`` factorization.  The
row index of a bipartite operator is ``i * dB + j`` for ``|i>_A |j>_B``, the
same ordering ``numpy.kron`` produces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidInput, SizeLimit
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "BipartiteState",
    "PureState",
    "SchmidtDecomposition",
    "as_matrix",
    "tensor",
    "partial_transpose",
    "partial_trace",
    "herm_eig",
    "schmidt",
    "schmidt_rank",
    "max_entangled",
    "fix_phase",
    "haar_unitary",
    "random_density",
    "hermitize",
    "matrix_to_dict",
    "matrix_from_dict",
    "state_to_dict",
    "state_from_dict",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-d complex128 array.  Raises InvalidInput otherwise."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise InvalidInput(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return m


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class BipartiteState:
    """Density operator on ``C^dA (x) C^dB``.

    ``normalized=False`` allows unnormalized positive operators such as the
    Werner-line operators written with unit positive eigenvalue.
    """

    mat: np.ndarray
    dA: int
    dB: int
    normalized: bool = True
    policy: NumericPolicy = field(default=DEFAULT_POLICY, repr=False, compare=False)

    def __post_init__(self):
        m = as_matrix(self.mat)
        dim = self.dA * self.dB
        if self.dA < 1 or self.dB < 1 or m.shape != (dim, dim):
            raise InvalidInput(f"matrix shape {m.shape} does not factor as {self.dA}x{self.dB}")
        tol = self.policy.construct_tol
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise InvalidInput("state matrix is not Hermitian")
        if self.normalized and abs(np.trace(m) - 1.0) > tol:
            raise InvalidInput(f"state trace {np.trace(m).real!r} differs from 1")
        object.__setattr__(self, "mat", _frozen(m))

    @property
    def dim(self) -> int:
        return self.dA * self.dB

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    @classmethod
    def from_matrix(cls, m, dA: int, dB: int, normalize: bool = True,
                    policy: NumericPolicy = DEFAULT_POLICY) -> "BipartiteState":
        """Build a state after removing rounding-level anti-Hermitian parts.

        With ``normalize`` the matrix is divided by its trace first.
        """
        m = hermitize(as_matrix(m))
        if normalize:
            tr = np.trace(m).real
            if tr <= 0:
                raise InvalidInput("cannot normalize an operator with non-positive trace")
            m = m / tr
        return cls(m, dA, dB, normalized=normalize, policy=policy)

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.mat)[0])


@dataclass(frozen=True)
class PureState:
    vec: np.ndarray
    dA: int
    dB: int

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.complex128).reshape(-1)
        if v.size != self.dA * self.dB:
            raise InvalidInput(f"vector of length {v.size} does not factor as {self.dA}x{self.dB}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("vector has non-finite entries")
        if np.linalg.norm(v) == 0.0:
            raise InvalidInput("zero vector")
        object.__setattr__(self, "vec", _frozen(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def normalized(self) -> "PureState":
        return PureState(self.vec / self.norm, self.dA, self.dB)

    def as_matrix(self) -> np.ndarray:
        """Coefficient matrix ``C`` with ``vec = sum_ij C[i, j] |i>|j>``."""
        return self.vec.reshape(self.dA, self.dB)

    def projector(self) -> np.ndarray:
        return np.outer(self.vec, self.vec.conj())


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``vec = sum_i coefficients[i] * left[:, i] (x) right[:, i]``.

    ``coefficients`` are the singular values of the coefficient matrix, so
    their squares sum to the squared norm of the vector.
    """

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.left.shape[0] * self.right.shape[0], dtype=np.complex128)
        for s, a, b in zip(self.coefficients, self.left.T, self.right.T):
            out += s * np.kron(a, b)
        return out


def tensor(A, B, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Kronecker product, row ``i1 * rows(B) + i2``."""
    A = as_matrix(A)
    B = as_matrix(B)
    rows = A.shape[0] * B.shape[0]
    cols = A.shape[1] * B.shape[1]
    if rows * cols > policy.max_entries:
        raise SizeLimit(f"tensor product of {rows}x{cols} exceeds {policy.max_entries} entries")
    return np.kron(A, B)


def _pt_array(m: np.ndarray, dA: int, dB: int) -> np.ndarray:
    return m.reshape(dA, dB, dA, dB).transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)


def partial_transpose(rho: BipartiteState) -> BipartiteState:
    """Transpose on the B factor: ``out[(i,j),(k,l)] = in[(i,l),(k,j)]``."""
    out = _pt_array(rho.mat, rho.dA, rho.dB)
    return BipartiteState(out, rho.dA, rho.dB, normalized=rho.normalized, policy=rho.policy)


def pt_matrix(m, dA: int, dB: int) -> np.ndarray:
    """Partial transpose of a raw operator (no Hermiticity requirement)."""
    m = as_matrix(m)
    if m.shape != (dA * dB, dA * dB):
        raise InvalidInput(f"matrix shape {m.shape} does not factor as {dA}x{dB}")
    return _pt_array(m, dA, dB)


def partial_trace(rho: BipartiteState, keep: Literal["A", "B"] = "A") -> np.ndarray:
    t = rho.mat.reshape(rho.dA, rho.dB, rho.dA, rho.dB)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise InvalidInput(f"keep must be 'A' or 'B', got {keep!r}")


def fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    vecs = np.array(vecs, dtype=np.complex128, copy=True)
    if vecs.ndim == 1:
        return fix_phase(vecs[:, None])[:, 0]
    idx = np.argmax(np.abs(vecs), axis=0)
    piv = vecs[idx, np.arange(vecs.shape[1])]
    mag = np.abs(piv)
    phase = np.where(mag > 0, piv / np.where(mag > 0, mag, 1.0), 1.0)
    return vecs / phase


def herm_eig(M, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and phase-fixed orthonormal eigenvectors (columns)."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInput("matrix is not square")
    if np.max(np.abs(M - M.conj().T), initial=0.0) > policy.algebra_tol:
        raise InvalidInput("matrix is not Hermitian")
    w, v = np.linalg.eigh(hermitize(M))
    return w, fix_phase(v)


def schmidt(psi: PureState) -> SchmidtDecomposition:
    u, s, vh = np.linalg.svd(psi.as_matrix(), full_matrices=False)
    keep = s > 1e-14 * s[0]
    return SchmidtDecomposition(
        coefficients=s[keep],
        left=u[:, keep],
        right=vh[keep, :].T,
    )


def schmidt_rank(psi: PureState, tol: float = 1e-9) -> int:
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    s = np.linalg.svd(psi.as_matrix(), compute_uv=False)
    return int(np.count_nonzero(s > tol * s[0]))


def max_entangled(d: int, k: int = 0) -> PureState:
    """``(1/sqrt d) sum_j exp(2 pi i j k / d) |jj>``."""
    if d < 1 or not 0 <= k < d:
        raise InvalidInput(f"phase index {k} out of range for d={d}")
    v = np.zeros(d * d, dtype=np.complex128)
    j = np.arange(d)
    v[j * d + j] = np.exp(2j * np.pi * j * k / d) / np.sqrt(d)
    return PureState(v, d, d)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def random_density(dA: int, dB: int, rng: np.random.Generator, rank: int | None = None) -> BipartiteState:
    """Random density matrix ``G G^dagger / Tr`` from a Ginibre matrix."""
    dim = dA * dB
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    return BipartiteState.from_matrix(g @ g.conj().T, dA, dB)


def matrix_to_dict(m) -> dict:
    m = as_matrix(m)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_dict(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed matrix JSON: {exc}") from exc
    if entries.shape != (rows * cols, 2):
        raise InvalidInput(f"expected {rows * cols} [re, im] pairs, got shape {entries.shape}")
    return as_matrix((entries[:, 0] + 1j * entries[:, 1]).reshape(rows, cols))


def state_to_dict(rho: BipartiteState) -> dict:
    out = matrix_to_dict(rho.mat)
    out.update({"dA": rho.dA, "dB": rho.dB, "normalized": bool(rho.normalized)})
    return out


def state_from_dict(obj: dict, policy: NumericPolicy = DEFAULT_POLICY) -> BipartiteState:
    m = matrix_from_dict(obj)
    try:
        dA, dB = int(obj["dA"]), int(obj["dB"])
    except KeyError as exc:
        raise InvalidInput(f"state JSON is missing {exc}") from exc
    return BipartiteState(m, dA, dB, normalized=bool(obj.get("normalized", True)), policy=policy)
