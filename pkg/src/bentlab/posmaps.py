"""Linear maps through their Choi matrices, and k-positivity tests.

Convention: ``Choi(L) = sum_ij |i><j| (x) L(|i><j|) = (1 (x) L)(d |Phi+><Phi+|)``,
so the block ``(i, j)`` of the Choi matrix is ``L(|i><j|)``.  A state ``rho``
on ``d (x) d`` corresponds to the map with Choi matrix ``d * rho``.

``L`` is k-positive iff ``<z|Choi|z> >= 0`` for every ``z`` of Schmidt rank at
most ``k``.  Two searches implement this: the shared see-saw engine, and a
gradient search over input 2-planes that only feeds the map maximally
entangled rank-two inputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize

from .canonical import CanonicalParams
from .distill import OptimizerOptions, minimize_rank_k
from .errors import InvalidInput, SizeLimit
from .policy import DEFAULT_POLICY, NumericPolicy
from .qmat import BipartiteState, as_matrix, matrix_from_dict, matrix_to_dict, pt_matrix

__all__ = [
    "ChoiMap",
    "PositivityResult",
    "PositivityVerdict",
    "state_to_map",
    "map_to_state",
    "map_apply",
    "compose_transpose",
    "tau_w",
    "identity_map",
    "transpose_map",
    "is_k_positive",
    "is_2_positive_maxent",
    "tensor_maps",
    "lambda_c_image",
    "choi_to_dict",
    "choi_from_dict",
]


@dataclass(frozen=True)
class ChoiMap:
    dIn: int
    dOut: int
    choi: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.choi)
        n = self.dIn * self.dOut
        if m.shape != (n, n):
            raise InvalidInput(f"Choi matrix shape {m.shape} does not match {self.dIn}x{self.dOut}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise InvalidInput("Choi matrix is not Hermitian")
        m = np.array(m, copy=True)
        m.setflags(write=False)
        object.__setattr__(self, "choi", m)

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        return bool(np.linalg.eigvalsh(self.choi)[0] >= -tol)

    def block(self, i: int, j: int) -> np.ndarray:
        """``L(|i><j|)``."""
        return self.choi.reshape(self.dIn, self.dOut, self.dIn, self.dOut)[i, :, j, :]


class PositivityResult(str, enum.Enum):
    VIOLATION = "ViolationFound"
    NO_VIOLATION = "NoViolationFound"


@dataclass
class PositivityVerdict:
    """Outcome of a k-positivity search.

    ``witness`` is a unit input on ``C^dIn (x) C^dIn`` of Schmidt rank at most
    ``k``; ``margin`` is the smallest eigenvalue of ``(1 (x) L)(|w><w|)`` on the
    support of its first factor.
    """

    k: int
    result: PositivityResult
    margin: float
    witness: np.ndarray | None = None

    @property
    def heuristic(self) -> bool:
        return self.result is PositivityResult.NO_VIOLATION

    def to_dict(self) -> dict:
        out = {"k": self.k, "verdict": self.result.value, "margin": self.margin,
               "heuristic": self.heuristic}
        if self.witness is not None:
            out["witness"] = [[float(z.real), float(z.imag)] for z in self.witness]
        return out


def state_to_map(rho: BipartiteState) -> ChoiMap:
    if rho.dA != rho.dB:
        raise InvalidInput("state must live on d (x) d")
    return ChoiMap(rho.dA, rho.dB, rho.dA * rho.mat)


def map_to_state(L: ChoiMap) -> BipartiteState:
    if L.dIn != L.dOut:
        raise InvalidInput("only maps with equal input and output dimension give d (x) d states")
    m = L.choi / L.dIn
    tr = np.trace(m).real
    return BipartiteState(m, L.dIn, L.dOut, normalized=abs(tr - 1.0) <= 1e-12)


def map_apply(L: ChoiMap, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape != (L.dIn, L.dIn):
        raise InvalidInput(f"input shape {X.shape} does not match dIn={L.dIn}")
    C4 = L.choi.reshape(L.dIn, L.dOut, L.dIn, L.dOut)
    return np.einsum("ij,iajb->ab", X, C4)


def apply_on_second(L: ChoiMap, rho, dA: int) -> np.ndarray:
    """``(1_dA (x) L)(rho)`` for ``rho`` on ``C^dA (x) C^dIn``."""
    rho = as_matrix(rho)
    if rho.shape != (dA * L.dIn, dA * L.dIn):
        raise InvalidInput("operator does not factor as dA x dIn")
    R = rho.reshape(dA, L.dIn, dA, L.dIn)
    C4 = L.choi.reshape(L.dIn, L.dOut, L.dIn, L.dOut)
    out = np.einsum("xiyj,iajb->xayb", R, C4)
    return out.reshape(dA * L.dOut, dA * L.dOut)


def compose_transpose(S: ChoiMap) -> ChoiMap:
    """``T o S``: transposing every output block is a partial transpose of the Choi matrix."""
    return ChoiMap(S.dIn, S.dOut, pt_matrix(S.choi, S.dIn, S.dOut))


def identity_map(d: int) -> ChoiMap:
    v = np.zeros(d * d)
    v[np.arange(d) * d + np.arange(d)] = 1.0
    return ChoiMap(d, d, np.outer(v, v))


def transpose_map(d: int) -> ChoiMap:
    return compose_transpose(identity_map(d))


def tau_w(d: int, lam: float) -> ChoiMap:
    """``X -> d lam Tr(X) I - (lam + 1) X``."""
    if lam <= 0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    choi = d * lam * np.eye(d * d) - (lam + 1.0) * identity_map(d).choi
    return ChoiMap(d, d, choi)


def _witness_from(z: np.ndarray, L: ChoiMap, k: int, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    # input (P (x) 1)|Omega>/sqrt(r) with P projecting onto the first-factor support of z
    Z = z.reshape(L.dIn, L.dOut)
    u, s, _ = np.linalg.svd(Z)
    r = max(1, min(k, int(np.count_nonzero(s > tol * s[0]))))
    P = u[:, :r] @ u[:, :r].conj().T
    omega = np.eye(L.dIn).reshape(-1)
    w = np.kron(P, np.eye(L.dIn)) @ omega / np.sqrt(r)
    out = apply_on_second(L, np.outer(w, w.conj()), L.dIn)
    return w, float(np.linalg.eigvalsh(out)[0])


def is_k_positive(L: ChoiMap, k: int, options: OptimizerOptions = OptimizerOptions(),
                  tol: float = 1e-9) -> PositivityVerdict:
    """See-saw search for a Schmidt-rank-``k`` vector with negative Choi expectation."""
    if not 1 <= k <= L.dIn:
        raise InvalidInput(f"order k={k} outside [1, {L.dIn}]")
    res = minimize_rank_k(L.choi, L.dIn, L.dOut, k, options)
    kk = min(k, L.dOut)
    if res.value < -tol:
        w, margin = _witness_from(res.psi, L, kk)
        return PositivityVerdict(k, PositivityResult.VIOLATION, margin, w)
    return PositivityVerdict(k, PositivityResult.NO_VIOLATION, res.value / kk)


def _pencil_min(C4: np.ndarray, R: np.ndarray):
    # smallest mu with (R (x) 1)^dag C (R (x) 1) y = mu (R^dag R (x) 1) y
    dIn, dOut = C4.shape[0], C4.shape[1]
    k = R.shape[1]
    A = np.einsum("is,iajb,jt->satb", R.conj(), C4, R).reshape(k * dOut, k * dOut)
    B = np.kron(R.conj().T @ R, np.eye(dOut))
    mu, y = eigh(0.5 * (A + A.conj().T), B, subset_by_index=[0, 0])
    Y = y[:, 0].reshape(k, dOut)
    return float(mu[0]), Y


def _pencil_grad(C: np.ndarray, R: np.ndarray, mu: float, Y: np.ndarray) -> np.ndarray:
    dIn, dOut = R.shape[0], Y.shape[1]
    Rz = (C @ (R @ Y).reshape(-1)).reshape(dIn, dOut)
    return Rz @ Y.conj().T - mu * R @ Y @ Y.conj().T


def is_2_positive_maxent(L: ChoiMap, options: OptimizerOptions = OptimizerOptions(),
                         tol: float = 1e-9) -> PositivityVerdict:
    """2-positivity from maximally entangled rank-two inputs only.

    For an input ``|0,b0> + |1,b1>`` the output is ``(Q^dag (x) 1) Choi (Q (x) 1)``
    with ``Q = conj[b0 b1]``.  Its smallest eigenvalue depends only on the
    plane spanned by ``Q``, so ``Q`` is left unconstrained and the generalized
    eigenvalue of the pencil is minimized by L-BFGS from random starts.
    """
    dIn, dOut = L.dIn, L.dOut
    if dIn < 2:
        raise InvalidInput("2-positivity needs input dimension at least 2")
    C = L.choi
    C4 = C.reshape(dIn, dOut, dIn, dOut)

    def unpack(x):
        return (x[: 2 * dIn] + 1j * x[2 * dIn:]).reshape(dIn, 2)

    def fun(x):
        R = unpack(x)
        mu, Y = _pencil_min(C4, R)
        g = _pencil_grad(C, R, mu, Y).reshape(-1)
        return mu, 2.0 * np.concatenate([g.real, g.imag])

    best_mu, best_R = np.inf, None
    for r in range(options.restarts):
        rng = np.random.default_rng([options.seed, r])
        R = rng.standard_normal((dIn, 2)) + 1j * rng.standard_normal((dIn, 2))
        prev = np.inf
        for _ in range(options.max_iters // 50 + 1):
            R, _ = np.linalg.qr(R)
            x0 = np.concatenate([R.reshape(-1).real, R.reshape(-1).imag])
            res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                           options={"maxiter": 200, "gtol": 1e-12, "ftol": 1e-15})
            R = unpack(res.x)
            if prev - res.fun < options.tol:
                break
            prev = res.fun
        R, _ = np.linalg.qr(R)
        mu, _ = _pencil_min(C4, R)
        if mu < best_mu:
            best_mu, best_R = mu, R
    # maximally entangled input sum_s |s> (x) conj(R[:, s]), embedded in C^dIn (x) C^dIn
    w = np.zeros(dIn * dIn, dtype=np.complex128)
    for s in range(2):
        w += np.kron(np.eye(dIn)[s], best_R[:, s].conj())
    w /= np.sqrt(2)
    if best_mu < -tol:
        out = apply_on_second(L, np.outer(w, w.conj()), dIn)
        return PositivityVerdict(2, PositivityResult.VIOLATION,
                                 float(np.linalg.eigvalsh(out)[0]), w)
    return PositivityVerdict(2, PositivityResult.NO_VIOLATION, best_mu / 2)


def tensor_maps(L1: ChoiMap, L2: ChoiMap, stress: bool = False,
                policy: NumericPolicy = DEFAULT_POLICY) -> ChoiMap:
    """Choi matrix of ``L1 (x) L2`` with inputs ``(i1 i2)`` and outputs ``(a1 a2)`` grouped."""
    n = L1.dIn * L1.dOut * L2.dIn * L2.dOut
    cap = policy.dim_cap(stress)
    if n > cap:
        raise SizeLimit(f"tensor map dimension {n} > cap {cap}")
    big = np.kron(L1.choi, L2.choi)
    shape = (L1.dIn, L1.dOut, L2.dIn, L2.dOut)
    t = big.reshape(shape + shape).transpose(0, 2, 1, 3, 4, 6, 5, 7)
    return ChoiMap(L1.dIn * L2.dIn, L1.dOut * L2.dOut, t.reshape(n, n))


def lambda_c(d: int) -> ChoiMap:
    """``X -> Tr(X) I - X``."""
    return ChoiMap(d, d, np.eye(d * d) - identity_map(d).choi)


def lambda_c_image(p: CanonicalParams) -> CanonicalParams:
    """Parameters of ``(1 (x) L_c)(rho_bc)`` after normalization.

    The image is ``(1/d (x) 1 - rho_bc) / (d - 1)``, which gives
    ``b' = (1/d - b)/(d - 1)`` and ``c' = (1/d - c)/(d - 1)``.  On the edge
    ``a = 0`` this equals ``((b+c)/2 - b/(d-1), (b+c)/2 - c/(d-1))``.
    """
    d = p.d
    if d <= 2:
        raise InvalidInput("the image formula needs d > 2")
    return CanonicalParams(d, (1.0 / d - p.b) / (d - 1), (1.0 / d - p.c) / (d - 1))


def choi_to_dict(L: ChoiMap) -> dict:
    out = matrix_to_dict(L.choi)
    out.update({"dIn": L.dIn, "dOut": L.dOut})
    return out


def choi_from_dict(obj: dict) -> ChoiMap:
    m = matrix_from_dict(obj)
    try:
        return ChoiMap(int(obj["dIn"]), int(obj["dOut"]), m)
    except KeyError as exc:
        raise InvalidInput(f"Choi JSON is missing {exc}") from exc
