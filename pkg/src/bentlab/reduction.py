"""Local reduction of an arbitrary NPT state to the canonical family.

Stages:

1. rotate both sides so the NPT witness is ``sum_i sqrt(l_i)|ii>``;
2. filter Alice with ``W = diag(sqrt(d l_i))`` so the swap functional turns negative;
3. project both sides onto the witness support;
4. twirl with random diagonal phases ``D (x) D``;
5. average over simultaneous basis permutations.

Every twirl here is the exact linear projection onto the invariant operators.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalParams, build_rho_bc
from .errors import DegenerateProjection, InvalidInput, NotNpt, SingularFilter
from .policy import DEFAULT_POLICY, NumericPolicy
from .qmat import BipartiteState, PureState, partial_transpose

__all__ = [
    "NptWitness",
    "ReductionTrace",
    "tr_H",
    "find_npt_witness",
    "schmidt_rotate",
    "local_filter",
    "project_dd",
    "diagonal_twirl",
    "permutation_symmetrize",
    "full_twirl",
    "reduce_to_canonical",
]

_TRUNCATE = 1e-10


@dataclass(frozen=True)
class NptWitness:
    psi: PureState
    value: float

    def __post_init__(self):
        if not self.value < 0:
            raise InvalidInput(f"witness value {self.value} is not negative")
        if abs(self.psi.norm - 1.0) > 1e-10:
            raise InvalidInput("witness vector is not normalized")


@dataclass
class ReductionTrace:
    stages: list = field(default_factory=list)

    def add(self, name: str, rho: BipartiteState, d: int) -> None:
        self.stages.append((name, rho, tr_H(rho, d)))

    def rows(self) -> list[tuple[str, float, float, float]]:
        """``(stage, TrHrho, trace, minEig)`` per stage."""
        return [(name, h, rho.trace, rho.min_eig()) for name, rho, h in self.stages]


def tr_H(rho: BipartiteState, d: int | None = None) -> float:
    """``Tr(H rho)`` with ``H = swap/d`` on the leading ``d (x) d`` block."""
    if d is None:
        d = min(rho.dA, rho.dB)
    if d > min(rho.dA, rho.dB):
        raise InvalidInput(f"block size {d} exceeds the state dimensions")
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    rows = (i * rho.dB + j).ravel()
    cols = (j * rho.dB + i).ravel()
    return float(np.real(rho.mat[rows, cols].sum()) / d)


def find_npt_witness(rho: BipartiteState, tol: float = 1e-12) -> NptWitness | None:
    """Eigenvector of the most negative partial-transpose eigenvalue, if any."""
    w, v = np.linalg.eigh(partial_transpose(rho).mat)
    if w[0] >= -tol:
        return None
    psi = v[:, 0]
    piv = psi[int(np.argmax(np.abs(psi)))]
    psi = psi * (abs(piv) / piv)
    return NptWitness(PureState(psi, rho.dA, rho.dB), float(w[0]))


def _local(rho: BipartiteState, UA: np.ndarray, UB: np.ndarray) -> BipartiteState:
    U = np.kron(UA, UB)
    return BipartiteState.from_matrix(U @ rho.mat @ U.conj().T, rho.dA, rho.dB,
                                      normalize=rho.normalized, policy=rho.policy)


def schmidt_rotate(rho: BipartiteState, w: NptWitness,
                   tol: float = 1e-10) -> tuple[BipartiteState, PureState]:
    """Rotate so the witness becomes ``phi = sum_i sqrt(l_i)|ii>``.

    If ``psi = sum_i s_i u_i (x) v_i`` then Alice applies ``U_A`` with rows
    ``u_i^dagger`` and Bob applies ``V_B`` with rows ``v_i^T``.  The partial
    transpose then transforms with ``U_A (x) conj(V_B)``, which sends ``psi`` to
    ``phi``, so the witness value is unchanged.  Coefficients below ``1e-10``
    are dropped from ``phi``.
    """
    psi = w.psi
    if (psi.dA, psi.dB) != (rho.dA, rho.dB):
        raise InvalidInput("witness dimensions do not match the state")
    val = float(np.vdot(psi.vec, partial_transpose(rho).mat @ psi.vec).real)
    if val >= 0 or abs(val - w.value) > tol:
        raise InvalidInput(f"witness gives {val} on this state, recorded value {w.value}")
    u, s, vh = np.linalg.svd(psi.as_matrix())
    UA = u.conj().T
    VB = vh
    out = _local(rho, UA, VB)
    coeffs = np.where(s > _TRUNCATE, s, 0.0)
    phi = np.zeros(rho.dA * rho.dB, dtype=np.complex128)
    for i, si in enumerate(coeffs):
        phi[i * rho.dB + i] = si
    return out, PureState(phi / np.linalg.norm(phi), rho.dA, rho.dB)


def _support(phi: PureState, tol: float) -> np.ndarray:
    C = phi.as_matrix()
    diag = np.diagonal(C)
    off = C.copy()
    np.fill_diagonal(off, 0.0)
    if np.max(np.abs(off), initial=0.0) > tol or np.max(np.abs(diag.imag)) > tol \
            or np.min(diag.real) < -tol:
        raise InvalidInput("target vector is not in computational Schmidt form")
    coeffs = diag.real / np.linalg.norm(diag)
    nz = np.flatnonzero(coeffs > tol)
    if nz.size == 0:
        raise SingularFilter("target vector has no support")
    d = int(nz[-1]) + 1
    if nz.size != d:
        raise SingularFilter(f"zero Schmidt coefficient inside the support {coeffs[:d]}")
    return coeffs[:d]


def local_filter(rho: BipartiteState, phi: PureState, tol: float = _TRUNCATE) -> BipartiteState:
    """Alice filter ``W = diag(sqrt(d l_i))`` on the support of ``phi``, then renormalize.

    Outside the support ``W`` acts as the identity; the projection step removes
    that part.
    """
    if (phi.dA, phi.dB) != (rho.dA, rho.dB):
        raise InvalidInput("target vector dimensions do not match the state")
    coeffs = _support(phi, tol)
    d = coeffs.size
    wdiag = np.ones(rho.dA)
    wdiag[:d] = np.sqrt(d) * coeffs
    m = np.kron(np.diag(wdiag), np.eye(rho.dB))
    out = m @ rho.mat @ m.T
    tr = np.trace(out).real
    if tr <= 0:
        raise DegenerateProjection("filtered operator has zero trace")
    return BipartiteState.from_matrix(out / tr, rho.dA, rho.dB, normalize=True, policy=rho.policy)


def project_dd(rho: BipartiteState, d: int, tol: float = 1e-14) -> BipartiteState:
    """Project both sides onto ``span{|0>, ..., |d-1>}`` and renormalize."""
    if not 1 <= d <= min(rho.dA, rho.dB):
        raise InvalidInput(f"cannot project {rho.dA}x{rho.dB} onto {d}x{d}")
    idx = (np.arange(d)[:, None] * rho.dB + np.arange(d)[None, :]).ravel()
    out = rho.mat[np.ix_(idx, idx)]
    tr = np.trace(out).real
    if tr <= tol:
        raise DegenerateProjection(f"projected trace {tr} vanishes")
    return BipartiteState.from_matrix(out / tr, d, d, normalize=True, policy=rho.policy)


def _invariant_mask(d: int) -> np.ndarray:
    i, j, k, l = np.meshgrid(*(np.arange(d),) * 4, indexing="ij")
    keep = ((i == k) & (j == l)) | ((i == l) & (j == k))
    return keep.reshape(d * d, d * d)


def diagonal_twirl(rho: BipartiteState) -> BipartiteState:
    """Keep the ``|ii><ii|``, ``|ij><ij|`` and ``|ij><ji|`` entries, zero the rest."""
    if rho.dA != rho.dB:
        raise InvalidInput("diagonal twirl needs a d (x) d state")
    out = np.where(_invariant_mask(rho.dA), rho.mat, 0.0)
    return BipartiteState(out, rho.dA, rho.dB, normalized=rho.normalized, policy=rho.policy)


def _symmetrized_params(rho: BipartiteState, tol: float) -> CanonicalParams:
    d = rho.dA
    if rho.dB != d:
        raise InvalidInput("permutation average needs a d (x) d state")
    m = rho.mat
    if np.max(np.abs(np.where(_invariant_mask(d), 0.0, m)), initial=0.0) > tol:
        raise InvalidInput("state has entries outside the diagonal-twirl invariant set")
    pairs = [(i, j) for i, j in itertools.permutations(range(d), 2)]
    beta1 = np.mean([m[i * d + j, i * d + j].real for i, j in pairs])
    beta2 = np.mean([m[i * d + j, j * d + i].real for i, j in pairs])
    tr = rho.trace
    return CanonicalParams(d, float(beta1 - beta2) / tr, float(beta1 + beta2) / tr)


def permutation_symmetrize(rho: BipartiteState, tol: float = 1e-10) -> BipartiteState:
    """Average over ``P (x) P`` for all basis permutations ``P``; yields ``rho_bc``."""
    p = _symmetrized_params(rho, tol)
    return build_rho_bc(p, allow_unphysical=True, policy=rho.policy)


def full_twirl(rho: BipartiteState) -> BipartiteState:
    """Average over ``U (x) U``: the projection onto ``span{I, swap}``."""
    d = rho.dA
    if rho.dB != d:
        raise InvalidInput("full twirl needs a d (x) d state")
    swap = d * tr_H(rho, d)
    t = rho.trace
    alpha = (t * d - swap) / (d * (d * d - 1))
    beta = (swap * d - t) / (d * (d * d - 1))
    F = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            F[j * d + i, i * d + j] = 1.0
    out = alpha * np.eye(d * d) + beta * F
    return BipartiteState(out, d, d, normalized=rho.normalized, policy=rho.policy)


def reduce_to_canonical(rho: BipartiteState,
                        policy: NumericPolicy = DEFAULT_POLICY) -> tuple[CanonicalParams, ReductionTrace]:
    """Run the five stages and read off ``(b, c)``.  PPT input raises NotNpt."""
    w = find_npt_witness(rho)
    if w is None:
        raise NotNpt("partial transpose is positive semidefinite")
    trace = ReductionTrace()
    rotated, phi = schmidt_rotate(rho, w)
    d = _support(phi, _TRUNCATE).size
    trace.add("schmidt_rotate", rotated, d)
    filtered = local_filter(rotated, phi)
    trace.add("local_filter", filtered, d)
    projected = project_dd(filtered, d)
    trace.add("project_dd", projected, d)
    twirled = diagonal_twirl(projected)
    trace.add("diagonal_twirl", twirled, d)
    p = _symmetrized_params(twirled, policy.algebra_tol)
    trace.add("permutation_symmetrize", build_rho_bc(p, allow_unphysical=True, policy=policy), d)
    return p, trace
