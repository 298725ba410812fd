"""Explicit product-state ensembles for the PPT corner of the canonical family."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .canonical import CanonicalParams, RegionLabel, build_rho_bc, classify_region, region_points
from .errors import InvalidInput, SizeLimit
from .qmat import BipartiteState

__all__ = [
    "ProductEnsemble",
    "SeparabilityReport",
    "ensemble_to_density",
    "decomposition_A",
    "decomposition_B",
    "decomposition_J",
    "decomposition_K",
    "corner_ensemble",
    "decompose_ppt_point",
    "verify_separable",
    "ensemble_to_dict",
    "ensemble_from_dict",
]

J_MAX_DIM = 8


@dataclass(frozen=True)
class ProductEnsemble:
    """Members ``(w, alice, bob)``; each vector is normalized when mixed.

    Only shapes and finiteness are enforced here so that a damaged ensemble
    can still be handed to :func:`verify_separable` for diagnosis.
    """

    weights: np.ndarray
    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        a = np.atleast_2d(np.asarray(self.alice, dtype=np.complex128))
        b = np.atleast_2d(np.asarray(self.bob, dtype=np.complex128))
        if not (w.size == a.shape[0] == b.shape[0]):
            raise InvalidInput("weights and member vectors disagree in count")
        for arr in (w, a, b):
            if not np.all(np.isfinite(arr)):
                raise InvalidInput("ensemble has non-finite entries")
        if np.any(np.linalg.norm(a, axis=1) == 0) or np.any(np.linalg.norm(b, axis=1) == 0):
            raise InvalidInput("ensemble member with a zero vector")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alice", a)
        object.__setattr__(self, "bob", b)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def dims(self) -> tuple[int, int]:
        return self.alice.shape[1], self.bob.shape[1]

    def member_projectors(self) -> np.ndarray:
        a = self.alice / np.linalg.norm(self.alice, axis=1, keepdims=True)
        b = self.bob / np.linalg.norm(self.bob, axis=1, keepdims=True)
        v = np.einsum("ni,nj->nij", a, b).reshape(len(self), -1)
        return np.einsum("ni,nj->nij", v, v.conj())

    @classmethod
    def equal(cls, alice, bob) -> "ProductEnsemble":
        n = len(alice)
        return cls(np.full(n, 1.0 / n), alice, bob)

    @classmethod
    def mix(cls, parts: list[tuple[float, "ProductEnsemble"]]) -> "ProductEnsemble":
        parts = [(t, e) for t, e in parts if t > 0]
        return cls(np.concatenate([t * e.weights for t, e in parts]),
                   np.concatenate([e.alice for _, e in parts]),
                   np.concatenate([e.bob for _, e in parts]))


def ensemble_to_density(E: ProductEnsemble, tol: float = 1e-12) -> BipartiteState:
    if np.any(E.weights <= 0) or abs(E.weights.sum() - 1.0) > tol:
        raise InvalidInput("ensemble weights must be positive and sum to 1")
    m = np.einsum("n,nij->ij", E.weights, E.member_projectors())
    dA, dB = E.dims
    return BipartiteState.from_matrix(m, dA, dB, normalize=True)


def _basis(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=np.complex128)
    e[i] = 1.0
    return e


def decomposition_A(d: int) -> ProductEnsemble:
    """``|ii>`` with equal weights."""
    vecs = [_basis(d, i) for i in range(d)]
    return ProductEnsemble.equal(vecs, vecs)


def decomposition_K(d: int) -> ProductEnsemble:
    """``|ij>``, ``i != j``, with equal weights."""
    pairs = list(itertools.permutations(range(d), 2))
    return ProductEnsemble.equal([_basis(d, i) for i, _ in pairs], [_basis(d, j) for _, j in pairs])


def decomposition_B(d: int) -> ProductEnsemble:
    """``(-|i> + w^k |j>) (x) (|i> + w^k |j>)`` for ``i < j``, ``k = 0, 1, 2``, ``w = e^{2 pi i/3}``."""
    if d < 3:
        raise InvalidInput("this ensemble needs d >= 3")
    alice, bob = [], []
    for i, j in itertools.combinations(range(d), 2):
        for k in range(3):
            ph = np.exp(2j * np.pi * k / 3)
            alice.append(-_basis(d, i) + ph * _basis(d, j))
            bob.append(_basis(d, i) + ph * _basis(d, j))
    return ProductEnsemble.equal(alice, bob)


def decomposition_J(d: int, partial_transposed: bool = False) -> ProductEnsemble:
    """All ``3^d`` phase patterns ``(sum_j w^{k_j}|j>) (x) (sum_j w^{-k_j}|j>)``.

    That mixture is the partial transpose of the state at J; conjugating the
    Bob vectors (the default) gives the state itself.
    """
    if d < 3:
        raise InvalidInput("this ensemble needs d >= 3")
    if d > J_MAX_DIM:
        raise SizeLimit(f"3^{d} members exceed the d <= {J_MAX_DIM} guard")
    ks = np.array(list(itertools.product(range(3), repeat=d)))
    alice = np.exp(2j * np.pi * ks / 3)
    bob = alice.conj() if partial_transposed else alice
    return ProductEnsemble.equal(alice, bob)


def corner_ensemble(label: str, d: int) -> ProductEnsemble:
    builders = {"A": decomposition_A, "B": decomposition_B, "J": decomposition_J, "K": decomposition_K}
    try:
        return builders[label](d)
    except KeyError:
        raise InvalidInput(f"no certificate for point {label!r}; choose from A, B, J, K") from None


def _barycentric(p, v0, v1, v2) -> np.ndarray:
    T = np.array([[v0[0] - v2[0], v1[0] - v2[0]], [v0[1] - v2[1], v1[1] - v2[1]]])
    l0, l1 = np.linalg.solve(T, [p[0] - v2[0], p[1] - v2[1]])
    return np.array([l0, l1, 1.0 - l0 - l1])


def decompose_ppt_point(p: CanonicalParams, tol: float = 1e-12) -> ProductEnsemble:
    """Separable ensemble for a PPT point, mixing the corner ensembles.

    The quadrilateral ABKJ is split along AK; points on AK use triangle ABK.
    """
    if classify_region(p) is not RegionLabel.SEPARABLE_PPT:
        raise InvalidInput(f"{p} is not in the PPT region")
    pts = region_points(p.d)
    A, B, K, J = pts["A"], pts["B"], pts["K"], pts["J"]
    if p.c <= p.b + tol:
        labels, lam = "ABK", _barycentric((p.b, p.c), A, B, K)
    else:
        labels, lam = "AKJ", _barycentric((p.b, p.c), A, K, J)
    if np.any(lam < -1e-9):
        raise InvalidInput(f"barycentric weights {lam} leave the triangle {labels}")
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    return ProductEnsemble.mix([(t, corner_ensemble(L, p.d)) for t, L in zip(lam, labels)])


@dataclass
class SeparabilityReport:
    passed: bool
    max_error: float
    weights_ok: bool
    product_ok: bool
    members: int
    tol: float
    issues: list = field(default_factory=list)
    suspect_member: int | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "maxError": self.max_error,
            "weightsOk": self.weights_ok,
            "productOk": self.product_ok,
            "members": self.members,
            "tol": self.tol,
            "issues": list(self.issues),
            "suspectMember": self.suspect_member,
        }


def verify_separable(E: ProductEnsemble, rho: BipartiteState, tol: float = 1e-12) -> SeparabilityReport:
    """Check that ``E`` mixes to ``rho``.

    On failure, non-negative least squares refits the weights against ``rho``
    and the member whose stored weight is furthest from the refit is reported.
    """
    issues = []
    if E.dims != (rho.dA, rho.dB):
        issues.append(f"ensemble dims {E.dims} differ from state dims {(rho.dA, rho.dB)}")
        return SeparabilityReport(False, np.inf, False, False, len(E), tol, issues)
    bad = np.flatnonzero(E.weights <= 0)
    for n in bad:
        issues.append(f"member {n} has weight {E.weights[n]}")
    if abs(E.weights.sum() - 1.0) > tol:
        issues.append(f"weights sum to {E.weights.sum()!r}")
    weights_ok = not issues
    # each member is stored as a pair of local vectors, so only dimensions can break product form
    product_ok = E.alice.shape[1] == rho.dA and E.bob.shape[1] == rho.dB
    proj = E.member_projectors()
    recon = np.einsum("n,nij->ij", E.weights, proj)
    err = float(np.max(np.abs(recon - rho.mat)))
    if err > tol:
        issues.append(f"reconstruction error {err:.3e} exceeds {tol:.1e}")
    passed = weights_ok and product_ok and err <= tol
    suspect = None
    if not passed:
        if bad.size:
            suspect = int(bad[0])
        else:
            X = proj.reshape(len(E), -1).T
            lhs = np.vstack([X.real, X.imag])
            rhs = np.concatenate([rho.mat.reshape(-1).real, rho.mat.reshape(-1).imag])
            fit, _ = nnls(lhs, rhs)
            suspect = int(np.argmax(np.abs(fit - E.weights)))
    return SeparabilityReport(passed, err, weights_ok, product_ok, len(E), tol, issues, suspect)


def _vec_to_list(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in v]


def ensemble_to_dict(E: ProductEnsemble) -> dict:
    return {"members": [{"w": float(w), "a": _vec_to_list(a), "b": _vec_to_list(b)}
                        for w, a, b in zip(E.weights, E.alice, E.bob)]}


def ensemble_from_dict(obj: dict) -> ProductEnsemble:
    try:
        members = obj["members"]
        w = [float(m["w"]) for m in members]
        a = [np.asarray(m["a"], dtype=float) @ np.array([1.0, 1j]) for m in members]
        b = [np.asarray(m["b"], dtype=float) @ np.array([1.0, 1j]) for m in members]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed ensemble JSON: {exc}") from exc
    if not members:
        raise InvalidInput("ensemble has no members")
    return ProductEnsemble(w, np.array(a), np.array(b))
