"""Schmidt-rank-two minimization and the distillability tests built on it.

The engine minimizes ``<psi|M|psi>`` over unit vectors of Schmidt rank at
most ``k``.  Every such vector lies in ``span(V) (x) C^DB`` for some Alice
``k``-plane ``V``; with the plane fixed the minimum is an ordinary smallest
eigenvalue.  The search alternates sides: the Bob support of the current
minimizer fixes a Bob plane, the Alice support of the next minimizer fixes the
next Alice plane, and so on.  Each half-step can only lower the value, so the
result is an upper bound on the true minimum.  A non-negative outcome is
therefore heuristic; a negative one comes with an explicit witness.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .canonical import CanonicalParams, EpsParams, build_rho_bc, build_rho_c_eps
from .errors import BracketError, InvalidInput, SizeLimit
from .policy import DEFAULT_POLICY, NumericPolicy
from .qmat import PureState, as_matrix, partial_transpose, schmidt

log = logging.getLogger(__name__)

__all__ = [
    "RankTwoState",
    "OptimizerOptions",
    "OptimizerReport",
    "VerdictKind",
    "Verdict",
    "ThresholdResult",
    "minimize_rank_k",
    "rank2_expectation",
    "min_rank2",
    "regroup_copies",
    "n_copy_pt",
    "f_value",
    "eps_threshold",
    "witness_scan",
    "one_copy_verdict",
    "maxent_overlap_max",
    "null_space_margin",
]


@dataclass(frozen=True)
class RankTwoState:
    """``sum_s sqrt(mu[s]) |a_s> (x) |b_s>`` with orthonormal ``a_vecs``/``b_vecs`` columns."""

    mu: np.ndarray
    a_vecs: np.ndarray
    b_vecs: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        a = np.asarray(self.a_vecs, dtype=np.complex128)
        b = np.asarray(self.b_vecs, dtype=np.complex128)
        if mu.shape != (2,) or a.shape[1] != 2 or b.shape[1] != 2:
            raise InvalidInput("a rank-two state needs two weights and two vectors per side")
        if np.any(mu < -1e-12) or abs(mu.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"weights {mu} are not a probability pair")
        for vecs in (a, b):
            if np.max(np.abs(vecs.conj().T @ vecs - np.eye(2))) > 1e-10:
                raise InvalidInput("Schmidt vectors are not orthonormal")
        object.__setattr__(self, "mu", np.clip(mu, 0.0, None))
        object.__setattr__(self, "a_vecs", a)
        object.__setattr__(self, "b_vecs", b)

    @property
    def dims(self) -> tuple[int, int]:
        return self.a_vecs.shape[0], self.b_vecs.shape[0]

    def vector(self) -> np.ndarray:
        a, b = self.a_vecs, self.b_vecs
        return (np.sqrt(self.mu[0]) * np.kron(a[:, 0], b[:, 0])
                + np.sqrt(self.mu[1]) * np.kron(a[:, 1], b[:, 1]))

    @classmethod
    def from_vector(cls, psi, DA: int, DB: int) -> "RankTwoState":
        """Schmidt-decompose ``psi`` and keep the two leading terms.

        A product vector gets a zero second weight and completed bases.
        """
        psi = np.asarray(psi, dtype=np.complex128).reshape(DA, DB)
        psi = psi / np.linalg.norm(psi)
        u, s, vh = np.linalg.svd(psi)
        s2 = s[:2] ** 2
        return cls(s2 / s2.sum(), u[:, :2], vh[:2, :].T)


@dataclass(frozen=True)
class OptimizerOptions:
    restarts: int = 64
    max_iters: int = 500
    tol: float = 1e-12
    patience: int = 3
    seed: int = 0
    workers: int = 1


@dataclass
class EngineResult:
    value: float
    psi: np.ndarray
    restart_values: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    best_restart: int
    histories: list = field(repr=False, default_factory=list)


@dataclass
class OptimizerReport:
    min_value: float
    argmin: RankTwoState
    restarts: int
    iterations_per_restart: np.ndarray
    converged: bool
    seed: int
    restart_values: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "minValue": self.min_value,
            "restarts": self.restarts,
            "iterationsPerRestart": [int(i) for i in self.iterations_per_restart],
            "converged": bool(self.converged),
            "seed": self.seed,
            "heuristic": bool(self.min_value >= 0),
        }


def _check_hermitian(M: np.ndarray, DA: int, DB: int, tol: float) -> np.ndarray:
    M = as_matrix(M)
    if M.shape != (DA * DB, DA * DB):
        raise InvalidInput(f"matrix shape {M.shape} does not match {DA}x{DB}")
    if np.max(np.abs(M - M.conj().T), initial=0.0) > tol:
        raise InvalidInput("matrix is not Hermitian")
    return 0.5 * (M + M.conj().T)


def _initial_plane(DA: int, k: int, seed: int, restart: int) -> np.ndarray:
    rng = np.random.default_rng([seed, restart])
    z = (rng.standard_normal((DA, k)) + 1j * rng.standard_normal((DA, k))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def minimize_rank_k(M, DA: int, DB: int, k: int = 2,
                    options: OptimizerOptions = OptimizerOptions(),
                    policy: NumericPolicy = DEFAULT_POLICY,
                    keep_histories: bool = False) -> EngineResult:
    """Minimize ``<psi|M|psi>`` over unit ``psi`` of Schmidt rank at most ``k``.

    Restart ``r`` starts from a Haar-random Alice plane seeded by
    ``(options.seed, r)``; the best restart wins, ties broken by restart index.
    """
    if DA < 1 or DB < 1 or k < 1:
        raise InvalidInput("dimensions and rank must be positive")
    M = _check_hermitian(M, DA, DB, policy.algebra_tol)
    k = min(k, DA, DB)
    M4 = np.ascontiguousarray(M.reshape(DA, DB, DA, DB))

    def run(r: int):
        V0 = _initial_plane(DA, k, options.seed, r)
        return kernels.seesaw_restart(M4, V0, options.max_iters, options.tol, options.patience)

    indices = range(options.restarts)
    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            results = list(pool.map(run, indices))
    else:
        results = [run(r) for r in indices]

    values = np.array([res[0] for res in results])
    iters = np.array([res[2] for res in results])
    converged = iters < options.max_iters
    best = min(range(len(results)), key=lambda r: (values[r], r))
    psi = results[best][1]
    return EngineResult(
        value=float(values[best]),
        psi=psi / np.linalg.norm(psi),
        restart_values=values,
        iterations=iters,
        converged=converged,
        best_restart=best,
        histories=[res[3] for res in results] if keep_histories else [],
    )


def rank2_expectation(M, v: RankTwoState) -> float:
    DA, DB = v.dims
    M = as_matrix(M)
    if M.shape != (DA * DB, DA * DB):
        raise InvalidInput(f"matrix shape {M.shape} does not match state dims {DA}x{DB}")
    psi = v.vector()
    val = np.vdot(psi, M @ psi)
    return float(val.real)


def _split_dims(M: np.ndarray, DA: int | None, DB: int | None) -> tuple[int, int]:
    n = M.shape[0]
    if DA is None and DB is None:
        d = int(round(np.sqrt(n)))
        if d * d != n:
            raise InvalidInput(f"cannot infer a square bipartition of dimension {n}")
        return d, d
    if DA is None:
        DA = n // DB
    if DB is None:
        DB = n // DA
    return DA, DB


def min_rank2(M, DA: int | None = None, DB: int | None = None,
              options: OptimizerOptions = OptimizerOptions(),
              policy: NumericPolicy = DEFAULT_POLICY) -> OptimizerReport:
    """Best Schmidt-rank-two value of ``<psi|M|psi>`` found by the see-saw."""
    M = as_matrix(M)
    DA, DB = _split_dims(M, DA, DB)
    if DA < 2 or DB < 2:
        raise InvalidInput("both sides need dimension at least 2")
    res = minimize_rank_k(M, DA, DB, 2, options, policy)
    return OptimizerReport(
        min_value=res.value,
        argmin=RankTwoState.from_vector(res.psi, DA, DB),
        restarts=options.restarts,
        iterations_per_restart=res.iterations,
        converged=bool(res.converged[res.best_restart]),
        seed=options.seed,
        restart_values=res.restart_values,
    )


def regroup_copies(X: np.ndarray, dA: int, dB: int, n: int) -> np.ndarray:
    """Reorder ``X`` on ``(A1 B1)(A2 B2)...`` to ``(A1 A2 ...)(B1 B2 ...)``."""
    X = np.asarray(X)
    shape = [dA, dB] * n
    t = X.reshape(shape + shape)
    a_axes = list(range(0, 2 * n, 2))
    b_axes = list(range(1, 2 * n, 2))
    perm = a_axes + b_axes + [2 * n + ax for ax in a_axes] + [2 * n + ax for ax in b_axes]
    D = (dA * dB) ** n
    return t.transpose(perm).reshape(D, D)


def ungroup_copies(X: np.ndarray, dA: int, dB: int, n: int) -> np.ndarray:
    """Inverse of :func:`regroup_copies`."""
    X = np.asarray(X)
    shape = [dA] * n + [dB] * n
    t = X.reshape(shape + shape)
    inter = []
    for i in range(n):
        inter += [i, n + i]
    perm = inter + [2 * n + ax for ax in inter]
    D = (dA * dB) ** n
    return t.transpose(perm).reshape(D, D)


def n_copy_pt(rho_pt: np.ndarray, d: int, n: int, stress: bool = False,
              policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``(rho^PT)^{(x) n}`` regrouped so Alice holds every A factor."""
    if n < 1:
        raise InvalidInput("need at least one copy")
    D = (d * d) ** n
    cap = policy.dim_cap(stress)
    if D > cap:
        raise SizeLimit(f"{n} copies at d={d} give dimension {D} > cap {cap}")
    out = np.ones((1, 1), dtype=np.complex128)
    for _ in range(n):
        out = np.kron(out, rho_pt)
    return regroup_copies(out, d, d, n)


def f_value(p: EpsParams, n: int = 1, options: OptimizerOptions = OptimizerOptions(),
            stress: bool = False, policy: NumericPolicy = DEFAULT_POLICY) -> OptimizerReport:
    """Rank-two minimum of the n-copy partial transpose of ``rho(c, eps)``."""
    pt = partial_transpose(build_rho_c_eps(p, policy=policy)).mat
    M = n_copy_pt(pt, p.d, n, stress=stress, policy=policy)
    return min_rank2(M, p.d**n, p.d**n, options, policy)


@dataclass
class ThresholdResult:
    eps0: float
    lo: float
    hi: float
    evaluations: list

    def to_dict(self) -> dict:
        return {
            "eps0": self.eps0,
            "bracket": [self.lo, self.hi],
            "width": self.hi - self.lo,
            "evaluations": [{"eps": e, "minValue": v} for e, v in self.evaluations],
        }


def eps_threshold(d: int, c: float, n: int = 1, options: OptimizerOptions = OptimizerOptions(),
                  width: float = 1e-5, sign_tol: float = 1e-11,
                  lo: float = 0.0, hi: float | None = None, stress: bool = False,
                  policy: NumericPolicy = DEFAULT_POLICY) -> ThresholdResult:
    """Bisect ``eps`` for the sign change of the rank-two minimum.

    ``f < -sign_tol`` counts as negative.  The default upper end puts the
    state on the ``a = 0`` edge, which is one-copy distillable.
    Raises BracketError when the initial bracket has no sign change.
    """
    if not 0.0 <= c < 1.0 / (d * (d - 1)):
        raise InvalidInput(f"c={c} outside [0, 1/(d(d-1)))")
    if hi is None:
        hi = 1.0 / (d * (d - 1)) - c
    evals = []

    def negative(eps: float) -> bool:
        val = f_value(EpsParams(d, c, eps), n, options, stress, policy).min_value
        evals.append((eps, val))
        log.info("eps=%.10f f=%.3e", eps, val)
        return val < -sign_tol

    if negative(lo):
        raise BracketError(f"f is already negative at eps={lo}")
    if not negative(hi):
        raise BracketError(f"f is not negative at eps={hi}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if negative(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, evals)


class VerdictKind(str, enum.Enum):
    WITNESS_FOUND = "DistillableWitnessFound"
    NO_VIOLATION = "NoViolationFound"


@dataclass
class Verdict:
    kind: VerdictKind
    margin: float
    witness: RankTwoState | None = None
    source: str = ""

    @property
    def heuristic(self) -> bool:
        return self.kind is VerdictKind.NO_VIOLATION

    def to_dict(self) -> dict:
        out = {
            "verdict": self.kind.value,
            "margin": self.margin,
            "heuristic": self.heuristic,
            "source": self.source,
        }
        if self.witness is not None:
            out["witness"] = [[float(z.real), float(z.imag)] for z in self.witness.vector()]
        return out


def explicit_witnesses(d: int) -> dict[str, np.ndarray]:
    """The two hand-built rank-two test vectors, normalized.

    Bob's factor in ``w2`` carries conjugate phases: the partial transpose of a
    diagonal-twirl invariant state is ``D (x) conj(D)`` invariant, and only the
    conjugate pairing stays inside that symmetry.
    """
    w1 = np.zeros(d * d, dtype=np.complex128)
    w1[0] = w1[d + 1] = 1.0
    ones = np.ones(d, dtype=np.complex128)
    phases = np.exp(2j * np.pi * np.arange(d) / d)
    w2 = np.kron(ones, ones) + np.kron(phases, phases.conj())
    return {"w1": w1 / np.linalg.norm(w1), "w2": w2 / np.linalg.norm(w2)}


def witness_scan(p: CanonicalParams, tol: float = 1e-12) -> Verdict:
    """Evaluate the two explicit witnesses on ``rho_bc^PT``."""
    pt = partial_transpose(build_rho_bc(p, allow_unphysical=True)).mat
    best_name, best_val, best_vec = "", np.inf, None
    for name, w in explicit_witnesses(p.d).items():
        val = float(np.vdot(w, pt @ w).real)
        # near-ties keep the earlier witness
        if val < best_val - 1e-14:
            best_name, best_val, best_vec = name, val, w
    if best_val < -tol:
        return Verdict(VerdictKind.WITNESS_FOUND, best_val,
                       RankTwoState.from_vector(best_vec, p.d, p.d), source=best_name)
    return Verdict(VerdictKind.NO_VIOLATION, best_val, source="explicit witnesses")


def one_copy_verdict(p: CanonicalParams, options: OptimizerOptions = OptimizerOptions(),
                     tol: float = 1e-8) -> Verdict:
    """Explicit witnesses first, then the optimizer."""
    v = witness_scan(p, tol)
    if v.kind is VerdictKind.WITNESS_FOUND:
        return v
    rep = min_rank2(partial_transpose(build_rho_bc(p, allow_unphysical=True)).mat,
                    p.d, p.d, options)
    if rep.min_value < -tol:
        return Verdict(VerdictKind.WITNESS_FOUND, rep.min_value, rep.argmin, source="optimizer")
    return Verdict(VerdictKind.NO_VIOLATION, rep.min_value, source="optimizer")


def _is_maximally_entangled(psi: PureState, tol: float) -> bool:
    if psi.dA != psi.dB or abs(psi.norm - 1.0) > tol:
        return False
    coeffs = schmidt(psi).coefficients
    d = psi.dA
    return len(coeffs) == d and np.max(np.abs(coeffs - 1.0 / np.sqrt(d))) <= tol


@dataclass
class OverlapResult:
    overlap: float
    restart_overlaps: np.ndarray
    witness: RankTwoState


def maxent_overlap_max(d: int, psi: PureState, options: OptimizerOptions = OptimizerOptions(),
                       tol: float = 1e-10) -> OverlapResult:
    """Largest ``|<Psi|v>|`` over rank-two unit ``v`` for maximally entangled ``Psi``."""
    if psi.dA != d or not _is_maximally_entangled(psi, tol):
        raise InvalidInput("reference vector is not maximally entangled on d (x) d")
    if d == 2:
        return OverlapResult(1.0, np.ones(1), RankTwoState.from_vector(psi.vec, 2, 2))
    M = -np.outer(psi.vec, psi.vec.conj())
    res = minimize_rank_k(M, d, d, 2, options)
    overlaps = np.sqrt(np.clip(-res.restart_values, 0.0, None))
    return OverlapResult(float(np.sqrt(max(-res.value, 0.0))), overlaps,
                         RankTwoState.from_vector(res.psi, d, d))


@dataclass
class NullSpaceReport:
    null_dim: int
    min_value: float
    report: OptimizerReport

    def to_dict(self) -> dict:
        return {"nullDim": self.null_dim, "minValue": self.min_value}


def null_space_margin(p: EpsParams, n: int = 1, options: OptimizerOptions = OptimizerOptions(),
                      null_tol: float = 1e-12, stress: bool = False,
                      policy: NumericPolicy = DEFAULT_POLICY) -> NullSpaceReport:
    """Null-space dimension of the n-copy PT at ``eps = 0`` and its rank-two minimum."""
    if p.eps != 0:
        raise InvalidInput("null-space check is defined at eps = 0")
    pt = partial_transpose(build_rho_c_eps(p, policy=policy)).mat
    M = n_copy_pt(pt, p.d, n, stress=stress, policy=policy)
    w = np.linalg.eigvalsh(M)
    rep = min_rank2(M, p.d**n, p.d**n, options, policy)
    return NullSpaceReport(int(np.count_nonzero(np.abs(w) < null_tol)), rep.min_value, rep)
