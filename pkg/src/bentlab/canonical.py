"""The two-parameter canonical family ``rho_bc`` on ``d (x) d`` and its geometry.

``rho_bc = a sum_i |ii><ii| + b sum_{i<j} |psi-_ij><psi-_ij| + c sum_{i<j} |psi+_ij><psi+_ij|``
with ``psi+-_ij = (|ij> +- |ji>)/sqrt 2`` and ``a`` fixed by unit trace.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInput
from .policy import DEFAULT_POLICY, NumericPolicy
from .qmat import BipartiteState, max_entangled, partial_transpose

__all__ = [
    "CanonicalParams",
    "EpsParams",
    "RegionLabel",
    "PTSpectrum",
    "build_rho_bc",
    "build_rho_c_eps",
    "pt_spectrum",
    "build_werner",
    "werner_c",
    "werner_lambda",
    "swap_H",
    "tr_H_rho",
    "classify_region",
    "region_points",
    "params_from_state",
]


@dataclass(frozen=True)
class CanonicalParams:
    d: int
    b: float
    c: float

    def __post_init__(self):
        if self.d < 2:
            raise InvalidInput(f"dimension must be at least 2, got {self.d}")

    @property
    def a(self) -> float:
        d = self.d
        return (1.0 - (self.b + self.c) * d * (d - 1) / 2.0) / d

    def is_physical(self, tol: float = 1e-12) -> bool:
        return self.b >= -tol and self.c >= -tol and self.a >= -tol

    def to_dict(self) -> dict:
        return {"d": self.d, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, obj: dict) -> "CanonicalParams":
        try:
            return cls(int(obj["d"]), float(obj["b"]), float(obj["c"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed parameter JSON: {exc}") from exc


@dataclass(frozen=True)
class EpsParams:
    """Points just right of the PPT boundary: ``b = 1/(d(d-1)) + eps``."""

    d: int
    c: float
    eps: float

    def __post_init__(self):
        if self.d < 2:
            raise InvalidInput(f"dimension must be at least 2, got {self.d}")
        if not 0.0 <= self.c < 1.0 / (self.d * (self.d - 1)):
            raise InvalidInput(f"c={self.c} outside [0, 1/(d(d-1)))")
        if self.eps < 0:
            raise InvalidInput(f"eps must be non-negative, got {self.eps}")

    def to_canonical(self) -> CanonicalParams:
        d = self.d
        return CanonicalParams(d, 1.0 / (d * (d - 1)) + self.eps, self.c)


class RegionLabel(str, enum.Enum):
    UNPHYSICAL = "Unphysical"
    SEPARABLE_PPT = "SeparablePPT"
    NPT1_PSEUDO_UNDISTILLABLE = "NPT1_PseudoOneCopyUndistillable"
    NPT1_DISTILLABLE = "NPT1_OneCopyDistillable"
    NPT2 = "NPT2"


@dataclass(frozen=True)
class PTSpectrum:
    """Eigenvalues of the partial transpose with multiplicities ``1, d-1, d^2-d``.

    ``lambda0`` belongs to ``|Phi_0>``, ``lambda1`` to ``|Phi_k>`` for ``k >= 1``
    and ``lambda2`` to the product vectors ``|ij>``, ``i != j``.
    """

    d: int
    lambda0: float
    lambda1: float
    lambda2: float

    @property
    def multiplicities(self) -> tuple[int, int, int]:
        d = self.d
        return 1, d - 1, d * d - d

    @property
    def trace(self) -> float:
        m0, m1, m2 = self.multiplicities
        return m0 * self.lambda0 + m1 * self.lambda1 + m2 * self.lambda2

    def sorted_values(self) -> np.ndarray:
        m0, m1, m2 = self.multiplicities
        return np.sort(np.repeat([self.lambda0, self.lambda1, self.lambda2], [m0, m1, m2]))


def _pair_vectors(d: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    plus = np.zeros(d * d)
    minus = np.zeros(d * d)
    plus[i * d + j] = plus[j * d + i] = 1 / np.sqrt(2)
    minus[i * d + j] = 1 / np.sqrt(2)
    minus[j * d + i] = -1 / np.sqrt(2)
    return plus, minus


def build_rho_bc(p: CanonicalParams, allow_unphysical: bool = False,
                 policy: NumericPolicy = DEFAULT_POLICY) -> BipartiteState:
    """Assemble ``rho_bc`` from the symmetric/antisymmetric pair projectors."""
    if not allow_unphysical and not p.is_physical():
        raise InvalidInput(f"unphysical parameters {p} (a={p.a})")
    d = p.d
    m = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        m[i * d + i, i * d + i] = p.a
    for i in range(d):
        for j in range(i + 1, d):
            plus, minus = _pair_vectors(d, i, j)
            m += p.b * np.outer(minus, minus) + p.c * np.outer(plus, plus)
    return BipartiteState(m, d, d, normalized=True, policy=policy)


def build_rho_c_eps(p: EpsParams, policy: NumericPolicy = DEFAULT_POLICY) -> BipartiteState:
    return build_rho_bc(p.to_canonical(), policy=policy)


def pt_spectrum(p: CanonicalParams) -> PTSpectrum:
    d, b, c = p.d, p.b, p.c
    return PTSpectrum(
        d=d,
        lambda0=(d - 1) * (1.0 / (d * (d - 1)) - b),
        lambda1=1.0 / d - d * c / 2.0 - (d - 2) * b / 2.0,
        lambda2=(c + b) / 2.0,
    )


def swap_H(d: int) -> np.ndarray:
    """``H = swap / d``, the partial transpose of ``|Phi+><Phi+|``."""
    if d < 2:
        raise InvalidInput(f"dimension must be at least 2, got {d}")
    m = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            m[j * d + i, i * d + j] = 1.0 / d
    return m


def tr_H_rho(rho: BipartiteState) -> float:
    """``Tr(H rho)`` on the leading ``d (x) d`` block, ``d = min(dA, dB)``."""
    d = min(rho.dA, rho.dB)
    if rho.dA != rho.dB:
        raise InvalidInput("Tr(H rho) needs a d (x) d state")
    return float(np.real(np.trace(swap_H(d) @ rho.mat)))


def werner_c(d: int, b: float) -> float:
    """``c`` on the Werner line ``FH`` (equal positive PT eigenvalues)."""
    return 2.0 / (d * (d + 1)) - (d - 1) * b / (d + 1)


def werner_lambda(d: int, b: float) -> float:
    """Ratio ``lambda1 / (-lambda0)`` for the Werner-line point with this ``b``."""
    s = pt_spectrum(CanonicalParams(d, b, werner_c(d, b)))
    return s.lambda1 / (-s.lambda0)


def build_werner(d: int, lam: float, normalized: bool = False,
                 policy: NumericPolicy = DEFAULT_POLICY) -> BipartiteState:
    """Werner-line operator whose partial transpose is ``lam I - (lam+1)|Phi_0><Phi_0|``.

    With ``normalized=True`` the operator is divided by its trace and then
    coincides with ``build_rho_bc`` at the corresponding point of line FH.
    """
    if lam <= 0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    phi0 = max_entangled(d, 0).projector()
    pt = lam * np.eye(d * d) - (lam + 1.0) * phi0
    sigma = partial_transpose(BipartiteState(pt, d, d, normalized=False, policy=policy))
    if not normalized:
        return sigma
    return BipartiteState.from_matrix(sigma.mat, d, d, normalize=True, policy=policy)


def params_from_state(rho: BipartiteState, tol: float = 1e-10) -> CanonicalParams:
    """Read ``(b, c)`` off a state of the canonical form.

    Raises InvalidInput when ``rho`` is not of that form within ``tol``.
    """
    d = rho.dA
    if rho.dB != d or d < 2:
        raise InvalidInput("canonical states live on d (x) d")
    m = rho.mat
    plus_half = m[0 * d + 1, 0 * d + 1].real
    minus_half = m[0 * d + 1, 1 * d + 0].real
    tr = rho.trace
    p = CanonicalParams(d, float(plus_half - minus_half) / tr, float(plus_half + minus_half) / tr)
    ref = build_rho_bc(p, allow_unphysical=True).mat * tr
    if np.max(np.abs(ref - m)) > tol:
        raise InvalidInput("state is not of the canonical rho_bc form")
    return p


def region_points(d: int) -> dict[str, tuple[float, float]]:
    """Corner points of the (b, c) diagram, keyed by letter."""
    if d < 3:
        raise InvalidInput(f"region catalog needs d >= 3, got {d}")
    return {
        "A": (0.0, 0.0),
        "B": (1 / (d * (d - 1)), 0.0),
        "C": (4 / (d * (3 * d - 2)), 0.0),
        "F": (2 / (d * (d - 1)), 0.0),
        "G": (3 / (d * (2 * d - 1)), 1 / (d * (2 * d - 1))),
        "H": (1 / (d * (d - 1)), 1 / (d * (d + 1))),
        "J": (0.0, 2 / d**2),
        "K": (1 / (d * (d - 1)), 1 / (d * (d - 1))),
    }


def region_points_exact(d: int) -> dict[str, tuple[Fraction, Fraction]]:
    F = Fraction
    return {
        "A": (F(0), F(0)),
        "B": (F(1, d * (d - 1)), F(0)),
        "C": (F(4, d * (3 * d - 2)), F(0)),
        "F": (F(2, d * (d - 1)), F(0)),
        "G": (F(3, d * (2 * d - 1)), F(1, d * (2 * d - 1))),
        "H": (F(1, d * (d - 1)), F(1, d * (d + 1))),
        "J": (F(0), F(2, d * d)),
        "K": (F(1, d * (d - 1)), F(1, d * (d - 1))),
    }


def _in_convex_polygon(pt: tuple[float, float], verts: list[tuple[float, float]],
                       tol: float) -> bool:
    # closed: points within tol of an edge count as inside
    x, y = pt
    n = len(verts)
    for k in range(n):
        x0, y0 = verts[k]
        x1, y1 = verts[(k + 1) % n]
        edge = np.hypot(x1 - x0, y1 - y0)
        if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < -tol * edge:
            return False
    return True


def classify_region(p: CanonicalParams, boundary_tol: float = 1e-14) -> RegionLabel:
    """Label a point of the (b, c) plane.

    Values within ``boundary_tol`` of a boundary are snapped onto it, and
    boundaries belong to the closed separable or undistillable side.
    """
    if p.d < 3:
        raise InvalidInput("region geometry degenerates for d = 2")
    if not p.is_physical():
        return RegionLabel.UNPHYSICAL
    s = pt_spectrum(p)
    ppt0 = s.lambda0 >= -boundary_tol
    if ppt0 and s.lambda1 >= -boundary_tol:
        return RegionLabel.SEPARABLE_PPT
    if ppt0:
        return RegionLabel.NPT2
    pts = region_points(p.d)
    bcgk = [pts["B"], pts["C"], pts["G"], pts["K"]]
    if _in_convex_polygon((p.b, p.c), bcgk, boundary_tol):
        return RegionLabel.NPT1_PSEUDO_UNDISTILLABLE
    return RegionLabel.NPT1_DISTILLABLE
