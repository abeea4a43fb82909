"""Rank-two bundles V over a disk and the bundles E(l) of fiber sections on ℙ(V*).

The fiber of ℙ(V*) over t is a projective line with chart coordinate w. The
metric h_V(t) induces on O(1) the chart weight

    φ_{O(1)}(t, w) = log((1, w) h*(t) (1, w)ᴴ),    h* = (h_V⁻¹)ᵀ,

and L(l) = O(l) carries l·φ_{O(1)}. Sections of L(l) ⊗ K along the fibers
form E(l) ≅ S^{l-2}V ⊗ det V, with E(2) = det V.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .bergman import Basis, GramMatrix, gram
from .bundle import (
    GramField,
    MatrixGramField,
    chern_curvature,
    griffiths_min,
    nakano_min_eig,
)
from .errors import DomainError, HypothesisError
from .quadrature import QuadratureRule
from .weights import WeightFamily

log = logging.getLogger(__name__)

METRIC_KINDS = ("conformal", "diagonal", "polynomial", "constant")
METRIC_CONDITION_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class RankTwoMetricFamily:
    """t ↦ h_V(t), a Hermitian positive-definite 2×2 matrix."""
    kind: str
    params: dict = field(default_factory=dict)
    transform: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in METRIC_KINDS:
            raise DomainError(f"Unknown metric family: {self.kind!r}")

    @classmethod
    def conformal(cls, c: float = 1.0) -> RankTwoMetricFamily:
        """h_V = e^{-c|t|²}·I."""
        return cls("conformal", {"c": c})

    @classmethod
    def diagonal(cls, a: float, b: float) -> RankTwoMetricFamily:
        """h_V = diag(e^{-a|t|²}, e^{-b|t|²})."""
        return cls("diagonal", {"a": a, "b": b})

    @classmethod
    def polynomial(cls, coefficients: Sequence) -> RankTwoMetricFamily:
        """h_V = A(t)ᴴA(t) with A(t) = Σ A_p t^p."""
        mats = [np.asarray(c, dtype=complex) for c in coefficients]
        return cls("polynomial", {"coefficients": [m.tolist() for m in mats]})

    @classmethod
    def constant(cls, matrix) -> RankTwoMetricFamily:
        return cls("constant", {"matrix": np.asarray(matrix, dtype=complex).tolist()})

    def __call__(self, t) -> np.ndarray:
        t = complex(np.atleast_1d(t)[0])
        s = abs(t) ** 2
        if self.kind == "conformal":
            h = np.exp(-self.params["c"] * s) * np.eye(2, dtype=complex)
        elif self.kind == "diagonal":
            h = np.diag([np.exp(-self.params["a"] * s), np.exp(-self.params["b"] * s)]).astype(complex)
        elif self.kind == "polynomial":
            A = sum(np.asarray(c, dtype=complex) * t ** p for p, c in enumerate(self.params["coefficients"]))
            h = A.conj().T @ A
        else:
            h = np.asarray(self.params["matrix"], dtype=complex)
        eig = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
        if eig[0] <= 0:
            raise DomainError(f"h_V({t}) is not positive definite")
        if self.transform is not None:
            h = self.transform.conj().T @ h @ self.transform
        return h

    def dual(self, t) -> np.ndarray:
        return np.linalg.inv(self(t)).T

    def transformed(self, U) -> RankTwoMetricFamily:
        """Family t ↦ Uᴴ h_V(t) U for a constant matrix U."""
        return replace(self, transform=np.asarray(U, dtype=complex))

    def check_conditioning(self, t_grid: Sequence) -> float:
        worst = max(float(np.linalg.cond(self(t))) for t in t_grid)
        if worst > METRIC_CONDITION_LIMIT:
            raise DomainError(f"h_V condition {worst:.3g} exceeds {METRIC_CONDITION_LIMIT:.0e}")
        return worst

    @property
    def label(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        suffix = "" if self.transform is None else "·U"
        return f"{self.kind}({inner}){suffix}"


def o1_weight(fam: RankTwoMetricFamily, t, w) -> np.ndarray:
    """φ_{O(1)}(t, w) = log(h*₀₀ + h*₀₁ w̄ + h*₁₀ w + h*₁₁ |w|²)."""
    hs = fam.dual(t)
    w = np.asarray(w, dtype=complex)
    quad = hs[0, 0] + hs[0, 1] * np.conj(w) + hs[1, 0] * w + hs[1, 1] * np.abs(w) ** 2
    return np.log(np.real(quad))


def induced_weight(fam: RankTwoMetricFamily, l: int) -> WeightFamily:
    """The O(l) weight l·φ_{O(1)} on the ℙ¹ chart as a family over the disk."""
    if l < 2:
        raise DomainError(f"degree must be >= 2, got {l}")

    def evaluate(t, w):
        return l * o1_weight(fam, t[0], w)

    return WeightFamily("proj_induced", 1, evaluate, None, {"metric": fam.label, "l": l})


def e_bundle_gram(fam: RankTwoMetricFamily, t, l: int, rule: QuadratureRule) -> GramMatrix:
    """Gram matrix of E(l) in the chart frame w^k, k ≤ l − 2."""
    return gram(Basis.p1(l), induced_weight(fam, l), t, rule)


def e_bundle_field(fam: RankTwoMetricFamily, l: int, rule: QuadratureRule, **kwargs) -> GramField:
    return GramField(Basis.p1(l), induced_weight(fam, l), rule, **kwargs)


def universal_constant(rule: QuadratureRule) -> float:
    """c₂: the norm² of the generator of E(2) for h_V = I."""
    return float(np.real(e_bundle_gram(RankTwoMetricFamily.constant(np.eye(2)), 0.0, 2, rule).h[0, 0]))


def det_identity_residual(
    fam: RankTwoMetricFamily,
    t_grid: Sequence,
    rule: QuadratureRule,
    c2: float | None = None,
) -> float:
    """max |G_{E(2)}(t)/(c₂·det h_V(t)) − 1| over the grid."""
    c2 = universal_constant(rule) if c2 is None else c2
    worst = 0.0
    for t in t_grid:
        g = float(np.real(e_bundle_gram(fam, t, 2, rule).h[0, 0]))
        det = float(np.real(np.linalg.det(fam(t))))
        worst = max(worst, abs(g / (c2 * det) - 1.0))
    return worst


def induced_action_matrix(U, l: int) -> np.ndarray:
    """Matrix R with G_{Uᴴ h U} = Rᴴ G_h R on the chart frame of E(l).

    Replacing h_V by Uᴴ h_V U moves the O(1) weight by the Möbius map of Ū,
    and pulling w^k back through it gives column k as the coefficients of
    conj(det U)·(Ū₀₁ + Ū₁₁ w)^k·(Ū₀₀ + Ū₁₀ w)^{l-2-k}. For the shear
    U = [[1, s], [0, 1]] this is (s̄ + w)^k.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise DomainError("the frame change on V must be 2×2")
    V = np.conj(U)
    n = l - 2
    scale = np.linalg.det(V)
    R = np.zeros((n + 1, n + 1), dtype=complex)
    for k in range(n + 1):
        coeffs = P.polymul(
            P.polypow([V[0, 1], V[1, 1]], k),
            P.polypow([V[0, 0], V[1, 0]], n - k),
        )
        R[: len(coeffs), k] = scale * np.asarray(coeffs)[: n + 1]
    return R


def hypothesis_certificate(fam: RankTwoMetricFamily, t_grid: Sequence, step: float | None = None) -> float:
    """Minimum over the grid of the Griffiths form of h_V's own curvature."""
    metric = MatrixGramField(fam, base_dim=1, step=step, label=fam.label)
    return min(griffiths_min(chern_curvature(metric, t)) for t in t_grid)


@dataclass
class Theorem71Result:
    min_nakano: float
    hypothesis_min: float
    strict: bool
    degree: int


def theorem_7_1_check(
    fam: RankTwoMetricFamily,
    t_grid: Sequence,
    m: int,
    rule: QuadratureRule,
    *,
    tolerance: float = 1e-6,
    step: float | None = None,
) -> Theorem71Result:
    """Nakano minimum of E(2+m) = S^m V ⊗ det V over the grid.

    Raises HypothesisError when h_V has curvature of negative Griffiths type
    somewhere on the grid; a flat family is reported with strict=False.
    """
    if m < 0:
        raise DomainError(f"symmetric power must be >= 0, got {m}")
    hyp = hypothesis_certificate(fam, t_grid, step)
    if hyp < -tolerance:
        raise HypothesisError(
            f"{fam.label} is not Griffiths-positive on the grid (min curvature {hyp:.3g})"
        )
    field_ = e_bundle_field(fam, 2 + m, rule, step=step)
    lowest = min(nakano_min_eig(chern_curvature(field_, t)) for t in t_grid)
    log.debug("theorem 7.1 %s m=%d: hypothesis %.3g, Nakano %.6g", fam.label, m, hyp, lowest)
    return Theorem71Result(min_nakano=lowest, hypothesis_min=hyp, strict=hyp > tolerance, degree=2 + m)
