"""Gram fields over the base, their Chern curvature, and positivity checks.

All curvature is computed in a fixed frame that does not depend on t, so a
field is fully described by t ↦ G(t). With G laid out as in `bergman`,

    Θ_{jk} = −G⁻¹ ∂̄_k∂_j G + G⁻¹ (∂̄_k G) G⁻¹ (∂_j G),

and the quadratic form of a tuple {u_j} is Σ_{jk} u_kᴴ G Θ_{jk} u_j. For a
line bundle with G = e^{-φ} this gives Θ = φ_{tt̄}.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh

from .bergman import (
    Basis,
    GramMatrix,
    equilibrate,
    gram,
    make_gram,
    second_fundamental_form,
)
from .config import CURVATURE_HERMITIAN_RTOL, DEFAULT_FD_STEP, DERIVATIVE_MODES
from .errors import DegenerateFiberError, DomainError, LabError, NonHermitianError
from .quadrature import QuadratureRule, moment_matrix
from .weights import (
    WeightFamily,
    as_base_point,
    complex_derivatives,
    d_matrix_from,
    wirtinger,
)

log = logging.getLogger(__name__)


@dataclass
class GramDerivatives:
    h: GramMatrix
    d: np.ndarray        # ∂_j G, shape (m, d, d)
    dbar: np.ndarray     # ∂̄_j G
    ddbar: np.ndarray    # ∂_j ∂̄_k G, shape (m, m, d, d)


class _FieldBase(ABC):
    base_dim: int
    step: float

    def __init__(self) -> None:
        self._grams: dict[tuple, GramMatrix] = {}

    @abstractmethod
    def _compute(self, t: np.ndarray) -> GramMatrix:
        """Gram matrix at a base point of shape (m,)."""

    def gram(self, t) -> GramMatrix:
        point = as_base_point(t, self.base_dim)
        key = tuple(point.tolist())
        if key not in self._grams:
            self._grams[key] = self._compute(point)
        return self._grams[key]

    def _fd_derivatives(self, t) -> GramDerivatives:
        point = as_base_point(t, self.base_dim)
        cd = complex_derivatives(
            lambda *coords: self.gram(np.array(coords, dtype=complex)).h,
            list(point),
            self.step,
        )
        return GramDerivatives(h=self.gram(point), d=cd.d, dbar=cd.dbar, ddbar=cd.ddbar)

    def derivatives(self, t) -> GramDerivatives:
        return self._fd_derivatives(t)


class GramField(_FieldBase):
    """t ↦ Gram matrix of a fixed basis under e^{-φ(t, ·)}.

    In analytic_weight mode the t-derivatives are moved under the integral:
    ∂_j G has density −φ_j e^{-φ} and ∂_j∂̄_k G has density
    (φ_j conj(φ_k) − φ_{jk̄}) e^{-φ}.
    """

    def __init__(
        self,
        basis: Basis,
        phi: WeightFamily,
        rule: QuadratureRule,
        mode: str = "analytic_weight",
        step: float | None = None,
    ) -> None:
        super().__init__()
        if mode not in DERIVATIVE_MODES:
            raise DomainError(f"Unknown derivative mode: {mode!r}")
        self.basis = basis
        self.phi = phi
        self.rule = rule
        self.mode = mode
        self.step = step or DEFAULT_FD_STEP
        self.base_dim = phi.base_dim
        self._values: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.basis.values(self.rule.nodes)
        return self._values

    def _compute(self, t: np.ndarray) -> GramMatrix:
        return gram(self.basis, self.phi, t, self.rule)

    def derivatives(self, t) -> GramDerivatives:
        if self.mode == "finite_difference":
            return self._fd_derivatives(t)
        h = self.gram(t)
        derivs = wirtinger(self.phi, h.t, self.rule.nodes, self.step)
        E = self.values
        m = self.base_dim
        d = np.stack([moment_matrix(self.rule, E, E, -derivs.grad_t[j] * h.density) for j in range(m)])
        ddbar = np.stack([
            np.stack([
                moment_matrix(
                    self.rule, E, E,
                    (derivs.grad_t[j] * np.conj(derivs.grad_t[k]) - derivs.hess_tt[j, k]) * h.density,
                )
                for k in range(m)
            ])
            for j in range(m)
        ])
        dbar = np.conj(np.swapaxes(d, 1, 2))
        return GramDerivatives(h=h, d=d, dbar=dbar, ddbar=ddbar)


class MatrixGramField(_FieldBase):
    """Gram field given directly as a matrix-valued function of t."""

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        base_dim: int = 1,
        step: float | None = None,
        label: str = "matrix",
    ) -> None:
        super().__init__()
        self.func = func
        self.base_dim = base_dim
        self.step = step or DEFAULT_FD_STEP
        self.label = label

    def _compute(self, t: np.ndarray) -> GramMatrix:
        return make_gram(np.asarray(self.func(t), dtype=complex), t, None)


class DualGramField(_FieldBase):
    """G*(t) = (G(t)⁻¹)ᵀ, differentiated from the derivatives of G."""

    def __init__(self, field: _FieldBase) -> None:
        super().__init__()
        self.field = field
        self.base_dim = field.base_dim
        self.step = field.step

    def _compute(self, t: np.ndarray) -> GramMatrix:
        return make_gram(self.field.gram(t).inverse().T, t, None)

    def derivatives(self, t) -> GramDerivatives:
        base = self.field.derivatives(t)
        X = base.h.inverse()
        m = self.base_dim
        dX = [-X @ base.d[j] @ X for j in range(m)]
        dbarX = [-X @ base.dbar[k] @ X for k in range(m)]
        ddbarX = [
            [
                X @ base.dbar[k] @ X @ base.d[j] @ X
                - X @ base.ddbar[j, k] @ X
                + X @ base.d[j] @ X @ base.dbar[k] @ X
                for k in range(m)
            ]
            for j in range(m)
        ]
        return GramDerivatives(
            h=self.gram(t),
            d=np.stack([a.T for a in dX]),
            dbar=np.stack([a.T for a in dbarX]),
            ddbar=np.stack([np.stack([a.T for a in row]) for row in ddbarX]),
        )


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

@dataclass
class CurvatureTensor:
    theta: np.ndarray      # Θ_{jk}, shape (m, m, d, d)
    h: GramMatrix
    pairings: np.ndarray   # G Θ_{jk}, with pairings[k, j] = pairings[j, k]ᴴ

    @property
    def base_dim(self) -> int:
        return int(self.theta.shape[0])

    def pairing(self, j: int, k: int) -> np.ndarray:
        """G Θ_{jk}, the matrix of u, v ↦ (Θ_{jk} u, v)."""
        return self.pairings[j, k]

    def form(self, tuple_coeffs: Sequence) -> float:
        """Σ_{jk} (Θ_{jk} u_j, u_k)."""
        cs = [np.asarray(c, dtype=complex) for c in tuple_coeffs]
        m = self.base_dim
        total = sum(np.conj(cs[k]) @ self.pairing(j, k) @ cs[j] for j in range(m) for k in range(m))
        return float(np.real(total))

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.theta))) if self.theta.size else 0.0


def chern_curvature(field: _FieldBase, t) -> CurvatureTensor:
    """Chern curvature of the Gram field at t.

    G Θ_{jk} = −∂_j∂̄_k G + (∂̄_k G) G⁻¹ (∂_j G) is assembled directly, then
    Hermitian-symmetrized across (j, k). The asymmetry removed is measured in
    the Jacobi-equilibrated frame against the larger of the two terms and
    the unit diagonal of G, so a flat bundle is not held to a relative test
    of roundoff against roundoff.
    """
    der = field.derivatives(t)
    h = der.h
    m = field.base_dim
    scale = np.sqrt(np.real(np.diag(h.h)))
    unit = np.outer(scale, scale)
    raw = np.empty((m, m, h.size, h.size), dtype=complex)
    size = 1.0
    for j in range(m):
        a_j = h.solve(der.d[j])
        for k in range(m):
            second = der.dbar[k] @ a_j
            raw[j, k] = second - der.ddbar[j, k]
            size = max(
                size,
                float(np.max(np.abs(der.ddbar[j, k] / unit))),
                float(np.max(np.abs(second / unit))),
            )
    pairings = 0.5 * (raw + np.conj(np.swapaxes(np.swapaxes(raw, 0, 1), 2, 3)))
    drift = float(np.max(np.abs((raw - pairings) / unit))) / size
    if drift > CURVATURE_HERMITIAN_RTOL:
        raise NonHermitianError(f"curvature pairing not Hermitian: drift {drift:.3g}")
    theta = np.stack([np.stack([h.solve(pairings[j, k]) for k in range(m)]) for j in range(m)])
    return CurvatureTensor(theta=theta, h=h, pairings=pairings)


def _block_form(curv: CurvatureTensor) -> tuple[np.ndarray, np.ndarray]:
    m = curv.base_dim
    d = curv.h.size
    A = np.zeros((m * d, m * d), dtype=complex)
    for j in range(m):
        for k in range(m):
            A[k * d:(k + 1) * d, j * d:(j + 1) * d] = curv.pairing(j, k)
    return 0.5 * (A + A.conj().T), np.kron(np.eye(m), curv.h.h)


def generalized_min_eig(A: np.ndarray, B: np.ndarray) -> float:
    """Smallest λ with A x = λ B x, solved after Jacobi scaling by diag B."""
    scale, B_eq = equilibrate(B)
    A_eq = A / np.outer(scale, scale)
    return float(eigh(A_eq, B_eq, eigvals_only=True)[0])


def nakano_min_eig(curv: CurvatureTensor) -> float:
    """Smallest generalized eigenvalue of the Nakano form against diag(G, …, G)."""
    A, B = _block_form(curv)
    return generalized_min_eig(A, B)


def direction_grid(m: int, n_alpha: int = 9, n_beta: int = 12) -> list[np.ndarray]:
    """Unit vectors (cos α, sin α·e^{iβ}) for m = 2, or [1] for m = 1."""
    if m == 1:
        return [np.ones(1, dtype=complex)]
    grid = []
    for alpha in np.linspace(0.0, np.pi / 2, n_alpha):
        betas = [0.0] if alpha in (0.0, np.pi / 2) else 2 * np.pi * np.arange(n_beta) / n_beta
        for beta in betas:
            grid.append(np.array([np.cos(alpha), np.sin(alpha) * np.exp(1j * beta)]))
    return grid


def griffiths_min(curv: CurvatureTensor, directions: Sequence | None = None) -> float:
    """Minimum over directions v of the generalized eigenvalues of Σ v_j v̄_k GΘ_{jk}."""
    m = curv.base_dim
    directions = direction_grid(m) if directions is None else directions
    lowest = np.inf
    for v in directions:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        M = sum(v[j] * np.conj(v[k]) * curv.pairing(j, k) for j in range(m) for k in range(m))
        lowest = min(lowest, generalized_min_eig(0.5 * (M + M.conj().T), curv.h.h))
    return lowest


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------

def _tuple_mass(h: GramMatrix, tuple_coeffs: Sequence) -> float:
    mass = sum(h.norm_sq(c) for c in tuple_coeffs)
    if mass <= 0:
        raise LabError("tuple of sections must be nonzero")
    return mass


def dual_curvature_residual(field: _FieldBase, t, n_tuples: int = 8, seed: int = 0) -> float:
    """max |Σ(Θ*_{jk}ξ_j, ξ_k) + Σ(Θ_{jk}u_k, u_j)| over random ξ, with u_j = G⁻¹ξ̄_j."""
    curv = chern_curvature(field, t)
    dual = chern_curvature(DualGramField(field), t)
    rng = np.random.default_rng(seed)
    m = curv.base_dim
    d = curv.h.size
    worst = 0.0
    for _ in range(n_tuples):
        xi = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        u = [curv.h.solve(np.conj(xi[j])) for j in range(m)]
        norm = np.sqrt(_tuple_mass(curv.h, u))
        xi, u = xi / norm, [uj / norm for uj in u]
        lhs = sum(np.conj(xi[k]) @ dual.pairing(j, k) @ xi[j] for j in range(m) for k in range(m))
        rhs = sum(np.conj(u[j]) @ curv.pairing(j, k) @ u[k] for j in range(m) for k in range(m))
        worst = max(worst, float(abs(lhs + rhs)))
    return worst


def log_norm_psh_residual(
    field: _FieldBase,
    section: Callable[[np.ndarray], np.ndarray],
    grid: Sequence,
    step: float | None = None,
) -> float:
    """Minimum eigenvalue over the grid of i∂∂̄ log‖ξ(t)‖² for a section ξ of the dual."""
    m = field.base_dim

    def log_norm(*coords):
        t = np.array(coords, dtype=complex)
        xi = np.asarray(section(t), dtype=complex)
        value = float(np.real(xi @ field.gram(t).solve(np.conj(xi))))
        if value <= 0:
            raise LabError(f"section vanishes at t={t}")
        return np.log(value)

    lowest = np.inf
    for t in grid:
        cd = complex_derivatives(log_norm, list(as_base_point(t, m)), step or field.step)
        hess = 0.5 * (cd.ddbar + cd.ddbar.conj().T)
        lowest = min(lowest, float(np.linalg.eigvalsh(hess)[0]))
    return lowest


def polynomial_section(terms: Sequence) -> Callable[[np.ndarray], np.ndarray]:
    """ξ(t) = Σ c·t^p (m = 1) or c·t₁^p·t₂^q (m = 2) from [[coeffs, p, (q)], ...]."""
    parsed = [(np.asarray(term[0], dtype=complex), tuple(int(x) for x in term[1:])) for term in terms]

    def section(t: np.ndarray) -> np.ndarray:
        out = 0
        for coeffs, powers in parsed:
            factor = np.prod([t[i] ** p for i, p in enumerate(powers)]) if powers else 1.0
            out = out + coeffs * factor
        return out

    return section


def subbundle_formula_residual(
    basis: Basis,
    phi: WeightFamily,
    t,
    rule: QuadratureRule,
    tuple_coeffs: Sequence,
    *,
    antidegree: int | None = None,
    envelope_scale: float | None = None,
) -> float:
    """|Σ(Θ^F u_j, u_k) − Σ S_{jk} − Σ(Θ^E u_j, u_k)| per unit tuple mass.

    F is the mixed polynomial space z^a z̄^b, a ≤ N, b ≤ N_b, which contains
    the holomorphic monomials of `basis` as a constant subframe.
    """
    if basis.kind != "plane_monomials" or basis.frame is not None:
        raise DomainError("the ambient model needs a plain monomial basis on the plane")
    n_b = basis.degree + 4 if antidegree is None else antidegree
    if envelope_scale is None:
        # match the Gaussian decay of e^{-φ} at the origin of the fiber
        envelope_scale = 1.0 / float(wirtinger(phi, t, 0.0).hess_zz)
    ambient = Basis.mixed(basis.degree, n_b, envelope_scale)
    curv_e = chern_curvature(GramField(basis, phi, rule), t)
    curv_f = chern_curvature(GramField(ambient, phi, rule), t)
    J = ambient.holomorphic_embedding()
    cs = [np.asarray(c, dtype=complex) for c in tuple_coeffs]
    theta_f = curv_f.form([J @ c for c in cs])
    theta_e = curv_e.form(cs)
    S = second_fundamental_form(basis, phi, t, rule, cs, ambient=ambient)
    residual = abs(theta_f - float(np.real(np.sum(S))) - theta_e)
    mass = _tuple_mass(curv_e.h, cs)
    log.debug("subbundle %s t=%s: Θ^F=%.6g S=%.6g Θ^E=%.6g", phi.label, t, theta_f, np.sum(S).real, theta_e)
    return residual / mass


def hormander_bound_margin(
    basis: Basis,
    phi: WeightFamily,
    t,
    rule: QuadratureRule,
    tuple_coeffs: Sequence,
    field: _FieldBase | None = None,
    curv: CurvatureTensor | None = None,
) -> float:
    """Σ(Θ u_j, u_k) − ∫ Σ D_{jk} u_j ū_k e^{-φ}, per unit tuple mass."""
    field = field or GramField(basis, phi, rule)
    curv = curv or chern_curvature(field, t)
    cs = [np.asarray(c, dtype=complex) for c in tuple_coeffs]
    m = phi.base_dim
    if len(cs) != m:
        raise DomainError(f"need one section per base direction ({m}), got {len(cs)}")
    lhs = curv.form(cs)
    D = d_matrix_from(wirtinger(phi, t, rule.nodes, field.step))
    E = basis.values(rule.nodes)
    us = [c @ E for c in cs]
    integrand = sum(D[j, k] * us[j] * np.conj(us[k]) for j in range(m) for k in range(m))
    rhs = float(np.real(np.sum(rule.weights * integrand * curv.h.density)))
    return (lhs - rhs) / _tuple_mass(curv.h, cs)


def normal_tuple_second_derivative_residual(
    field: _FieldBase,
    t0,
    tuple_coeffs: Sequence,
    step: float | None = None,
) -> float:
    """|Σ ∂_j∂̄_k (u_j, u_k) + Σ(Θ_{jk} u_j, u_k)| at t0, per unit tuple mass.

    The sections are u_j(t) = u⁰_j − Σ_i (t_i − t0_i) G⁻¹∂_iG(t0) u⁰_j, holomorphic
    in t with vanishing covariant derivative at t0.
    """
    m = field.base_dim
    t0 = as_base_point(t0, m)
    der = field.derivatives(t0)
    A = [der.h.solve(der.d[i]) for i in range(m)]
    cs = [np.asarray(c, dtype=complex) for c in tuple_coeffs]
    if len(cs) != m:
        raise DomainError(f"need one section per base direction ({m}), got {len(cs)}")

    def pairings(*coords):
        t = np.array(coords, dtype=complex)
        G = field.gram(t).h
        us = [c - sum((t[i] - t0[i]) * (A[i] @ c) for i in range(m)) for c in cs]
        return np.array([[np.conj(us[k]) @ G @ us[j] for k in range(m)] for j in range(m)])

    cd = complex_derivatives(pairings, list(t0), step or field.step)
    second = sum(cd.ddbar[j, k][j, k] for j in range(m) for k in range(m))
    curv = chern_curvature(field, t0)
    value = float(np.real(second)) + curv.form(cs)
    return abs(value) / _tuple_mass(der.h, cs)


@dataclass
class DegeneracyRecord:
    min_curv_eig: float
    dbar_V_residual: float
    V_mean: complex


def degeneracy_diagnostics(
    phi: WeightFamily,
    t,
    rule: QuadratureRule,
    field: _FieldBase,
    step: float | None = None,
) -> DegeneracyRecord:
    """Holomorphy defect of V = φ_{tz̄}/φ_{zz̄} and the curvature minimum at t."""
    step = step or DEFAULT_FD_STEP

    def vector_field(z):
        derivs = wirtinger(phi, t, z, step)
        if np.any(derivs.hess_zz <= 0):
            raise DegenerateFiberError("fiber Hessian vanishes on the rule")
        return derivs.mixed_tz / derivs.hess_zz

    cd = complex_derivatives(vector_field, [rule.nodes], step)
    residual = float(np.max(np.abs(cd.dbar[0])))
    V = np.asarray(cd.value)
    return DegeneracyRecord(
        min_curv_eig=nakano_min_eig(chern_curvature(field, t)),
        dbar_V_residual=residual,
        V_mean=complex(np.mean(V[0])),
    )
