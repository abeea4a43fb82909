"""Weighted Bergman spaces: bases, Gram matrices, kernels, projections.

Conventions
-----------
A section u = Σ c_α e_α is stored as its coefficient column c. The Gram
matrix G is laid out so that (u, v) = dᴴ G c, i.e.

    G[β, α] = ∫ e_α · conj(e_β) · e^{-φ} dA.

On ℙ¹ the sections of L ⊗ K are f(z) dz with deg f ≤ l − 2 and
[u, u] = |f|² e^{-φ} dA, φ being the O(l) weight in the chart, so the same
integrand serves both fibers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve
from scipy.special import eval_genlaguerre, gammaln

from .config import CONDITION_LIMIT, HERMITIAN_RTOL
from .errors import DegenerateFiberError, DomainError, IllConditionedError, LabError
from .quadrature import QuadratureRule, build_plane_rule, PlaneDomainSpec, moment_matrix
from .weights import WeightFamily, as_base_point, complex_derivatives, wirtinger

log = logging.getLogger(__name__)

BASIS_KINDS = ("plane_monomials", "p1_sections", "mixed_polynomials")


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Basis:
    """Ordered fiber functions e_0 … e_{d-1}.

    plane_monomials: z^k, k ≤ N. p1_sections: z^k, k ≤ l − 2.
    mixed_polynomials: span{z^a z̄^b : a ≤ N, b ≤ N_b}, held in the frame
    z^k L_j^{(k)}(|z|²/σ) (and z̄^k for negative frequencies), which is
    orthonormal up to π for the Gaussian envelope of scale σ and contains
    the holomorphic monomials as its j = 0, k ≥ 0 members.
    """
    kind: str
    degree: int
    antidegree: int = 0
    envelope_scale: float = 1.0
    frame: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in BASIS_KINDS:
            raise DomainError(f"Unknown basis kind: {self.kind!r}")
        if self.kind == "p1_sections" and self.degree < 2:
            raise DomainError(f"line-bundle degree must be >= 2, got {self.degree}")
        if self.kind != "p1_sections" and self.degree < 0:
            raise DomainError(f"cutoff degree must be >= 0, got {self.degree}")
        if self.frame is not None and self.frame.shape != (self._raw_size(), self._raw_size()):
            raise DomainError("frame change must be a square matrix of the basis size")

    @classmethod
    def plane(cls, cutoff: int) -> Basis:
        return cls(kind="plane_monomials", degree=cutoff)

    @classmethod
    def p1(cls, l: int) -> Basis:
        return cls(kind="p1_sections", degree=l)

    @classmethod
    def mixed(cls, cutoff: int, antidegree: int, envelope_scale: float = 1.0) -> Basis:
        return cls(
            kind="mixed_polynomials",
            degree=cutoff,
            antidegree=antidegree,
            envelope_scale=envelope_scale,
        )

    def with_frame(self, A) -> Basis:
        """Basis e'_α = Σ_β A[β, α] e_β."""
        return Basis(
            kind=self.kind,
            degree=self.degree,
            antidegree=self.antidegree,
            envelope_scale=self.envelope_scale,
            frame=np.asarray(A, dtype=complex),
        )

    def _raw_size(self) -> int:
        if self.kind == "plane_monomials":
            return self.degree + 1
        if self.kind == "p1_sections":
            return self.degree - 1
        return (self.degree + 1) * (self.antidegree + 1)

    @property
    def size(self) -> int:
        return self._raw_size()

    @property
    def is_p1(self) -> bool:
        return self.kind == "p1_sections"

    def mixed_labels(self) -> list[tuple[int, int]]:
        """(frequency k, Laguerre degree j) for every mixed frame member."""
        labels = []
        for k in range(-self.antidegree, self.degree + 1):
            if k >= 0:
                top = min(self.antidegree, self.degree - k)
            else:
                top = min(self.degree, self.antidegree + k)
            labels.extend((k, j) for j in range(top + 1))
        return labels

    def values(self, z) -> np.ndarray:
        """e_α(z) as rows, shape (d, *z.shape)."""
        zz = np.asarray(z, dtype=complex)
        if self.kind == "mixed_polynomials":
            raw = self._mixed_values(zz)
        else:
            powers = np.arange(self._raw_size())
            raw = zz[None, ...] ** powers.reshape((-1,) + (1,) * zz.ndim)
        if self.frame is None:
            return raw
        return np.tensordot(self.frame.T, raw, axes=1)

    def _mixed_values(self, z: np.ndarray) -> np.ndarray:
        sigma = self.envelope_scale
        x = np.abs(z) ** 2 / sigma
        rows = []
        for k, j in self.mixed_labels():
            a = abs(k)
            norm = math.exp(-0.5 * (a * math.log(sigma) + gammaln(j + a + 1) - gammaln(j + 1)))
            angular = z ** a if k >= 0 else np.conj(z) ** a
            rows.append(norm * angular * eval_genlaguerre(j, a, x))
        return np.stack(rows)

    def holomorphic_embedding(self) -> np.ndarray:
        """Coordinates of the monomials z^k, k ≤ N, in the mixed frame (D × (N+1))."""
        if self.kind != "mixed_polynomials":
            raise DomainError("holomorphic embedding is defined for mixed bases only")
        labels = self.mixed_labels()
        sigma = self.envelope_scale
        J = np.zeros((len(labels), self.degree + 1), dtype=complex)
        for k in range(self.degree + 1):
            J[labels.index((k, 0)), k] = math.exp(0.5 * (k * math.log(sigma) + gammaln(k + 1)))
        return J


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------

def equilibrate(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi scaling: returns (scale, D^{-1/2} h D^{-1/2}) with D = diag h."""
    diag = np.real(np.diag(h))
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise IllConditionedError("Gram diagonal is not positive")
    scale = np.sqrt(diag)
    return scale, h / np.outer(scale, scale)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    h: np.ndarray
    t: np.ndarray
    basis: Basis | None
    density: np.ndarray | None = None   # e^{-φ(t, ·)} at the rule nodes
    condition: float = 1.0
    _factor: tuple = field(default=(), repr=False)

    @property
    def size(self) -> int:
        return int(self.h.shape[0])

    def solve(self, b: np.ndarray) -> np.ndarray:
        """G⁻¹ b through the equilibrated Cholesky factor."""
        scale, factor = self._factor
        b = np.asarray(b, dtype=complex)
        shape = (-1,) + (1,) * (b.ndim - 1)
        return cho_solve(factor, b / scale.reshape(shape)) / scale.reshape(shape)

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.size, dtype=complex))

    def norm_sq(self, c: np.ndarray) -> float:
        c = np.asarray(c, dtype=complex)
        return float(np.real(np.conj(c) @ self.h @ c))


def make_gram(h: np.ndarray, t, basis: Basis | None, density: np.ndarray | None = None) -> GramMatrix:
    """Validate and factor a Hermitian positive-definite Gram matrix."""
    h = np.asarray(h, dtype=complex)
    if not np.all(np.isfinite(h)):
        raise IllConditionedError("Gram matrix has non-finite entries")
    asym = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    scale_h = max(float(np.max(np.abs(h))), 1e-300)
    if asym > 1e3 * HERMITIAN_RTOL * scale_h:
        log.debug("Gram asymmetry %.3g relative before symmetrizing", asym / scale_h)
    h = 0.5 * (h + h.conj().T)
    scale, eq = equilibrate(h)
    eig = np.linalg.eigvalsh(eq)
    if eig[0] <= 0:
        raise IllConditionedError(f"Gram matrix is not positive definite (min eig {eig[0]:.3g})")
    condition = float(eig[-1] / eig[0])
    if condition > CONDITION_LIMIT:
        raise IllConditionedError(
            f"Gram condition {condition:.3g} exceeds {CONDITION_LIMIT:.0e}"
        )
    factor = cho_factor(eq, lower=False)
    return GramMatrix(
        h=h,
        t=np.atleast_1d(np.asarray(t, dtype=complex)),
        basis=basis,
        density=density,
        condition=condition,
        _factor=(scale, factor),
    )


def _check_rule(basis: Basis, rule: QuadratureRule) -> None:
    if basis.is_p1 != rule.is_p1:
        raise DomainError(
            f"basis kind {basis.kind} does not match quadrature domain {rule.domain_tag}"
        )


def weight_density(phi: WeightFamily, t, rule: QuadratureRule) -> np.ndarray:
    """e^{-φ(t, ·)} at the rule nodes."""
    values = phi.evaluate(as_base_point(t, phi.base_dim), rule.nodes)
    density = np.exp(-np.asarray(values, dtype=float))
    if not np.all(np.isfinite(density)):
        raise DomainError(f"non-finite integrand for {phi.label} at t={t}")
    return density


def gram(basis: Basis, phi: WeightFamily, t, rule: QuadratureRule) -> GramMatrix:
    """Gram matrix of the basis under e^{-φ(t, ·)}."""
    _check_rule(basis, rule)
    E = basis.values(rule.nodes)
    density = weight_density(phi, t, rule)
    h = moment_matrix(rule, E, E, density)
    g = make_gram(h, t, basis, density)
    log.debug("Gram %s d=%d t=%s cond=%.3g", phi.label, basis.size, t, g.condition)
    return g


# ---------------------------------------------------------------------------
# Kernels and projections
# ---------------------------------------------------------------------------

def kernel_eval(basis: Basis, h: GramMatrix, z: complex, w: complex) -> complex:
    """K(z, w) = Σ e_α(z) (G⁻¹)_{αβ} conj(e_β(w))."""
    ez = basis.values(complex(z))
    ew = basis.values(complex(w))
    return complex(ez @ h.solve(np.conj(ew)))


def log_kernel_psh_report(
    phi: WeightFamily,
    basis: Basis,
    rule: QuadratureRule,
    points: Sequence[tuple],
    step: float | None = None,
) -> float:
    """Minimum eigenvalue of the joint (t, z) Hessian of log K_t(z, z)."""
    m = phi.base_dim
    grams: dict[tuple, GramMatrix] = {}

    def log_kernel(*coords):
        t = tuple(complex(c) for c in coords[:m])
        if t not in grams:
            grams[t] = gram(basis, phi, np.array(t), rule)
        z = complex(coords[m])
        k = kernel_eval(basis, grams[t], z, z)
        if k.real <= 0:
            raise IllConditionedError(f"Bergman kernel not positive at t={t}, z={z}")
        return math.log(k.real)

    lowest = np.inf
    for t, z in points:
        cd = complex_derivatives(log_kernel, [*as_base_point(t, m), complex(z)], step or 1e-3)
        hess = 0.5 * (cd.ddbar + cd.ddbar.conj().T)
        lowest = min(lowest, float(np.linalg.eigvalsh(hess)[0]))
    return lowest


def project_holomorphic(basis: Basis, h: GramMatrix, rule: QuadratureRule, samples) -> np.ndarray:
    """Coefficients c of the orthogonal projection Pm = Σ c_α e_α."""
    values = np.asarray(samples, dtype=complex)
    E = basis.values(rule.nodes)
    b = moment_matrix(rule, E, values[None, :], h.density)[:, 0]
    return h.solve(b)


def inner(rule: QuadratureRule, f: np.ndarray, g: np.ndarray, density: np.ndarray) -> complex:
    """(f, g) = ∫ f conj(g) e^{-φ}."""
    return complex(moment_matrix(rule, np.asarray(g)[None], np.asarray(f)[None], density)[0, 0])


def _coefficient_values(basis: Basis, rule: QuadratureRule, coeffs: Sequence) -> list[np.ndarray]:
    E = basis.values(rule.nodes)
    return [np.asarray(c, dtype=complex) @ E for c in coeffs]


def second_fundamental_form(
    basis: Basis,
    phi: WeightFamily,
    t,
    rule: QuadratureRule,
    tuple_coeffs: Sequence,
    *,
    ambient: Basis | None = None,
) -> np.ndarray:
    """S_{jk} = (π_⊥(φ_j u_j), π_⊥(φ_k u_k)).

    Without `ambient` the complement is taken in all of L²; with a mixed
    ambient frame the functions φ_j u_j are first projected into it.
    """
    m = phi.base_dim
    if len(tuple_coeffs) != m:
        raise DomainError(f"need one section per base direction ({m}), got {len(tuple_coeffs)}")
    h = gram(basis, phi, t, rule)
    derivs = wirtinger(phi, t, rule.nodes)
    us = _coefficient_values(basis, rule, tuple_coeffs)
    xs = np.stack([derivs.grad_t[j] * us[j] for j in range(m)])

    if ambient is None:
        full = moment_matrix(rule, xs, xs, h.density)
    else:
        hf = gram(ambient, phi, t, rule)
        F = ambient.values(rule.nodes)
        pf = hf.solve(moment_matrix(rule, F, xs, hf.density))
        full = np.conj(pf).T @ hf.h @ pf
    E = basis.values(rule.nodes)
    p = h.solve(moment_matrix(rule, E, xs, h.density))
    projected = np.conj(p).T @ h.h @ p
    # full[k, j] = (x_j, x_k); transpose to S[j, k]
    S = (full - projected).T
    return 0.5 * (S + S.conj().T)


def minimal_dbar_solution_norm(
    basis: Basis,
    phi: WeightFamily,
    t,
    rule: QuadratureRule,
    rhs: dict[tuple[int, int], complex],
) -> float:
    """‖w‖² of the minimal solution of ∂̄w = g dz̄, g = Σ g_ab z^a z̄^b.

    A particular solution Σ g_ab z^a z̄^{b+1}/(b+1) is corrected by its
    weighted least-squares fit over the holomorphic basis. This path avoids
    the Gram solve on purpose and serves as an oracle.
    """
    z = rule.nodes
    particular = np.zeros(z.shape, dtype=complex)
    for (a, b), coeff in rhs.items():
        particular = particular + coeff * z ** a * np.conj(z) ** (b + 1) / (b + 1)
    sqrt_w = np.sqrt(rule.weights * weight_density(phi, t, rule))
    A = (basis.values(z) * sqrt_w[None, :]).T
    coef, *_ = np.linalg.lstsq(A, particular * sqrt_w, rcond=None)
    residual = particular * sqrt_w - A @ coef
    return float(np.sum(np.abs(residual) ** 2))


def toeplitz(basis: Basis, phi: WeightFamily, t, rule: QuadratureRule, chi) -> np.ndarray:
    """T_χ with (T_χ u, u) = ∫ χ |u|² e^{-φ}, laid out like the Gram matrix."""
    _check_rule(basis, rule)
    chi = np.asarray(chi)
    if np.iscomplexobj(chi):
        if np.max(np.abs(chi.imag)) > 1e-12 * max(1.0, float(np.max(np.abs(chi)))):
            raise ValueError("Toeplitz symbol must be real-valued")
        chi = chi.real
    E = basis.values(rule.nodes)
    T = moment_matrix(rule, E, E, chi * weight_density(phi, t, rule))
    return 0.5 * (T + T.conj().T)


# ---------------------------------------------------------------------------
# Equality case of the L² estimate
# ---------------------------------------------------------------------------

@dataclass
class WitnessResult:
    norm_mu_sq: float
    norm_f_sq: float
    orth_residual: float

    @property
    def gap(self) -> float:
        return self.norm_f_sq - self.norm_mu_sq

    @property
    def relative_defect(self) -> float:
        if self.norm_f_sq == 0:
            return abs(self.norm_mu_sq)
        return abs(self.gap) / self.norm_f_sq


def hormander_equality_witness(
    l: int,
    phi: WeightFamily,
    gamma: Sequence[complex],
    rule: QuadratureRule,
    *,
    epsilon: float = 0.0,
    t=0.0,
) -> WitnessResult:
    """Compare ‖∂^φ γ‖² with ∫ |f|²_ω for f = ∂̄∂^φ γ on a ℙ¹ fiber.

    γ is a polynomial section of L = O(l) given by its coefficients in z;
    `epsilon` adds the non-holomorphic term ε·z̄. The reported ‖μ‖² is that
    of the minimal solution, μ minus its projection on holomorphic forms.
    """
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.size - 1 > l:
        raise DomainError(f"γ of degree {gamma.size - 1} is not a section of O({l})")
    basis = Basis.p1(l)
    _check_rule(basis, rule)
    z = rule.nodes
    derivs = wirtinger(phi, t, z)
    lam = derivs.hess_zz
    if np.any(lam <= 0):
        raise DegenerateFiberError("fiber form ω = i∂∂̄φ is not positive at every node")

    coeffs = gamma[::-1]
    g = np.polyval(coeffs, z) if gamma.size else np.zeros_like(z)
    dg = np.polyval(np.polyder(coeffs), z) if gamma.size > 1 else np.zeros_like(z)
    g_full = g + epsilon * np.conj(z)
    mu = dg - g_full * derivs.grad_z
    f = -epsilon * derivs.grad_z - g_full * lam

    h = gram(basis, phi, t, rule)
    E = basis.values(z)
    pairing = moment_matrix(rule, E, mu[None, :], h.density)[:, 0]
    mu_sq_raw = float(np.real(inner(rule, mu, mu, h.density)))
    if mu_sq_raw > 0:
        norms = np.sqrt(np.real(np.diag(h.h)) * mu_sq_raw)
        orth = float(np.max(np.abs(pairing) / norms))
    else:
        orth = 0.0
    mu_min = mu - h.solve(pairing) @ E
    return WitnessResult(
        norm_mu_sq=float(np.real(inner(rule, mu_min, mu_min, h.density))),
        norm_f_sq=float(np.sum(rule.weights * np.abs(f) ** 2 / lam * h.density)),
        orth_residual=orth,
    )


# ---------------------------------------------------------------------------
# Minimal extension from the central fiber
# ---------------------------------------------------------------------------

def default_base_rule(n_radial: int = 12, n_angular: int = 24) -> QuadratureRule:
    """Unit-disk rule for the base U."""
    return build_plane_rule(PlaneDomainSpec.disk(1.0), n_radial, n_angular)


def minimal_extension_ratio(
    phi: WeightFamily,
    u: Sequence[complex],
    t_poly_cutoff: int,
    fiber_rule: QuadratureRule,
    basis: Basis,
    base_rule: QuadratureRule | None = None,
) -> float:
    """min ∫_U ∫ [ũ, ũ] over ũ = Σ_{p ≤ cutoff} t^p v_p with ũ(0) = u, ‖u‖₀ = 1."""
    if t_poly_cutoff < 0:
        raise DomainError("t_poly_cutoff must be >= 0")
    base_rule = base_rule or default_base_rule(max(12, t_poly_cutoff + 2))
    c0 = np.asarray(u, dtype=complex)
    g0 = gram(basis, phi, 0.0, fiber_rule)
    norm0 = g0.norm_sq(c0)
    if norm0 <= 0:
        raise LabError("the fiber section must be nonzero")
    c0 = c0 / math.sqrt(norm0)

    grams = np.stack([gram(basis, phi, t, fiber_rule).h for t in base_rule.nodes])
    powers = base_rule.nodes[None, :] ** np.arange(t_poly_cutoff + 1)[:, None]
    d = basis.size
    P = t_poly_cutoff + 1
    M = np.zeros((P * d, P * d), dtype=complex)
    for p in range(P):
        for q in range(P):
            coef = base_rule.weights * np.conj(powers[p]) * powers[q]
            M[p * d:(p + 1) * d, q * d:(q + 1) * d] = np.tensordot(coef, grams, axes=1)
    M = 0.5 * (M + M.conj().T)
    value = float(np.real(np.conj(c0) @ M[:d, :d] @ c0))
    if P > 1:
        Mff = M[d:, d:]
        rhs = M[d:, :d] @ c0
        x = solve(Mff, rhs, assume_a="her")
        value -= float(np.real(np.conj(rhs) @ x))
    log.debug("extension ratio cutoff=%d: %.12g", t_poly_cutoff, value)
    return value
