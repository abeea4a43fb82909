"""Paths of fiber metrics φ = φ₀ + ψ(t, ·) and their geodesic curvature.

The base weight φ₀ does not depend on t; the perturbation ψ carries the
path. The geodesic curvature C(ψ) = ψ_{tt̄} − |ψ_{tz̄}|²/φ_{zz̄} is the
Toeplitz symbol bounding the curvature of the bundle of sections from below.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bergman import Basis, toeplitz
from .bundle import GramField, chern_curvature, generalized_min_eig, nakano_min_eig
from .config import DEFAULT_BASIS_CUTOFF, DEFAULT_FD_STEP
from .errors import DegenerateFiberError, DomainError
from .quadrature import QuadratureRule
from .weights import WeightFamily, combine, d_matrix_from, scaled, wirtinger

log = logging.getLogger(__name__)

FIBER_KINDS = ("p1", "plane_fock")


@dataclass(frozen=True)
class PathSpec:
    fiber: str
    phi0: WeightFamily
    psi: WeightFamily
    degree: int = 0
    cutoff: int = DEFAULT_BASIS_CUTOFF

    def __post_init__(self) -> None:
        if self.fiber not in FIBER_KINDS:
            raise DomainError(f"Unknown path fiber: {self.fiber!r}")
        if self.fiber == "p1" and self.degree < 2:
            raise DomainError(f"ℙ¹ paths need degree l >= 2, got {self.degree}")
        if self.phi0.base_dim != 1 or self.psi.base_dim != 1:
            raise DomainError("paths live over a one-dimensional base")

    @property
    def total(self) -> WeightFamily:
        return combine([(1.0, self.phi0), (1.0, self.psi)], family_id="path")

    @property
    def basis(self) -> Basis:
        return Basis.p1(self.degree) if self.fiber == "p1" else Basis.plane(self.cutoff)

    def with_degree(self, l: int) -> PathSpec:
        """Replace L by the power L^{l/l₀}: the whole weight is scaled."""
        if self.fiber != "p1":
            raise DomainError("degree changes apply to ℙ¹ paths only")
        factor = l / self.degree
        return replace(self, phi0=scaled(self.phi0, factor), psi=scaled(self.psi, factor), degree=l)

    def with_scale(self, s: float) -> PathSpec:
        return replace(self, psi=scaled(self.psi, s))

    def validate(self, rule: QuadratureRule, probe_t: complex = 0.37 + 0.21j) -> None:
        """φ₀ must be t-independent and strictly positive along the fiber."""
        base = wirtinger(self.phi0, probe_t, rule.nodes)
        if np.any(np.abs(base.grad_t) > 1e-12):
            raise DomainError(f"base weight {self.phi0.label} depends on t")
        if np.any(base.hess_zz <= 0):
            raise DegenerateFiberError(f"base weight {self.phi0.label} is not fiber-positive")


def geodesic_curvature(path: PathSpec, t: complex, z, step: float | None = None) -> np.ndarray:
    """C(ψ)(t, z), vectorized over z."""
    dpsi = wirtinger(path.psi, t, z, step)
    lam = wirtinger(path.total, t, z, step).hess_zz
    if np.any(lam <= 0):
        raise DegenerateFiberError(f"φ₀ + ψ is not fiber-positive at t={t}")
    return np.real(dpsi.hess_tt[0, 0]) - np.abs(dpsi.mixed_tz[0]) ** 2 / lam


def d_matrix_gap(path: PathSpec, t: complex, z, step: float | None = None) -> float:
    """max |C(ψ) − D₁₁(φ₀ + ψ)| over z."""
    c = geodesic_curvature(path, t, z, step)
    d11 = np.real(d_matrix_from(wirtinger(path.total, t, z, step))[0, 0])
    return float(np.max(np.abs(c - d11)))


def _real_derivatives(f, s: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives in a real variable with one Richardson level."""
    def level(h):
        plus, mid, minus = f(s + h), f(s), f(s - h)
        return (plus - minus) / (2 * h), (plus - 2 * mid + minus) / h ** 2

    d1, d2 = level(step)
    e1, e2 = level(step / 2)
    return (4 * e1 - d1) / 3, (4 * e2 - d2) / 3


def real_path_identity_residual(
    path: PathSpec,
    t: complex,
    z,
    step: float | None = None,
) -> float:
    """max |4C(ψ) − (ψ̈ − |∂̄_z ψ̇|²/φ_{zz̄})| for a path depending on Re t only."""
    step = step or DEFAULT_FD_STEP
    z = np.asarray(z, dtype=complex)
    imag = complex(t).imag

    def psi_at(s):
        return path.psi(complex(s, imag), z)

    def dbar_psi_at(s):
        return np.conj(wirtinger(path.psi, complex(s, imag), z).grad_z)

    _, psi_dd = _real_derivatives(psi_at, complex(t).real, step)
    dbar_psi_dot, _ = _real_derivatives(dbar_psi_at, complex(t).real, step)
    lam = wirtinger(path.total, t, z).hess_zz
    rhs = psi_dd - np.abs(dbar_psi_dot) ** 2 / lam
    return float(np.max(np.abs(4 * geodesic_curvature(path, t, z, step) - rhs)))


def depends_on_real_part_only(path: PathSpec, z, probe: Sequence[complex] = (0.3 + 0.2j, -0.4 + 0.5j)) -> bool:
    z = np.asarray(z, dtype=complex)
    return all(
        np.allclose(path.psi(t, z), path.psi(complex(t).real, z), rtol=1e-12, atol=1e-12)
        for t in probe
    )


def toeplitz_bound_margin(
    path: PathSpec,
    t: complex,
    rule: QuadratureRule,
    field: GramField | None = None,
) -> float:
    """Smallest generalized eigenvalue of G Θ₁₁ − T_{C(ψ)} against G."""
    field = field or GramField(path.basis, path.total, rule)
    curv = chern_curvature(field, t)
    chi = geodesic_curvature(path, t, rule.nodes, field.step)
    T = toeplitz(path.basis, path.total, t, rule, chi)
    A = curv.pairing(0, 0) - T
    return generalized_min_eig(0.5 * (A + A.conj().T), curv.h.h)


def margin_scaling_ratios(
    path: PathSpec,
    t: complex,
    rule: QuadratureRule,
    scales: Sequence[float] = (0.1, 0.05, 0.025),
) -> list[float]:
    """margin(s)/s² for the perturbation scaled by s."""
    return [toeplitz_bound_margin(path.with_scale(s), t, rule) / s ** 2 for s in scales]


@dataclass
class QuantizationRow:
    l: int
    nakano_min_eig: float
    margin: float
    min_c: float

    def as_dict(self) -> dict:
        return {"l": self.l, "nakano": self.nakano_min_eig, "margin": self.margin, "min_c": self.min_c}


def quantization_row(path: PathSpec, t_grid: Sequence[complex], l: int, rule: QuadratureRule) -> QuantizationRow:
    p = path.with_degree(l)
    field = GramField(p.basis, p.total, rule)
    nakano = min(nakano_min_eig(chern_curvature(field, t)) for t in t_grid)
    margin = min(toeplitz_bound_margin(p, t, rule, field) for t in t_grid)
    min_c = min(float(np.min(geodesic_curvature(p, t, rule.nodes))) for t in t_grid)
    log.debug("quantization l=%d: nakano=%.3g margin=%.3g", l, nakano, margin)
    return QuantizationRow(l=l, nakano_min_eig=nakano, margin=margin, min_c=min_c)


def quantization_report(
    path: PathSpec,
    t_grid: Sequence[complex],
    l_list: Sequence[int],
    rule: QuadratureRule,
) -> list[QuantizationRow]:
    """One row per degree: Nakano minimum, Toeplitz margin, and min C over the grid."""
    if path.fiber != "p1":
        raise DomainError("quantization sweeps need a ℙ¹ fiber")
    if list(l_list) != sorted(set(l_list)):
        raise DomainError("degrees must be strictly increasing")
    return [quantization_row(path, t_grid, l, rule) for l in l_list]
