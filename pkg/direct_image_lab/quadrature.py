"""Deterministic quadrature rules for planar domains and the ℙ¹ chart.

Every rule is a polar tensor rule: Gauss-Legendre in a radial variable after
a smooth substitution, uniform trapezoid in angle. Reductions go through
numpy's pairwise summation along a contiguous axis, so repeated runs give
bit-identical sums.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, roots_legendre

from .errors import DomainError

log = logging.getLogger(__name__)

DOMAIN_KINDS = ("disk", "gaussian_plane")


@dataclass(frozen=True)
class PlaneDomainSpec:
    kind: str
    radius: float = 1.0
    envelope_scale: float = 1.0
    cutoff_radius: float = 8.0

    def __post_init__(self) -> None:
        if self.kind not in DOMAIN_KINDS:
            raise DomainError(f"Unknown plane domain kind: {self.kind!r}")
        checked = (
            {"radius": self.radius} if self.kind == "disk"
            else {"envelope_scale": self.envelope_scale, "cutoff_radius": self.cutoff_radius}
        )
        for name, value in checked.items():
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")

    @classmethod
    def disk(cls, radius: float = 1.0) -> PlaneDomainSpec:
        return cls(kind="disk", radius=radius)

    @classmethod
    def gaussian_plane(cls, envelope_scale: float, cutoff_radius: float) -> PlaneDomainSpec:
        return cls(
            kind="gaussian_plane",
            envelope_scale=envelope_scale,
            cutoff_radius=cutoff_radius,
        )

    @property
    def outer_radius(self) -> float:
        return self.radius if self.kind == "disk" else self.cutoff_radius

    @property
    def tag(self) -> str:
        if self.kind == "disk":
            return f"disk(radius={self.radius!r})"
        return (
            f"gaussian_plane(envelope_scale={self.envelope_scale!r}, "
            f"cutoff_radius={self.cutoff_radius!r})"
        )


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain_tag: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise DomainError(
                f"nodes and weights must be 1-D of equal length, got "
                f"{self.nodes.shape} and {self.weights.shape}"
            )
        if not np.all(self.weights > 0):
            raise DomainError("quadrature weights must be strictly positive")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def is_p1(self) -> bool:
        return self.domain_tag == "p1_chart"

    def certificate(self) -> dict:
        """Provenance record for reports."""
        return {
            "domain": self.domain_tag,
            "nodes": self.size,
            "total_weight": self.total_weight,
            **self.metadata,
        }


def _check_counts(n_radial: int, n_angular: int) -> None:
    if n_radial < 2 or n_angular < 4:
        raise DomainError(
            f"need n_radial >= 2 and n_angular >= 4, got {n_radial}, {n_angular}"
        )


def _unit_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to (0, 1)."""
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


def _polar(s: np.ndarray, radial_w: np.ndarray, n_angular: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    nodes = np.sqrt(s)[:, None] * np.exp(1j * theta)[None, :]
    weights = np.repeat(radial_w * (2.0 * np.pi / n_angular), n_angular).reshape(nodes.shape)
    return np.ascontiguousarray(nodes.ravel()), np.ascontiguousarray(weights.ravel())


def min_cutoff_radius(envelope_scale: float, degree: int) -> float:
    """Smallest cutoff radius accepted for a Gaussian plane at target degree."""
    return math.sqrt(envelope_scale * (2 * degree + 10 * math.sqrt(2 * degree)))


def build_plane_rule(
    spec: PlaneDomainSpec,
    n_radial: int,
    n_angular: int,
    degree: int | None = None,
) -> QuadratureRule:
    """Polar rule on a disk or a truncated Gaussian plane.

    The radial variable is s = r², so dA = ½ ds dθ and the monomial moments
    ∫ |z|^{2a} dA become polynomials in s.

    Args:
        spec: Domain description.
        n_radial: Gauss-Legendre points in s.
        n_angular: Trapezoid points in θ.
        degree: Target polynomial degree N. For a Gaussian plane the cutoff
            must satisfy cutoff² >= scale·(2N + 10·√(2N)).
    """
    _check_counts(n_radial, n_angular)
    metadata: dict = {"n_radial": n_radial, "n_angular": n_angular}
    if spec.kind == "gaussian_plane":
        n = degree or 0
        if degree is not None and spec.cutoff_radius < min_cutoff_radius(spec.envelope_scale, n):
            raise DomainError(
                f"cutoff_radius {spec.cutoff_radius} too small for degree {n} "
                f"(need >= {min_cutoff_radius(spec.envelope_scale, n):.3f})"
            )
        # relative mass of s^N e^{-s/scale} beyond the cutoff
        metadata["truncation_bound"] = float(
            gammaincc(n + 1, spec.cutoff_radius ** 2 / spec.envelope_scale)
        )
        metadata["degree"] = n
    else:
        metadata["truncation_bound"] = 0.0

    outer_sq = spec.outer_radius ** 2
    x, w = _unit_legendre(n_radial)
    nodes, weights = _polar(outer_sq * x, 0.5 * outer_sq * w, n_angular)
    log.debug("Plane rule %s: %d nodes", spec.tag, nodes.size)
    return QuadratureRule(nodes=nodes, weights=weights, domain_tag=spec.tag, metadata=metadata)


def build_p1_rule(n_radial: int, n_angular: int) -> QuadratureRule:
    """Rule on the affine chart of ℙ¹ with Euclidean area weights.

    Substituting x = s/(1+s), s = |z|², turns ∫ s^k (1+s)^{-d} dA into
    π ∫ x^k (1-x)^{d-k-2} dx, a polynomial integrand whenever d >= k+2.
    """
    _check_counts(n_radial, n_angular)
    x, w = _unit_legendre(n_radial)
    s = x / (1.0 - x)
    nodes, weights = _polar(s, 0.5 * w / (1.0 - x) ** 2, n_angular)
    fs_area = float(np.sum(weights / (1.0 + np.abs(nodes) ** 2) ** 2))
    metadata = {
        "n_radial": n_radial,
        "n_angular": n_angular,
        "fs_area": fs_area,
        "truncation_bound": 0.0,
    }
    return QuadratureRule(nodes=nodes, weights=weights, domain_tag="p1_chart", metadata=metadata)


def integrate(rule: QuadratureRule, samples) -> complex:
    """Σ weightᵢ·sampleᵢ with pairwise summation in node order."""
    values = np.asarray(samples)
    if values.shape != rule.nodes.shape:
        raise ValueError(
            f"samples length {values.shape} does not match {rule.size} nodes"
        )
    return complex(np.sum(rule.weights * values))


def moment_matrix(
    rule: QuadratureRule,
    left: np.ndarray,
    right: np.ndarray,
    density: np.ndarray | None = None,
) -> np.ndarray:
    """M[β, α] = Σₙ wₙ ρₙ conj(left[β, n]) right[α, n].

    Rows are reduced one at a time along the node axis so every entry uses
    the same pairwise summation as `integrate`.
    """
    weighted = rule.weights if density is None else rule.weights * density
    right_w = np.ascontiguousarray(right * weighted[None, :])
    left_c = np.conj(left)
    out = np.empty((left.shape[0], right.shape[0]), dtype=complex)
    for beta in range(left.shape[0]):
        out[beta] = np.sum(left_c[beta][None, :] * right_w, axis=-1)
    return out
