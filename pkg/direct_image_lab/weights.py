"""Weight potentials φ(t, z), their Wirtinger derivatives, and the D-matrix.

A weight family is a real function of a base point t ∈ ℂ^m (m = 1 or 2) and
a fiber coordinate z ∈ ℂ. Evaluation is vectorized over z so a whole
quadrature rule can be fed at once. Built-in families carry a closed-form
derivative table; anything else falls back to central differences with one
Richardson level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_FD_STEP, HERMITIAN_RTOL
from .errors import DegenerateFiberError, DomainError

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Data classes
# ---------------------------------------------------------------------------

@dataclass
class DerivativeSet:
    """First and mixed second Wirtinger derivatives at (t, z).

    Arrays carry the shape of z as trailing axes.
    """
    grad_t: np.ndarray      # φ_j, shape (m, ...)
    hess_tt: np.ndarray     # φ_{jk̄}, shape (m, m, ...)
    grad_z: np.ndarray      # φ_z
    hess_zz: np.ndarray     # φ_{zz̄}, real
    mixed_tz: np.ndarray    # φ_{jz̄}, shape (m, ...)
    holo_tz: np.ndarray     # φ_{jz}, shape (m, ...)

    @property
    def base_dim(self) -> int:
        return int(self.grad_t.shape[0])

    def symmetrized(self) -> DerivativeSet:
        h = self.hess_tt
        return DerivativeSet(
            grad_t=self.grad_t,
            hess_tt=0.5 * (h + np.conj(np.swapaxes(h, 0, 1))),
            grad_z=self.grad_z,
            hess_zz=np.real(self.hess_zz),
            mixed_tz=self.mixed_tz,
            holo_tz=self.holo_tz,
        )


Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
AnalyticTable = Callable[[np.ndarray, np.ndarray], DerivativeSet]


@dataclass(frozen=True, eq=False)
class WeightFamily:
    family_id: str
    base_dim: int
    evaluate: Evaluator
    analytic: AnalyticTable | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, t, z) -> np.ndarray:
        return self.evaluate(as_base_point(t, self.base_dim), np.asarray(z, dtype=complex))

    @property
    def label(self) -> str:
        if not self.params:
            return self.family_id
        inner = ", ".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family_id}({inner})"


def as_base_point(t, m: int) -> np.ndarray:
    """Coerce a scalar or sequence into a complex base point of length m."""
    point = np.atleast_1d(np.asarray(t, dtype=complex))
    if point.shape != (m,):
        raise DomainError(f"base point must have {m} coordinates, got {point.shape}")
    return point


# ---------------------------------------------------------------------------
# Polynomials in (t, t̄)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TPoly:
    """Σ c·t^p·t̄^q in a single base variable."""
    terms: tuple[tuple[complex, int, int], ...] = ()

    @classmethod
    def from_spec(cls, spec) -> TPoly:
        """Accept a number, [[coeff, p, q], ...] or [{"coeff", "t", "tbar"}, ...]."""
        if spec is None:
            return cls()
        if isinstance(spec, (int, float, complex, str)):
            return cls(((complex(spec), 0, 0),))
        terms = []
        for term in spec:
            if isinstance(term, dict):
                terms.append((complex(term["coeff"]), int(term.get("t", 0)), int(term.get("tbar", 0))))
            else:
                coeff, p, q = term
                terms.append((complex(coeff), int(p), int(q)))
        return cls(tuple(terms))

    def conjugate(self) -> TPoly:
        return TPoly(tuple((np.conj(c), q, p) for c, p, q in self.terms))

    def real(self) -> TPoly:
        """½(P + P̄), real-valued for every t."""
        halves = [(0.5 * c, p, q) for c, p, q in self.terms]
        halves += [(0.5 * np.conj(c), q, p) for c, p, q in self.terms]
        return TPoly(tuple(halves))

    def d_t(self) -> TPoly:
        return TPoly(tuple((c * p, p - 1, q) for c, p, q in self.terms if p > 0))

    def d_tbar(self) -> TPoly:
        return TPoly(tuple((c * q, p, q - 1) for c, p, q in self.terms if q > 0))

    def scaled(self, factor: float) -> TPoly:
        return TPoly(tuple((c * factor, p, q) for c, p, q in self.terms))

    def __call__(self, t: complex) -> complex:
        return complex(sum(c * t ** p * np.conj(t) ** q for c, p, q in self.terms))

    def to_spec(self) -> list[list]:
        return [[repr(c), p, q] for c, p, q in self.terms]


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

class _ShiftedCalls:
    """Memoized evaluations of f at coordinate shifts of a fixed point."""

    def __init__(self, f: Callable, coords: Sequence) -> None:
        self.f = f
        self.coords = list(coords)
        self._cache: dict[tuple, np.ndarray] = {}

    def __call__(self, *shifts: tuple[int, complex]) -> np.ndarray:
        total: dict[int, complex] = {}
        for index, delta in shifts:
            total[index] = total.get(index, 0) + delta
        key = tuple(sorted((i, complex(d).real, complex(d).imag) for i, d in total.items()))
        if key not in self._cache:
            coords = list(self.coords)
            for index, delta in total.items():
                coords[index] = coords[index] + delta
            value = np.asarray(self.f(*coords))
            if not np.all(np.isfinite(value)):
                raise DomainError(f"non-finite value at stencil shift {key}")
            self._cache[key] = value
        return self._cache[key]


def _first(F: _ShiftedCalls, i: int, a: complex, h: float) -> np.ndarray:
    return (F((i, a * h)) - F((i, -a * h))) / (2 * h)


def _second(F: _ShiftedCalls, i: int, a: complex, k: int, b: complex, h: float) -> np.ndarray:
    if i == k and a == b:
        return (F((i, a * h)) - 2 * F() + F((i, -a * h))) / h ** 2
    return (
        F((i, a * h), (k, b * h)) - F((i, a * h), (k, -b * h))
        - F((i, -a * h), (k, b * h)) + F((i, -a * h), (k, -b * h))
    ) / (4 * h ** 2)


def _extrapolate(stencil: Callable[[float], np.ndarray], step: float, richardson: bool) -> np.ndarray:
    coarse = stencil(step)
    if not richardson:
        return coarse
    return (4 * stencil(step / 2) - coarse) / 3


@dataclass
class ComplexDerivatives:
    value: np.ndarray
    d: np.ndarray         # ∂_i f, shape (n, ...)
    dbar: np.ndarray      # ∂̄_i f
    ddbar: np.ndarray     # ∂_i ∂̄_k f, shape (n, n, ...)
    dd: dict[tuple[int, int], np.ndarray]


def complex_derivatives(
    f: Callable,
    coords: Sequence,
    step: float = DEFAULT_FD_STEP,
    *,
    richardson: bool = True,
    holomorphic_pairs: Sequence[tuple[int, int]] = (),
) -> ComplexDerivatives:
    """Central-difference Wirtinger derivatives of f(*coords).

    Coordinates may be complex scalars or arrays (shifts broadcast). The
    value of f may be any numeric array, e.g. a Gram matrix.
    """
    F = _ShiftedCalls(f, coords)
    n = len(coords)
    dx = [_extrapolate(lambda h, i=i: _first(F, i, 1, h), step, richardson) for i in range(n)]
    dy = [_extrapolate(lambda h, i=i: _first(F, i, 1j, h), step, richardson) for i in range(n)]
    d = np.stack([(dx[i] - 1j * dy[i]) / 2 for i in range(n)])
    dbar = np.stack([(dx[i] + 1j * dy[i]) / 2 for i in range(n)])

    def mixed(i: int, a: complex, k: int, b: complex) -> np.ndarray:
        return _extrapolate(lambda h: _second(F, i, a, k, b, h), step, richardson)

    rows = []
    for i in range(n):
        row = []
        for k in range(n):
            if i == k:
                laplace = _extrapolate(
                    lambda h, i=i: (
                        F((i, h)) + F((i, -h)) + F((i, 1j * h)) + F((i, -1j * h)) - 4 * F()
                    ) / h ** 2,
                    step, richardson,
                )
                row.append(laplace / 4)
            else:
                row.append((
                    mixed(i, 1, k, 1) + mixed(i, 1j, k, 1j)
                    + 1j * (mixed(i, 1, k, 1j) - mixed(i, 1j, k, 1))
                ) / 4)
        rows.append(np.stack(row))
    ddbar = np.stack(rows)

    dd = {}
    for i, k in holomorphic_pairs:
        dd[(i, k)] = (
            mixed(i, 1, k, 1) - mixed(i, 1j, k, 1j)
            - 1j * (mixed(i, 1, k, 1j) + mixed(i, 1j, k, 1))
        ) / 4
    return ComplexDerivatives(value=F(), d=d, dbar=dbar, ddbar=ddbar, dd=dd)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def wirtinger(
    phi: WeightFamily,
    t,
    z,
    step: float | None = None,
    *,
    analytic: bool = True,
    richardson: bool = True,
) -> DerivativeSet:
    """Derivative table of φ at (t, z); z may be an array of nodes."""
    m = phi.base_dim
    point = as_base_point(t, m)
    zz = np.asarray(z, dtype=complex)
    if analytic and phi.analytic is not None:
        return phi.analytic(point, zz).symmetrized()

    def f(*coords):
        return phi.evaluate(np.array(coords[:m], dtype=complex), coords[m])

    cd = complex_derivatives(
        f, [*point, zz], step or DEFAULT_FD_STEP,
        richardson=richardson,
        holomorphic_pairs=[(j, m) for j in range(m)],
    )
    return DerivativeSet(
        grad_t=cd.d[:m],
        hess_tt=cd.ddbar[:m, :m],
        grad_z=cd.d[m],
        hess_zz=np.real(cd.ddbar[m, m]),
        mixed_tz=cd.ddbar[:m, m],
        holo_tz=np.stack([cd.dd[(j, m)] for j in range(m)]),
    ).symmetrized()


def d_matrix_from(derivs: DerivativeSet) -> np.ndarray:
    """D_{jk} = φ_{jk̄} − φ_{jz̄}·conj(φ_{kz̄})/φ_{zz̄}, vectorized over nodes."""
    if np.any(derivs.hess_zz <= 0):
        raise DegenerateFiberError(
            f"fiber Hessian φ_zz̄ not positive (min {np.min(derivs.hess_zz):.3g})"
        )
    v = derivs.mixed_tz
    outer = v[:, None] * np.conj(v)[None, :]
    d = derivs.hess_tt - outer / derivs.hess_zz
    return 0.5 * (d + np.conj(np.swapaxes(d, 0, 1)))


def d_matrix(phi: WeightFamily, t, z: complex, step: float | None = None, **kwargs) -> np.ndarray:
    """Hermitian m×m D-matrix at a single point (t, z)."""
    derivs = wirtinger(phi, t, complex(z), step, **kwargs)
    return np.asarray(d_matrix_from(derivs), dtype=complex)


def joint_hessian(derivs: DerivativeSet) -> np.ndarray:
    """(m+1)×(m+1) complex Hessian in (t, z), last axis pair moved to the front."""
    m = derivs.base_dim
    shape = np.shape(derivs.hess_zz)
    out = np.zeros((m + 1, m + 1, *shape), dtype=complex)
    out[:m, :m] = derivs.hess_tt
    out[:m, m] = derivs.mixed_tz
    out[m, :m] = np.conj(derivs.mixed_tz)
    out[m, m] = derivs.hess_zz
    return out


def hessian_quotient_check(phi: WeightFamily, t, z: complex, step: float | None = None, **kwargs) -> float:
    """|D₁₁ − det(joint Hessian)/φ_{zz̄}| for base dimension 1."""
    if phi.base_dim != 1:
        raise DomainError("hessian_quotient_check needs base dimension 1")
    derivs = wirtinger(phi, t, complex(z), step, **kwargs)
    d11 = d_matrix_from(derivs)[0, 0]
    det = np.linalg.det(joint_hessian(derivs))
    return float(abs(d11 - det / derivs.hess_zz))


def psh_check(phi: WeightFamily, points: Sequence[tuple], step: float | None = None, **kwargs) -> float:
    """Minimum over points of the smallest eigenvalue of the joint Hessian."""
    lowest = np.inf
    for t, z in points:
        derivs = wirtinger(phi, t, complex(z), step, **kwargs)
        hess = joint_hessian(derivs)
        hess = 0.5 * (hess + hess.conj().T)
        lowest = min(lowest, float(np.linalg.eigvalsh(hess)[0]))
    log.debug("psh_check %s over %d points: %.3g", phi.label, len(points), lowest)
    return lowest


def check_hermitian(matrix: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = max(float(np.max(np.abs(matrix))), 1e-300)
    return float(np.max(np.abs(matrix - matrix.conj().T))) <= rtol * scale


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def _zeros_like(z: np.ndarray, lead: tuple = ()) -> np.ndarray:
    return np.zeros(lead + np.shape(z), dtype=complex)


def quadratic(hermitian, symmetric=None, family_id: str = "quadratic") -> WeightFamily:
    """φ = pᴴQp + Re(pᵀSp) with p = (t₁, …, t_m, z)."""
    Q = np.asarray(hermitian, dtype=complex)
    dim = Q.shape[0]
    S = np.zeros_like(Q) if symmetric is None else np.asarray(symmetric, dtype=complex)
    if not np.allclose(Q, Q.conj().T) or not np.allclose(S, S.T):
        raise DomainError("quadratic weight needs Hermitian Q and symmetric S")
    m = dim - 1

    def coords(t, z):
        return [np.broadcast_to(t[i], np.shape(z)) for i in range(m)] + [z]

    def evaluate(t, z):
        p = coords(t, z)
        hermitian_part = sum(
            np.conj(p[a]) * Q[a, b] * p[b] for a in range(dim) for b in range(dim)
        )
        symmetric_part = sum(p[a] * S[a, b] * p[b] for a in range(dim) for b in range(dim))
        return np.real(hermitian_part) + np.real(symmetric_part)

    def table(t, z):
        p = coords(t, z)
        grad = [sum(np.conj(p[a]) * Q[a, i] + S[i, a] * p[a] for a in range(dim)) for i in range(dim)]
        ones = np.ones(np.shape(z))
        return DerivativeSet(
            grad_t=np.stack(grad[:m]),
            hess_tt=np.stack([np.stack([Q[k, j] * ones for k in range(m)]) for j in range(m)]),
            grad_z=grad[m],
            hess_zz=np.real(Q[m, m]) * ones,
            mixed_tz=np.stack([Q[m, j] * ones for j in range(m)]),
            holo_tz=np.stack([S[j, m] * ones for j in range(m)]),
        )

    return WeightFamily(
        family_id=family_id,
        base_dim=m,
        evaluate=evaluate,
        analytic=table,
        params={"hermitian": Q.tolist(), "symmetric": S.tolist()},
    )


def fock_shifted() -> WeightFamily:
    """φ = |z − t|²."""
    fam = quadratic([[1, -1], [-1, 1]], family_id="fock_shifted")
    return WeightFamily("fock_shifted", 1, fam.evaluate, fam.analytic, {})


def fock_decoupled(c: float = 1.0) -> WeightFamily:
    """φ = |z|² + c|t|²."""
    fam = quadratic([[c, 0], [0, 1]])
    return WeightFamily("fock_decoupled", 1, fam.evaluate, fam.analytic, {"c": c})


def fock_scaled(m: int = 1) -> WeightFamily:
    """φ = (1 + |t|²)|z|²."""
    if m not in (1, 2):
        raise DomainError(f"base dimension must be 1 or 2, got {m}")

    def evaluate(t, z):
        return (1.0 + float(np.sum(np.abs(t) ** 2))) * np.abs(z) ** 2

    def table(t, z):
        a = 1.0 + float(np.sum(np.abs(t) ** 2))
        s = np.abs(z) ** 2
        tb = np.conj(t)
        eye = np.eye(m)
        return DerivativeSet(
            grad_t=np.stack([tb[j] * s for j in range(m)]).astype(complex),
            hess_tt=np.stack([np.stack([eye[j, k] * s for k in range(m)]) for j in range(m)]).astype(complex),
            grad_z=a * np.conj(z),
            hess_zz=a * np.ones(np.shape(z)),
            mixed_tz=np.stack([tb[j] * z for j in range(m)]),
            holo_tz=np.stack([tb[j] * np.conj(z) for j in range(m)]),
        )

    return WeightFamily("fock_scaled", m, evaluate, table, {"m": m})


def fock_general(q, ell, c) -> WeightFamily:
    """φ = q(t)|z|² + 2Re(ℓ(t)z) + c(t) with polynomials in (t, t̄).

    q and c are made real by symmetrization; ℓ is taken as given.
    """
    q = TPoly.from_spec(q).real() if not isinstance(q, TPoly) else q.real()
    c = TPoly.from_spec(c).real() if not isinstance(c, TPoly) else c.real()
    ell = ell if isinstance(ell, TPoly) else TPoly.from_spec(ell)
    ellbar = ell.conjugate()
    q_t, c_t, ell_t, ellbar_t = q.d_t(), c.d_t(), ell.d_t(), ellbar.d_t()

    def evaluate(t, z):
        tt = t[0]
        s = np.abs(z) ** 2
        return np.real(q(tt)) * s + 2 * np.real(ell(tt) * z) + np.real(c(tt))

    def table(t, z):
        tt = t[0]
        s = np.abs(z) ** 2
        zb = np.conj(z)
        grad_t = q_t(tt) * s + ell_t(tt) * z + ellbar_t(tt) * zb + c_t(tt)
        hess = (
            q_t.d_tbar()(tt) * s + ell_t.d_tbar()(tt) * z
            + ellbar_t.d_tbar()(tt) * zb + c_t.d_tbar()(tt)
        )
        return DerivativeSet(
            grad_t=np.asarray(grad_t)[None],
            hess_tt=np.asarray(np.real(hess), dtype=complex)[None, None],
            grad_z=np.real(q(tt)) * zb + ell(tt),
            hess_zz=np.real(q(tt)) * np.ones(np.shape(z)),
            mixed_tz=np.asarray(q_t(tt) * z + ellbar_t(tt))[None],
            holo_tz=np.asarray(q_t(tt) * zb + ell_t(tt))[None],
        )

    params = {"q": q.to_spec(), "ell": ell.to_spec(), "c": c.to_spec()}
    return WeightFamily("fock_general", 1, evaluate, table, params)


# chart functions χ_i(z) of the fs_family perturbation, with ∂_z, ∂_z̄, ∂_z∂_z̄
def _chart_function(index: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    s = np.abs(z) ** 2
    zb = np.conj(z)
    one = 1.0 + s
    if index == 0:
        zero = np.zeros(np.shape(z), dtype=complex)
        return np.ones(np.shape(z)), zero, zero, np.zeros(np.shape(z))
    if index == 1:
        dz = zb / one ** 2
        return s / one, dz, np.conj(dz), (1 - s) / one ** 3
    if index == 2:
        dz = (1 - zb ** 2) / (2 * one ** 2)
        return np.real(z) / one, dz, np.conj(dz), -2 * np.real(z) / one ** 3
    if index == 3:
        dz = (1 + zb ** 2) / (2j * one ** 2)
        return np.imag(z) / one, dz, np.conj(dz), -2 * np.imag(z) / one ** 3
    raise DomainError(f"chart function index must be 0..3, got {index}")


CHART_FUNCTIONS = ("one", "fs_potential", "re_chart", "im_chart")


def fs_family(l: float, psi: Sequence[tuple] = (), scale: float = 1.0) -> WeightFamily:
    """φ = scale·(l·log(1+|z|²) + Σ Pᵢ(t)·χᵢ(z)).

    `psi` lists (polynomial spec, chart index) pairs; chart indices name
    1, |z|²/(1+|z|²), Re z/(1+|z|²), Im z/(1+|z|²).
    """
    terms = [
        ((P if isinstance(P, TPoly) else TPoly.from_spec(P)).real(), int(idx))
        for P, idx in psi
    ]

    def evaluate(t, z):
        out = l * np.log1p(np.abs(z) ** 2)
        for P, idx in terms:
            out = out + np.real(P(t[0])) * _chart_function(idx, z)[0]
        return scale * out

    def table(t, z):
        tt = t[0]
        s = np.abs(z) ** 2
        grad_t = _zeros_like(z)
        hess = np.zeros(np.shape(z))
        grad_z = l * np.conj(z) / (1 + s)
        hess_zz = l / (1 + s) ** 2
        mixed = _zeros_like(z)
        holo = _zeros_like(z)
        for P, idx in terms:
            chi, chi_z, chi_zb, chi_zzb = _chart_function(idx, z)
            P_t = P.d_t()
            grad_t = grad_t + P_t(tt) * chi
            hess = hess + np.real(P_t.d_tbar()(tt)) * chi
            grad_z = grad_z + np.real(P(tt)) * chi_z
            hess_zz = hess_zz + np.real(P(tt)) * chi_zzb
            mixed = mixed + P_t(tt) * chi_zb
            holo = holo + P_t(tt) * chi_z
        return DerivativeSet(
            grad_t=scale * grad_t[None],
            hess_tt=scale * hess[None, None].astype(complex),
            grad_z=scale * grad_z,
            hess_zz=scale * hess_zz,
            mixed_tz=scale * mixed[None],
            holo_tz=scale * holo[None],
        )

    params = {"l": l, "psi": [[P.to_spec(), idx] for P, idx in terms]}
    if scale != 1.0:
        params["scale"] = scale
    return WeightFamily("fs_family", 1, evaluate, table, params)


def mobius_flow(l: float) -> WeightFamily:
    """φ = l·log(1+|z−t|²), the Fubini-Study weight pulled back by translation."""

    def evaluate(t, z):
        return l * np.log1p(np.abs(z - t[0]) ** 2)

    def table(t, z):
        u = z - t[0]
        ub = np.conj(u)
        q = 1.0 + np.abs(u) ** 2
        return DerivativeSet(
            grad_t=(-l * ub / q)[None],
            hess_tt=(l / q ** 2)[None, None].astype(complex),
            grad_z=l * ub / q,
            hess_zz=l / q ** 2,
            mixed_tz=(-l / q ** 2)[None].astype(complex),
            holo_tz=(l * ub ** 2 / q ** 2)[None],
        )

    return WeightFamily("mobius_flow", 1, evaluate, table, {"l": l})


def combine(terms: Sequence[tuple[float, WeightFamily]], family_id: str = "combination") -> WeightFamily:
    """Σ cᵢ·φᵢ; analytic when every summand is."""
    dims = {fam.base_dim for _, fam in terms}
    if len(dims) != 1:
        raise DomainError(f"cannot combine weights of base dimensions {sorted(dims)}")
    m = dims.pop()

    def evaluate(t, z):
        return sum(c * fam.evaluate(t, z) for c, fam in terms)

    table = None
    if all(fam.analytic is not None for _, fam in terms):
        def table(t, z):
            parts = [(c, fam.analytic(t, z)) for c, fam in terms]
            return DerivativeSet(**{
                name: sum(c * getattr(d, name) for c, d in parts)
                for name in ("grad_t", "hess_tt", "grad_z", "hess_zz", "mixed_tz", "holo_tz")
            })

    params = {"terms": [[c, fam.label] for c, fam in terms]}
    return WeightFamily(family_id, m, evaluate, table, params)


def scaled(phi: WeightFamily, factor: float) -> WeightFamily:
    return combine([(factor, phi)], family_id=phi.family_id)


def rotated(phi: WeightFamily, U) -> WeightFamily:
    """φ_U(t, z) = φ(Ut, z) for a unitary U on the base."""
    U = np.asarray(U, dtype=complex)
    m = phi.base_dim
    if U.shape != (m, m):
        raise DomainError(f"rotation must be {m}×{m}")

    def evaluate(t, z):
        return phi.evaluate(U @ t, z)

    table = None
    if phi.analytic is not None:
        def table(t, z):
            d = phi.analytic(U @ t, z)
            return DerivativeSet(
                grad_t=np.einsum("aj,a...->j...", U, d.grad_t),
                hess_tt=np.einsum("aj,bk,ab...->jk...", U, np.conj(U), d.hess_tt),
                grad_z=d.grad_z,
                hess_zz=d.hess_zz,
                mixed_tz=np.einsum("aj,a...->j...", U, d.mixed_tz),
                holo_tz=np.einsum("aj,a...->j...", U, d.holo_tz),
            )

    return WeightFamily(f"{phi.family_id}_rotated", m, evaluate, table, dict(phi.params))


def build_family(family_id: str, params: dict | None = None) -> WeightFamily:
    """Resolve a built-in family by identifier and parameters."""
    params = dict(params or {})
    builders: dict[str, Callable[..., WeightFamily]] = {
        "fock_scaled": lambda p: fock_scaled(int(p.get("m", 1))),
        "fock_shifted": lambda p: fock_shifted(),
        "fock_decoupled": lambda p: fock_decoupled(float(p.get("c", 1.0))),
        "fock_general": lambda p: fock_general(p.get("q", 1), p.get("ell"), p.get("c")),
        "fs_family": lambda p: fs_family(float(p["l"]), [tuple(x) for x in p.get("psi", [])]),
        "mobius_flow": lambda p: mobius_flow(float(p["l"])),
        "quadratic": lambda p: quadratic(
            np.asarray(p["hermitian"], dtype=complex),
            None if p.get("symmetric") is None else np.asarray(p["symmetric"], dtype=complex),
        ),
    }
    if family_id not in builders:
        raise DomainError(f"Unknown weight family: {family_id!r}")
    return builders[family_id](params)
