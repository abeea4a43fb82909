"""Check registry and scenario runner.

Every check name maps to one function that appends records to the report.
Checks run in the order the config lists them and the first module error
aborts the run with the scenario and check named.

The regression constants in data/fixtures.yaml marked "closed form":

- c2 = ∫ (1+|w|²)⁻² dA = π.
- hormander_gap: on O(4) with φ = 4·log(1+|z|²) and γ = 1 + ε·z̄,
  ‖f‖²_ω = 4π/5 + 23π/15·ε² and ‖μ‖² = 4π/5 + 8π/15·ε², where μ is
  already orthogonal to the holomorphic sections. The gap is π·ε².
- extension_fs = 6π·Σ (−1/2)ⁿ / ((n+1)(n+3)!).
- degeneracy_fs: for fs_positive, V = t̄·z(1+s)/((4+|t|²) + (4−|t|²)s)
  with s = |z|², so |∂̄V| = 2|t|³s/((4+|t|²) + (4−|t|²)s)², largest at
  s = (4+|t|²)/(4−|t|²) where it equals |t|³/(2(16−|t|⁴)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bergman import (
    Basis,
    default_base_rule,
    hormander_equality_witness,
    log_kernel_psh_report,
    minimal_extension_ratio,
)
from .bundle import (
    GramField,
    chern_curvature,
    degeneracy_diagnostics,
    dual_curvature_residual,
    griffiths_min,
    hormander_bound_margin,
    log_norm_psh_residual,
    nakano_min_eig,
    normal_tuple_second_derivative_residual,
    polynomial_section,
    subbundle_formula_residual,
)
from .config import DEFAULT_P1_ANGULAR, DEFAULT_P1_RADIAL, P1_NAKANO_TOLERANCE
from .errors import ConfigError, DomainError, LabError, ScenarioError
from .kahlerpath import (
    PathSpec,
    d_matrix_gap,
    depends_on_real_part_only,
    margin_scaling_ratios,
    quantization_report,
    real_path_identity_residual,
    toeplitz_bound_margin,
)
from .projbundle import (
    RankTwoMetricFamily,
    det_identity_residual,
    induced_weight,
    theorem_7_1_check,
    universal_constant,
)
from .quadrature import QuadratureRule, build_p1_rule
from .report import Report
from .scenarios import (
    Fixture,
    ScenarioConfig,
    complex_matrix,
    load_catalog,
    load_fixtures,
    parse_complex,
    parse_point,
)
from .weights import WeightFamily, build_family, combine, psh_check

log = logging.getLogger(__name__)

# identities that hold exactly up to roundoff
IDENTITY_TOLERANCE = 1e-8
FLAT_TOLERANCE = 1e-5
LOG_NORM_TOLERANCE = 1e-5
# extra plane degrees behind the Hörmander curvature; the top monomials of a
# truncated frame see a smaller curvature than the full Bergman space
TRUNCATION_PAD = 2


# ---------------------------------------------------------------------------
# Resolving config pieces
# ---------------------------------------------------------------------------

def metric_from_spec(spec: dict) -> RankTwoMetricFamily:
    kind = spec.get("kind")
    if kind == "conformal":
        return RankTwoMetricFamily.conformal(float(spec.get("c", 1.0)))
    if kind == "diagonal":
        return RankTwoMetricFamily.diagonal(float(spec["a"]), float(spec["b"]))
    if kind == "polynomial":
        return RankTwoMetricFamily.polynomial([complex_matrix(c) for c in spec["coefficients"]])
    if kind == "constant":
        return RankTwoMetricFamily.constant(complex_matrix(spec["matrix"]))
    raise ConfigError(f"Unknown metric family: {kind!r}")


def resolve_weight(spec: dict) -> WeightFamily:
    """Build a weight from {family_id, params}, including induced and combined weights."""
    family_id = spec["family_id"]
    params = dict(spec.get("params") or {})
    if family_id == "proj_induced":
        return induced_weight(metric_from_spec(params["metric"]), int(params["l"]))
    if family_id == "combination":
        return combine([(float(c), resolve_weight(sub)) for c, sub in params["terms"]])
    return build_family(family_id, params)


def parse_section(spec, size: int) -> np.ndarray:
    """An int names a frame vector; a list gives coefficients; null is zero."""
    out = np.zeros(size, dtype=complex)
    if spec is None:
        return out
    if isinstance(spec, int):
        if not 0 <= spec < size:
            raise ConfigError(f"frame index {spec} outside 0..{size - 1}")
        out[spec] = 1.0
        return out
    values = [parse_complex(v) for v in spec]
    if len(values) > size:
        raise ConfigError(f"section has {len(values)} coefficients, basis has {size}")
    out[: len(values)] = values
    return out


def pad_section(coeffs: np.ndarray, size: int) -> np.ndarray:
    """Coefficients of the same section in a frame with more trailing monomials."""
    out = np.zeros(size, dtype=complex)
    out[: len(coeffs)] = coeffs
    return out


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------

@dataclass
class RunContext:
    config: ScenarioConfig
    phi: WeightFamily
    basis: Basis
    rule: QuadratureRule
    gram_field: GramField
    fixtures: dict[str, Fixture] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.phi.base_dim

    @property
    def step(self) -> float:
        return self.config.fd_step

    def options(self, check: str) -> dict:
        return self.config.check_options(check)

    def tolerance(self, check: str) -> float:
        if check == "nakano" and self.config.is_p1:
            return self.config.tolerance(check, P1_NAKANO_TOLERANCE)
        return self.config.tolerance(check)

    def t_points(self, check: str) -> list[np.ndarray]:
        opts = self.options(check)
        if "t_points" in opts:
            return [parse_point(t) for t in opts["t_points"]]
        return self.config.points()

    def tuples(self, opts: dict, default: Sequence | None = None) -> list[list[np.ndarray]]:
        specs = opts.get("tuples", default)
        if specs is None:
            specs = self.frame_tuples()
        out = []
        for spec in specs:
            if len(spec) != self.m:
                raise ConfigError(f"a tuple needs {self.m} sections, got {len(spec)}")
            out.append([parse_section(s, self.basis.size) for s in spec])
        return out

    def frame_tuples(self) -> list[list]:
        d = self.basis.size
        if self.m == 1:
            return [[k] for k in range(d)]
        return [[k, None] for k in range(d)] + [[None, k] for k in range(d)] + [[k, k] for k in range(d)]

    def metric(self, opts: dict) -> RankTwoMetricFamily:
        spec = opts.get("metric")
        if spec is None and self.config.weight["family_id"] == "proj_induced":
            spec = self.config.weight["params"]["metric"]
        if spec is None:
            raise ConfigError("this check needs a rank-two metric family")
        return metric_from_spec(spec)

    def path(self, opts: dict) -> PathSpec:
        if "phi0" not in opts or "psi" not in opts:
            raise ConfigError("path checks need phi0 and psi weights")
        path = PathSpec(
            fiber="p1" if self.config.is_p1 else "plane_fock",
            phi0=resolve_weight(opts["phi0"]),
            psi=resolve_weight(opts["psi"]),
            degree=self.config.degree,
            cutoff=self.config.basis_cutoff,
        )
        path.validate(self.rule)
        return path

    def fixture_value(self, ref) -> tuple[float, float | None]:
        """A number, or a fixture name resolving to (value, tolerance)."""
        if isinstance(ref, str) and ref in self.fixtures:
            fx = self.fixtures[ref]
            return float(fx.value), float(fx.tolerance)
        if isinstance(ref, str):
            try:
                return float(ref), None
            except ValueError as e:
                raise ConfigError(f"unknown fixture {ref!r}") from e
        return float(ref), None


def build_context(config: ScenarioConfig) -> RunContext:
    phi = resolve_weight(config.weight)
    basis = Basis.p1(config.degree) if config.is_p1 else Basis.plane(config.basis_cutoff)
    rule = config.build_rule()
    gram_field = GramField(basis, phi, rule, mode=config.derivative_mode, step=config.fd_step)
    return RunContext(config=config, phi=phi, basis=basis, rule=rule, gram_field=gram_field, fixtures=load_fixtures())


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

CheckFn = Callable[[RunContext, Report], None]
CHECKS: dict[str, CheckFn] = {}


def register(name: str) -> Callable[[CheckFn], CheckFn]:
    def wrap(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn
    return wrap


@register("psh")
def _psh(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("psh")
    zs = ctx.config.fiber_points()
    analytic = ctx.config.derivative_mode == "analytic_weight"
    for t in ctx.t_points("psh"):
        value = psh_check(ctx.phi, [(t, z) for z in zs], ctx.step, analytic=analytic)
        report.add("psh", t, value, tol, value >= -tol)


@register("kernel_psh")
def _kernel_psh(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("kernel_psh")
    zs = ctx.config.fiber_points()
    for t in ctx.t_points("kernel_psh"):
        value = log_kernel_psh_report(ctx.phi, ctx.basis, ctx.rule, [(t, z) for z in zs], ctx.step)
        report.add("kernel_psh", t, value, tol, value >= -tol)


@register("nakano")
def _nakano(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("nakano")
    opts = ctx.options("nakano")
    expected = opts.get("expected")
    for t in ctx.t_points("nakano"):
        curv = chern_curvature(ctx.gram_field, t)
        value = nakano_min_eig(curv)
        passed = value >= -tol
        if expected is not None:
            expected = float(expected)
            atol = float(opts.get("expected_atol", 1e-3))
            passed = passed and abs(value - expected) <= atol
        report.add("nakano", t, value, tol, passed, theta_norm=curv.norm)


@register("griffiths")
def _griffiths(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("griffiths")
    for t in ctx.t_points("griffiths"):
        curv = chern_curvature(ctx.gram_field, t)
        value = griffiths_min(curv)
        nakano = nakano_min_eig(curv)
        passed = value >= -tol and value >= nakano - 1e-10
        report.add("griffiths", t, value, tol, passed, nakano=nakano)


@register("dual_identity")
def _dual_identity(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("dual_identity")
    opts = ctx.options("dual_identity")
    section = None
    if "log_norm_section" in opts:
        # [[frame index or coefficients, p(, q)], ...]
        section = polynomial_section([
            [parse_section(term[0], ctx.basis.size), *term[1:]] for term in opts["log_norm_section"]
        ])
    for t in ctx.t_points("dual_identity"):
        value = dual_curvature_residual(ctx.gram_field, t)
        report.add("dual_identity", t, value, tol, value <= tol)
        if section is not None:
            lowest = log_norm_psh_residual(ctx.gram_field, section, [t], ctx.step)
            report.add("dual_identity", t, lowest, LOG_NORM_TOLERANCE, lowest >= -LOG_NORM_TOLERANCE, "log-norm psh")


@register("subbundle_24")
def _subbundle(ctx: RunContext, report: Report) -> None:
    if ctx.config.is_p1:
        raise DomainError("the subbundle identity is checked on plane fibers")
    tol = ctx.tolerance("subbundle_24")
    opts = ctx.options("subbundle_24")
    tuples = ctx.tuples(opts, default=[[0] * ctx.m])
    antidegree = opts.get("antidegree")
    for t in ctx.t_points("subbundle_24"):
        value = max(
            subbundle_formula_residual(ctx.basis, ctx.phi, t, ctx.rule, tup, antidegree=antidegree)
            for tup in tuples
        )
        report.add("subbundle_24", t, value, tol, value <= tol)


@register("hormander_31")
def _hormander(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("hormander_31")
    opts = ctx.options("hormander_31")
    tuples = ctx.tuples(opts)
    basis, gram_field = ctx.basis, ctx.gram_field
    pad = 0 if ctx.config.is_p1 else int(opts.get("pad", TRUNCATION_PAD))
    if pad:
        # tuples stay in degree ≤ N; the curvature comes from a wider truncation
        basis = Basis.plane(ctx.basis.degree + pad)
        gram_field = GramField(basis, ctx.phi, ctx.rule, mode=ctx.config.derivative_mode, step=ctx.step)
        tuples = [[pad_section(c, basis.size) for c in tup] for tup in tuples]
    for t in ctx.t_points("hormander_31"):
        curv = chern_curvature(gram_field, t)
        margins = [
            hormander_bound_margin(basis, ctx.phi, t, ctx.rule, tup, gram_field, curv)
            for tup in tuples
        ]
        worst = int(np.argmin(margins))
        report.add("hormander_31", t, margins[worst], tol, margins[worst] >= -tol, worst_tuple=worst, pad=pad)


@register("normal_25")
def _normal(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("normal_25")
    opts = ctx.options("normal_25")
    tuples = ctx.tuples(opts, default=[[0] * ctx.m])
    for t in ctx.t_points("normal_25"):
        value = max(
            normal_tuple_second_derivative_residual(ctx.gram_field, t, tup, ctx.step) for tup in tuples
        )
        report.add("normal_25", t, value, tol, value <= tol)


@register("degeneracy_5")
def _degeneracy(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("degeneracy_5")
    opts = ctx.options("degeneracy_5")
    expect_flat = bool(opts.get("expect_flat", False))
    flat_tol = float(opts.get("flat_tolerance", FLAT_TOLERANCE))
    # {t: base point, fixture: name or number} pins the residual at one point
    reference = opts.get("reference")
    ref_t = ref_value = ref_rtol = None
    if reference is not None:
        ref_t = parse_point(reference["t"])
        ref_value, ref_rtol = ctx.fixture_value(reference["fixture"])
        ref_rtol = tol if ref_rtol is None else ref_rtol
    matched = False
    for t in ctx.t_points("degeneracy_5"):
        rec = degeneracy_diagnostics(ctx.phi, t, ctx.rule, ctx.gram_field, ctx.step)
        theta_norm = chern_curvature(ctx.gram_field, t).norm
        if expect_flat:
            passed = rec.dbar_V_residual <= tol and theta_norm <= flat_tol
            detail = "degenerate pair"
        else:
            # a flat bundle with a non-holomorphic V contradicts the degeneracy criterion
            passed = not (theta_norm <= flat_tol and rec.dbar_V_residual > tol)
            detail = "diagnostic"
        if ref_t is not None and np.allclose(t, ref_t):
            matched = True
            passed = passed and abs(rec.dbar_V_residual - ref_value) <= ref_rtol * abs(ref_value)
            detail += f", pinned {reference['fixture']}"
        report.add(
            "degeneracy_5", t, rec.dbar_V_residual, tol, passed, detail,
            min_curv_eig=rec.min_curv_eig, theta_norm=theta_norm, V_mean=rec.V_mean,
        )
    if ref_t is not None and not matched:
        raise ConfigError(f"reference point {reference['t']!r} is not on the base grid")


@register("hormander_eq_52")
def _hormander_equality(ctx: RunContext, report: Report) -> None:
    if not ctx.config.is_p1:
        raise DomainError("the equality case is checked on ℙ¹ fibers")
    tol = ctx.tolerance("hormander_eq_52")
    opts = ctx.options("hormander_eq_52")
    gamma = [parse_complex(c) for c in opts.get("gamma", [1])]
    t = parse_complex(opts.get("t", 0))
    pinned = opts.get("min_gap_ratio")
    for eps in opts.get("epsilons", [0.0, 0.1]):
        eps = float(eps)
        w = hormander_equality_witness(ctx.config.degree, ctx.phi, gamma, ctx.rule, epsilon=eps, t=t)
        if eps == 0.0:
            passed = w.relative_defect <= tol and w.orth_residual <= tol
            report.add(
                "hormander_eq_52", t, w.relative_defect, tol, passed, "equality",
                norm_mu_sq=w.norm_mu_sq, norm_f_sq=w.norm_f_sq, orth_residual=w.orth_residual,
            )
            continue
        ratio = w.gap / eps ** 2
        if pinned is not None:
            floor, _ = ctx.fixture_value(pinned)
            passed = ratio >= floor * (1 - tol)
        else:
            floor = 0.0
            passed = w.gap > 0
        report.add(
            "hormander_eq_52", t, ratio, tol, passed, f"gap/eps^2 at eps={eps}",
            gap=w.gap, floor=floor, norm_mu_sq=w.norm_mu_sq, norm_f_sq=w.norm_f_sq,
        )


@register("toeplitz_61")
def _toeplitz(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("toeplitz_61")
    opts = ctx.options("toeplitz_61")
    path = ctx.path(opts)
    zs = np.array(ctx.config.fiber_points())
    for t in ctx.t_points("toeplitz_61"):
        t0 = complex(t[0])
        margin = toeplitz_bound_margin(path, t0, ctx.rule)
        report.add("toeplitz_61", t, margin, tol, margin >= -tol, "margin")
        gap = d_matrix_gap(path, t0, ctx.rule.nodes)
        report.add("toeplitz_61", t, gap, IDENTITY_TOLERANCE, gap <= IDENTITY_TOLERANCE, "C = D11")
        if opts.get("real_path", False) or depends_on_real_part_only(path, zs):
            res = real_path_identity_residual(path, t0, zs, ctx.step)
            report.add("toeplitz_61", t, res, IDENTITY_TOLERANCE, res <= IDENTITY_TOLERANCE, "4C identity")
    if "scaling_bound" in opts:
        bound = float(opts["scaling_bound"])
        t0 = complex(ctx.t_points("toeplitz_61")[0][0])
        ratios = margin_scaling_ratios(path, t0, ctx.rule)
        worst = max(abs(r) for r in ratios)
        report.add("toeplitz_61", [t0], worst, bound, worst <= bound, "margin/s^2", ratios=ratios)


@register("quantization")
def _quantization(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("quantization")
    opts = ctx.options("quantization")
    path = ctx.path(opts)
    grid = [complex(t[0]) for t in ctx.t_points("quantization")]
    l_list = [int(x) for x in opts.get("l_list", [4, 6, 8])]
    expect_flat = bool(opts.get("expect_flat", False))
    for row in quantization_report(path, grid, l_list, ctx.rule):
        passed = row.margin >= -tol
        if expect_flat:
            passed = passed and abs(row.nakano_min_eig) <= FLAT_TOLERANCE
        report.add("quantization", None, row.margin, tol, passed, f"l={row.l}", **row.as_dict())


@register("det_identity_7")
def _det_identity(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("det_identity_7")
    opts = ctx.options("det_identity_7")
    fam = ctx.metric(opts)
    rule = ctx.rule if ctx.rule.is_p1 else build_p1_rule(DEFAULT_P1_RADIAL, DEFAULT_P1_ANGULAR)
    grid = [complex(t[0]) for t in ctx.t_points("det_identity_7")]
    fam.check_conditioning(grid)
    c2 = universal_constant(rule)
    value = det_identity_residual(fam, grid, rule, c2)
    report.add("det_identity_7", None, value, tol, value <= tol, fam.label, c2=c2)


@register("theorem_71")
def _theorem_71(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("theorem_71")
    opts = ctx.options("theorem_71")
    fam = ctx.metric(opts)
    rule = ctx.rule if ctx.rule.is_p1 else build_p1_rule(DEFAULT_P1_RADIAL, DEFAULT_P1_ANGULAR)
    grid = [complex(t[0]) for t in ctx.t_points("theorem_71")]
    expected = {int(k): float(v) for k, v in (opts.get("expected") or {}).items()}
    for m in opts.get("m_list", [0, 1]):
        m = int(m)
        result = theorem_7_1_check(fam, grid, m, rule, step=ctx.step)
        passed = result.min_nakano >= -tol
        if m in expected:
            passed = passed and abs(result.min_nakano - expected[m]) <= tol
        report.add(
            "theorem_71", None, result.min_nakano, tol, passed, f"E({result.degree})",
            hypothesis_min=result.hypothesis_min, strict=result.strict,
        )


@register("extension_ratio")
def _extension(ctx: RunContext, report: Report) -> None:
    tol = ctx.tolerance("extension_ratio")
    opts = ctx.options("extension_ratio")
    if ctx.m != 1:
        raise DomainError("the extension ratio is computed over a one-dimensional base")
    u = parse_section(opts.get("u", 0), ctx.basis.size)
    cutoffs = [int(c) for c in opts.get("cutoffs", [0, 1, 2, 3])]
    base_rule = default_base_rule(int(opts.get("base_radial", 12)), int(opts.get("base_angular", 24)))
    report.quadrature.append(base_rule.certificate())
    expected = expected_tol = None
    if "expected" in opts:
        expected, expected_tol = ctx.fixture_value(opts["expected"])
    previous = math.inf
    for i, cutoff in enumerate(cutoffs):
        value = minimal_extension_ratio(ctx.phi, u, cutoff, ctx.rule, ctx.basis, base_rule)
        passed = value <= previous + tol * max(1.0, abs(previous) if math.isfinite(previous) else 1.0)
        detail = f"cutoff={cutoff}"
        if expected is not None and i == len(cutoffs) - 1:
            limit = expected_tol if expected_tol is not None else tol
            passed = passed and abs(value - expected) <= limit * max(1.0, abs(expected))
            detail += f", expected {expected!r}"
        report.add("extension_ratio", None, value, tol, passed, detail, cutoff=cutoff)
        previous = value


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def run_scenario(config: ScenarioConfig, on_check: Callable[[str], None] | None = None) -> Report:
    """Run every listed check; module errors are re-raised with scenario context."""
    report = Report(scenario_id=config.scenario_id, config_hash=config.config_hash(), code_version=__version__)
    try:
        ctx = build_context(config)
    except LabError as e:
        raise ScenarioError(config.scenario_id, "setup", e) from e
    report.quadrature.append(ctx.rule.certificate())
    for check in config.checks:
        log.debug("Running %s/%s", config.scenario_id, check)
        try:
            CHECKS[check](ctx, report)
        except LabError as e:
            raise ScenarioError(config.scenario_id, check, e) from e
        if on_check is not None:
            on_check(check)
    return report


def measure_fixtures() -> dict[str, Fixture]:
    """Re-measure the regression constants from their defining scenarios."""
    rule = build_p1_rule(DEFAULT_P1_RADIAL, DEFAULT_P1_ANGULAR)
    c2 = universal_constant(rule)
    fs4 = build_family("fs_family", {"l": 4})
    eps = 0.1
    witness = hormander_equality_witness(4, fs4, [1], rule, epsilon=eps)
    catalog = load_catalog()
    ext_config = catalog["extension_fs"]
    ext_report = run_scenario(ext_config)
    ext_value = ext_report.records[-1].value
    fs_ctx = build_context(catalog["fs_positive"])
    degeneracy = degeneracy_diagnostics(fs_ctx.phi, parse_point(0.3), fs_ctx.rule, fs_ctx.gram_field, fs_ctx.step)
    return {
        "c2": Fixture("c2", c2, 1e-10, "measured", None, "norm² of the E(2) generator for h_V = I"),
        "hormander_gap": Fixture(
            "hormander_gap", witness.gap / eps ** 2, 1e-6, "measured", None,
            "gap/eps^2 for O(4), gamma = 1 + eps·z̄",
        ),
        "extension_fs": Fixture(
            "extension_fs", ext_value, 1e-7, "measured", ext_config.config_hash(),
            "minimal extension ratio of e0 for the fs_family path",
        ),
        "degeneracy_fs": Fixture(
            "degeneracy_fs", degeneracy.dbar_V_residual, 5e-3, "measured", catalog["fs_positive"].config_hash(),
            "max |∂̄V| for the fs_positive family at t = 0.3",
        ),
    }
