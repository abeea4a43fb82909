"""Scenario configuration, the built-in catalog, and pinned fixtures."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .config import (
    CHECK_NAMES,
    DEFAULT_BASIS_CUTOFF,
    DEFAULT_CUTOFF_RADIUS,
    DEFAULT_FD_STEP,
    DEFAULT_N_ANGULAR,
    DEFAULT_N_RADIAL,
    DEFAULT_P1_ANGULAR,
    DEFAULT_P1_RADIAL,
    DEFAULT_TOLERANCES,
    DERIVATIVE_MODES,
    FIXTURES_PATH,
    OUTPUT_FORMATS,
    PINNED_FIXTURES_PATH,
    SCENARIOS_PATH,
)
from .errors import ConfigError, UnknownCheckError
from .quadrature import PlaneDomainSpec, QuadratureRule, build_p1_rule, build_plane_rule

log = logging.getLogger(__name__)

FIBER_KINDS = ("plane", "p1")


def parse_complex(value) -> complex:
    """A JSON number or a literal such as "0.5+0.25j"."""
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as e:
            raise ConfigError(f"not a complex number: {value!r}") from e
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    raise ConfigError(f"not a complex number: {value!r}")


def parse_point(value) -> np.ndarray:
    """A base point: one complex value, or a list of them for m = 2."""
    if isinstance(value, (list, tuple)):
        return np.array([parse_complex(v) for v in value], dtype=complex)
    return np.array([parse_complex(value)], dtype=complex)


def complex_matrix(rows) -> np.ndarray:
    return np.array([[parse_complex(x) for x in row] for row in rows], dtype=complex)


@dataclass
class ScenarioConfig:
    scenario_id: str
    weight: dict
    fiber: dict = field(default_factory=lambda: {"kind": "plane"})
    description: str = ""
    basis_cutoff: int = DEFAULT_BASIS_CUTOFF
    quadrature: dict = field(default_factory=dict)
    t_grid: list = field(default_factory=lambda: [0])
    z_grid: list = field(default_factory=lambda: [0, 0.5, "0.3-0.7j", 1.2])
    fd_step: float = DEFAULT_FD_STEP
    derivative_mode: str = "analytic_weight"
    tolerances: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for check in self.checks:
            if check not in CHECK_NAMES:
                raise UnknownCheckError(check)
        if not self.t_grid:
            raise ConfigError(f"{self.scenario_id}: t_grid must be non-empty")
        if self.basis_cutoff < 1:
            raise ConfigError(f"{self.scenario_id}: basis_cutoff must be >= 1")
        if "family_id" not in self.weight:
            raise ConfigError(f"{self.scenario_id}: weight needs a family_id")
        if self.fiber.get("kind") not in FIBER_KINDS:
            raise ConfigError(f"{self.scenario_id}: fiber kind must be one of {FIBER_KINDS}")
        if self.fiber["kind"] == "p1" and int(self.fiber.get("l", 0)) < 2:
            raise ConfigError(f"{self.scenario_id}: a ℙ¹ fiber needs degree l >= 2")
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ConfigError(f"{self.scenario_id}: unknown derivative mode {self.derivative_mode!r}")
        if self.output.get("format", "json") not in OUTPUT_FORMATS:
            raise ConfigError(f"{self.scenario_id}: unknown output format {self.output.get('format')!r}")
        if not self.fd_step > 0:
            raise ConfigError(f"{self.scenario_id}: fd_step must be positive")
        for name in self.tolerances:
            if name not in CHECK_NAMES:
                raise UnknownCheckError(name)
        for name in self.options:
            if name not in CHECK_NAMES:
                raise UnknownCheckError(name)

    @property
    def is_p1(self) -> bool:
        return self.fiber["kind"] == "p1"

    @property
    def degree(self) -> int:
        return int(self.fiber.get("l", 0))

    def points(self) -> list[np.ndarray]:
        return [parse_point(t) for t in self.t_grid]

    def fiber_points(self) -> list[complex]:
        return [parse_complex(z) for z in self.z_grid]

    def tolerance(self, check: str, default: float | None = None) -> float:
        if check in self.tolerances:
            return float(self.tolerances[check])
        return DEFAULT_TOLERANCES[check] if default is None else default

    def check_options(self, check: str) -> dict:
        return dict(self.options.get(check) or {})

    def build_rule(self) -> QuadratureRule:
        q = self.quadrature
        if self.is_p1:
            return build_p1_rule(
                int(q.get("n_radial", DEFAULT_P1_RADIAL)),
                int(q.get("n_angular", DEFAULT_P1_ANGULAR)),
            )
        spec = PlaneDomainSpec.gaussian_plane(
            float(q.get("envelope_scale", 1.0)),
            float(q.get("cutoff_radius", DEFAULT_CUTOFF_RADIUS)),
        )
        return build_plane_rule(
            spec,
            int(q.get("n_radial", DEFAULT_N_RADIAL)),
            int(q.get("n_angular", DEFAULT_N_ANGULAR)),
            degree=self.basis_cutoff,
        )

    # --- persistence ---

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        for required in ("scenario_id", "weight"):
            if required not in data:
                raise ConfigError(f"config is missing {required!r}")
        return cls(**data)

    @classmethod
    def load(cls, path: Path) -> ScenarioConfig:
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        return cls.from_dict(data)

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        else:
            path.write_text(yaml.dump(self.to_dict(), default_flow_style=False, sort_keys=False))

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Built-in catalog
# ---------------------------------------------------------------------------

def load_catalog(path: Path | None = None) -> dict[str, ScenarioConfig]:
    """Built-in scenarios keyed by id, in file order."""
    path = path or SCENARIOS_PATH
    data = yaml.safe_load(path.read_text()) or {}
    catalog: dict[str, ScenarioConfig] = {}
    for entry in data.get("scenarios", []):
        config = ScenarioConfig.from_dict(entry)
        if config.scenario_id in catalog:
            raise ConfigError(f"duplicate scenario id: {config.scenario_id}")
        catalog[config.scenario_id] = config
    return catalog


def list_scenarios() -> list[tuple[str, str]]:
    return [(sid, cfg.description) for sid, cfg in load_catalog().items()]


def resolve(config_ref: str | Path) -> ScenarioConfig:
    """A config file path or a built-in scenario id."""
    path = Path(config_ref)
    if path.exists():
        return ScenarioConfig.load(path)
    catalog = load_catalog()
    if str(config_ref) in catalog:
        return catalog[str(config_ref)]
    raise ConfigError(f"no config file or built-in scenario named {config_ref!r}")


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

@dataclass
class Fixture:
    name: str
    value: float
    tolerance: float
    source: str
    config_hash: str | None = None
    description: str = ""


def load_fixtures(path: Path | None = None) -> dict[str, Fixture]:
    """Fixtures from `path`, or the packaged set overlaid with what `pin` saved."""
    if path is None:
        return {**_read_fixtures(FIXTURES_PATH), **_read_fixtures(PINNED_FIXTURES_PATH)}
    return _read_fixtures(path)


def _read_fixtures(path: Path) -> dict[str, Fixture]:
    if not path.exists():
        return {}
    data = yaml.safe_load(path.read_text()) or {}
    return {
        name: Fixture(name=name, **entry)
        for name, entry in (data.get("fixtures") or {}).items()
    }


def save_fixtures(fixtures: dict[str, Fixture], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {
        "fixtures": {
            name: {k: v for k, v in asdict(fx).items() if k != "name"}
            for name, fx in fixtures.items()
        }
    }
    path.write_text(yaml.dump(data, default_flow_style=False, sort_keys=False))
