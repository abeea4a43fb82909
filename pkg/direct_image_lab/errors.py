"""Exception types raised by the numerical modules and the scenario runner."""

from __future__ import annotations


class LabError(ValueError):
    """Base class for every failure the lab reports to the user."""


class DomainError(LabError):
    """Bad counts, bad domain parameters, or stencil points outside the domain."""


class DegenerateFiberError(LabError):
    """The fiber Hessian φ_{zz̄} is not positive where it must be divided by."""


class IllConditionedError(LabError):
    """A Gram matrix is singular or its equilibrated condition is too large."""


class NonHermitianError(LabError):
    """An assembled curvature form is not Hermitian within tolerance."""


class HypothesisError(LabError):
    """A theorem's hypothesis fails for the given data."""


class ConfigError(LabError):
    """A scenario configuration violates the schema."""


class UnknownCheckError(ConfigError):
    def __init__(self, check: str) -> None:
        super().__init__(f"Unknown check: {check!r}")
        self.check = check


class ScenarioError(LabError):
    """A module error surfaced while running one check of one scenario."""

    def __init__(self, scenario_id: str, check: str, cause: Exception) -> None:
        super().__init__(f"[{scenario_id}/{check}] {cause}")
        self.scenario_id = scenario_id
        self.check = check
        self.cause = cause
