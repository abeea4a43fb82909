"""Shared quadrature rules and weights."""

import pytest

from direct_image_lab.quadrature import PlaneDomainSpec, build_p1_rule, build_plane_rule
from direct_image_lab.weights import fock_scaled, fs_family


@pytest.fixture(autouse=True)
def pinned_fixtures(tmp_path, monkeypatch):
    """Keep `pin` and fixture lookups away from the user data dir."""
    path = tmp_path / "data" / "fixtures.yaml"
    monkeypatch.setattr("direct_image_lab.scenarios.PINNED_FIXTURES_PATH", path)
    return path


@pytest.fixture(scope="session")
def plane_rule():
    """Gaussian plane rule good for monomials up to degree 16."""
    return build_plane_rule(PlaneDomainSpec.gaussian_plane(1.0, 11.0), 96, 64, degree=16)


@pytest.fixture(scope="session")
def disk_rule():
    return build_plane_rule(PlaneDomainSpec.disk(1.0), 12, 24)


@pytest.fixture(scope="session")
def p1_rule():
    return build_p1_rule(48, 64)


@pytest.fixture
def fock():
    return fock_scaled()


@pytest.fixture
def fs4():
    return fs_family(4)


@pytest.fixture
def fs4_positive():
    """4·log(1+|z|²) + |t|²·|z|²/(1+|z|²)."""
    return fs_family(4, [([[1, 1, 1]], 1)])
