"""Paths, defaults, and environment variable configuration."""

import os
from pathlib import Path

DATA_DIR = Path(os.environ.get(
    "DIRECT_IMAGE_LAB_DATA_DIR",
    Path.home() / ".local" / "share" / "direct_image_lab",
))

PACKAGE_DATA = Path(__file__).parent / "data"
SCENARIOS_PATH = PACKAGE_DATA / "scenarios.yaml"
FIXTURES_PATH = PACKAGE_DATA / "fixtures.yaml"
PINNED_FIXTURES_PATH = DATA_DIR / "fixtures.yaml"

DEFAULT_FD_STEP = float(os.environ.get("DIRECT_IMAGE_LAB_FD_STEP", "1e-3"))

# Jacobi-equilibrated Gram condition above which solves are refused
CONDITION_LIMIT = 1e12
HERMITIAN_RTOL = 1e-12
CURVATURE_HERMITIAN_RTOL = 1e-8

DEFAULT_BASIS_CUTOFF = 16
DEFAULT_N_RADIAL = 96
DEFAULT_N_ANGULAR = 64
DEFAULT_CUTOFF_RADIUS = 11.0
DEFAULT_P1_RADIAL = 48
DEFAULT_P1_ANGULAR = 64

DERIVATIVE_MODES = ("finite_difference", "analytic_weight")
OUTPUT_FORMATS = ("json", "csv")

CHECK_NAMES = (
    "psh",
    "kernel_psh",
    "nakano",
    "griffiths",
    "dual_identity",
    "subbundle_24",
    "hormander_31",
    "normal_25",
    "degeneracy_5",
    "hormander_eq_52",
    "toeplitz_61",
    "quantization",
    "det_identity_7",
    "theorem_71",
    "extension_ratio",
)

DEFAULT_TOLERANCES: dict[str, float] = {
    "psh": 1e-10,
    "kernel_psh": 1e-4,
    "nakano": 1e-4,
    "griffiths": 1e-4,
    "dual_identity": 1e-7,
    "subbundle_24": 1e-6,
    "hormander_31": 1e-4,
    "normal_25": 1e-6,
    "degeneracy_5": 1e-6,
    "hormander_eq_52": 1e-6,
    "toeplitz_61": 1e-5,
    "quantization": 1e-5,
    "det_identity_7": 1e-6,
    "theorem_71": 1e-4,
    "extension_ratio": 1e-8,
}

# compact fibers carry no truncation, so Nakano is held tighter there
P1_NAKANO_TOLERANCE = 1e-6
