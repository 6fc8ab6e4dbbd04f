import numpy as np
import pytest

from src.models import FundamentalMatrix, GridConfig, ImageRect, MatchSet
from src.services import build, default_scene, fronto_parallel_scene, generate
from src.services.synthetic_services import camera, intrinsics, rotation_y

RECTIFIED = [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]


@pytest.fixture
def rectified_f() -> FundamentalMatrix:
    return FundamentalMatrix(entries=RECTIFIED)


@pytest.fixture
def image() -> ImageRect:
    return ImageRect(width=461.0, height=308.0)


@pytest.fixture
def rig():
    """Two cameras of the default scene: camera 2 moved right and turned back by 9 degrees."""
    K = intrinsics(461.0, 308.0)
    P1 = camera(K, np.eye(3), np.zeros(3))
    P2 = camera(K, rotation_y(np.radians(9.0)), [0.8, 0.05, 0.2])
    return P1, P2


@pytest.fixture
def world_points():
    rng = np.random.default_rng(7)
    return np.column_stack(
        [rng.uniform(-2.0, 2.0, 40), rng.uniform(-1.2, 1.2, 40), rng.uniform(4.0, 8.0, 40)]
    )


@pytest.fixture(scope="session")
def scene():
    return default_scene(seed=0)


@pytest.fixture(scope="session")
def scene_truth(scene):
    return generate(scene)


@pytest.fixture(scope="session")
def flat_truth():
    return generate(fronto_parallel_scene(seed=3, noise_sigma=0.0, outlier_fraction=0.0))


@pytest.fixture(scope="session")
def scene_mesh(scene_truth):
    spec = scene_truth.spec
    return build(ImageRect(width=spec.width, height=spec.height), scene_truth.fundamental, GridConfig(eta=25.0))


@pytest.fixture
def exact_matches(scene_truth) -> MatchSet:
    return MatchSet(sources=scene_truth.matches.sources, targets=scene_truth.true_targets)
