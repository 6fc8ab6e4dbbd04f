import numpy as np
from pydantic import Field, field_validator, model_validator

from src.core import InputError
from src.models.base_model import BoolArray, FrozenModel, Matrix, Points, Vector
from src.models.geometry_model import FundamentalMatrix
from src.models.matching_model import FeatureSet, MatchSet


class Patch(FrozenModel):
    """Planar patch: world plane (a, b, c, d), extent as a polygon in image-I pixels."""

    plane: Vector
    polygon: Points
    n_points: int = Field(100, ge=0)

    @field_validator("plane", mode="after")
    @classmethod
    def four_coefficients(cls, v: np.ndarray) -> np.ndarray:
        if v.shape != (4,) or np.linalg.norm(v[:3]) == 0.0:
            raise ValueError("Plane needs coefficients (a, b, c, d) with a non-zero normal")
        return v


class SceneSpec(FrozenModel):
    width: float = Field(461.0, gt=0.0)
    height: float = Field(308.0, gt=0.0)
    width2: float = Field(461.0, gt=0.0)
    height2: float = Field(308.0, gt=0.0)
    camera1: Matrix
    camera2: Matrix
    patches: list[Patch]
    noise_sigma: float = Field(0.3, ge=0.0)
    outlier_fraction: float = Field(0.3, ge=0.0, lt=1.0)
    delta: float = Field(5.0, gt=0.0)
    min_outlier_offset: float = Field(5.0, ge=0.0)
    descriptor_dim: int = Field(32, ge=1)
    descriptor_noise: float = Field(0.05, ge=0.0)
    distractors: int = Field(50, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def camera_shapes(self) -> "SceneSpec":
        if self.camera1.shape != (3, 4) or self.camera2.shape != (3, 4):
            raise InputError("Projection matrices must be 3x4")
        if not self.patches:
            raise InputError("Scene needs at least one patch")
        return self


class GroundTruth(FrozenModel):
    spec: SceneSpec
    fundamental: FundamentalMatrix
    matches: MatchSet
    labels: BoolArray = Field(..., description="True for inlier candidates")
    true_targets: Points = Field(..., description="Noise-free correspondence of every candidate source")
    features_a: FeatureSet
    features_b: FeatureSet


class EvalReport(FrozenModel):
    thresholds: Vector
    fractions: Vector
    fraction_within_1px: float
    n_samples: int = 0
    coverage: float = 1.0


class BaselineStep(FrozenModel):
    """Median accuracy over the scenes of one baseline scale."""

    factor: float = Field(..., gt=0.0, description="Scale applied to the camera-2 centre")
    baseline: float = Field(..., description="Distance between the camera centres")
    fraction_within_1px: float
    n_scenes: int = Field(..., ge=1)
