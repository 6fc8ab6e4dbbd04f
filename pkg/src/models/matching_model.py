import numpy as np
from pydantic import Field, model_validator

from src.core import InputError
from src.models.base_model import BoolArray, FrozenModel, Matrix, Points
from src.models.geometry_model import FundamentalMatrix


class FeatureSet(FrozenModel):
    keypoints: Points
    descriptors: Matrix

    @model_validator(mode="after")
    def aligned(self) -> "FeatureSet":
        if self.descriptors.shape[0] != self.keypoints.shape[0]:
            raise InputError(
                "Keypoints and descriptors are not aligned",
                details={"keypoints": len(self.keypoints), "descriptors": len(self.descriptors)},
            )
        return self

    @property
    def dim(self) -> int:
        return int(self.descriptors.shape[1])

    def __len__(self) -> int:
        return int(self.keypoints.shape[0])


class MatchParams(FrozenModel):
    delta: float = Field(5.0, gt=0.0, description="Sampson-distance bound")
    ratio: float = Field(2.0, gt=1.0, description="Second-best / best descriptor distance factor")


class MatchSet(FrozenModel):
    sources: Points = Field(..., description="p_m in image I")
    targets: Points = Field(..., description="q_m in image J")

    @model_validator(mode="after")
    def equal_lengths(self) -> "MatchSet":
        if self.sources.shape != self.targets.shape:
            raise InputError("Match lists have different lengths")
        return self

    def __len__(self) -> int:
        return int(self.sources.shape[0])

    def subset(self, mask) -> "MatchSet":
        mask = np.asarray(mask)
        return MatchSet(sources=self.sources[mask], targets=self.targets[mask])

    def reversed(self) -> "MatchSet":
        return MatchSet(sources=self.targets, targets=self.sources)


class RansacParams(FrozenModel):
    iterations: int = Field(2000, ge=1)
    threshold: float = Field(1.0, gt=0.0, description="Inlier Sampson threshold (px^2)")
    seed: int = 0


class FundamentalEstimate(FrozenModel):
    fundamental: FundamentalMatrix
    inliers: BoolArray
    degenerate: bool = False

    @property
    def n_inliers(self) -> int:
        return int(np.count_nonzero(self.inliers))
