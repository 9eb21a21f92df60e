"""
Pydantic models for captions, feature matrices and video examples.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class CaptionRecord(BaseModel):
    """One reference caption of a video."""
    video_id: str
    text: str
    tokens: List[str] = Field(default_factory=list)
    ids: Optional[List[int]] = None


class FeatureMatrix(BaseModel):
    """Per-frame feature rows of one video, upcast to float64."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator('values', mode='before')
    @classmethod
    def validate_values(cls, v):
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"feature matrix must be [n_frames >= 1, dim >= 1], got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature matrix contains non-finite values")
        return arr

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


class VideoExample(BaseModel):
    """A video with its features and at least one reference caption."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    video_id: str
    features: FeatureMatrix
    references: List[CaptionRecord] = Field(..., min_length=1)


class ManifestRow(BaseModel):
    video_id: str
    feature_path: str
    caption: str
    line: int


class SynthVideo(BaseModel):
    video_id: str
    archetype: int
    feature_path: str
    caption: str


class SynthRecord(BaseModel):
    """Bookkeeping written next to a generated synthetic dataset."""
    seed: int
    n_videos: int
    n_archetypes: int
    t_enc: int
    d_feat: int
    noise: float
    manifest_path: str
    videos: List[SynthVideo] = Field(default_factory=list)
