"""
Pydantic models for training configuration, history and checkpoints.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.model_config import ModelConfig

CHECKPOINT_VERSION = 1


class AdamHyper(BaseModel):
    learning_rate: float = Field(default=1e-3, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)


class AdamState(BaseModel):
    """First/second moment estimates per named parameter."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    step: int = Field(default=0, ge=0)
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)


class TrainConfig(BaseModel):
    batch_size: int = Field(default=320, ge=1)
    epochs: int = Field(default=40, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0.0)
    split_ratio: float = Field(default=0.85, gt=0.0, lt=1.0)
    test_ratio: float = Field(default=0.0, ge=0.0, lt=1.0)
    clip_norm: Optional[float] = Field(default=5.0, gt=0.0)
    patience: Optional[int] = Field(default=None, ge=1)
    threads: int = Field(default=1, ge=1)
    seed: int = Field(default=0)
    model: ModelConfig = Field(default_factory=ModelConfig)

    @property
    def adam(self) -> AdamHyper:
        return AdamHyper(learning_rate=self.learning_rate)


class EpochRecord(BaseModel):
    """One row of the accuracy/loss history."""
    epoch: int = Field(..., ge=1)
    train_loss: float = Field(..., ge=0.0)
    train_acc: float = Field(..., ge=0.0, le=1.0)
    val_loss: float = Field(..., ge=0.0)
    val_acc: float = Field(..., ge=0.0, le=1.0)

    def to_tsv(self) -> str:
        return (f"{self.epoch}\t{self.train_loss!r}\t{self.train_acc!r}"
                f"\t{self.val_loss!r}\t{self.val_acc!r}")


class Checkpoint(BaseModel):
    """Trained parameters plus everything needed to resume or decode."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    version: int = Field(default=CHECKPOINT_VERSION)
    config: ModelConfig
    params: Dict[str, np.ndarray]
    optimizer: AdamState = Field(default_factory=AdamState)
    vocab_hash: str = Field(default="")

    @field_validator('params')
    @classmethod
    def validate_params(cls, v):
        for name, arr in v.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter '{name}' contains non-finite values")
        return v
