"""
Pydantic models for the encoder-decoder architecture configuration.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator

CellKind = Literal["lstm", "gru"]

SPECIAL_TOKEN_COUNT = 4


def parse_on_off(value: Any) -> Any:
    """Accept on/off spellings for boolean switches."""
    if isinstance(value, str):
        normalized = value.strip().lower()
        if normalized in {"on", "true", "yes", "1"}:
            return True
        if normalized in {"off", "false", "no", "0"}:
            return False
    return value


class ModelConfig(BaseModel):
    """Dimensions and switches of one captioning model."""
    cell_kind: CellKind = Field(default="lstm")
    attention: bool = Field(default=True)
    d_feat: int = Field(default=4096, gt=0)
    t_enc: int = Field(default=28, gt=0)
    d_h: int = Field(default=512, gt=0)
    d_emb: int = Field(default=256, gt=0)
    d_a: Optional[int] = Field(default=None, gt=0)
    vocab_size: int = Field(default=1500, ge=SPECIAL_TOKEN_COUNT)
    t_dec_max: int = Field(default=10, gt=0)
    pooled: bool = Field(default=False)
    seed: int = Field(default=0)

    @field_validator('cell_kind', mode='before')
    @classmethod
    def normalize_cell_kind(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @field_validator('attention', 'pooled', mode='before')
    @classmethod
    def validate_switch(cls, v):
        return parse_on_off(v)

    @property
    def attention_dim(self) -> int:
        return self.d_a or self.d_h

    @property
    def projection_in(self) -> int:
        """Width of the vector fed to the output projection."""
        return self.d_h * 2 if self.attention else self.d_h

    @property
    def variant(self) -> str:
        return f"{self.cell_kind.upper()}{'+ATTENTION' if self.attention else ''}"

    model_config = {"frozen": True}
