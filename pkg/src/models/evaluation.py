"""
Pydantic models for decoding results and caption scoring.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from src.models.model_config import parse_on_off
from src.utils.exceptions import UsageError

REPORT_COLUMNS = ("Bleu1", "Bleu2", "Bleu3", "Bleu4", "METEOR-ex", "ROUGE_L", "CIDEr")


class Hypothesis(BaseModel):
    """A partial or finished decoded caption (ids exclude <start>/<end>)."""
    tokens: List[int] = Field(default_factory=list)
    log_prob: float = Field(default=0.0, le=0.0)
    complete: bool = Field(default=False)

    @property
    def steps(self) -> int:
        """Decoder steps consumed, counting the <end> emission."""
        return len(self.tokens) + (1 if self.complete else 0)

    def score(self, length_norm: bool) -> float:
        if length_norm and self.steps > 0:
            return self.log_prob / self.steps
        return self.log_prob

    def extend(self, token: int, log_prob: float, end: bool) -> "Hypothesis":
        if self.complete:
            raise UsageError("completed hypotheses are frozen")
        tokens = list(self.tokens) if end else [*self.tokens, token]
        return Hypothesis(tokens=tokens, log_prob=min(0.0, self.log_prob + log_prob), complete=end)


class EvalPair(BaseModel):
    video_id: str
    candidate: List[str]
    references: List[List[str]] = Field(..., min_length=1)


class PairScores(BaseModel):
    video_id: str
    bleu: List[float]
    meteor: float
    rouge_l: float
    cider: float
    candidate: str = ""

    def row(self) -> List[float]:
        return [*self.bleu, self.meteor, self.rouge_l, self.cider]


class ScoreReport(BaseModel):
    """Corpus scores in report column order plus a per-video breakdown."""
    label: str
    bleu: List[float] = Field(..., min_length=4, max_length=4)
    meteor: float = Field(..., ge=0.0, le=1.0)
    rouge_l: float = Field(..., ge=0.0, le=1.0)
    cider: float = Field(..., ge=0.0)
    per_video: List[PairScores] = Field(default_factory=list)

    @field_validator('bleu')
    @classmethod
    def validate_bleu(cls, v):
        if any(not 0.0 <= b <= 1.0 for b in v):
            raise ValueError("BLEU scores must lie in [0, 1]")
        return v

    def row(self) -> List[float]:
        return [*self.bleu, self.meteor, self.rouge_l, self.cider]


class DecodeOptions(BaseModel):
    search: Literal["greedy", "beam"] = Field(default="greedy")
    beam_width: int = Field(default=5, ge=1)
    length_norm: bool = Field(default=True)
    threads: int = Field(default=1, ge=1)

    @field_validator('search', mode='before')
    @classmethod
    def normalize_search(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @field_validator('length_norm', mode='before')
    @classmethod
    def validate_length_norm(cls, v):
        return parse_on_off(v)


class CaptionResult(BaseModel):
    """Decoded caption of one video."""
    video_id: str
    token_ids: List[int] = Field(default_factory=list)
    text: str = ""
    log_prob: Optional[float] = None

    @property
    def tokens(self) -> List[str]:
        return self.text.split()


class GradcheckResult(BaseModel):
    variant: str
    max_error: float = Field(..., ge=0.0)
    per_param: Dict[str, float] = Field(default_factory=dict)
    tolerance: float = Field(default=1e-5, gt=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance
