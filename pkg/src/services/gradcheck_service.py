"""
Finite-difference check of the teacher-forced loss for every model variant.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from src.autodiff.gradcheck import gradient_errors
from src.autodiff.tensor import Tensor
from src.models.evaluation import GradcheckResult
from src.models.model_config import ModelConfig
from src.nn.seq2seq import BoundModel, ModelParams, teacher_forced_forward
from src.services.evaluation_service import VARIANTS, variant_config
from src.text.vocab import END_ID
from src.training.objectives import cross_entropy_loss
from src.utils.logger import logger, log_execution_time
from src.utils.random_streams import SYNTH, derive_rng

TINY_CONFIG = ModelConfig(d_feat=6, t_enc=4, d_h=5, d_emb=4, vocab_size=12, t_dec_max=3)
DEFAULT_TOLERANCE = 1e-5
FEATURES = "input.features"


def check_variant(config: ModelConfig, seed: int = 0, eps: float = 1e-5,
                  tolerance: float = DEFAULT_TOLERANCE) -> GradcheckResult:
    """Relative gradient error of every parameter and of the input features."""
    rng = derive_rng(seed, SYNTH)
    params = ModelParams.initialize(config, seed)
    features = rng.standard_normal((config.t_enc, config.d_feat))
    # Content ids only, ending with <end> so every position counts.
    targets = [*rng.integers(4, config.vocab_size, size=config.t_dec_max - 1).tolist(), END_ID]
    mask = [1] * len(targets)

    def loss(leaves: Dict[str, Tensor]) -> Tensor:
        tensors = {n: t for n, t in leaves.items() if n != FEATURES}
        model = BoundModel(config, tensors)
        logits = teacher_forced_forward(leaves[FEATURES], targets, model, config)
        return cross_entropy_loss(logits, targets, mask).value

    inputs = {**params.arrays, FEATURES: features}
    errors = gradient_errors(loss, inputs, eps)
    result = GradcheckResult(variant=config.variant, max_error=max(errors.values()), per_param=errors,
                             tolerance=tolerance)
    logger.info("Gradient check", {"variant": result.variant, "max_rel_error": f"{result.max_error:.3e}",
                                   "passed": result.passed})
    return result


@log_execution_time
def run_suite(seed: int = 0, base: Optional[ModelConfig] = None, eps: float = 1e-5,
              tolerance: float = DEFAULT_TOLERANCE) -> List[GradcheckResult]:
    """One result per {LSTM, GRU} x {attention off, on} variant."""
    base = base or TINY_CONFIG
    return [check_variant(variant_config(base, cell, attention), seed, eps=eps, tolerance=tolerance)
            for cell, attention in VARIANTS]


def format_results(results: List[GradcheckResult]) -> str:
    lines = ["variant\tmax_rel_error\tstatus"]
    lines.extend(f"{r.variant}\t{r.max_error:.3e}\t{'ok' if r.passed else 'FAIL'}" for r in results)
    return "\n".join(lines) + "\n"


def worst_parameter(result: GradcheckResult) -> str:
    return max(result.per_param, key=lambda n: (result.per_param[n], n)) if result.per_param else ""
