"""
Business logic for scoring models against reference captions and for the
four-variant comparison run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence, Union

from src.metrics.report import evaluate_corpus
from src.models.dataset import VideoExample
from src.models.evaluation import CaptionResult, DecodeOptions, EvalPair, ScoreReport
from src.models.model_config import ModelConfig
from src.models.training import EpochRecord, TrainConfig
from src.nn.seq2seq import ModelParams
from src.repositories.checkpoint_repo import save_checkpoint
from src.repositories.history_repo import write_history
from src.services.captioning_service import caption_examples
from src.services.training_service import fit, split_three_way
from src.text.vocab import Vocab
from src.utils.exceptions import UsageError
from src.utils.logger import logger, log_execution_time

SplitName = Literal["all", "train", "validation", "test"]
PathLike = Union[str, Path]

VARIANTS = (("lstm", False), ("lstm", True), ("gru", False), ("gru", True))


def select_split(examples: Sequence[VideoExample], split: SplitName, cfg: TrainConfig) -> List[VideoExample]:
    """Re-derive the seeded split a training run with ``cfg`` used."""
    if split == "all":
        return list(examples)
    train, validation, test = split_three_way(examples, cfg.split_ratio, cfg.test_ratio, cfg.seed)
    parts = {"train": train, "validation": validation, "test": test}
    if split not in parts:
        raise UsageError(f"unknown split '{split}', expected all, train, validation or test")
    if not parts[split]:
        raise UsageError(f"split '{split}' is empty for ratio {cfg.split_ratio} and test ratio {cfg.test_ratio}")
    return parts[split]


def eval_pairs(examples: Sequence[VideoExample], captions: Sequence[CaptionResult]) -> List[EvalPair]:
    by_id: Dict[str, CaptionResult] = {c.video_id: c for c in captions}
    pairs = []
    for example in examples:
        caption = by_id.get(example.video_id)
        if caption is None:
            raise UsageError(f"no caption for video '{example.video_id}'")
        pairs.append(EvalPair(video_id=example.video_id, candidate=caption.tokens,
                              references=[ref.tokens for ref in example.references]))
    return pairs


@log_execution_time
def evaluate_model(examples: Sequence[VideoExample], params: ModelParams, vocab: Vocab,
                   options: DecodeOptions, label: Optional[str] = None) -> ScoreReport:
    """Decode every example and score the captions against its references."""
    if not examples:
        raise UsageError("nothing to evaluate")
    captions = caption_examples(examples, params, vocab, options)
    label = label or params.config.variant
    report = evaluate_corpus(eval_pairs(examples, captions), label=label)
    logger.info("Evaluated model", {"label": label, "videos": len(examples), "search": options.search,
                                    "bleu4": f"{report.bleu[3]:.4f}", "cider": f"{report.cider:.4f}"})
    return report


def variant_config(base: ModelConfig, cell_kind: str, attention: bool) -> ModelConfig:
    return base.model_copy(update={"cell_kind": cell_kind, "attention": attention})


@log_execution_time
def compare_variants(dataset: Sequence[VideoExample], vocab: Vocab, cfg: TrainConfig, options: DecodeOptions,
                     out_dir: Optional[PathLike] = None,
                     on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> List[ScoreReport]:
    """Train {LSTM, GRU} x {attention off, on} on one seeded split; score each on the held-out part.

    The held-out part is the test portion when ``cfg.test_ratio`` carves one,
    else the validation portion. With ``out_dir`` each variant's best
    checkpoint and history are written as ``<variant>.vckp`` and
    ``<variant>.history.tsv``.
    """
    train_set, validation_set, test_set = split_three_way(dataset, cfg.split_ratio, cfg.test_ratio, cfg.seed)
    held_out = test_set or validation_set
    if not held_out:
        raise UsageError("comparison needs a non-empty held-out portion")

    reports: List[ScoreReport] = []
    for cell_kind, attention in VARIANTS:
        model = variant_config(cfg.model, cell_kind, attention)
        run_cfg = cfg.model_copy(update={"model": model})
        logger.log_operation_start("compare_variant", variant=model.variant)
        result = fit(train_set, validation_set, vocab, run_cfg, on_epoch=on_epoch)
        params = ModelParams(model, result.best.params)
        reports.append(evaluate_model(held_out, params, vocab, options, label=model.variant))
        if out_dir is not None:
            stem = Path(out_dir) / model.variant.lower().replace("+", "_")
            save_checkpoint(stem.with_suffix(".vckp"), result.best)
            write_history(stem.with_suffix(".history.tsv"), result.history)
        logger.log_operation_success("compare_variant", variant=model.variant)
    return reports
