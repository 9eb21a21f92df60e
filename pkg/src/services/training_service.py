"""
Business logic for dataset splitting and the teacher-forced training loop.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.autodiff.tensor import Tape, backward
from src.features.frames import resample
from src.models.dataset import VideoExample
from src.models.model_config import ModelConfig
from src.models.training import AdamState, Checkpoint, EpochRecord, TrainConfig
from src.nn.seq2seq import ModelParams, teacher_forced_forward
from src.text.vocab import Vocab, encode_caption
from src.training.objectives import cross_entropy_loss, token_hits
from src.training.optimizer import adam_step, clip_global_norm
from src.utils.exceptions import DataError, NumericFailure, UsageError
from src.utils.logger import logger, log_execution_time
from src.utils.random_streams import SHUFFLE, SPLIT, derive_rng

T = TypeVar("T")


class TrainingPair(NamedTuple):
    video_id: str
    features: np.ndarray
    targets: List[int]


class ExampleResult(NamedTuple):
    loss: float
    n_tokens: int
    hits: int
    grads: Optional[Dict[str, np.ndarray]]


class TrainingResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    best: Checkpoint
    final: Checkpoint
    history: List[EpochRecord] = Field(default_factory=list)


def split_counts(n: int, ratio: float) -> int:
    return int(math.floor(ratio * n + 1e-9))


def split_dataset(examples: Sequence[T], ratio: float, seed: int) -> Tuple[List[T], List[T]]:
    """Seeded shuffle; the first floor(ratio * n) go to training."""
    train, validation, _ = split_three_way(examples, ratio, 0.0, seed)
    return train, validation


def split_three_way(examples: Sequence[T], ratio: float, test_ratio: float, seed: int) -> Tuple[List[T], List[T], List[T]]:
    """Like ``split_dataset`` but carves ``test_ratio`` of n out of the held-out remainder."""
    n = len(examples)
    if n < 2:
        raise UsageError(f"need at least 2 examples to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise UsageError(f"split ratio must lie in (0, 1), got {ratio}")
    if not 0.0 <= test_ratio < 1.0 - ratio + 1e-12:
        raise UsageError(f"test ratio {test_ratio} does not fit next to split ratio {ratio}")
    order = derive_rng(seed, SPLIT).permutation(n)
    n_train = split_counts(n, ratio)
    n_test = split_counts(n, test_ratio)
    shuffled = [examples[int(i)] for i in order]
    held_out = shuffled[n_train:]
    n_val = len(held_out) - n_test
    return shuffled[:n_train], held_out[:n_val], held_out[n_val:]


def prepare_features(example: VideoExample, config: ModelConfig) -> np.ndarray:
    """Feature rows resampled to ``t_enc`` and checked against ``d_feat``."""
    if example.features.dim != config.d_feat:
        raise DataError(f"video '{example.video_id}' has feature dim {example.features.dim}, "
                        f"model expects {config.d_feat}")
    return resample(example.features, config.t_enc).values


def prepare_pairs(examples: Sequence[VideoExample], vocab: Vocab, config: ModelConfig) -> List[TrainingPair]:
    """One pair per reference caption, targets trimmed to their <end> token."""
    pairs: List[TrainingPair] = []
    for example in examples:
        features = prepare_features(example, config)
        for ref in example.references:
            _, target, mask = encode_caption(ref.tokens, vocab, config.t_dec_max)
            pairs.append(TrainingPair(example.video_id, features, target[:sum(mask)]))
    return pairs


def example_gradients(params: ModelParams, pair: TrainingPair) -> ExampleResult:
    tape = Tape()
    model = params.bind(tape)
    logits = teacher_forced_forward(pair.features, pair.targets, model)
    mask = [1] * len(pair.targets)
    out = cross_entropy_loss(logits, pair.targets, mask)
    grads = backward(tape, out.value)
    return ExampleResult(float(out.value.data), out.n_tokens, token_hits(logits, pair.targets, mask), grads)


def example_loss(params: ModelParams, pair: TrainingPair) -> ExampleResult:
    model = params.bind()
    logits = teacher_forced_forward(pair.features, pair.targets, model)
    mask = [1] * len(pair.targets)
    out = cross_entropy_loss(logits, pair.targets, mask)
    return ExampleResult(float(out.value.data), out.n_tokens, token_hits(logits, pair.targets, mask), None)


def _map(pool: Optional[ThreadPoolExecutor], fn: Callable, items: Sequence) -> List:
    # Executor.map yields in submission order, keeping reductions deterministic.
    if pool is None:
        return [fn(item) for item in items]
    return list(pool.map(fn, items))


def _summarize(results: Sequence[ExampleResult]) -> Tuple[float, float]:
    if not results:
        return 0.0, 0.0
    loss = float(np.mean([r.loss for r in results]))
    tokens = sum(r.n_tokens for r in results)
    return loss, (sum(r.hits for r in results) / tokens if tokens else 0.0)


def evaluate_pairs(params: ModelParams, pairs: Sequence[TrainingPair],
                   pool: Optional[ThreadPoolExecutor] = None) -> Tuple[float, float]:
    """Mean per-caption loss and token accuracy under teacher forcing."""
    return _summarize(_map(pool, lambda p: example_loss(params, p), pairs))


def mean_gradients(results: Sequence[ExampleResult], names: Sequence[str]) -> Dict[str, np.ndarray]:
    grads: Dict[str, np.ndarray] = {}
    for name in names:
        acc = results[0].grads[name].copy()
        for r in results[1:]:
            acc += r.grads[name]
        grads[name] = acc / len(results)
    return grads


@log_execution_time
def fit(train_examples: Sequence[VideoExample], validation_examples: Sequence[VideoExample], vocab: Vocab,
        cfg: TrainConfig, params: Optional[ModelParams] = None,
        on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainingResult:
    """Train on ``train_examples``, scoring ``validation_examples`` after every epoch."""
    config = cfg.model
    if config.vocab_size != len(vocab):
        raise UsageError(f"model vocab_size {config.vocab_size} differs from vocabulary size {len(vocab)}")
    if not train_examples:
        raise UsageError("training set is empty")

    params = params or ModelParams.initialize(config, cfg.seed)
    state = AdamState()
    vocab_hash = vocab.content_hash()
    train_pairs = prepare_pairs(train_examples, vocab, config)
    val_pairs = prepare_pairs(validation_examples, vocab, config)
    shuffle_rng = derive_rng(cfg.seed, SHUFFLE)
    names = params.names()

    logger.info("Training started", {
        "variant": config.variant, "parameters": params.count(), "train_captions": len(train_pairs),
        "val_captions": len(val_pairs), "epochs": cfg.epochs, "batch_size": cfg.batch_size,
        "lr": cfg.learning_rate, "threads": cfg.threads,
    })

    history: List[EpochRecord] = []
    best: Optional[Checkpoint] = None
    best_score = math.inf
    stale = 0
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = shuffle_rng.permutation(len(train_pairs))
            epoch_results: List[ExampleResult] = []
            for batch_no, start in enumerate(range(0, len(order), cfg.batch_size), start=1):
                batch = [train_pairs[int(i)] for i in order[start:start + cfg.batch_size]]
                current = params
                try:
                    results = _map(pool, lambda p: example_gradients(current, p), batch)
                    grads, norm = clip_global_norm(mean_gradients(results, names), cfg.clip_norm)
                    arrays, state = adam_step(params.arrays, grads, state, cfg.adam)
                except NumericFailure as e:
                    raise NumericFailure(e.op, f"{e.reason} (epoch {epoch}, batch {batch_no})",
                                         details={"epoch": epoch, "batch": batch_no})
                params = ModelParams(config, arrays)
                epoch_results.extend(results)
                logger.debug("Batch finished", {"epoch": epoch, "batch": batch_no, "grad_norm": f"{norm:.4f}"})

            train_loss, train_acc = _summarize(epoch_results)
            val_loss, val_acc = evaluate_pairs(params, val_pairs, pool)
            record = EpochRecord(epoch=epoch, train_loss=train_loss, train_acc=train_acc,
                                 val_loss=val_loss, val_acc=val_acc)
            history.append(record)
            logger.log_epoch(config.variant, record)
            if on_epoch is not None:
                on_epoch(record)

            score = val_loss if val_pairs else train_loss
            if score < best_score:
                best_score, stale = score, 0
                best = Checkpoint(config=config, params=params.arrays, optimizer=state, vocab_hash=vocab_hash)
            else:
                stale += 1
                if cfg.patience is not None and stale >= cfg.patience:
                    logger.info("Early stopping", {"epoch": epoch, "patience": cfg.patience})
                    break
    finally:
        if pool is not None:
            pool.shutdown()

    final = Checkpoint(config=config, params=params.arrays, optimizer=state, vocab_hash=vocab_hash)
    return TrainingResult(best=best or final, final=final, history=history)


def train(dataset: Sequence[VideoExample], vocab: Vocab, cfg: TrainConfig,
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainingResult:
    """Split ``dataset`` by ``cfg.split_ratio`` and fit on the training part."""
    if not dataset:
        raise UsageError("dataset is empty")
    train_set, validation_set, test_set = split_three_way(dataset, cfg.split_ratio, cfg.test_ratio, cfg.seed)
    logger.info("Dataset split", {"train": len(train_set), "validation": len(validation_set), "test": len(test_set)})
    return fit(train_set, validation_set, vocab, cfg, on_epoch=on_epoch)
