"""
Business logic for loading a trained model and captioning videos.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from src.models.dataset import VideoExample
from src.models.evaluation import CaptionResult, DecodeOptions
from src.models.training import Checkpoint
from src.nn.decoding import beam_decode, greedy_decode
from src.nn.seq2seq import ModelParams
from src.repositories.checkpoint_repo import load_checkpoint
from src.repositories.vocab_repo import load_vocab
from src.services.training_service import prepare_features
from src.text.vocab import Vocab, decode_tokens
from src.utils.exceptions import FormatError
from src.utils.logger import logger, log_execution_time

PathLike = Union[str, Path]
CAPTIONS_HEADER = "video_id\tcaption"


def params_for(ckpt: Checkpoint, vocab: Vocab, source: str = "<checkpoint>") -> ModelParams:
    """Parameters of ``ckpt`` after checking it was trained with ``vocab``."""
    if ckpt.config.vocab_size != len(vocab):
        raise FormatError(f"checkpoint expects {ckpt.config.vocab_size} tokens, vocabulary has {len(vocab)}",
                          path=source)
    if ckpt.vocab_hash and ckpt.vocab_hash != vocab.content_hash():
        raise FormatError("checkpoint was trained with a different vocabulary", path=source)
    return ModelParams(ckpt.config, ckpt.params)


def load_model(checkpoint_path: PathLike, vocab_path: PathLike) -> Tuple[ModelParams, Vocab]:
    vocab = load_vocab(vocab_path)
    ckpt = load_checkpoint(checkpoint_path)
    params = params_for(ckpt, vocab, str(checkpoint_path))
    logger.info("Loaded model", {"checkpoint": str(checkpoint_path), "variant": ckpt.config.variant,
                                 "parameters": params.count()})
    return params, vocab


def caption_example(example: VideoExample, params: ModelParams, vocab: Vocab,
                    options: DecodeOptions) -> CaptionResult:
    features = prepare_features(example, params.config)
    if options.search == "beam":
        hyp = beam_decode(features, params, beam_width=options.beam_width, length_norm=options.length_norm)
        ids, log_prob = list(hyp.tokens), hyp.log_prob
    else:
        ids, log_prob = greedy_decode(features, params), None
    return CaptionResult(video_id=example.video_id, token_ids=ids, text=decode_tokens(ids, vocab), log_prob=log_prob)


@log_execution_time
def caption_examples(examples: Sequence[VideoExample], params: ModelParams, vocab: Vocab,
                     options: DecodeOptions) -> List[CaptionResult]:
    """Captions in input order, whatever ``options.threads`` is."""
    def one(example: VideoExample) -> CaptionResult:
        return caption_example(example, params, vocab, options)

    if options.threads <= 1:
        return [one(e) for e in examples]
    with ThreadPoolExecutor(max_workers=options.threads) as pool:
        return list(pool.map(one, examples))


def format_captions(results: Sequence[CaptionResult]) -> str:
    lines = [CAPTIONS_HEADER]
    lines.extend(f"{r.video_id}\t{r.text}" for r in results)
    return "\n".join(lines) + "\n"


def write_captions(path: PathLike, results: Sequence[CaptionResult]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_captions(results), encoding="utf-8")
