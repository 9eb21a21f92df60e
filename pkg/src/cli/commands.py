"""
Command-line entry point: ``run(argv)`` dispatches one subcommand.

Exit codes: 0 success, 1 usage error, 2 data or format error,
3 numeric failure. Results go to standard output or the ``--out`` paths;
logs and error messages go to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from src.cli.config_file import read_config
from src.cli.options import build_parser, given_flags, missing_required, options_for
from src.metrics.report import format_report, write_per_video, write_report
from src.models.cli_config import CliConfig
from src.models.dataset import CaptionRecord
from src.models.evaluation import DecodeOptions, ScoreReport
from src.models.model_config import ModelConfig
from src.models.training import TrainConfig
from src.repositories.checkpoint_repo import load_checkpoint, save_checkpoint
from src.repositories.history_repo import write_history
from src.repositories.manifest_repo import load_manifest, parse_manifest
from src.repositories.vocab_repo import load_vocab, save_vocab
from src.services.captioning_service import caption_examples, format_captions, load_model, params_for, write_captions
from src.services.evaluation_service import compare_variants, evaluate_model, select_split
from src.services.gradcheck_service import format_results, run_suite, worst_parameter
from src.services.plot_service import plot_history
from src.services.synth_service import MANIFEST_NAME, synth_dataset
from src.services.training_service import train
from src.text.tokenizer import tokenize
from src.text.vocab import build_vocab
from src.utils.exceptions import DataError, NumericFailure, UsageError, VidCapError, exit_code_for, get_error_message
from src.utils.logger import logger

Handler = Callable[[CliConfig], int]


def resolve(command: str, namespace: argparse.Namespace) -> CliConfig:
    """Defaults, then the config file, then explicit flags."""
    options = options_for(command)
    values = {name: opt.default for name, opt in options.items()}
    sources = {name: "default" for name in options}
    config_path = getattr(namespace, "config", None)
    if config_path:
        for name, (_, raw) in read_config(config_path, options).items():
            values[name] = options[name].convert(raw)
            sources[name] = "file"
    for name, value in given_flags(namespace, command).items():
        values[name] = value
        sources[name] = "flag"
    missing = missing_required(command, values)
    if missing:
        raise UsageError(f"{command}: missing required option(s) {', '.join(missing)}")
    return CliConfig(command=command, values=values, sources=sources, config_path=config_path)


def _emit(text: str, out: Optional[str], writer: Callable[[Path], None]) -> None:
    if out:
        writer(Path(out))
    else:
        sys.stdout.write(text)


def _model_config(cli: CliConfig, d_feat: int, vocab_size: int) -> ModelConfig:
    return ModelConfig(
        cell_kind=cli.get("cell", "lstm"),
        attention=cli.get("attention", True),
        d_feat=d_feat,
        t_enc=cli["t_enc"],
        d_h=cli["d_h"],
        d_emb=cli["d_emb"],
        d_a=cli["d_a"],
        vocab_size=vocab_size,
        t_dec_max=cli["t_dec"],
        pooled=cli["pooled"],
        seed=cli["seed"],
    )


def _train_config(cli: CliConfig, model: ModelConfig) -> TrainConfig:
    return TrainConfig(
        batch_size=cli["batch_size"],
        epochs=cli["epochs"],
        learning_rate=cli["lr"],
        split_ratio=cli["split_ratio"],
        test_ratio=cli["test_ratio"],
        clip_norm=cli["clip_norm"],
        patience=cli["patience"],
        threads=cli["threads"],
        seed=cli["seed"],
        model=model,
    )


def _decode_options(cli: CliConfig) -> DecodeOptions:
    return DecodeOptions(search=cli["search"], beam_width=cli["beam_width"],
                         length_norm=cli["length_norm"], threads=cli["threads"])


def _load_dataset(cli: CliConfig, vocab):
    dataset = load_manifest(cli["manifest"], vocab)
    if not dataset:
        raise DataError("manifest lists no videos", path=cli["manifest"])
    return dataset


def cmd_synth(cli: CliConfig) -> int:
    record = synth_dataset(cli["seed"], cli["n_videos"], cli["t_enc"], cli["d_feat"], cli["out_dir"],
                           n_archetypes=cli["archetypes"], noise=cli["noise"])
    print(Path(cli["out_dir"]) / MANIFEST_NAME)
    logger.info("synth finished", {"videos": record.n_videos})
    return 0


def cmd_vocab(cli: CliConfig) -> int:
    # Captions only; feature files are not needed to count tokens.
    records = [CaptionRecord(video_id=row.video_id, text=row.caption, tokens=tokenize(row.caption))
               for row in parse_manifest(cli["manifest"])]
    vocab = build_vocab(records, cli["max_size"])
    save_vocab(cli["out"], vocab)
    logger.info("Vocabulary written", {"path": cli["out"], "size": len(vocab), "hash": vocab.content_hash()[:12]})
    return 0


def cmd_train(cli: CliConfig) -> int:
    vocab = load_vocab(cli["vocab"])
    dataset = _load_dataset(cli, vocab)
    cfg = _train_config(cli, _model_config(cli, dataset[0].features.dim, len(vocab)))
    result = train(dataset, vocab, cfg)
    save_checkpoint(cli["out"], result.best)
    write_history(cli.get("history", f"{cli['out']}.history.tsv"), result.history)
    return 0


def cmd_caption(cli: CliConfig) -> int:
    params, vocab = load_model(cli["model"], cli["vocab"])
    examples = load_manifest(cli["manifest"], vocab)
    results = caption_examples(examples, params, vocab, _decode_options(cli))
    _emit(format_captions(results), cli.get("out"), lambda p: write_captions(p, results))
    return 0


def cmd_eval(cli: CliConfig) -> int:
    vocab = load_vocab(cli["vocab"])
    models: List[str] = cli["model"]
    if cli.get("per_video") and len(models) != 1:
        raise UsageError("--per-video needs exactly one --model")
    split_cfg = TrainConfig(split_ratio=cli["split_ratio"], test_ratio=cli["test_ratio"], seed=cli["seed"])
    examples = select_split(load_manifest(cli["manifest"], vocab), cli["split"], split_cfg)
    options = _decode_options(cli)

    reports: List[ScoreReport] = []
    labels: Dict[str, int] = {}
    for model_path in models:
        params = params_for(load_checkpoint(model_path), vocab, model_path)
        label = params.config.variant
        labels[label] = labels.get(label, 0) + 1
        if labels[label] > 1:
            label = f"{label} ({Path(model_path).stem})"
        reports.append(evaluate_model(examples, params, vocab, options, label=label))

    _emit(format_report(reports), cli.get("out"), lambda p: write_report(p, reports))
    if cli.get("per_video"):
        write_per_video(cli["per_video"], reports[0])
    return 0


def cmd_gradcheck(cli: CliConfig) -> int:
    results = run_suite(cli["seed"], eps=cli["eps"], tolerance=cli["tolerance"])
    sys.stdout.write(format_results(results))
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.max_error)
        raise NumericFailure("gradcheck", f"{len(failed)} variant(s) above tolerance {cli['tolerance']:g}; "
                                          f"worst {worst.variant} at '{worst_parameter(worst)}' "
                                          f"({worst.max_error:.3e})")
    return 0


def cmd_compare(cli: CliConfig) -> int:
    vocab = load_vocab(cli["vocab"])
    dataset = _load_dataset(cli, vocab)
    cfg = _train_config(cli, _model_config(cli, dataset[0].features.dim, len(vocab)))
    reports = compare_variants(dataset, vocab, cfg, _decode_options(cli), out_dir=cli.get("out_dir"))
    _emit(format_report(reports), cli.get("out"), lambda p: write_report(p, reports))
    return 0


def cmd_plot(cli: CliConfig) -> int:
    plot_history(cli["history"], cli["out"])
    return 0


HANDLERS: Dict[str, Handler] = {
    "synth": cmd_synth,
    "vocab": cmd_vocab,
    "train": cmd_train,
    "caption": cmd_caption,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return its exit code."""
    parser = build_parser()
    try:
        namespace = parser.parse_args(list(argv) if argv is not None else None)
        cli = resolve(namespace.command, namespace)
        logger.log_config(cli.command, cli.resolved())
        return HANDLERS[cli.command](cli)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except ValidationError as e:
        error = UsageError(f"invalid configuration: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}")
        print(get_error_message(error), file=sys.stderr)
        return exit_code_for(error)
    except VidCapError as e:
        logger.error("Command failed", {"error_code": e.error_code})
        print(get_error_message(e), file=sys.stderr)
        return exit_code_for(e)
    except OSError as e:
        error = DataError(e.strerror or str(e), path=e.filename)
        logger.error("Command failed", {"error_code": error.error_code})
        print(get_error_message(error), file=sys.stderr)
        return exit_code_for(error)
