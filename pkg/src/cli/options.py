"""
Option tables and the argparse parser for every subcommand.

Flags are declared once here; the same table drives argparse, config-file
conversion and default resolution, so the three always agree.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.config.settings import settings
from src.models.model_config import parse_on_off
from src.utils.exceptions import UsageError


def on_off(value: str) -> bool:
    parsed = parse_on_off(value)
    if not isinstance(parsed, bool):
        raise argparse.ArgumentTypeError(f"expected on or off, got '{value}'")
    return parsed


@dataclass(frozen=True)
class Option:
    name: str
    type: Callable[[str], Any] = str
    default: Any = None
    help: str = ""
    choices: Optional[Tuple[Any, ...]] = None
    required: bool = False
    multiple: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def convert(self, raw: str) -> Any:
        """Typed value of a config-file string."""
        if self.multiple:
            return [self._one(part.strip()) for part in raw.split(",") if part.strip()]
        return self._one(raw)

    def _one(self, raw: str) -> Any:
        try:
            value = self.type(raw)
        except (argparse.ArgumentTypeError, ValueError) as e:
            raise UsageError(f"invalid value '{raw}' for {self.name}: {e}")
        if self.choices is not None and value not in self.choices:
            raise UsageError(f"{self.name} must be one of {', '.join(map(str, self.choices))}, got '{raw}'")
        return value


COMMON = (
    Option("seed", int, settings.default_seed, "seed every random stream derives from"),
    Option("threads", int, settings.default_threads, "worker threads; outputs do not depend on it"),
)

DATA = (
    Option("manifest", help="manifest TSV (video_id, feature_path, caption)", required=True),
    Option("vocab", help="vocabulary file", required=True),
)

ARCHITECTURE = (
    Option("cell", str, "lstm", "recurrent cell", choices=("lstm", "gru")),
    Option("attention", on_off, True, "additive attention on|off"),
    Option("d_h", int, 512, "hidden size"),
    Option("d_emb", int, 256, "token embedding size"),
    Option("d_a", int, None, "attention size (defaults to d_h)"),
    Option("t_enc", int, 28, "encoder time steps; feature rows are resampled to it"),
    Option("t_dec", int, 10, "maximum decoder steps, <end> included"),
    Option("pooled", on_off, False, "feed the mean-pooled feature vector at every encoder step"),
)

TRAINING = (
    Option("epochs", int, 40, "training epochs"),
    Option("batch_size", int, 320, "captions per batch"),
    Option("lr", float, 1e-3, "Adam learning rate"),
    Option("split_ratio", float, 0.85, "training share of the videos"),
    Option("test_ratio", float, 0.0, "test share carved from the held-out videos"),
    Option("clip_norm", float, 5.0, "global gradient-norm clip"),
    Option("patience", int, None, "stop after this many epochs without improvement"),
)

DECODING = (
    Option("search", str, "greedy", "decoding strategy", choices=("greedy", "beam")),
    Option("beam_width", int, 5, "beam width for --search beam"),
    Option("length_norm", on_off, True, "rank beam hypotheses by per-step log-probability"),
)

COMMANDS: Dict[str, Tuple[str, Tuple[Option, ...]]] = {
    "synth": ("write a seeded synthetic dataset", COMMON + (
        Option("out_dir", help="output directory", required=True),
        Option("n_videos", int, 16, "number of videos"),
        Option("t_enc", int, 8, "frames per video"),
        Option("d_feat", int, 32, "feature width"),
        Option("archetypes", int, 4, "number of caption archetypes"),
        Option("noise", float, 0.1, "feature noise standard deviation"),
    )),
    "vocab": ("build a vocabulary from manifest captions", COMMON + (
        DATA[0],
        Option("out", help="vocabulary file to write", required=True),
        Option("max_size", int, 1500, "vocabulary size, reserved tokens included"),
    )),
    "train": ("train one model variant", COMMON + DATA + ARCHITECTURE + TRAINING + (
        Option("out", help="checkpoint to write (best epoch)", required=True),
        Option("history", help="epoch history TSV (default: <out>.history.tsv)"),
    )),
    "caption": ("caption every video of a manifest", COMMON + DATA + DECODING + (
        Option("model", help="checkpoint", required=True),
        Option("out", help="captions TSV (default: standard output)"),
    )),
    "eval": ("score checkpoints against manifest references", COMMON + DATA + DECODING + (
        Option("model", help="checkpoint; repeat for one report row each", required=True, multiple=True),
        Option("split", str, "all", "videos to score", choices=("all", "train", "validation", "test")),
        Option("split_ratio", float, 0.85, "training share used to re-derive --split"),
        Option("test_ratio", float, 0.0, "test share used to re-derive --split"),
        Option("out", help="report TSV (default: standard output)"),
        Option("per_video", help="per-video score TSV (single --model only)"),
    )),
    "gradcheck": ("finite-difference check of all four variants", COMMON + (
        Option("eps", float, 1e-5, "central-difference step"),
        Option("tolerance", float, 1e-5, "maximum accepted relative error"),
    )),
    "compare": ("train all four variants and report them side by side", COMMON + DATA + ARCHITECTURE[2:]
                + TRAINING + DECODING + (
        Option("out", help="report TSV (default: standard output)"),
        Option("out_dir", help="directory for per-variant checkpoints and histories"),
    )),
    "plot": ("plot an epoch history TSV", (
        Option("history", help="epoch history TSV", required=True),
        Option("out", help="PNG to write", required=True),
    )),
}


def options_for(command: str) -> Dict[str, Option]:
    return {opt.name: opt for opt in COMMANDS[command][1]}


class CliArgumentParser(argparse.ArgumentParser):
    """Argument errors become ``UsageError`` instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(prog="vidcap", description=settings.app_title)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for command, (summary, options) in COMMANDS.items():
        p = sub.add_parser(command, help=summary, description=summary)
        p.add_argument("--config", help="key = value file; explicit flags override it")
        for opt in options:
            # No argparse defaults: None marks "not given" so the config file can fill it.
            kwargs: Dict[str, Any] = {"dest": opt.name, "type": opt.type, "default": None, "help": opt.help}
            if opt.choices is not None:
                kwargs["choices"] = opt.choices
            if opt.multiple:
                kwargs["action"] = "append"
            p.add_argument(opt.flag, **kwargs)
    return parser


def given_flags(namespace: argparse.Namespace, command: str) -> Dict[str, Any]:
    return {name: getattr(namespace, name) for name in options_for(command)
            if getattr(namespace, name, None) is not None}


def missing_required(command: str, values: Dict[str, Any]) -> List[str]:
    return [opt.flag for opt in options_for(command).values() if opt.required and values.get(opt.name) is None]
