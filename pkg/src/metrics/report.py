"""
Corpus evaluation and the score-table writers.

The report table has one row per model or run with the columns
``Bleu1 Bleu2 Bleu3 Bleu4 METEOR-ex ROUGE_L CIDEr``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

from src.metrics.bleu import bleu
from src.metrics.cider import cider_scores
from src.metrics.meteor import meteor_scores
from src.metrics.rouge import rouge_l_scores
from src.models.evaluation import REPORT_COLUMNS, EvalPair, PairScores, ScoreReport
from src.utils.exceptions import UsageError

PathLike = Union[str, Path]


def evaluate_corpus(pairs: Sequence[EvalPair], label: str = "model") -> ScoreReport:
    """All metrics over ``pairs``, plus per-video scores.

    Per-video BLEU is the corpus formula applied to a single pair.
    """
    if not pairs:
        raise UsageError("cannot evaluate an empty corpus")
    corpus_bleu = bleu(pairs)
    meteor = meteor_scores(pairs)
    rouge = rouge_l_scores(pairs)
    cider = cider_scores(pairs)

    per_video = [
        PairScores(video_id=p.video_id, bleu=bleu([p]), meteor=meteor[i], rouge_l=rouge[i],
                   cider=cider[i], candidate=" ".join(p.candidate))
        for i, p in enumerate(pairs)
    ]
    n = len(pairs)
    return ScoreReport(
        label=label,
        bleu=corpus_bleu,
        meteor=sum(meteor) / n,
        rouge_l=sum(rouge) / n,
        cider=sum(cider) / n,
        per_video=per_video,
    )


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def format_report(reports: Sequence[ScoreReport]) -> str:
    lines = ["\t".join(("model", *REPORT_COLUMNS))]
    for report in reports:
        lines.append("\t".join((report.label, *(_fmt(v) for v in report.row()))))
    return "\n".join(lines) + "\n"


def format_per_video(report: ScoreReport) -> str:
    lines = ["\t".join(("video_id", *REPORT_COLUMNS, "candidate"))]
    for scores in report.per_video:
        lines.append("\t".join((scores.video_id, *(_fmt(v) for v in scores.row()), scores.candidate)))
    return "\n".join(lines) + "\n"


def write_report(path: PathLike, reports: Sequence[ScoreReport]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_report(reports), encoding="utf-8")


def write_per_video(path: PathLike, report: ScoreReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_per_video(report), encoding="utf-8")
