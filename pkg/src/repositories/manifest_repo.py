"""
Manifest TSV access: ``video_id<TAB>feature_path<TAB>caption`` rows.

Repeated video ids add reference captions; ``#`` lines are comments.
Relative feature paths resolve against the manifest's directory.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from src.models.dataset import CaptionRecord, ManifestRow, VideoExample
from src.repositories.features_repo import FeatureRepository
from src.text.tokenizer import tokenize
from src.text.vocab import Vocab
from src.utils.exceptions import DataError
from src.utils.logger import logger, log_execution_time
from src.utils.text_files import read_text_lines

PathLike = Union[str, Path]


def parse_manifest(path: PathLike) -> List[ManifestRow]:
    path = Path(path)
    if not path.is_file():
        raise DataError("manifest not found", path=str(path))
    rows: List[ManifestRow] = []
    for line_no, line in enumerate(read_text_lines(path), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            raise DataError(f"expected 3 tab-separated columns, found {len(columns)}", path=str(path), line=line_no)
        video_id, feature_path, caption = (c.strip() for c in columns)
        if not video_id or not feature_path:
            raise DataError("empty video_id or feature_path", path=str(path), line=line_no)
        rows.append(ManifestRow(video_id=video_id, feature_path=feature_path, caption=caption, line=line_no))
    return rows


@log_execution_time
def load_manifest(path: PathLike, vocab: Optional[Vocab] = None,
                  features: Optional[FeatureRepository] = None) -> List[VideoExample]:
    """Group manifest rows into videos, tokenising captions and loading features once per video."""
    path = Path(path)
    rows = parse_manifest(path)
    features = features or FeatureRepository(path.parent)

    order: List[str] = []
    feature_of: Dict[str, str] = {}
    references: Dict[str, List[CaptionRecord]] = {}
    for row in rows:
        known = feature_of.get(row.video_id)
        if known is None:
            feature_of[row.video_id] = row.feature_path
            references[row.video_id] = []
            order.append(row.video_id)
        elif known != row.feature_path:
            raise DataError(f"video '{row.video_id}' maps to conflicting feature paths '{known}' and '{row.feature_path}'",
                            path=str(path), line=row.line)
        tokens = tokenize(row.caption)
        references[row.video_id].append(CaptionRecord(
            video_id=row.video_id,
            text=row.caption,
            tokens=tokens,
            ids=vocab.encode(tokens) if vocab is not None else None,
        ))
        if not features.resolve(row.feature_path).is_file():
            raise DataError(f"feature file '{row.feature_path}' not found", path=str(path), line=row.line)

    examples = [
        VideoExample(video_id=vid, features=features.load(feature_of[vid]), references=references[vid])
        for vid in order
    ]
    logger.info("Loaded manifest", {"path": str(path), "videos": len(examples), "captions": len(rows)})
    return examples


def write_manifest(path: PathLike, rows: Iterable[ManifestRow], header: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {header}"] if header else []
    lines.extend(f"{r.video_id}\t{r.feature_path}\t{r.caption}" for r in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
