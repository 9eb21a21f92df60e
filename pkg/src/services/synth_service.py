"""
Deterministic synthetic captioning dataset.

Each video belongs to one of k archetypes. Its features are the archetype's
block indicator (ones over a contiguous block of feature columns) plus
Gaussian noise on every frame, and its caption is the archetype's fixed
Nepali template, so the feature -> caption mapping is learnable.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from src.models.dataset import FeatureMatrix, ManifestRow, SynthRecord, SynthVideo
from src.repositories.features_repo import write_features
from src.repositories.manifest_repo import write_manifest
from src.utils.exceptions import UsageError
from src.utils.logger import logger, log_execution_time
from src.utils.random_streams import SYNTH, derive_rng

CAPTION_TEMPLATES = (
    "एक मानिस गितार बजाउँदै छ।",
    "एउटी महिला खाना पकाउँदै छिन्।",
    "एउटा कुकुर घाँसमा दौडिरहेको छ।",
    "केटाकेटीहरू पार्कमा फुटबल खेल्दै छन्।",
    "एक मानिस मोटरसाइकल चलाउँदै छ।",
    "एउटी केटी मञ्चमा नाच्दै छिन्।",
    "एउटा बिरालो पानी पिउँदै छ।",
    "दुई जना मानिस कुरा गर्दै छन्।",
)

MANIFEST_NAME = "manifest.tsv"
CAPTIONS_NAME = "captions.tsv"
RECORD_NAME = "synth.json"
FEATURE_DIR = "features"

PathLike = Union[str, Path]


def archetype_centroids(n_archetypes: int, d_feat: int) -> np.ndarray:
    """[k, d_feat] block indicators; trailing columns beyond k blocks stay zero."""
    block = d_feat // n_archetypes
    if block < 1:
        raise UsageError(f"d_feat={d_feat} is too small for {n_archetypes} archetypes")
    centroids = np.zeros((n_archetypes, d_feat))
    for a in range(n_archetypes):
        centroids[a, a * block:(a + 1) * block] = 1.0
    return centroids


def archetype_of_index(index: int, n_archetypes: int) -> int:
    return index % n_archetypes


@log_execution_time
def synth_dataset(seed: int, n_videos: int, t_enc: int, d_feat: int, out_dir: PathLike,
                  n_archetypes: int = 4, noise: float = 0.1,
                  templates: Optional[Sequence[str]] = None) -> SynthRecord:
    """Write features, manifest, captions and bookkeeping under ``out_dir``."""
    templates = tuple(templates or CAPTION_TEMPLATES)
    if n_videos < 1:
        raise UsageError(f"n_videos must be >= 1, got {n_videos}")
    if t_enc < 1 or d_feat < 1:
        raise UsageError(f"t_enc and d_feat must be >= 1, got {t_enc} and {d_feat}")
    if not 1 <= n_archetypes <= len(templates):
        raise UsageError(f"n_archetypes must lie in 1..{len(templates)}, got {n_archetypes}")
    if noise < 0:
        raise UsageError(f"noise must be >= 0, got {noise}")

    out_dir = Path(out_dir)
    rng = derive_rng(seed, SYNTH)
    centroids = archetype_centroids(n_archetypes, d_feat)

    videos: List[SynthVideo] = []
    rows: List[ManifestRow] = []
    for index in range(n_videos):
        video_id = f"vid{index:04d}"
        archetype = archetype_of_index(index, n_archetypes)
        frames = centroids[archetype][None, :] + noise * rng.standard_normal((t_enc, d_feat))
        # Round through float32 so the written file is the dataset.
        frames = frames.astype(np.float32).astype(np.float64)
        relative = f"{FEATURE_DIR}/{video_id}.vcf"
        write_features(out_dir / relative, FeatureMatrix(values=frames))
        caption = templates[archetype]
        videos.append(SynthVideo(video_id=video_id, archetype=archetype, feature_path=relative, caption=caption))
        rows.append(ManifestRow(video_id=video_id, feature_path=relative, caption=caption, line=index + 2))

    manifest_path = out_dir / MANIFEST_NAME
    write_manifest(manifest_path, rows, header=f"synthetic dataset seed={seed} videos={n_videos} archetypes={n_archetypes}")
    (out_dir / CAPTIONS_NAME).write_text(
        "".join(f"{v.video_id}\t{v.caption}\n" for v in videos), encoding="utf-8")

    record = SynthRecord(seed=seed, n_videos=n_videos, n_archetypes=n_archetypes, t_enc=t_enc, d_feat=d_feat,
                         noise=noise, manifest_path=MANIFEST_NAME, videos=videos)
    (out_dir / RECORD_NAME).write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("Synthetic dataset written", {"out_dir": str(out_dir), "videos": n_videos, "archetypes": n_archetypes})
    return record
