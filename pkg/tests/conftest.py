"""
Shared fixtures: seeded generators, tiny model configs and small synthetic
datasets written under ``tmp_path``.
"""

import numpy as np
import pytest

from src.models.model_config import ModelConfig
from src.nn.seq2seq import ModelParams
from src.repositories.manifest_repo import load_manifest
from src.services.synth_service import MANIFEST_NAME, synth_dataset
from src.text.vocab import build_vocab


@pytest.fixture
def rng():
    """Seeded generator so every test is reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    return ModelConfig(cell_kind="lstm", attention=True, d_feat=6, t_enc=4, d_h=5, d_emb=4,
                       vocab_size=12, t_dec_max=3)


@pytest.fixture
def tiny_params(tiny_config):
    return ModelParams.initialize(tiny_config, seed=3)


@pytest.fixture
def synth_dir(tmp_path):
    """8 videos, 4 archetypes, 4 frames of 8 features."""
    out = tmp_path / "synth"
    synth_dataset(seed=11, n_videos=8, t_enc=4, d_feat=8, out_dir=out)
    return out


@pytest.fixture
def synth_data(synth_dir):
    """(examples, vocab) of ``synth_dir``."""
    examples = load_manifest(synth_dir / MANIFEST_NAME)
    vocab = build_vocab([ref for ex in examples for ref in ex.references], max_size=64)
    return load_manifest(synth_dir / MANIFEST_NAME, vocab), vocab


@pytest.fixture
def small_model_config(synth_data):
    _, vocab = synth_data
    return ModelConfig(cell_kind="gru", attention=True, d_feat=8, t_enc=4, d_h=8, d_emb=6,
                       vocab_size=len(vocab), t_dec_max=10)
