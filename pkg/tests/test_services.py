import numpy as np
import pytest

from src.models.evaluation import CaptionResult, DecodeOptions, GradcheckResult
from src.models.training import Checkpoint, EpochRecord, TrainConfig
from src.nn.decoding import greedy_decode
from src.nn.seq2seq import ModelParams
from src.repositories.checkpoint_repo import save_checkpoint
from src.repositories.history_repo import write_history
from src.repositories.manifest_repo import load_manifest
from src.repositories.vocab_repo import save_vocab
from src.services.captioning_service import (
    CAPTIONS_HEADER,
    caption_examples,
    format_captions,
    load_model,
    params_for,
)
from src.services.evaluation_service import compare_variants, eval_pairs, evaluate_model, select_split
from src.services.gradcheck_service import TINY_CONFIG, check_variant, format_results, run_suite, worst_parameter
from src.services.plot_service import plot_history, plot_records
from src.services.synth_service import (
    CAPTION_TEMPLATES, CAPTIONS_NAME, MANIFEST_NAME, RECORD_NAME, archetype_centroids, synth_dataset,
)
from src.services.training_service import prepare_features
from src.utils.exceptions import DataError, FormatError, UsageError


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestSynth:
    def test_same_seed_same_bytes(self, tmp_path):
        synth_dataset(seed=3, n_videos=6, t_enc=5, d_feat=8, out_dir=tmp_path / "a")
        synth_dataset(seed=3, n_videos=6, t_enc=5, d_feat=8, out_dir=tmp_path / "b")
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a == b
        assert {MANIFEST_NAME, CAPTIONS_NAME, RECORD_NAME} <= set(a)

    def test_different_seed_different_features(self, tmp_path):
        synth_dataset(seed=3, n_videos=2, t_enc=2, d_feat=4, out_dir=tmp_path / "a")
        synth_dataset(seed=4, n_videos=2, t_enc=2, d_feat=4, out_dir=tmp_path / "b")
        assert tree_bytes(tmp_path / "a")["features/vid0000.vcf"] != tree_bytes(tmp_path / "b")["features/vid0000.vcf"]

    def test_one_template_per_archetype(self, tmp_path):
        record = synth_dataset(seed=0, n_videos=16, t_enc=8, d_feat=32, out_dir=tmp_path, n_archetypes=4)
        captions = {v.caption for v in record.videos}
        assert captions == set(CAPTION_TEMPLATES[:4])
        for video in record.videos:
            assert video.caption == CAPTION_TEMPLATES[video.archetype]

    def test_features_follow_archetype(self, tmp_path):
        synth_dataset(seed=0, n_videos=8, t_enc=3, d_feat=8, out_dir=tmp_path, n_archetypes=4, noise=0.05)
        for i, example in enumerate(load_manifest(tmp_path / MANIFEST_NAME)):
            block = i % 4
            column_means = example.features.values.mean(axis=0)
            assert np.argmax(column_means[0::2] + column_means[1::2]) == block

    def test_nearest_centroid_recovers_archetype(self, tmp_path):
        record = synth_dataset(seed=7, n_videos=40, t_enc=6, d_feat=32, out_dir=tmp_path, n_archetypes=4, noise=0.1)
        centroids = archetype_centroids(4, 32)
        planted = {v.video_id: v.archetype for v in record.videos}
        for example in load_manifest(tmp_path / MANIFEST_NAME):
            for frame in example.features.values:
                nearest = int(np.argmin(np.linalg.norm(centroids - frame, axis=1)))
                assert nearest == planted[example.video_id]

    @pytest.mark.parametrize("kwargs", [
        dict(n_videos=0),
        dict(n_archetypes=len(CAPTION_TEMPLATES) + 1),
        dict(d_feat=2, n_archetypes=4),
        dict(noise=-1.0),
    ])
    def test_invalid_arguments(self, tmp_path, kwargs):
        values = dict(seed=0, n_videos=4, t_enc=2, d_feat=8, out_dir=tmp_path)
        values.update(kwargs)
        with pytest.raises(UsageError):
            synth_dataset(**values)


class TestCaptioning:
    @pytest.fixture
    def trained(self, synth_data, small_model_config):
        examples, vocab = synth_data
        return examples, vocab, ModelParams.initialize(small_model_config, seed=9)

    def test_vocab_hash_mismatch(self, trained):
        _, vocab, params = trained
        ckpt = Checkpoint(config=params.config, params=params.arrays, vocab_hash="0" * 64)
        with pytest.raises(FormatError):
            params_for(ckpt, vocab)

    def test_vocab_size_mismatch(self, trained, tiny_params):
        _, vocab, _ = trained
        with pytest.raises(FormatError):
            params_for(Checkpoint(config=tiny_params.config, params=tiny_params.arrays), vocab)

    def test_load_model(self, trained, tmp_path):
        _, vocab, params = trained
        save_vocab(tmp_path / "vocab.tsv", vocab)
        save_checkpoint(tmp_path / "m.vckp", Checkpoint(config=params.config, params=params.arrays,
                                                        vocab_hash=vocab.content_hash()))
        loaded, loaded_vocab = load_model(tmp_path / "m.vckp", tmp_path / "vocab.tsv")
        assert loaded_vocab.tokens == vocab.tokens
        for name in params.names():
            np.testing.assert_array_equal(loaded.arrays[name], params.arrays[name])

    def test_greedy_unchanged_by_save_and_load(self, trained, tmp_path, rng):
        _, vocab, params = trained
        save_vocab(tmp_path / "vocab.tsv", vocab)
        save_checkpoint(tmp_path / "m.vckp", Checkpoint(config=params.config, params=params.arrays,
                                                        vocab_hash=vocab.content_hash()))
        loaded, _ = load_model(tmp_path / "m.vckp", tmp_path / "vocab.tsv")
        for _ in range(10):
            features = rng.standard_normal((params.config.t_enc, params.config.d_feat))
            assert greedy_decode(features, loaded) == greedy_decode(features, params)

    def test_order_stable_across_threads(self, trained):
        examples, vocab, params = trained
        single = caption_examples(examples, params, vocab, DecodeOptions(search="beam", beam_width=2))
        pooled = caption_examples(examples, params, vocab, DecodeOptions(search="beam", beam_width=2, threads=3))
        assert single == pooled
        assert [c.video_id for c in single] == [e.video_id for e in examples]

    def test_beam_of_one_matches_greedy(self, trained):
        examples, vocab, params = trained
        greedy = caption_examples(examples, params, vocab, DecodeOptions(search="greedy"))
        beam = caption_examples(examples, params, vocab,
                                DecodeOptions(search="beam", beam_width=1, length_norm="off"))
        assert [c.text for c in greedy] == [c.text for c in beam]
        assert greedy[0].token_ids == greedy_decode(prepare_features(examples[0], params.config), params)

    def test_format(self):
        results = [CaptionResult(video_id="a", text="एक मानिस"), CaptionResult(video_id="b")]
        assert format_captions(results) == f"{CAPTIONS_HEADER}\na\tएक मानिस\nb\t\n"


class TestEvaluation:
    def test_select_split(self, synth_data, small_model_config):
        examples, _ = synth_data
        cfg = TrainConfig(split_ratio=0.75, seed=2, model=small_model_config)
        assert select_split(examples, "all", cfg) == examples
        train_part = select_split(examples, "train", cfg)
        validation = select_split(examples, "validation", cfg)
        assert len(train_part) == 6 and len(validation) == 2
        assert {e.video_id for e in train_part} | {e.video_id for e in validation} == {e.video_id for e in examples}
        with pytest.raises(UsageError):
            select_split(examples, "test", cfg)

    def test_eval_pairs_requires_every_caption(self, synth_data):
        examples, _ = synth_data
        with pytest.raises(UsageError):
            eval_pairs(examples, [CaptionResult(video_id=examples[0].video_id, text="x")])

    def test_reference_captions_score_perfectly(self, synth_data):
        examples, _ = synth_data
        captions = [CaptionResult(video_id=e.video_id, text=" ".join(e.references[0].tokens)) for e in examples]
        pairs = eval_pairs(examples, captions)
        assert all(p.candidate == p.references[0] for p in pairs)

    def test_evaluate_model_label(self, synth_data, small_model_config):
        examples, vocab = synth_data
        params = ModelParams.initialize(small_model_config, seed=1)
        report = evaluate_model(examples, params, vocab, DecodeOptions())
        assert report.label == "GRU+ATTENTION"
        assert len(report.per_video) == len(examples)

    def test_compare_variants(self, synth_data, small_model_config, tmp_path):
        examples, vocab = synth_data
        cfg = TrainConfig(epochs=1, batch_size=8, split_ratio=0.75, seed=0, model=small_model_config)
        reports = compare_variants(examples, vocab, cfg, DecodeOptions(), out_dir=tmp_path)
        assert [r.label for r in reports] == ["LSTM", "LSTM+ATTENTION", "GRU", "GRU+ATTENTION"]
        assert all(len(r.per_video) == 2 for r in reports)
        for stem in ("lstm", "lstm_attention", "gru", "gru_attention"):
            assert (tmp_path / f"{stem}.vckp").is_file()
            assert (tmp_path / f"{stem}.history.tsv").is_file()


class TestGradcheck:
    def test_single_variant_passes(self):
        result = check_variant(TINY_CONFIG.model_copy(update={"cell_kind": "gru", "attention": False}))
        assert result.passed
        assert "input.features" in result.per_param
        assert result.variant == "GRU"

    def test_report_layout(self):
        results = [GradcheckResult(variant="LSTM", max_error=1e-9, per_param={"a": 1e-9}),
                   GradcheckResult(variant="GRU", max_error=1e-3, per_param={"a": 1e-6, "b": 1e-3})]
        lines = format_results(results).splitlines()
        assert lines[0] == "variant\tmax_rel_error\tstatus"
        assert lines[1].endswith("ok") and lines[2].endswith("FAIL")
        assert worst_parameter(results[1]) == "b"

    @pytest.mark.slow
    def test_full_suite(self):
        results = run_suite(seed=0)
        assert [r.variant for r in results] == ["LSTM", "LSTM+ATTENTION", "GRU", "GRU+ATTENTION"]
        assert all(r.passed for r in results)


class TestPlot:
    def test_writes_png(self, tmp_path):
        pytest.importorskip("matplotlib")
        records = [EpochRecord(epoch=i, train_loss=1.0 / i, train_acc=0.1 * i, val_loss=1.2 / i, val_acc=0.08 * i)
                   for i in range(1, 5)]
        write_history(tmp_path / "run.history.tsv", records)
        out = plot_history(tmp_path / "run.history.tsv", tmp_path / "plots" / "run.png")
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_empty_history(self, tmp_path):
        with pytest.raises(DataError):
            plot_records([], tmp_path / "x.png")
