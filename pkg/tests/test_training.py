import math

import numpy as np
import pytest

from src.autodiff.gradcheck import analytic_gradients
from src.autodiff.tensor import Tensor
from src.features.frames import mean_pool, resample, sample_frame_indices
from src.models.dataset import FeatureMatrix
from src.models.training import AdamHyper, AdamState
from src.nn.seq2seq import BoundModel, ModelParams, teacher_forced_forward
from src.text.vocab import END_ID, PAD_ID
from src.training.objectives import cross_entropy_loss, token_accuracy
from src.training.optimizer import adam_step, clip_global_norm, global_norm
from src.utils.exceptions import DimensionError, NumericFailure, UsageError


class TestCrossEntropy:
    def test_uniform_logits_give_log_vocab(self):
        out = cross_entropy_loss(Tensor(np.zeros((3, 7))), [4, 5, 2], [1, 1, 1])
        assert float(out.value.data) == pytest.approx(math.log(7), abs=1e-12)
        assert out.n_tokens == 3

    def test_masked_positions_ignored(self, rng):
        logits = rng.standard_normal((4, 6))
        full = cross_entropy_loss(Tensor(logits[:2]), [4, 2], [1, 1])
        masked = cross_entropy_loss(Tensor(logits), [4, 2, 0, 0], [1, 1, 0, 0])
        assert float(masked.value.data) == pytest.approx(float(full.value.data), abs=1e-12)

    def test_empty_mask_is_zero(self, rng):
        out = cross_entropy_loss(Tensor(rng.standard_normal((2, 5))), [0, 0], [0, 0])
        assert out.empty
        assert float(out.value.data) == 0.0

    def test_two_token_vocabulary(self):
        out = cross_entropy_loss(Tensor([[math.log(3.0), 0.0]]), [0], [1])
        assert float(out.value.data) == pytest.approx(math.log(4.0 / 3.0), abs=1e-12)

    def test_matches_scalar_loop(self, rng):
        logits = rng.standard_normal((5, 7)) * 3
        targets = [int(t) for t in rng.integers(0, 7, size=5)]
        mask = [1, 1, 0, 1, 0]
        total, count = 0.0, 0
        for t in range(5):
            if not mask[t]:
                continue
            top = max(logits[t])
            log_norm = math.log(sum(math.exp(v - top) for v in logits[t]))
            total -= logits[t][targets[t]] - top - log_norm
            count += 1
        out = cross_entropy_loss(Tensor(logits), targets, mask)
        assert abs(float(out.value.data) - total / count) < 1e-10

    def test_masked_target_changes_no_gradient(self, tiny_config, rng):
        config = tiny_config.model_copy(update={"t_dec_max": 4})
        params = ModelParams.initialize(config, seed=8)
        features = rng.standard_normal((4, 6))
        mask = [1, 1, 1, 0]

        def gradients(targets):
            def program(t):
                logits = teacher_forced_forward(features, targets, BoundModel(config, t), config)
                return cross_entropy_loss(logits, targets, mask).value
            return analytic_gradients(program, params.arrays)

        value_a, grads_a = gradients([5, 7, END_ID, PAD_ID])
        value_b, grads_b = gradients([5, 7, END_ID, 9])
        assert value_a == value_b
        for name in grads_a:
            np.testing.assert_array_equal(grads_a[name], grads_b[name])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            cross_entropy_loss(Tensor(np.zeros((3, 4))), [1, 2], [1, 1])


class TestAccuracy:
    def test_fraction_of_masked_hits(self):
        logits = np.array([[0, 5, 0], [3, 0, 0], [0, 0, 9]], dtype=float)
        assert token_accuracy(logits, [1, 2, 2], [1, 1, 0]) == 0.5

    def test_ties_resolve_to_lowest_id(self):
        assert token_accuracy(np.zeros((1, 4)), [0], [1]) == 1.0
        assert token_accuracy(np.zeros((1, 4)), [3], [1]) == 0.0

    def test_empty_mask(self):
        assert token_accuracy(np.zeros((2, 3)), [1, 1], [0, 0]) == 0.0


class TestClipping:
    def test_rescales_to_max_norm(self):
        grads = {"a": np.array([3.0, 0.0]), "b": np.array([[4.0]])}
        clipped, norm = clip_global_norm(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        np.testing.assert_allclose(clipped["a"], [0.6, 0.0])

    def test_small_gradients_untouched(self):
        grads = {"a": np.array([0.1, 0.2])}
        clipped, _ = clip_global_norm(grads, 5.0)
        np.testing.assert_array_equal(clipped["a"], grads["a"])

    def test_disabled(self):
        clipped, norm = clip_global_norm({"a": np.full(4, 100.0)}, None)
        assert norm == pytest.approx(200.0)
        np.testing.assert_array_equal(clipped["a"], np.full(4, 100.0))


class TestAdam:
    def test_first_step_moves_by_learning_rate(self, rng):
        params = {"w": rng.standard_normal((3, 2))}
        grads = {"w": rng.standard_normal((3, 2))}
        hyper = AdamHyper(learning_rate=0.01)
        new, state = adam_step(params, grads, AdamState(), hyper)
        np.testing.assert_allclose(new["w"], params["w"] - 0.01 * np.sign(grads["w"]), atol=1e-7)
        assert state.step == 1
        np.testing.assert_allclose(state.m["w"], 0.1 * grads["w"])
        np.testing.assert_allclose(state.v["w"], 0.001 * grads["w"] ** 2)

    def test_exact_first_step(self):
        new, _ = adam_step({"w": np.array(0.5)}, {"w": np.array(1.0)}, AdamState(), AdamHyper(learning_rate=0.1))
        assert float(new["w"]) == pytest.approx(0.5 - 0.1 / (1.0 + 1e-8), abs=1e-15)

    def test_two_steps_hand_unrolled(self):
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        hyper = AdamHyper(learning_rate=lr)
        params, state = {"w": np.array(0.5)}, AdamState()
        params, state = adam_step(params, {"w": np.array(1.0)}, state, hyper)
        params, state = adam_step(params, {"w": np.array(-1.0)}, state, hyper)

        m1, v1 = (1 - b1) * 1.0, (1 - b2) * 1.0
        p1 = 0.5 - lr * (m1 / (1 - b1)) / (math.sqrt(v1 / (1 - b2)) + eps)
        m2, v2 = b1 * m1 + (1 - b1) * -1.0, b2 * v1 + (1 - b2) * 1.0
        p2 = p1 - lr * (m2 / (1 - b1 ** 2)) / (math.sqrt(v2 / (1 - b2 ** 2)) + eps)
        assert abs(float(params["w"]) - p2) < 1e-15
        assert state.step == 2

    def test_zero_learning_rate_is_identity(self, rng):
        params = {"w": rng.standard_normal((3, 3))}
        new, _ = adam_step(params, {"w": rng.standard_normal((3, 3))}, AdamState(), AdamHyper(learning_rate=0.0))
        np.testing.assert_array_equal(new["w"], params["w"])

    def test_inputs_not_mutated(self, rng):
        params = {"w": rng.standard_normal(4)}
        before = params["w"].copy()
        adam_step(params, {"w": np.ones(4)}, AdamState(), AdamHyper())
        np.testing.assert_array_equal(params["w"], before)

    def test_missing_gradient_counts_as_zero(self):
        new, _ = adam_step({"w": np.ones(2), "u": np.ones(2)}, {"w": np.ones(2)}, AdamState(), AdamHyper())
        np.testing.assert_array_equal(new["u"], np.ones(2))

    def test_non_finite_gradient_names_parameter(self):
        with pytest.raises(NumericFailure) as excinfo:
            adam_step({"decoder.W_i": np.ones(2)}, {"decoder.W_i": np.array([1.0, np.nan])},
                      AdamState(), AdamHyper())
        assert "decoder.W_i" in excinfo.value.op


class TestFrames:
    def test_even_sampling(self):
        assert sample_frame_indices(10, 4) == [0, 2, 5, 7]
        assert sample_frame_indices(4, 4) == [0, 1, 2, 3]

    def test_short_videos_repeat_frames(self):
        assert sample_frame_indices(2, 5) == [0, 0, 0, 1, 1]

    def test_invalid_counts(self):
        with pytest.raises(UsageError):
            sample_frame_indices(0, 3)
        with pytest.raises(UsageError):
            sample_frame_indices(3, 0)

    def test_resample(self, rng):
        m = FeatureMatrix(values=rng.standard_normal((6, 3)))
        assert resample(m, 6) is m
        picked = resample(m, 3)
        np.testing.assert_array_equal(picked.values, m.values[[0, 2, 4]])

    def test_mean_pool(self):
        m = FeatureMatrix(values=np.array([[1.0, 2.0], [3.0, 6.0]]))
        np.testing.assert_array_equal(mean_pool(m), [2.0, 4.0])
