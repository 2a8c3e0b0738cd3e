"""Tests for the accent and pitch observation models."""

import math

import numpy as np
import pytest

from beatnote.exceptions import InputError
from beatnote.models import FrameFeatures, MeterConfig, Segment
from beatnote.observation import (
    PitchModel,
    RhythmPattern,
    accent_likelihood,
    joint_observation,
    pitch_likelihoods,
)
from beatnote.statespace import (
    bins_of_states,
    build_bar_tempo_space,
    build_joint_space,
    build_note_space,
)


@pytest.fixture
def single_bin_meter():
    return MeterConfig(meter_id="1/4", beats_per_bar=1, bins_per_beat=1)


def _standard_normal(meter, dims=1):
    return RhythmPattern(
        meter=meter,
        weights=np.ones((meter.num_bins, 1)),
        means=np.zeros((meter.num_bins, 1, dims)),
        variances=np.ones((meter.num_bins, 1, dims)),
        smoothing=None,
    )


class TestRhythmPattern:
    def test_standard_normal_density(self, single_bin_meter):
        pattern = _standard_normal(single_bin_meter)
        assert accent_likelihood(pattern, [0.0], 0) == pytest.approx(0.39894, abs=1e-5)

    def test_diagonal_product(self, single_bin_meter):
        pattern = _standard_normal(single_bin_meter, dims=2)
        expected = (1.0 / math.sqrt(2 * math.pi)) ** 2 * math.exp(-0.5 * (1.0 + 4.0))
        assert accent_likelihood(pattern, [1.0, 2.0], 0) == pytest.approx(expected)

    def test_mixture_matches_direct_sum(self, small_meter):
        pattern = RhythmPattern(
            meter=small_meter,
            weights=np.tile([0.25, 0.75], (8, 1)),
            means=np.tile(np.array([[0.0], [2.0]])[None], (8, 1, 1)),
            variances=np.tile(np.array([[1.0], [0.5]])[None], (8, 1, 1)),
            smoothing=None,
        )
        x = 1.3
        direct = 0.25 * np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi) + 0.75 * np.exp(
            -0.5 * (x - 2.0) ** 2 / 0.5
        ) / np.sqrt(2 * np.pi * 0.5)
        assert accent_likelihood(pattern, [x], 3) == pytest.approx(direct)

    def test_component_order_is_irrelevant(self, small_meter, rng):
        weights = rng.uniform(0.1, 1.0, (8, 3))
        pattern = RhythmPattern(
            meter=small_meter,
            weights=weights / weights.sum(axis=1, keepdims=True),
            means=rng.normal(0.0, 2.0, (8, 3, 2)),
            variances=rng.uniform(0.3, 2.0, (8, 3, 2)),
            smoothing=None,
        )
        order = [2, 0, 1]
        shuffled = RhythmPattern(
            meter=small_meter,
            weights=pattern.weights[:, order],
            means=pattern.means[:, order],
            variances=pattern.variances[:, order],
            smoothing=None,
        )
        flux = rng.normal(0.0, 2.0, (20, 2))
        np.testing.assert_allclose(
            shuffled.log_likelihood(flux), pattern.log_likelihood(flux), rtol=1e-12
        )
        assert accent_likelihood(shuffled, flux[0], 5) == pytest.approx(
            accent_likelihood(pattern, flux[0], 5)
        )

    def test_log_likelihood_shape(self, peaked_pattern, rng):
        out = peaked_pattern.log_likelihood(rng.normal(size=(13, 1)))
        assert out.shape == (13, 8)
        assert np.all(np.isfinite(out))

    def test_peaked_bins_prefer_peaks(self, peaked_pattern):
        out = peaked_pattern.log_likelihood(np.array([[4.0], [0.0]]))
        assert out[0, 0] > out[0, 1]
        assert out[1, 1] > out[1, 0]

    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"weights": np.full((8, 2), 0.4)}, "sum to 1"),
            ({"variances": np.zeros((8, 2, 1))}, "positive"),
            ({"weights": np.full((3, 2), 0.5)}, "8 bins"),
        ],
    )
    def test_invalid(self, peaked_pattern, kwargs, match):
        fields = {
            "meter": peaked_pattern.meter,
            "weights": peaked_pattern.weights,
            "means": peaked_pattern.means,
            "variances": peaked_pattern.variances,
        }
        fields.update(kwargs)
        with pytest.raises(InputError, match=match):
            RhythmPattern(**fields)

    def test_dimension_mismatch(self, peaked_pattern):
        with pytest.raises(InputError, match="dimensions"):
            peaked_pattern.log_likelihood(np.zeros((4, 3)))

    def test_dict_roundtrip(self, peaked_pattern):
        restored = RhythmPattern.from_dict(peaked_pattern.to_dict())
        np.testing.assert_array_equal(restored.means, peaked_pattern.means)
        assert restored.smoothing is None
        assert restored.meter == peaked_pattern.meter

    def test_malformed_dict(self, peaked_pattern):
        data = peaked_pattern.to_dict()
        del data["bins"]
        with pytest.raises(InputError, match="Malformed"):
            RhythmPattern.from_dict(data)

    def test_uniform_is_flat_across_bins(self, meter_44, rng):
        out = RhythmPattern.uniform(meter_44).log_likelihood(rng.normal(size=(5, 2)))
        np.testing.assert_allclose(out, out[:, :1].repeat(out.shape[1], axis=1))


class TestPitchModel:
    def test_normalized_over_random_inputs(self, rng):
        notes = build_note_space()
        model = PitchModel()
        pitch = rng.uniform(40, 100, 1000)
        pitch[rng.random(1000) < 0.1] = np.nan
        voicing = rng.random(1000)
        probs = np.exp(model.log_likelihoods(notes, pitch, voicing))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_vocal_share_is_voicing(self, rng):
        notes = build_note_space()
        probs = pitch_likelihoods(PitchModel(), notes, 64.3, 0.7)
        vocal = notes.segment_of_state != Segment.NON_VOCAL
        assert probs[vocal].sum() == pytest.approx(0.7)
        np.testing.assert_allclose(probs[~vocal], 0.3 / 35)

    def test_unvoiced_frame(self):
        probs = pitch_likelihoods(PitchModel(), build_note_space(), 60.0, 0.0)
        np.testing.assert_allclose(probs[Segment.NON_VOCAL :: 3], 1.0 / 35)
        np.testing.assert_array_equal(probs[Segment.ATTACK :: 3], 0.0)

    def test_missing_pitch_forces_unvoiced(self):
        probs = pitch_likelihoods(PitchModel(), build_note_space(), None, 0.9)
        np.testing.assert_allclose(probs[Segment.NON_VOCAL :: 3], 1.0 / 35)

    def test_stable_sharper_than_attack(self):
        notes = build_note_space(60, 5)
        probs = pitch_likelihoods(PitchModel(), notes, 62.0, 1.0)
        on = notes.state_index(2, Segment.STABLE)
        assert probs[on] == probs.max()
        assert probs[on] > probs[notes.state_index(2, Segment.ATTACK)]
        far_stable = probs[notes.state_index(0, Segment.STABLE)]
        assert far_stable < probs[notes.state_index(0, Segment.ATTACK)]

    def test_voicing_out_of_range(self):
        with pytest.raises(InputError, match="Voicing"):
            PitchModel().log_likelihoods(build_note_space(), np.array([60.0]), np.array([1.5]))

    def test_invalid_sigma(self):
        with pytest.raises(Exception):
            PitchModel(sigma_stable=0.0)


class TestJointObservation:
    def test_product_of_both_parts(self, small_meter, peaked_pattern, small_notes):
        space = build_bar_tempo_space(small_meter, 100.0, 0.0, 0.1)
        joint = build_joint_space(space, small_notes)
        bins = bins_of_states(space, small_meter)
        frame = FrameFeatures(time=0.0, flux=(4.0,), pitch=61.0, voicing=0.8)
        state = joint.index(0, small_notes.state_index(1, Segment.STABLE))
        expected = accent_likelihood(peaked_pattern, [4.0], int(bins[0])) * float(
            pitch_likelihoods(PitchModel(), small_notes, 61.0, 0.8)[3 + Segment.STABLE]
        )
        value = joint_observation(peaked_pattern, PitchModel(), joint, bins, state, frame)
        assert value == pytest.approx(expected)
