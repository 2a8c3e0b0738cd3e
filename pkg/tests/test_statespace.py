"""Tests for the bar-tempo, note and joint state spaces."""

import numpy as np
import pytest

from beatnote.exceptions import ConfigurationError, ResourceRefusal
from beatnote.models import MeterConfig, Segment
from beatnote.statespace import (
    bar_position_to_bin,
    beat_distances,
    bins_of_states,
    build_bar_tempo_space,
    build_joint_space,
    build_note_space,
    distance_to_nearest_beat,
    tempo_grid,
)


class TestTempoGrid:
    def test_single_tempo(self):
        assert tempo_grid(75.0, 0.0, 0.02).tolist() == [40]

    def test_margin_covers_range(self):
        grid = tempo_grid(120.0, 10.0, 0.02)
        # 60 / (130 * 0.02) = 23.08 .. 60 / (110 * 0.02) = 27.27
        assert grid.tolist() == [24, 25, 26, 27]

    def test_empty_range(self):
        # 60 / (110 * 0.02) = 27.27 has no integer neighbour within +/- 0 bpm
        with pytest.raises(ConfigurationError, match="widen the tempo margin"):
            tempo_grid(110.0, 0.0, 0.02)

    def test_margin_reaching_zero(self):
        with pytest.raises(ConfigurationError):
            tempo_grid(10.0, 10.0, 0.02)

    def test_fine_hop_scale(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 10.0, 0.0058)
        assert space.frames_per_beat[0] == 122
        assert space.frames_per_beat[-1] == 159
        assert len(space) == 4 * sum(range(122, 160))


class TestBarTempoStateSpace:
    def test_one_tempo_state(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        assert space.num_tempi == 1
        assert space.frames_per_beat.tolist() == [40]
        assert len(space) == 160
        assert space.beat_positions[0].tolist() == [0, 40, 80, 120]

    def test_single_beat_meter(self):
        meter = MeterConfig(meter_id="1", beats_per_bar=1)
        space = build_bar_tempo_space(meter, 60.0, 0.0, 0.05)
        assert len(space) == 20
        assert space.beat_of_state.tolist() == [1] + [0] * 19

    def test_state_index_roundtrip(self, meter_44):
        space = build_bar_tempo_space(meter_44, 120.0, 10.0, 0.02)
        for state in (0, 95, 96, len(space) - 1):
            assert space.state_index(*space.decompose(state)) == state

    def test_state_index_out_of_range(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        with pytest.raises(IndexError):
            space.state_index(0, 160)

    def test_bpm(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        assert space.bpm(0) == pytest.approx(75.0)

    def test_non_uniform_beats(self, aksak):
        space = build_bar_tempo_space(aksak, 60.0, 0.0, 0.0125)
        # 80 frames per beat, 320 positions, beats at 2/9, 4/9, 6/9 of the bar
        assert space.beat_positions[0].tolist() == [0, 71, 142, 213]

    @pytest.mark.parametrize("tempo, margin, hop", [(75.0, 10.0, 0.02), (140.0, 30.0, 0.01)])
    def test_every_tempo_has_one_state_per_beat(self, aksak, tempo, margin, hop):
        space = build_bar_tempo_space(aksak, tempo, margin, hop)
        indices = space.beat_position_indices
        assert len(indices) == space.num_tempi
        for t, on_beat in enumerate(indices):
            assert len(on_beat) == aksak.beats_per_bar
            assert len(set(on_beat.tolist())) == aksak.beats_per_bar
            assert np.all(space.tempo_of_state[on_beat] == t)
            assert space.beat_of_state[on_beat].tolist() == [1, 2, 3, 4]
            block = space.beat_of_state[space.tempo_of_state == t]
            assert np.count_nonzero(block) == aksak.beats_per_bar

    def test_colliding_beats(self):
        meter = MeterConfig(meter_id="x", beats_per_bar=2, beat_fractions=(0.0, 0.01))
        with pytest.raises(ConfigurationError, match="collide"):
            build_bar_tempo_space(meter, 600.0, 0.0, 0.02)


class TestNoteStateSpace:
    def test_default_size(self):
        assert len(build_note_space(52, 35)) == 105

    def test_single_pitch(self):
        notes = build_note_space(60, 1)
        assert len(notes) == 3
        assert [notes.describe(i) for i in range(3)] == ["A60", "S60", "N60"]

    def test_decompose(self):
        notes = build_note_space(52, 35)
        pitch_index, segment = notes.decompose(7)
        assert notes.pitches[pitch_index] == 54
        assert segment == Segment.STABLE

    def test_invalid_count(self):
        with pytest.raises(ConfigurationError):
            build_note_space(60, 0)


class TestJointStateSpace:
    def test_size_and_index(self, meter_44):
        bt = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        joint = build_joint_space(bt, build_note_space())
        assert len(joint) == 160 * 105
        assert joint.index(2, 7) == 2 * 105 + 7
        assert joint.decompose(2 * 105 + 7) == (2, 7)

    def test_trivial_product(self):
        meter = MeterConfig(meter_id="1", beats_per_bar=1)
        bt = build_bar_tempo_space(meter, 60.0, 0.0, 1.0)
        assert len(bt) == 1
        joint = build_joint_space(bt, build_note_space(60, 1))
        assert len(joint) == 3
        assert [joint.index(0, n) for n in range(3)] == [0, 1, 2]

    def test_over_budget(self, meter_44):
        bt = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        with pytest.raises(ResourceRefusal) as info:
            build_joint_space(bt, build_note_space(), max_states=1000)
        assert info.value.required == 16800
        assert info.value.exit_code == 3


class TestBins:
    def test_uniform_meter(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        bins = bins_of_states(space, meter_44)
        assert bins[0] == 0
        assert bins[40] == 16
        assert bins[159] == 63
        assert bar_position_to_bin(space, meter_44, 20) == 8

    def test_each_beat_covers_its_bins(self, aksak):
        space = build_bar_tempo_space(aksak, 60.0, 0.0, 0.0125)
        bins = bins_of_states(space, aksak)
        assert set(bins.tolist()) == set(range(aksak.num_bins))
        assert np.all(np.diff(bins) >= 0)
        assert bins[71] == 16 and bins[213] == 48

    def test_scalar_matches_table(self, aksak):
        space = build_bar_tempo_space(aksak, 60.0, 5.0, 0.02)
        bins = bins_of_states(space, aksak)
        for state in range(len(space)):
            assert bar_position_to_bin(space, aksak, state) == bins[state]


class TestBeatDistances:
    def test_on_beat(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        assert distance_to_nearest_beat(space, meter_44, 80) == (0.0, 3)

    def test_after_downbeat(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        seconds, beat = distance_to_nearest_beat(space, meter_44, 5)
        assert seconds == pytest.approx(0.1)
        assert beat == 1

    def test_wraparound(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        seconds, beat = distance_to_nearest_beat(space, meter_44, 159)
        assert seconds == pytest.approx(0.02)
        assert beat == 1

    def test_tie_goes_to_lower_beat(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        assert distance_to_nearest_beat(space, meter_44, 20)[1] == 1

    def test_vectorized_matches_scalar(self, aksak):
        space = build_bar_tempo_space(aksak, 60.0, 5.0, 0.02)
        seconds, beats = beat_distances(space, aksak)
        for state in range(0, len(space), 7):
            d, b = distance_to_nearest_beat(space, aksak, state)
            assert seconds[state] == pytest.approx(d)
            assert beats[state] == b
