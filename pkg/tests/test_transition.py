"""Tests for note and bar-tempo transitions and the factorized joint model."""

import numpy as np
import pytest

from beatnote.exceptions import ModelError, ResourceRefusal
from beatnote.models import MeterConfig, Segment, Weighting
from beatnote.statespace import (
    beat_distances,
    build_bar_tempo_space,
    build_joint_space,
    build_note_space,
)
from beatnote.transition import (
    NoteTransitionConfig,
    TempoTransitionConfig,
    bar_tempo_transition,
    build_joint_transitions,
    nonvocal_self_loop,
    note_transition,
    note_transition_matrix,
    pitch_jump_prior,
    theta,
)


def _joint_model(meter, note_cfg, tempo=100.0, margin=30.0, hop=0.1, notes=None):
    bt = build_bar_tempo_space(meter, tempo, margin, hop)
    joint = build_joint_space(bt, notes or build_note_space(60, 2))
    return build_joint_transitions(joint, meter, note_cfg, TempoTransitionConfig())


class TestNoteTransitionConfig:
    def test_defaults(self):
        cfg = NoteTransitionConfig()
        assert (cfg.c_attack, cfg.c_stable, cfg.c_nonvocal) == (0.9, 0.99, 0.9999)
        assert cfg.leave_mass == pytest.approx(1e-4)

    @pytest.mark.parametrize(
        "kwargs",
        [{"c_attack": 1.0}, {"c_stable": 0.0}, {"weighting": "bogus"}, {"sigma": 0.0}, {"w": -1}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(Exception) as info:
            NoteTransitionConfig(**kwargs)
        assert info.value.exit_code == 2

    def test_dict_roundtrip(self):
        cfg = NoteTransitionConfig(weighting=Weighting.SIMPLE, w=1.1, sigma=0.045)
        assert NoteTransitionConfig.from_dict(cfg.to_dict()) == cfg


class TestPitchJumpPrior:
    def test_rows_sum_to_leave_mass(self):
        prior = pitch_jump_prior(build_note_space(), NoteTransitionConfig())
        assert prior.shape == (35, 35)
        np.testing.assert_allclose(prior.sum(axis=1), 1e-4, rtol=1e-12)

    def test_flat_limit(self):
        cfg = NoteTransitionConfig(pitch_jump_sigma=1e9)
        prior = pitch_jump_prior(build_note_space(60, 2), cfg)
        np.testing.assert_allclose(prior, 0.00005, rtol=1e-9)

    def test_prefers_small_jumps(self):
        prior = pitch_jump_prior(build_note_space(), NoteTransitionConfig())
        assert prior[10, 10] > prior[10, 12] > prior[10, 20]


class TestTheta:
    def test_time_window_on_beat(self, meter_44):
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW, w=1.0, sigma=0.03)
        assert theta(cfg, 0.0, 1, meter_44) == pytest.approx(10.6385, rel=1e-5)

    def test_time_window_decays(self, meter_44):
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW, sigma=0.03)
        assert theta(cfg, 0.0, 1, meter_44) > theta(cfg, 0.03, 1, meter_44) > theta(
            cfg, 0.2, 1, meter_44
        )

    def test_simple(self, meter_44):
        cfg = NoteTransitionConfig(weighting=Weighting.SIMPLE, w=1.0, sigma=0.03)
        assert theta(cfg, 0.0, 2, meter_44) == pytest.approx(13.298076 * 0.6, rel=1e-6)
        assert theta(cfg, 0.02, 2, meter_44) == 1.0

    @pytest.mark.parametrize("d", [0.0, 0.01, 0.5])
    def test_none(self, meter_44, d):
        assert theta(NoteTransitionConfig(), d, 1, meter_44) == 1.0

    def test_equal_prior_removes_beat_differences(self):
        meter = MeterConfig(meter_id="4/4", beats_per_bar=4, onset_prior=(0.7,) * 4)
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW)
        values = {theta(cfg, 0.0, b, meter) for b in range(1, 5)}
        assert len(values) == 1


class TestNoteTransition:
    def setup_method(self):
        self.cfg = NoteTransitionConfig()
        self.prior = pitch_jump_prior(build_note_space(60, 3), self.cfg)

    def test_attack_self_loop(self):
        assert note_transition(self.cfg, self.prior, 3, 3, 1.0) == 0.9
        assert note_transition(self.cfg, self.prior, 3, 4, 1.0) == pytest.approx(0.1)

    def test_stable_to_nonvocal(self):
        assert note_transition(self.cfg, self.prior, 4, 5, 1.0) == pytest.approx(0.01)

    def test_weighted_nonvocal_self_loop(self):
        value = note_transition(self.cfg, self.prior, 5, 5, 10.6385)
        assert value == pytest.approx(0.99894, abs=1e-5)

    def test_zero_arcs(self):
        assert note_transition(self.cfg, self.prior, 3, 7, 1.0) == 0.0  # A to another pitch
        assert note_transition(self.cfg, self.prior, 5, 4, 1.0) == 0.0  # N to S
        assert note_transition(self.cfg, self.prior, 5, 8, 1.0) == 0.0  # N to another N

    def test_nonvocal_to_attack_scaled(self):
        base = note_transition(self.cfg, self.prior, 2, 6, 1.0)
        assert note_transition(self.cfg, self.prior, 2, 6, 3.0) == pytest.approx(3 * base)

    def test_rows_stochastic(self):
        for weight in (0.01, 1.0, 50.0):
            matrix = note_transition_matrix(self.cfg, self.prior, weight)
            np.testing.assert_allclose(matrix.sum(axis=1), 1.0, atol=1e-12)

    def test_weight_exhausting_self_loop(self):
        with pytest.raises(ModelError, match="no NonVocal self-transition mass"):
            nonvocal_self_loop(self.cfg, 1e4)

    def test_weight_at_limit_after_rounding(self):
        # 1 - c_nonvocal is not exactly 1e-4, so the product only rounds to one
        limit = 1.0 / self.cfg.leave_mass
        with pytest.raises(ModelError):
            nonvocal_self_loop(self.cfg, limit)
        assert nonvocal_self_loop(self.cfg, 0.5 * limit) == pytest.approx(0.5)


class TestBarTempoTransition:
    def test_single_tempo(self, meter_44):
        space = build_bar_tempo_space(meter_44, 75.0, 0.0, 0.02)
        for state in (0, 39, 159):
            successors = bar_tempo_transition(space, TempoTransitionConfig(), state)
            assert len(successors) == 1 and successors[0][1] == 1.0
        assert bar_tempo_transition(space, TempoTransitionConfig(), 159)[0][0] == 0

    def test_interior_position(self, meter_44):
        space = build_bar_tempo_space(meter_44, 120.0, 8.0, 0.02)
        assert space.num_tempi == 3
        state = space.state_index(1, 3)
        assert bar_tempo_transition(space, TempoTransitionConfig(), state) == [(state + 1, 1.0)]

    def test_beat_crossing_middle_tempo(self, meter_44):
        space = build_bar_tempo_space(meter_44, 120.0, 8.0, 0.02)
        state = space.state_index(1, 24)
        successors = dict(bar_tempo_transition(space, TempoTransitionConfig(0.02), state))
        assert sorted(successors.values()) == pytest.approx([0.01, 0.01, 0.98])
        assert successors[space.state_index(1, 25)] == pytest.approx(0.98)
        assert space.state_index(0, 24) in successors
        assert space.state_index(2, 26) in successors


class TestJointTransitions:
    def test_weighting_none_reduces_to_baseline(self, small_meter):
        model = _joint_model(small_meter, NoteTransitionConfig())
        np.testing.assert_array_equal(model.theta, 1.0)
        baseline = note_transition_matrix(model.note_cfg, model.prior, 1.0)
        for state in range(len(model.joint.bar_tempo)):
            np.testing.assert_array_equal(model.note_matrix(state), baseline)

    def test_simple_off_beat_rows_match_baseline(self, small_meter):
        cfg = NoteTransitionConfig(weighting=Weighting.SIMPLE)
        model = _joint_model(small_meter, cfg)
        baseline = note_transition_matrix(cfg, model.prior, 1.0)
        beats = model.joint.bar_tempo.beat_of_state
        off_beat = int(np.flatnonzero(beats == 0)[0])
        on_beat = int(np.flatnonzero(beats == 1)[0])
        np.testing.assert_array_equal(model.note_matrix(off_beat), baseline)
        assert model.theta[on_beat] > 1.0

    def test_theta_only_touches_nonvocal_rows(self, small_meter):
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW)
        model = _joint_model(small_meter, cfg)
        baseline = note_transition_matrix(cfg, model.prior, 1.0)
        weighted = model.note_matrix(0)
        vocal = model.joint.notes.segment_of_state != Segment.NON_VOCAL
        np.testing.assert_array_equal(weighted[vocal], baseline[vocal])
        assert not np.allclose(weighted[~vocal], baseline[~vocal])

    def test_raising_prior_never_lowers_onset_arcs(self):
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW)
        low = MeterConfig(meter_id="2/4", beats_per_bar=2, bins_per_beat=4, onset_prior=(0.5, 0.5))
        high = low.with_prior((0.9, 0.5))
        a, b = _joint_model(low, cfg), _joint_model(high, cfg)
        assert np.all(b.theta >= a.theta)
        _, nearest = beat_distances(a.joint.bar_tempo, low)
        assert np.all(b.theta[nearest == 1] > a.theta[nearest == 1])

    def test_too_strong_weighting(self, small_meter):
        cfg = NoteTransitionConfig(c_nonvocal=0.99, weighting=Weighting.TIME_WINDOW, sigma=0.001)
        with pytest.raises(ModelError):
            _joint_model(small_meter, cfg)

    def test_state_budget(self, small_meter):
        bt = build_bar_tempo_space(small_meter, 100.0, 30.0, 0.1)
        joint = build_joint_space(bt, build_note_space(60, 2))
        with pytest.raises(ResourceRefusal):
            build_joint_transitions(
                joint, small_meter, NoteTransitionConfig(), TempoTransitionConfig(), max_states=10
            )

    def test_dense_matches_factorized(self, small_meter):
        cfg = NoteTransitionConfig(weighting=Weighting.TIME_WINDOW, w=1.2, sigma=0.1)
        model = _joint_model(small_meter, cfg)
        dense = model.to_dense()
        np.testing.assert_allclose(dense.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(model.row_sums(), dense.sum(axis=1), atol=1e-12)
        for state in (0, 7, 100, len(model.joint) - 1):
            row = dict(model.successors(state))
            nonzero = np.flatnonzero(dense[state])
            assert sorted(row) == nonzero.tolist()
            for dst in nonzero:
                assert row[int(dst)] == pytest.approx(dense[state, dst], rel=1e-12)

    def test_out_degree_bound(self, small_meter):
        model = _joint_model(small_meter, NoteTransitionConfig())
        assert model.max_out_degree == 3 * (1 + 2)

    def test_stochastic_on_random_configurations(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            beats_per_bar = int(rng.integers(1, 5))
            meter = MeterConfig(
                meter_id=f"m{trial}",
                beats_per_bar=beats_per_bar,
                bins_per_beat=4,
                onset_prior=tuple(rng.uniform(0.1, 1.0, beats_per_bar)),
            )
            cfg = NoteTransitionConfig(
                c_attack=float(rng.uniform(0.5, 0.99)),
                c_stable=float(rng.uniform(0.5, 0.999)),
                weighting=(Weighting.SIMPLE, Weighting.TIME_WINDOW)[trial % 2],
                w=float(rng.uniform(0.5, 1.5)),
                sigma=float(rng.uniform(0.02, 0.08)),
            )
            model = _joint_model(
                meter,
                cfg,
                tempo=float(rng.uniform(90, 150)),
                margin=20.0,
                hop=0.04,
                notes=build_note_space(60, int(rng.integers(1, 4))),
            )
            np.testing.assert_allclose(model.row_sums(), 1.0, atol=1e-9)
            c_n = 1.0 - model.theta * cfg.leave_mass
            assert np.all((c_n > 0.0) & (c_n <= 1.0))
