"""Tests for event matching, scores and the aggregate table."""

import numpy as np
import pytest

from beatnote.exceptions import InputError
from beatnote.metrics import (
    TOTAL,
    TOTAL_BY_METER,
    aggregate,
    f_measure,
    match_events,
    recording_row,
    score_recording,
)


class TestMatchEvents:
    def test_partial_match(self):
        scores = match_events([0.5, 1.0], [0.52, 1.2], 0.05)
        assert (scores.precision, scores.recall, scores.f_measure) == (0.5, 0.5, 0.5)
        assert scores.matches == [(0.5, 0.52)]

    def test_identical(self):
        scores = match_events([0.1, 0.4, 2.0], [0.1, 0.4, 2.0], 0.05)
        assert (scores.precision, scores.recall, scores.f_measure) == (1.0, 1.0, 1.0)

    def test_no_detections(self):
        scores = match_events([], [0.5, 1.0], 0.05)
        assert (scores.precision, scores.recall, scores.f_measure) == (0.0, 0.0, 0.0)
        assert scores.num_references == 2

    def test_both_empty(self):
        scores = match_events([], [], 0.05)
        assert (scores.precision, scores.recall, scores.f_measure) == (0.0, 0.0, 0.0)

    def test_window_edge_is_inclusive(self):
        assert match_events([1.05], [1.0], 0.05).recall == 1.0
        assert match_events([1.0501], [1.0], 0.05).recall == 0.0

    def test_one_to_one(self):
        scores = match_events([1.0], [0.98, 1.02], 0.05)
        assert len(scores.matches) == 1
        assert scores.matches == [(1.0, 0.98)]
        assert scores.precision == 1.0 and scores.recall == 0.5

    def test_earliest_detection_wins(self):
        scores = match_events([0.97, 1.01], [1.0, 1.04], 0.05)
        assert scores.matches == [(0.97, 1.0), (1.01, 1.04)]

    def test_unsorted_input(self):
        assert match_events([1.0, 0.5], [0.5, 1.0], 0.01).f_measure == 1.0

    def test_negative_tolerance(self):
        with pytest.raises(InputError):
            match_events([1.0], [1.0], -0.1)

    def test_shift_invariance(self, rng):
        for _ in range(20):
            refs = np.sort(rng.uniform(0, 30, 40))
            dets = np.sort(refs + rng.uniform(-0.08, 0.08, 40))
            shift = float(rng.uniform(-5, 5))
            base = match_events(dets, refs, 0.05)
            moved = match_events(dets + shift, refs + shift, 0.05)
            assert len(moved.matches) == len(base.matches)
            assert moved.f_measure == base.f_measure

    def test_matches_within_tolerance(self, rng):
        dets = rng.uniform(0, 10, 50)
        refs = rng.uniform(0, 10, 50)
        scores = match_events(dets, refs, 0.07)
        assert all(abs(d - r) <= 0.07 + 1e-9 for d, r in scores.matches)
        assert len(scores.matches) <= 50
        assert 0.0 <= scores.precision <= 1.0 and 0.0 <= scores.recall <= 1.0


class TestFMeasure:
    def test_values(self):
        assert f_measure(0.0, 0.0) == 0.0
        assert f_measure(1.0, 0.5) == pytest.approx(2 / 3)


class TestAggregate:
    def _scores(self, name, meter, detections, beats=None):
        return score_recording(
            name,
            meter,
            detections,
            [1.0, 2.0, 3.0, 4.0, 5.0],
            beats=beats,
            reference_beats=[0.5, 1.0] if beats is not None else None,
        )

    def test_single_recording(self):
        scores = self._scores("a", "4/4", [1.0, 2.0, 9.0], beats=[0.5, 1.0])
        rows = aggregate([scores])
        row = recording_row(scores)
        assert [r["meter"] for r in rows] == ["4/4", TOTAL, TOTAL_BY_METER]
        for r in rows:
            assert (r["P"], r["R"], r["F"], r["beatF"]) == (row["P"], row["R"], row["F"], 1.0)
            assert r["n"] == 1

    def test_mean_of_two(self):
        a = self._scores("a", "4/4", [1.0, 2.0])
        b = self._scores("b", "4/4", [1.0, 2.0, 3.0])
        rows = aggregate([a, b])
        assert rows[0]["F"] == pytest.approx((a.onsets.f_measure + b.onsets.f_measure) / 2)
        assert rows[0]["beatF"] is None

    def test_totals_differ_with_unbalanced_meters(self):
        perfect = [1.0, 2.0, 3.0, 4.0, 5.0]
        scores = [
            self._scores("a", "9/8", perfect),
            self._scores("b", "9/8", perfect),
            self._scores("c", "8/8", []),
        ]
        rows = {r["meter"]: r for r in aggregate(scores)}
        assert list(rows) == ["9/8", "8/8", TOTAL, TOTAL_BY_METER]
        assert rows["9/8"]["n"] == 2
        assert rows[TOTAL]["F"] == pytest.approx(2 / 3)
        assert rows[TOTAL_BY_METER]["F"] == pytest.approx(0.5)
        assert rows[TOTAL]["n"] == rows[TOTAL_BY_METER]["n"] == 3

    def test_empty(self):
        with pytest.raises(InputError, match="Nothing to aggregate"):
            aggregate([])
