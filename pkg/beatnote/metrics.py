"""Event-level evaluation: windowed matching, precision/recall/F and score tables."""

from __future__ import annotations

import logging
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from beatnote.exceptions import InputError
from beatnote.models import EventScores, RecordingScores

logger = logging.getLogger("beatnote")

BEAT_TOLERANCE = 0.07
ONSET_TOLERANCE = 0.05

TOTAL = "total"
TOTAL_BY_METER = "total (per meter)"
SCORE_COLUMNS = ("meter", "n", "beatF", "P", "R", "F")

_EPS = 1e-9


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def match_events(
    detections: Sequence[float], references: Sequence[float], tolerance: float
) -> EventScores:
    """Greedy one-to-one matching in time order.

    Each reference takes the earliest unmatched detection within ``tolerance``.
    Precision is 0 without detections and recall is 0 without references.
    """
    if tolerance < 0:
        raise InputError(f"Tolerance must be >= 0, got {tolerance}")
    dets = np.sort(np.asarray(detections, dtype=float))
    refs = np.sort(np.asarray(references, dtype=float))

    matches = []
    j = 0
    for ref in refs:
        # detections this far behind can't match any later reference either
        while j < len(dets) and dets[j] < ref - tolerance - _EPS:
            j += 1
        if j < len(dets) and dets[j] <= ref + tolerance + _EPS:
            matches.append((float(dets[j]), float(ref)))
            j += 1

    precision = len(matches) / len(dets) if len(dets) else 0.0
    recall = len(matches) / len(refs) if len(refs) else 0.0
    return EventScores(
        precision=precision,
        recall=recall,
        f_measure=f_measure(precision, recall),
        matches=matches,
        num_detections=len(dets),
        num_references=len(refs),
    )


def score_recording(
    name: str,
    meter: str,
    onsets: Sequence[float],
    reference_onsets: Sequence[float],
    beats: Optional[Sequence[float]] = None,
    reference_beats: Optional[Sequence[float]] = None,
    onset_tolerance: float = ONSET_TOLERANCE,
    beat_tolerance: float = BEAT_TOLERANCE,
) -> RecordingScores:
    beat_scores = None
    if beats is not None and reference_beats is not None:
        beat_scores = match_events(beats, reference_beats, beat_tolerance)
    return RecordingScores(
        name=name,
        meter=meter,
        onsets=match_events(onsets, reference_onsets, onset_tolerance),
        beats=beat_scores,
    )


def _mean_row(label: str, rows: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    beat_f = [r["beatF"] for r in rows if r["beatF"] is not None]
    return {
        "meter": label,
        "n": sum(r["n"] for r in rows),
        "beatF": float(np.mean(beat_f)) if beat_f else None,
        "P": float(np.mean([r["P"] for r in rows])),
        "R": float(np.mean([r["R"] for r in rows])),
        "F": float(np.mean([r["F"] for r in rows])),
    }


def recording_row(scores: RecordingScores) -> Dict[str, Any]:
    return {
        "name": scores.name,
        "meter": scores.meter,
        "n": 1,
        "beatF": scores.beats.f_measure if scores.beats is not None else None,
        "P": scores.onsets.precision,
        "R": scores.onsets.recall,
        "F": scores.onsets.f_measure,
    }


def aggregate(scores: Sequence[RecordingScores]) -> List[Dict[str, Any]]:
    """Unweighted means per meter, then two total rows.

    ``total`` averages over recordings; ``total (per meter)`` averages the
    meter rows. Meters appear in order of first occurrence.
    """
    if not scores:
        raise InputError("Nothing to aggregate: no recordings were scored")
    per_recording = [recording_row(s) for s in scores]
    groups: "OrderedDict[str, List[Dict[str, Any]]]" = OrderedDict()
    for row in per_recording:
        groups.setdefault(row["meter"], []).append(row)

    meter_rows = [_mean_row(meter, rows) for meter, rows in groups.items()]
    by_meter = _mean_row(TOTAL_BY_METER, meter_rows)
    by_meter["n"] = len(per_recording)
    logger.debug("Aggregated %d recordings over %d meters", len(per_recording), len(groups))
    return meter_rows + [_mean_row(TOTAL, per_recording), by_meter]
