"""Viterbi decoding of the joint model and of the note-only models.

All recursions run in the log domain over a ``(bar-tempo, pitch, segment)``
view of the joint state. Ties are broken towards the lowest predecessor
joint index, which matches ``numpy.argmax`` on a dense matrix.
"""

from __future__ import annotations

import logging
import math
import tempfile
from contextlib import ExitStack
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from beatnote.exceptions import InputError, ResourceRefusal
from beatnote.model import JointModel
from beatnote.models import Beat, DecodeResult, FeatureSequence, MeterConfig, Segment, Weighting
from beatnote.observation import PitchModel
from beatnote.statespace import JointStateSpace, NoteStateSpace, build_note_space
from beatnote.transition import (
    NoteTransitionConfig,
    nonvocal_self_loop,
    pitch_jump_prior,
    theta_values,
)

logger = logging.getLogger("beatnote")

BACKPOINTER_BYTES = 4
DEFAULT_MEMORY_CAP = 4 * 1024**3


@dataclass(frozen=True)
class DecodeSettings:
    """Resource limits of a decode.

    ``beam`` is a log-probability margin below the frame's best score; states
    further below are dropped. None keeps the search exact.
    """

    memory_cap: int = DEFAULT_MEMORY_CAP
    spill: bool = False
    spill_dir: Optional[str] = None
    beam: Optional[float] = None


def estimate_memory(
    joint_size: int, frames: int, backpointer_bytes: int = BACKPOINTER_BYTES
) -> int:
    """Bytes of backpointer storage a full decode needs."""
    return int(joint_size) * int(frames) * int(backpointer_bytes)


@dataclass(frozen=True)
class _NoteArcs:
    """Log note-transition constants shared by every decode."""

    log_prior: np.ndarray
    log_attack_stay: float
    log_attack_leave: float
    log_stable_stay: float
    log_stable_leave: float
    leave_mass: float

    @classmethod
    def build(cls, notes: NoteStateSpace, cfg: NoteTransitionConfig) -> "_NoteArcs":
        with np.errstate(divide="ignore"):
            log_prior = np.log(pitch_jump_prior(notes, cfg))
        return cls(
            log_prior=log_prior,
            log_attack_stay=math.log(cfg.c_attack),
            log_attack_leave=math.log(1.0 - cfg.c_attack),
            log_stable_stay=math.log(cfg.c_stable),
            log_stable_leave=math.log(1.0 - cfg.c_stable),
            leave_mass=cfg.leave_mass,
        )


def _viterbi(
    log_init: np.ndarray,
    accent: np.ndarray,
    pitch: np.ndarray,
    pred_states: np.ndarray,
    pred_log: np.ndarray,
    theta: np.ndarray,
    arcs: _NoteArcs,
    backpointers: np.ndarray,
    beam: Optional[float] = None,
) -> Tuple[np.ndarray, float]:
    """Core recursion.

    Args:
        log_init: ``(S, P, 3)`` initial log probabilities.
        accent: ``(T, S)`` log accent observations per bar-tempo state.
        pitch: ``(T, 3P)`` log pitch observations per note state.
        pred_states / pred_log: ``(S, K)`` padded bar-tempo predecessor table.
        theta: ``(S,)`` beat weight per destination state, or ``(T, S)`` per frame.
        backpointers: ``(T, S * 3P)`` int32 buffer (may be a memmap).
    """
    frames = accent.shape[0]
    num_pitch = log_init.shape[1]
    note_count = 3 * num_pitch
    note_base = np.arange(num_pitch) * 3
    a_idx, s_idx, n_idx = Segment.ATTACK, Segment.STABLE, Segment.NON_VOCAL

    delta = log_init + accent[0][:, None, None] + pitch[0].reshape(num_pitch, 3)[None]
    for k in range(1, frames):
        weights = theta[k] if theta.ndim == 2 else theta
        with np.errstate(divide="ignore"):
            log_theta = np.log(weights)
        log_c_n = np.log1p(-weights * arcs.leave_mass)

        # best NonVocal source for every Attack target, per source bar-tempo state
        cand = delta[:, :, n_idx][:, :, None] + arcs.log_prior[None]
        nv_arg = np.argmax(cand, axis=1)
        nv_best = np.take_along_axis(cand, nv_arg[:, None, :], axis=1)[:, 0, :]

        best_val = None
        best_ptr = None
        for m in range(pred_states.shape[1]):
            src = pred_states[:, m]
            lp = pred_log[:, m]
            d = delta[src] + lp[:, None, None]

            vals = np.empty_like(d)
            notes = np.empty(d.shape, dtype=np.int64)

            from_nv = nv_best[src] + lp[:, None] + log_theta[:, None]
            from_nv_note = 3 * nv_arg[src] + n_idx
            stay_a = d[:, :, a_idx] + arcs.log_attack_stay
            take = (from_nv > stay_a) | ((from_nv == stay_a) & (from_nv_note < note_base[None]))
            vals[:, :, a_idx] = np.where(take, from_nv, stay_a)
            notes[:, :, a_idx] = np.where(take, from_nv_note, note_base[None] + a_idx)

            from_a = d[:, :, a_idx] + arcs.log_attack_leave
            stay_s = d[:, :, s_idx] + arcs.log_stable_stay
            take = from_a >= stay_s
            vals[:, :, s_idx] = np.where(take, from_a, stay_s)
            notes[:, :, s_idx] = note_base[None] + np.where(take, a_idx, s_idx)

            from_s = d[:, :, s_idx] + arcs.log_stable_leave
            stay_n = d[:, :, n_idx] + log_c_n[:, None]
            take = from_s >= stay_n
            vals[:, :, n_idx] = np.where(take, from_s, stay_n)
            notes[:, :, n_idx] = note_base[None] + np.where(take, s_idx, n_idx)

            ptr = src[:, None, None] * note_count + notes
            if best_val is None:
                best_val, best_ptr = vals, ptr
            else:
                better = vals > best_val
                best_val = np.where(better, vals, best_val)
                best_ptr = np.where(better, ptr, best_ptr)

        assert best_val is not None and best_ptr is not None
        backpointers[k] = best_ptr.reshape(-1)
        delta = best_val + accent[k][:, None, None] + pitch[k].reshape(num_pitch, 3)[None]
        if beam is not None:
            delta[delta < delta.max() - beam] = -np.inf

    flat = delta.reshape(-1)
    state = int(np.argmax(flat))
    log_prob = float(flat[state])
    path = np.empty(frames, dtype=np.int64)
    path[-1] = state
    for k in range(frames - 1, 0, -1):
        state = int(backpointers[k][state])
        path[k - 1] = state
    return path, log_prob


def _run(
    size: int,
    frames: int,
    settings: DecodeSettings,
    decode: Callable[[np.ndarray], Tuple[np.ndarray, float]],
) -> Tuple[np.ndarray, float]:
    required = estimate_memory(size, frames)
    logger.debug("Decode: %d states x %d frames, %d bytes of backpointers", size, frames, required)
    if required > settings.memory_cap and not settings.spill:
        raise ResourceRefusal(
            f"Backpointers for {size:,} states x {frames:,} frames exceed the memory cap; "
            "rerun with spilling enabled or a smaller tempo margin",
            required=required,
            cap=settings.memory_cap,
        )
    if settings.beam is not None:
        logger.warning("Beam pruning at %.3g is on; the decode is no longer exact", settings.beam)

    with ExitStack() as stack:
        if required > settings.memory_cap:
            folder = stack.enter_context(tempfile.TemporaryDirectory(dir=settings.spill_dir))
            logger.info("Spilling %d bytes of backpointers to %s", required, folder)
            backpointers = np.memmap(
                Path(folder) / "backpointers.i32", dtype=np.int32, mode="w+", shape=(frames, size)
            )
        else:
            backpointers = np.zeros((frames, size), dtype=np.int32)
        result = decode(backpointers)
        del backpointers
    return result


def viterbi_full(
    model: JointModel,
    features: FeatureSequence,
    settings: Optional[DecodeSettings] = None,
) -> DecodeResult:
    """Most likely joint state sequence under a uniform initial distribution.

    Raises:
        ResourceRefusal: If the backpointers exceed the memory cap and spilling is off.
    """
    settings = settings or DecodeSettings()
    _check_hop(features, model.frame_hop)
    accent, pitch = model.log_observations(features)
    bt_count = len(model.joint.bar_tempo)
    num_pitch = model.joint.notes.pitch_count
    log_init = np.full((bt_count, num_pitch, 3), -math.log(model.size))
    arcs = _NoteArcs.build(model.joint.notes, model.transitions.note_cfg)
    transitions = model.transitions

    path, log_prob = _run(
        model.size,
        len(features),
        settings,
        lambda bp: _viterbi(
            log_init,
            accent,
            pitch,
            transitions.pred_states,
            transitions.pred_log_probs,
            transitions.theta,
            arcs,
            bp,
            beam=settings.beam,
        ),
    )
    beats, onsets = extract_events(path, model.joint, features.times)
    return DecodeResult(state_path=path, beats=beats, onsets=onsets, log_probability=log_prob)


def annotated_theta(
    times: np.ndarray,
    beats: Sequence[Beat],
    meter: MeterConfig,
    cfg: NoteTransitionConfig,
    hop: float,
) -> np.ndarray:
    """Beat weight of every frame from annotated beats.

    Time-window weighting uses the time distance to the nearest annotated beat;
    simple weighting applies the peak weight at the frame nearest each beat.
    """
    times = np.asarray(times, dtype=float)
    if cfg.weighting == Weighting.NONE:
        return np.ones(len(times))

    start, end = times[0] - hop / 2.0, times[-1] + hop / 2.0
    kept = [b for b in beats if start <= b.time <= end]
    if len(kept) < len(beats):
        logger.warning("Dropped %d annotated beats outside the frame range", len(beats) - len(kept))
    if not kept:
        logger.warning("No annotated beats; decoding without beat weighting")
        return np.ones(len(times))
    if any(b.index < 1 or b.index > meter.beats_per_bar for b in kept):
        raise InputError(f"Annotated beat indices must lie in 1..{meter.beats_per_bar}")

    beat_times = np.array([b.time for b in kept])
    beat_index = np.array([b.index for b in kept])
    if cfg.weighting == Weighting.TIME_WINDOW:
        right = np.clip(np.searchsorted(beat_times, times), 0, len(kept) - 1)
        left = np.clip(right - 1, 0, len(kept) - 1)
        use_left = np.abs(times - beat_times[left]) <= np.abs(beat_times[right] - times)
        nearest = np.where(use_left, left, right)
        return theta_values(cfg, np.abs(times - beat_times[nearest]), beat_index[nearest], meter)

    weights = np.ones(len(times))
    frame_of_beat = np.rint((beat_times - times[0]) / hop).astype(np.int64)
    frame_of_beat = np.clip(frame_of_beat, 0, len(times) - 1)
    on_beat = theta_values(cfg, np.zeros(len(kept)), beat_index, meter)
    weights[frame_of_beat] = on_beat
    return weights


def _decode_notes(
    features: FeatureSequence,
    weights: np.ndarray,
    notes: NoteStateSpace,
    pitch_model: PitchModel,
    cfg: NoteTransitionConfig,
    settings: DecodeSettings,
) -> DecodeResult:
    nonvocal_self_loop(cfg, float(weights.max()))
    pitch = pitch_model.log_likelihoods(notes, features.pitch, features.voicing)
    frames = len(features)
    log_init = np.full((1, notes.pitch_count, 3), -math.log(len(notes)))
    path, log_prob = _run(
        len(notes),
        frames,
        settings,
        lambda bp: _viterbi(
            log_init,
            np.zeros((frames, 1)),
            pitch,
            np.zeros((1, 1), dtype=np.int64),
            np.zeros((1, 1)),
            weights[:, None],
            _NoteArcs.build(notes, cfg),
            bp,
            beam=settings.beam,
        ),
    )
    _, onsets = extract_events(path, notes, features.times)
    return DecodeResult(state_path=path, beats=[], onsets=onsets, log_probability=log_prob)


def viterbi_reduced(
    features: FeatureSequence,
    beats: Sequence[Beat],
    meter: MeterConfig,
    cfg: NoteTransitionConfig,
    notes: Optional[NoteStateSpace] = None,
    pitch_model: Optional[PitchModel] = None,
    settings: Optional[DecodeSettings] = None,
) -> DecodeResult:
    """Note-only decode with a per-frame transition matrix driven by annotated beats.

    The returned result lists the annotated beats that fall inside the frame range.
    """
    notes = notes or build_note_space()
    hop = features.hop if features.hop is not None else 1.0
    if any(b.time <= a.time for a, b in zip(beats, beats[1:])):
        raise InputError("Annotated beats must be sorted by time")
    if not beats and cfg.weighting != Weighting.NONE:
        logger.warning("Empty beat list; falling back to decoding without beat weighting")
        cfg = replace(cfg, weighting=Weighting.NONE)

    weights = annotated_theta(features.times, beats, meter, cfg, hop)
    result = _decode_notes(
        features, weights, notes, pitch_model or PitchModel(), cfg, settings or DecodeSettings()
    )
    start, end = features.times[0] - hop / 2.0, features.times[-1] + hop / 2.0
    result.beats = [b for b in beats if start <= b.time <= end]
    return result


def viterbi_notes(
    features: FeatureSequence,
    cfg: Optional[NoteTransitionConfig] = None,
    notes: Optional[NoteStateSpace] = None,
    pitch_model: Optional[PitchModel] = None,
    settings: Optional[DecodeSettings] = None,
) -> DecodeResult:
    """Beat-unaware note-HMM decode, the baseline the beat-aware models are compared to."""
    cfg = replace(cfg or NoteTransitionConfig(), weighting=Weighting.NONE)
    return _decode_notes(
        features,
        np.ones(len(features)),
        notes or build_note_space(),
        pitch_model or PitchModel(),
        cfg,
        settings or DecodeSettings(),
    )


def viterbi_dense(
    log_init: np.ndarray, log_trans: np.ndarray, log_obs: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Reference Viterbi on a dense ``(S, S)`` log matrix. For small models and tests."""
    frames = log_obs.shape[0]
    delta = log_init + log_obs[0]
    back = np.zeros((frames, len(log_init)), dtype=np.int64)
    for k in range(1, frames):
        scores = delta[:, None] + log_trans
        back[k] = np.argmax(scores, axis=0)
        delta = scores[back[k], np.arange(len(log_init))] + log_obs[k]
    path = np.empty(frames, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for k in range(frames - 1, 0, -1):
        path[k - 1] = back[k][path[k]]
    return path, float(delta[path[-1]])


def extract_events(
    path: np.ndarray,
    space: Union[JointStateSpace, NoteStateSpace],
    times: np.ndarray,
) -> Tuple[List[Beat], List[float]]:
    """Beats and vocal onsets read off a state path.

    An onset is a frame whose note state is an Attack state entered from a
    NonVocal state. A beat is a frame after the first whose bar position sits
    on a beat, matching onsets, which also need a preceding frame.
    """
    path = np.asarray(path, dtype=np.int64)
    times = np.asarray(times, dtype=float)
    beats: List[Beat] = []
    if isinstance(space, JointStateSpace):
        bar_tempo, notes = np.divmod(path, len(space.notes))
        beat_index = space.bar_tempo.beat_of_state[bar_tempo]
        beats = [
            Beat(time=float(times[k]), index=int(beat_index[k]))
            for k in np.flatnonzero(beat_index[1:]) + 1
        ]
    else:
        notes = path

    segment = notes % 3
    entered = np.flatnonzero(
        (segment[1:] == Segment.ATTACK) & (segment[:-1] == Segment.NON_VOCAL)
    ) + 1
    return beats, [float(times[k]) for k in entered]


def _check_hop(features: FeatureSequence, frame_hop: float) -> None:
    if features.hop is not None and abs(features.hop - frame_hop) > 1e-3 * frame_hop:
        raise InputError(
            f"Features use a hop of {features.hop:.6f} s "
            f"but the model was built for {frame_hop:.6f} s",
            source=features.name or None,
        )
