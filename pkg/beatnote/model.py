"""The joint beat and vocal-note model: state spaces, transitions and observations."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from beatnote.exceptions import InputError
from beatnote.features import normalize_features
from beatnote.models import FeatureSequence, MeterConfig
from beatnote.observation import PitchModel, RhythmPattern
from beatnote.statespace import (
    DEFAULT_MAX_STATES,
    DEFAULT_MIN_PITCH,
    DEFAULT_PITCH_COUNT,
    JointStateSpace,
    bins_of_states,
    build_bar_tempo_space,
    build_joint_space,
    build_note_space,
)
from beatnote.transition import (
    NoteTransitionConfig,
    SparseTransitionModel,
    TempoTransitionConfig,
    build_joint_transitions,
)

logger = logging.getLogger("beatnote")


@dataclass(frozen=True, eq=False)
class JointModel:
    """Everything a full decode needs. Immutable once built.

    Example:
        >>> model = JointModel.build(meter, pattern, tempo=96, frame_hop=0.02)
        >>> accent, pitch = model.log_observations(features)
    """

    meter: MeterConfig
    joint: JointStateSpace
    transitions: SparseTransitionModel
    pattern: RhythmPattern
    pitch_model: PitchModel
    tempo: float
    tempo_margin: float
    bins: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls,
        meter: MeterConfig,
        pattern: RhythmPattern,
        tempo: float,
        frame_hop: float,
        tempo_margin: float = 10.0,
        note_cfg: Optional[NoteTransitionConfig] = None,
        tempo_cfg: Optional[TempoTransitionConfig] = None,
        pitch_model: Optional[PitchModel] = None,
        min_pitch: int = DEFAULT_MIN_PITCH,
        pitch_count: int = DEFAULT_PITCH_COUNT,
        max_states: int = DEFAULT_MAX_STATES,
    ) -> "JointModel":
        """Build the model around a known tempo (bpm) for a given frame hop (seconds).

        Raises:
            InputError: If the pattern was trained for a different meter layout.
            ConfigurationError: On an empty tempo range or invalid parameters.
            ResourceRefusal: If the joint space is over ``max_states``.
            ModelError: If a beat weight leaves no NonVocal self-transition mass.
        """
        if (
            pattern.meter.beats_per_bar != meter.beats_per_bar
            or pattern.meter.bins_per_beat != meter.bins_per_beat
        ):
            raise InputError(
                f"Pattern is for {pattern.meter.beats_per_bar} beats x "
                f"{pattern.meter.bins_per_beat} bins, meter {meter.meter_id} needs "
                f"{meter.beats_per_bar} x {meter.bins_per_beat}"
            )
        if pattern.hop is not None and abs(pattern.hop - frame_hop) > 1e-3 * frame_hop:
            logger.warning(
                "Pattern was trained at hop %.4f s, features use %.4f s", pattern.hop, frame_hop
            )

        bar_tempo = build_bar_tempo_space(meter, tempo, tempo_margin, frame_hop)
        notes = build_note_space(min_pitch, pitch_count)
        joint = build_joint_space(bar_tempo, notes, max_states=max_states)
        transitions = build_joint_transitions(
            joint,
            meter,
            note_cfg or NoteTransitionConfig(),
            tempo_cfg or TempoTransitionConfig(),
            max_states=max_states,
        )
        return cls(
            meter=meter,
            joint=joint,
            transitions=transitions,
            pattern=pattern,
            pitch_model=pitch_model or PitchModel(),
            tempo=float(tempo),
            tempo_margin=float(tempo_margin),
            bins=bins_of_states(bar_tempo, meter),
        )

    @property
    def size(self) -> int:
        return len(self.joint)

    @property
    def frame_hop(self) -> float:
        return self.joint.bar_tempo.frame_hop

    def log_observations(self, features: FeatureSequence) -> Tuple[np.ndarray, np.ndarray]:
        """Per-frame log accent likelihood per bar-tempo state and log pitch likelihood per note.

        Returns ``(T, |bar-tempo|)`` and ``(T, |notes|)`` arrays; the joint
        log observation of state ``(s, n)`` is their sum. Flux is normalized the
        way the pattern was trained.
        """
        if features.dims != self.pattern.dims:
            raise InputError(
                f"Features have {features.dims} flux dimensions, "
                f"pattern expects {self.pattern.dims}",
                source=features.name or None,
            )
        flux = features.flux
        if self.pattern.smoothing is not None:
            flux = normalize_features(flux, self.pattern.smoothing)
        accent = self.pattern.log_likelihood(flux)[:, self.bins]
        pitch = self.pitch_model.log_likelihoods(self.joint.notes, features.pitch, features.voicing)
        return accent, pitch

    def describe(self) -> Dict[str, Any]:
        bt = self.joint.bar_tempo
        return {
            "meter": self.meter.to_dict(),
            "tempo": self.tempo,
            "tempo_margin": self.tempo_margin,
            "tempo_states": len(bt.frames_per_beat),
            "frame_hop": bt.frame_hop,
            "bar_tempo_states": len(bt),
            "note_states": len(self.joint.notes),
            "min_pitch": self.joint.notes.min_pitch,
            "pitch_count": self.joint.notes.pitch_count,
            "joint_states": self.size,
            "note_transitions": self.transitions.note_cfg.to_dict(),
            "tempo_change_prob": self.transitions.tempo_cfg.tempo_change_prob,
            "pitch_model": self.pitch_model.to_dict(),
        }
