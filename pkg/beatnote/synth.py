"""Sampling from the joint model: hidden paths, features and annotated corpora.

The sampler is the independent counterpart of the decoder. It draws arcs from
the element-wise transition rules, and its ground truth comes from the same
``extract_events`` the decoder uses.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from beatnote.decode import extract_events
from beatnote.exceptions import ConfigurationError
from beatnote.files import (
    RecordingEntry,
    write_beats,
    write_features,
    write_manifest,
    write_onsets,
    write_pattern,
)
from beatnote.model import JointModel
from beatnote.models import FeatureSequence, MeterConfig, Segment, Weighting
from beatnote.observation import PitchModel, RhythmPattern
from beatnote.train import builtin_meter
from beatnote.transition import NoteTransitionConfig, TempoTransitionConfig

logger = logging.getLogger("beatnote")

Seed = Union[int, np.random.SeedSequence, None]


def default_pattern(meter: MeterConfig, dims: int = 2) -> RhythmPattern:
    """Accent pattern with flux peaks on the beats and a stronger one on the downbeat.

    Lives in raw flux units (``smoothing=None``).
    """
    bins = meter.num_bins
    peak = np.zeros((bins, dims))
    beat_bins = np.arange(meter.beats_per_bar) * meter.bins_per_beat
    peak[beat_bins] = 3.0
    peak[0] = 4.0
    peak[:, 1:] *= 0.5
    means = np.stack([peak, 0.5 * peak], axis=1)
    return RhythmPattern(
        meter=meter,
        weights=np.tile([0.7, 0.3], (bins, 1)),
        means=means,
        variances=np.full((bins, 2, dims), 0.25),
        smoothing=None,
    )


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of a synthetic corpus.

    ``voicing_confidence`` of 1.0 gives binary voicing (v=1 on vocal frames,
    v=0 and no pitch on NonVocal frames). Lower values give vocal frames
    ``v = confidence`` and NonVocal frames ``v = 1 - confidence`` with a
    spurious random pitch, so voicing alone no longer pins the note segments.
    """

    meter: MeterConfig = field(default_factory=lambda: builtin_meter("4/4"))
    tempo: float = 120.0
    tempo_margin: float = 0.0
    frame_hop: float = 0.02
    duration: float = 60.0
    min_pitch: int = 52
    pitch_count: int = 35
    dims: int = 2
    noise_scale: float = 0.1
    voicing_confidence: float = 1.0
    note_cfg: NoteTransitionConfig = field(
        default_factory=lambda: NoteTransitionConfig(
            c_stable=0.97, c_nonvocal=0.97, weighting=Weighting.TIME_WINDOW, w=1.0, sigma=0.04
        )
    )
    tempo_cfg: TempoTransitionConfig = field(default_factory=TempoTransitionConfig)
    pitch_model: PitchModel = field(default_factory=PitchModel)

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if self.noise_scale < 0:
            raise ConfigurationError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if not 0.5 < self.voicing_confidence <= 1.0:
            raise ConfigurationError("voicing_confidence must lie in (0.5, 1]")

    @property
    def num_frames(self) -> int:
        return int(round(self.duration / self.frame_hop))

    def build_model(self, pattern: Optional[RhythmPattern] = None) -> JointModel:
        return JointModel.build(
            self.meter,
            pattern or default_pattern(self.meter, self.dims),
            tempo=self.tempo,
            frame_hop=self.frame_hop,
            tempo_margin=self.tempo_margin,
            note_cfg=self.note_cfg,
            tempo_cfg=self.tempo_cfg,
            pitch_model=self.pitch_model,
            min_pitch=self.min_pitch,
            pitch_count=self.pitch_count,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "meter": self.meter.to_dict(),
            "tempo": self.tempo,
            "tempo_margin": self.tempo_margin,
            "frame_hop": self.frame_hop,
            "duration": self.duration,
            "min_pitch": self.min_pitch,
            "pitch_count": self.pitch_count,
            "dims": self.dims,
            "noise_scale": self.noise_scale,
            "voicing_confidence": self.voicing_confidence,
            "note_transitions": self.note_cfg.to_dict(),
            "tempo_change_prob": self.tempo_cfg.tempo_change_prob,
            "pitch_model": self.pitch_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthConfig":
        defaults = cls()
        meter = MeterConfig.from_dict(data["meter"]) if "meter" in data else defaults.meter
        note_cfg = (
            NoteTransitionConfig.from_dict(data["note_transitions"])
            if "note_transitions" in data
            else defaults.note_cfg
        )
        pitch = data.get("pitch_model", {})
        scalars = {
            k: data[k]
            for k in (
                "tempo",
                "tempo_margin",
                "frame_hop",
                "duration",
                "min_pitch",
                "pitch_count",
                "dims",
                "noise_scale",
                "voicing_confidence",
            )
            if k in data
        }
        return replace(
            defaults,
            meter=meter,
            note_cfg=note_cfg,
            tempo_cfg=TempoTransitionConfig(
                float(data.get("tempo_change_prob", defaults.tempo_cfg.tempo_change_prob))
            ),
            pitch_model=PitchModel(**pitch) if pitch else defaults.pitch_model,
            **scalars,
        )


def sample_hidden(model: JointModel, num_frames: int, seed: Seed = None) -> np.ndarray:
    """Markov-chain sample of joint states, starting uniformly over all states."""
    rng = np.random.default_rng(seed)
    transitions = model.transitions
    joint = model.joint
    note_cfg = transitions.note_cfg

    src, dst, prob = transitions.arcs
    order = np.lexsort((dst, src))
    counts = np.bincount(src, minlength=len(joint.bar_tempo))
    starts = np.concatenate([[0], np.cumsum(counts)])
    succ_dst = dst[order]
    succ_cum = prob[order].copy()
    for s in np.flatnonzero(counts > 1):
        succ_cum[starts[s] : starts[s + 1]] = np.cumsum(succ_cum[starts[s] : starts[s + 1]])

    prior_cum = np.cumsum(transitions.prior, axis=1) / note_cfg.leave_mass
    theta = transitions.theta

    path = np.empty(num_frames, dtype=np.int64)
    if num_frames == 0:
        return path
    bt, note = joint.decompose(int(rng.integers(len(joint))))
    path[0] = joint.index(bt, note)
    draws = rng.random((num_frames, 2))
    for k in range(1, num_frames):
        lo, hi = starts[bt], starts[bt + 1]
        if hi - lo == 1:
            bt = int(succ_dst[lo])
        else:
            pick = int(np.searchsorted(succ_cum[lo:hi], draws[k, 0], side="right"))
            bt = int(succ_dst[lo + min(pick, hi - lo - 1)])

        pitch, segment = divmod(note, 3)
        u = draws[k, 1]
        if segment == Segment.ATTACK:
            note = note if u < note_cfg.c_attack else pitch * 3 + Segment.STABLE
        elif segment == Segment.STABLE:
            note = note if u < note_cfg.c_stable else pitch * 3 + Segment.NON_VOCAL
        else:
            stay = 1.0 - theta[bt] * note_cfg.leave_mass
            if u >= stay:
                r = (u - stay) / (1.0 - stay)
                target = int(np.searchsorted(prior_cum[pitch], r, side="right"))
                note = min(target, joint.notes.pitch_count - 1) * 3 + Segment.ATTACK
        path[k] = joint.index(bt, note)
    return path


def emit_features(
    model: JointModel,
    path: np.ndarray,
    noise_scale: float = 0.1,
    seed: Seed = None,
    voicing_confidence: float = 1.0,
    name: str = "",
) -> FeatureSequence:
    """Draw observations for a hidden path from the model's pattern and pitch model."""
    rng = np.random.default_rng(seed)
    pattern = model.pattern
    notes = model.joint.notes
    frames = len(path)
    bar_tempo, note = np.divmod(np.asarray(path, dtype=np.int64), len(notes))

    bins = model.bins[bar_tempo]
    cum_weights = np.cumsum(pattern.weights[bins], axis=1)
    component = (rng.random(frames)[:, None] >= cum_weights).sum(axis=1)
    component = np.minimum(component, pattern.components - 1)
    mean = pattern.means[bins, component]
    std = np.sqrt(pattern.variances[bins, component])
    flux = mean + noise_scale * std * rng.standard_normal(mean.shape)

    pitch_index, segment = np.divmod(note, 3)
    sigma = np.where(
        segment == Segment.ATTACK, model.pitch_model.sigma_attack, model.pitch_model.sigma_stable
    )
    pitch = notes.pitches[pitch_index] + noise_scale * sigma * rng.standard_normal(frames)
    vocal = segment != Segment.NON_VOCAL
    voicing = np.where(vocal, voicing_confidence, 1.0 - voicing_confidence)

    spurious = rng.uniform(notes.pitches[0], notes.pitches[-1], frames)
    if voicing_confidence >= 1.0:
        pitch = np.where(vocal, pitch, np.nan)
    else:
        pitch = np.where(vocal, pitch, spurious)

    hop = model.frame_hop
    return FeatureSequence(
        times=np.arange(frames) * hop,
        flux=flux,
        pitch=pitch,
        voicing=voicing,
        hop=hop,
        name=name,
    )


def make_corpus(
    config: SynthConfig,
    count: int,
    out_dir: Union[str, Path],
    seed: int = 0,
    pattern: Optional[RhythmPattern] = None,
) -> List[RecordingEntry]:
    """Sample ``count`` recordings and write features, beats, onsets and a manifest.

    The pattern used for sampling is written to ``pattern.json`` in raw flux
    units, so the corpus can be decoded with it directly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pattern = pattern or default_pattern(config.meter, config.dims)
    if pattern.smoothing is not None:
        pattern = replace(pattern, smoothing=None)
    model = config.build_model(pattern)
    logger.info(
        "Synthesizing %d recordings of %d frames (%d joint states)",
        count,
        config.num_frames,
        model.size,
    )

    entries = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(count)):
        name = f"synth_{i:03d}"
        hidden_seed, emit_seed = child.spawn(2)
        path = sample_hidden(model, config.num_frames, hidden_seed)
        features = emit_features(
            model,
            path,
            noise_scale=config.noise_scale,
            seed=emit_seed,
            voicing_confidence=config.voicing_confidence,
            name=name,
        )
        beats, onsets = extract_events(path, model.joint, features.times)

        entry = RecordingEntry(
            name=name,
            features=out / f"{name}.features.csv",
            beats=out / f"{name}.beats.txt",
            onsets=out / f"{name}.onsets.txt",
            meter=config.meter.meter_id,
            tempo=config.tempo,
        )
        write_features(entry.features, features)
        write_beats(entry.beats, beats)
        write_onsets(entry.onsets, onsets)
        entries.append(entry)
        logger.debug("%s: %d beats, %d onsets", name, len(beats), len(onsets))

    write_pattern(out / "pattern.json", pattern)
    write_manifest(
        out / "manifest.json",
        entries,
        extra={"seed": seed, "config": config.to_dict(), "pattern": "pattern.json"},
    )
    return entries
