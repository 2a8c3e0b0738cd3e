"""Plain data models shared across the beatnote modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from beatnote.exceptions import ConfigurationError, InputError


class Segment:
    """Temporal segment of a sung note. Values are offsets inside a pitch block."""

    ATTACK = 0
    STABLE = 1
    NON_VOCAL = 2

    LABELS = ("A", "S", "N")


class Weighting:
    """How the bar position scales the NonVocal to Attack transitions."""

    NONE = "none"
    SIMPLE = "simple"
    TIME_WINDOW = "time-window"

    ALL = (NONE, SIMPLE, TIME_WINDOW)


@dataclass(frozen=True)
class MeterConfig:
    """A metrical cycle: beats per bar, where the beats fall, and the per-beat onset prior.

    ``beat_fractions`` defaults to uniformly spaced beats. ``onset_prior`` defaults
    to 1.0 for every beat, which makes the beat weighting depend on time only.
    """

    meter_id: str
    beats_per_bar: int
    beat_fractions: Tuple[float, ...] = ()
    bins_per_beat: int = 16
    onset_prior: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.beats_per_bar < 1:
            raise ConfigurationError(f"beats_per_bar must be >= 1, got {self.beats_per_bar}")
        if self.bins_per_beat < 1:
            raise ConfigurationError(f"bins_per_beat must be >= 1, got {self.bins_per_beat}")

        fractions = tuple(float(f) for f in self.beat_fractions) or tuple(
            b / self.beats_per_bar for b in range(self.beats_per_bar)
        )
        if len(fractions) != self.beats_per_bar:
            raise ConfigurationError(
                f"Meter {self.meter_id}: expected {self.beats_per_bar} beat fractions, "
                f"got {len(fractions)}"
            )
        if any(f < 0.0 or f >= 1.0 for f in fractions):
            raise ConfigurationError(f"Meter {self.meter_id}: beat fractions must lie in [0, 1)")
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ConfigurationError(
                f"Meter {self.meter_id}: beat fractions must be strictly increasing"
            )

        prior = tuple(float(e) for e in self.onset_prior) or (1.0,) * self.beats_per_bar
        if len(prior) != self.beats_per_bar:
            raise ConfigurationError(
                f"Meter {self.meter_id}: onset prior needs {self.beats_per_bar} values, "
                f"got {len(prior)}"
            )
        if any(e < 0.0 or e > 1.0 for e in prior):
            raise ConfigurationError(f"Meter {self.meter_id}: onset prior values must be in [0, 1]")

        # frozen dataclass: normalized tuples go in through object.__setattr__
        object.__setattr__(self, "beat_fractions", fractions)
        object.__setattr__(self, "onset_prior", prior)

    @property
    def num_bins(self) -> int:
        return self.beats_per_bar * self.bins_per_beat

    def with_prior(self, prior: Sequence[float]) -> "MeterConfig":
        return MeterConfig(
            meter_id=self.meter_id,
            beats_per_bar=self.beats_per_bar,
            beat_fractions=self.beat_fractions,
            bins_per_beat=self.bins_per_beat,
            onset_prior=tuple(prior),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "MeterConfig":
        try:
            return cls(
                meter_id=str(data.get("meter_id", data.get("meter", ""))),
                beats_per_bar=int(data["beats_per_bar"]),
                beat_fractions=tuple(data.get("beat_fractions") or ()),
                bins_per_beat=int(data.get("bins_per_beat", 16)),
                onset_prior=tuple(data.get("onset_prior") or ()),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"Malformed meter definition: {e}")

    def to_dict(self) -> dict:
        return {
            "meter_id": self.meter_id,
            "beats_per_bar": self.beats_per_bar,
            "beat_fractions": list(self.beat_fractions),
            "bins_per_beat": self.bins_per_beat,
            "onset_prior": list(self.onset_prior),
        }


@dataclass(frozen=True)
class Beat:
    """A beat instant and its 1-based index inside the bar (1 is the downbeat)."""

    time: float
    index: int

    def to_dict(self) -> dict:
        return {"time": round(self.time, 6), "index": self.index}


@dataclass(frozen=True)
class FrameFeatures:
    """Observations of one analysis frame. ``pitch`` is None when unvoiced."""

    time: float
    flux: Tuple[float, ...]
    pitch: Optional[float]
    voicing: float


@dataclass
class FeatureSequence:
    """Frame-aligned features of one recording.

    ``pitch`` holds MIDI values with NaN for unvoiced frames. Unvoiced frames
    always carry zero voicing, whatever the source said.
    """

    times: np.ndarray
    flux: np.ndarray
    pitch: np.ndarray
    voicing: np.ndarray
    hop: Optional[float] = None
    name: str = ""

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.flux = np.asarray(self.flux, dtype=float)
        if self.flux.ndim == 1:
            self.flux = self.flux[:, None]
        self.pitch = np.asarray(self.pitch, dtype=float)
        self.voicing = np.asarray(self.voicing, dtype=float).copy()

        n = len(self.times)
        if n == 0:
            raise InputError("Feature sequence is empty", source=self.name or None)
        if self.flux.shape[0] != n or self.pitch.shape != (n,) or self.voicing.shape != (n,):
            raise InputError("Feature columns have mismatched lengths", source=self.name or None)
        if np.any(np.diff(self.times) <= 0):
            raise InputError("Frame times must be strictly increasing", source=self.name or None)
        if np.any((self.voicing < 0) | (self.voicing > 1)):
            raise InputError("Voicing values must lie in [0, 1]", source=self.name or None)

        self.voicing[np.isnan(self.pitch)] = 0.0

        if self.hop is None and n > 1:
            self.hop = float(np.median(np.diff(self.times)))
        if self.hop is not None and n > 1:
            steps = np.diff(self.times)
            if np.max(np.abs(steps - self.hop)) > 1e-3 * self.hop + 1e-6:
                raise InputError(
                    f"Frame times are not on a constant hop of {self.hop:.6f} s",
                    source=self.name or None,
                )

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dims(self) -> int:
        return int(self.flux.shape[1])

    def frame(self, k: int) -> FrameFeatures:
        pitch = None if math.isnan(self.pitch[k]) else float(self.pitch[k])
        return FrameFeatures(
            time=float(self.times[k]),
            flux=tuple(float(x) for x in self.flux[k]),
            pitch=pitch,
            voicing=float(self.voicing[k]),
        )

    def frames(self) -> List[FrameFeatures]:
        return [self.frame(k) for k in range(len(self))]

    @classmethod
    def from_frames(
        cls, frames: Sequence[FrameFeatures], hop: Optional[float] = None, name: str = ""
    ) -> "FeatureSequence":
        return cls(
            times=[f.time for f in frames],
            flux=[list(f.flux) for f in frames],
            pitch=[math.nan if f.pitch is None else f.pitch for f in frames],
            voicing=[f.voicing for f in frames],
            hop=hop,
            name=name,
        )


@dataclass
class DecodeResult:
    """Optimal state path of a decode plus the events read off it."""

    state_path: np.ndarray
    beats: List[Beat]
    onsets: List[float]
    log_probability: float

    @property
    def beat_times(self) -> List[float]:
        return [b.time for b in self.beats]

    def to_dict(self, config: Optional[Dict[str, Any]] = None) -> dict:
        return {
            "beats": [b.to_dict() for b in self.beats],
            "onsets": [round(t, 6) for t in self.onsets],
            "log_prob": float(self.log_probability),
            "config": config or {},
        }


@dataclass
class EventScores:
    """Precision, recall and F-measure of one detection list against references."""

    precision: float
    recall: float
    f_measure: float
    matches: List[Tuple[float, float]] = field(default_factory=list, repr=False)
    num_detections: int = 0
    num_references: int = 0

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
        }


@dataclass
class RecordingScores:
    """Evaluation of one recording; ``beats`` is None when beats were not tracked."""

    name: str
    meter: str
    onsets: EventScores
    beats: Optional[EventScores] = None
