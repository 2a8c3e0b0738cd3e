"""State spaces of the joint model: bar-tempo, note, and their Cartesian product.

The bar-tempo space follows the efficient layout: every tempo state is an
integer number of frames per beat, so the bar pointer advances exactly one
position per frame and a bar at that tempo has ``frames_per_beat * B``
positions. States are numbered tempo by tempo, position by position.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from beatnote.exceptions import ConfigurationError, ResourceRefusal
from beatnote.models import MeterConfig, Segment

logger = logging.getLogger("beatnote")

DEFAULT_MIN_PITCH = 52  # E3
DEFAULT_PITCH_COUNT = 35
DEFAULT_MAX_STATES = 2**26

_GRID_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class BarTempoStateSpace:
    """Tempo-dependent grid of bar positions.

    Attributes:
        frames_per_beat: One entry per tempo state, ascending (slowest tempo last).
        beat_positions: ``(num_tempi, B)`` bar positions of the beats per tempo.
        frame_hop: Seconds per frame, which is also seconds per bar position.
    """

    frames_per_beat: np.ndarray
    beat_positions: np.ndarray
    frame_hop: float
    beats_per_bar: int
    bar_lengths: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)
    tempo_of_state: np.ndarray = field(init=False, repr=False)
    position_of_state: np.ndarray = field(init=False, repr=False)
    beat_of_state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        lengths = self.frames_per_beat * self.beats_per_bar
        offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
        tempo = np.repeat(np.arange(len(lengths)), lengths)
        position = np.arange(int(lengths.sum())) - offsets[tempo]

        beat_of_state = np.zeros(len(tempo), dtype=np.int64)
        for t, start in enumerate(offsets):
            beat_of_state[start + self.beat_positions[t]] = np.arange(1, self.beats_per_bar + 1)

        object.__setattr__(self, "bar_lengths", lengths.astype(np.int64))
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "tempo_of_state", tempo.astype(np.int64))
        object.__setattr__(self, "position_of_state", position.astype(np.int64))
        object.__setattr__(self, "beat_of_state", beat_of_state)

    def __len__(self) -> int:
        return int(self.bar_lengths.sum())

    @property
    def num_tempi(self) -> int:
        return len(self.frames_per_beat)

    @property
    def beat_position_indices(self) -> List[np.ndarray]:
        """Per tempo, the state indices sitting on a beat boundary."""
        return [self.offsets[t] + self.beat_positions[t] for t in range(self.num_tempi)]

    def bpm(self, tempo: int) -> float:
        return 60.0 / (float(self.frames_per_beat[tempo]) * self.frame_hop)

    def state_index(self, tempo: int, position: int) -> int:
        if not 0 <= tempo < self.num_tempi:
            raise IndexError(f"tempo state {tempo} out of range")
        if not 0 <= position < self.bar_lengths[tempo]:
            raise IndexError(f"bar position {position} out of range for tempo {tempo}")
        return int(self.offsets[tempo] + position)

    def decompose(self, state: int) -> Tuple[int, int]:
        return int(self.tempo_of_state[state]), int(self.position_of_state[state])


@dataclass(frozen=True)
class NoteStateSpace:
    """Pitch by segment states. State ``i`` is pitch ``i // 3``, segment ``i % 3``."""

    min_pitch: int = DEFAULT_MIN_PITCH
    pitch_count: int = DEFAULT_PITCH_COUNT

    def __len__(self) -> int:
        return self.pitch_count * 3

    @property
    def pitches(self) -> np.ndarray:
        return self.min_pitch + np.arange(self.pitch_count, dtype=float)

    @property
    def segment_of_state(self) -> np.ndarray:
        return np.tile(np.arange(3), self.pitch_count)

    @property
    def pitch_of_state(self) -> np.ndarray:
        return np.repeat(self.pitches, 3)

    def state_index(self, pitch_index: int, segment: int) -> int:
        if not 0 <= pitch_index < self.pitch_count:
            raise IndexError(f"pitch index {pitch_index} out of range")
        return pitch_index * 3 + segment

    def decompose(self, state: int) -> Tuple[int, int]:
        """Return ``(pitch_index, segment)`` of a note state."""
        return divmod(int(state), 3)

    def describe(self, state: int) -> str:
        pitch_index, segment = self.decompose(state)
        return f"{Segment.LABELS[segment]}{self.min_pitch + pitch_index}"


@dataclass(frozen=True)
class JointStateSpace:
    """Cartesian product; joint index is ``bar_tempo_index * len(notes) + note_index``."""

    bar_tempo: BarTempoStateSpace
    notes: NoteStateSpace

    def __len__(self) -> int:
        return len(self.bar_tempo) * len(self.notes)

    def index(self, bar_tempo_index: int, note_index: int) -> int:
        return int(bar_tempo_index) * len(self.notes) + int(note_index)

    def decompose(self, joint_index: int) -> Tuple[int, int]:
        return divmod(int(joint_index), len(self.notes))


def tempo_grid(tempo_center: float, tempo_margin: float, frame_hop: float) -> np.ndarray:
    """Integer frames-per-beat values whose tempo lies within center +/- margin."""
    if tempo_center <= 0:
        raise ConfigurationError(f"tempo must be positive, got {tempo_center}")
    if tempo_margin < 0:
        raise ConfigurationError(f"tempo margin must be >= 0, got {tempo_margin}")
    if frame_hop <= 0:
        raise ConfigurationError(f"frame hop must be positive, got {frame_hop}")

    fastest = tempo_center + tempo_margin
    slowest = tempo_center - tempo_margin
    if slowest <= 0:
        raise ConfigurationError(
            f"tempo margin {tempo_margin} bpm reaches zero tempo from {tempo_center} bpm"
        )
    low = max(1, math.ceil(60.0 / (fastest * frame_hop) - _GRID_EPS))
    high = math.floor(60.0 / (slowest * frame_hop) + _GRID_EPS)
    if high < low:
        raise ConfigurationError(
            f"No integer frames-per-beat value lies in {slowest:g}-{fastest:g} bpm "
            f"at a hop of {frame_hop * 1000:g} ms; widen the tempo margin"
        )
    return np.arange(low, high + 1, dtype=np.int64)


def build_bar_tempo_space(
    meter: MeterConfig,
    tempo_center: float,
    tempo_margin: float,
    frame_hop: float,
) -> BarTempoStateSpace:
    """Build the bar-tempo grid for a meter around a known tempo.

    Raises:
        ConfigurationError: If the tempo range holds no integer frames-per-beat value,
            or beats collapse onto the same bar position at some tempo.
    """
    frames_per_beat = tempo_grid(tempo_center, tempo_margin, frame_hop)
    fractions = np.asarray(meter.beat_fractions)

    beat_positions = []
    for n in frames_per_beat:
        length = int(n) * meter.beats_per_bar
        positions = np.rint(fractions * length).astype(np.int64)
        if len(np.unique(positions)) != meter.beats_per_bar or positions[-1] >= length:
            raise ConfigurationError(
                f"Beats of meter {meter.meter_id} collide at {n} frames per beat; "
                "use a smaller hop"
            )
        beat_positions.append(positions)

    space = BarTempoStateSpace(
        frames_per_beat=frames_per_beat,
        beat_positions=np.array(beat_positions, dtype=np.int64),
        frame_hop=float(frame_hop),
        beats_per_bar=meter.beats_per_bar,
    )
    logger.debug(
        "Bar-tempo space: %d tempo states (%d-%d frames/beat), %d states",
        space.num_tempi,
        frames_per_beat[0],
        frames_per_beat[-1],
        len(space),
    )
    return space


def build_note_space(
    min_pitch: int = DEFAULT_MIN_PITCH, pitch_count: int = DEFAULT_PITCH_COUNT
) -> NoteStateSpace:
    if pitch_count < 1:
        raise ConfigurationError(f"pitch_count must be >= 1, got {pitch_count}")
    return NoteStateSpace(min_pitch=int(min_pitch), pitch_count=int(pitch_count))


def build_joint_space(
    bar_tempo: BarTempoStateSpace,
    notes: NoteStateSpace,
    max_states: int = DEFAULT_MAX_STATES,
) -> JointStateSpace:
    """Combine both spaces, refusing products larger than ``max_states``."""
    size = len(bar_tempo) * len(notes)
    if size > max_states:
        raise ResourceRefusal(
            f"Joint state space of {len(bar_tempo)} x {len(notes)} states is over budget",
            required=size,
            cap=max_states,
            unit="states",
        )
    logger.debug("Joint state space: %d x %d = %d states", len(bar_tempo), len(notes), size)
    return JointStateSpace(bar_tempo=bar_tempo, notes=notes)


def bins_of_states(space: BarTempoStateSpace, meter: MeterConfig) -> np.ndarray:
    """Rhythmic-pattern bin of every bar-tempo state.

    Each beat interval is split into ``bins_per_beat`` equal bins, so non-uniform
    beats still cover exactly ``bins_per_beat`` bins each.
    """
    bpb = meter.bins_per_beat
    bins = np.empty(len(space), dtype=np.int64)
    for t in range(space.num_tempi):
        length = int(space.bar_lengths[t])
        beats = space.beat_positions[t]
        # rotate so the first beat sits at position 0
        starts = beats - beats[0]
        ends = np.append(starts[1:], length)
        positions = (np.arange(length) - beats[0]) % length
        beat = np.searchsorted(starts, positions, side="right") - 1
        within = positions - starts[beat]
        span = ends[beat] - starts[beat]
        local = np.arange(length)
        bins[space.offsets[t] + local] = beat * bpb + (within * bpb) // span
    return bins


def bar_position_to_bin(space: BarTempoStateSpace, meter: MeterConfig, state: int) -> int:
    tempo, position = space.decompose(state)
    length = int(space.bar_lengths[tempo])
    beats = space.beat_positions[tempo]
    starts = beats - beats[0]
    ends = np.append(starts[1:], length)
    shifted = (position - int(beats[0])) % length
    beat = int(np.searchsorted(starts, shifted, side="right")) - 1
    span = int(ends[beat] - starts[beat])
    return beat * meter.bins_per_beat + (int(shifted - starts[beat]) * meter.bins_per_beat) // span


def beat_distances(
    space: BarTempoStateSpace, meter: MeterConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Seconds to the nearest beat and that beat's 1-based index, for every state.

    Distances wrap around the bar boundary. On a tie the lower beat index wins.
    """
    seconds = np.empty(len(space), dtype=float)
    nearest = np.empty(len(space), dtype=np.int64)
    for t in range(space.num_tempi):
        length = int(space.bar_lengths[t])
        positions = np.arange(length)[:, None]
        gap = np.abs(positions - space.beat_positions[t][None, :])
        gap = np.minimum(gap, length - gap)
        best = np.argmin(gap, axis=1)
        sl = slice(space.offsets[t], space.offsets[t] + length)
        seconds[sl] = gap[np.arange(length), best] * space.frame_hop
        nearest[sl] = best + 1
    return seconds, nearest


def distance_to_nearest_beat(
    space: BarTempoStateSpace, meter: MeterConfig, state: int
) -> Tuple[float, int]:
    tempo, position = space.decompose(state)
    length = int(space.bar_lengths[tempo])
    gap = np.abs(position - space.beat_positions[tempo])
    gap = np.minimum(gap, length - gap)
    best = int(np.argmin(gap))
    return float(gap[best] * space.frame_hop), best + 1
