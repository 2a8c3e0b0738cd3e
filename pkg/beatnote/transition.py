"""Sparse factorized transition model.

A joint arc is the product of a bar-tempo arc and a note arc. The note arc
from NonVocal to Attack is scaled by the beat weight of the destination bar
position; the mass it removes or adds comes out of the NonVocal self-loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.stats import norm

from beatnote.exceptions import ConfigurationError, ModelError, ResourceRefusal
from beatnote.models import MeterConfig, Segment, Weighting
from beatnote.statespace import (
    DEFAULT_MAX_STATES,
    BarTempoStateSpace,
    JointStateSpace,
    NoteStateSpace,
    beat_distances,
)

logger = logging.getLogger("beatnote")

_ZERO_DISTANCE = 1e-12
# self-loops at or below this are an exhausted NonVocal row up to rounding
_MIN_SELF_LOOP = 1e-12


@dataclass(frozen=True)
class NoteTransitionConfig:
    """Constants of the note automaton and of the beat weighting."""

    c_attack: float = 0.9
    c_stable: float = 0.99
    c_nonvocal: float = 0.9999
    pitch_jump_sigma: float = 5.0
    weighting: str = Weighting.NONE
    w: float = 1.0
    sigma: float = 0.03

    def __post_init__(self) -> None:
        for name in ("c_attack", "c_stable", "c_nonvocal"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {value}")
        if self.pitch_jump_sigma <= 0:
            raise ConfigurationError("pitch_jump_sigma must be positive")
        if self.weighting not in Weighting.ALL:
            raise ConfigurationError(
                f"Unknown weighting '{self.weighting}'; expected one of {', '.join(Weighting.ALL)}"
            )
        if self.sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.w < 0:
            raise ConfigurationError(f"w must be >= 0, got {self.w}")

    @property
    def leave_mass(self) -> float:
        """Total NonVocal to Attack mass of the beat-unaware model."""
        return 1.0 - self.c_nonvocal

    def to_dict(self) -> dict:
        return {
            "c_attack": self.c_attack,
            "c_stable": self.c_stable,
            "c_nonvocal": self.c_nonvocal,
            "pitch_jump_sigma": self.pitch_jump_sigma,
            "weighting": self.weighting,
            "w": self.w,
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoteTransitionConfig":
        known = {k: data[k] for k in cls().to_dict() if k in data}
        return cls(**known)


@dataclass(frozen=True)
class TempoTransitionConfig:
    tempo_change_prob: float = 0.02

    def __post_init__(self) -> None:
        if not 0.0 <= self.tempo_change_prob < 1.0:
            raise ConfigurationError(
                f"tempo_change_prob must lie in [0, 1), got {self.tempo_change_prob}"
            )


def pitch_jump_prior(notes: NoteStateSpace, cfg: NoteTransitionConfig) -> np.ndarray:
    """P[i, j]: probability of NonVocal after pitch i moving to Attack of pitch j.

    Each row follows a zero-centred Gaussian over the pitch change and sums to
    ``1 - c_nonvocal``.
    """
    pitches = notes.pitches
    kernel = norm.pdf(pitches[None, :] - pitches[:, None], loc=0.0, scale=cfg.pitch_jump_sigma)
    kernel /= kernel.sum(axis=1, keepdims=True)
    return kernel * cfg.leave_mass


def theta(cfg: NoteTransitionConfig, d: float, b: int, meter: MeterConfig) -> float:
    """Beat weight for a bar position ``d`` seconds from its nearest beat ``b`` (1-based)."""
    return float(theta_values(cfg, np.array([d]), np.array([b]), meter)[0])


def theta_values(
    cfg: NoteTransitionConfig,
    distances: np.ndarray,
    beats: np.ndarray,
    meter: MeterConfig,
) -> np.ndarray:
    distances = np.asarray(distances, dtype=float)
    if cfg.weighting == Weighting.NONE:
        return np.ones_like(distances)

    prior = np.asarray(meter.onset_prior)[np.asarray(beats, dtype=np.int64) - 1]
    if cfg.weighting == Weighting.TIME_WINDOW:
        return norm.pdf(distances, loc=0.0, scale=cfg.sigma) ** cfg.w * prior

    peak = norm.pdf(0.0, loc=0.0, scale=cfg.sigma) ** cfg.w
    return np.where(distances < _ZERO_DISTANCE, peak * prior, 1.0)


def nonvocal_self_loop(cfg: NoteTransitionConfig, theta_value: float) -> float:
    """NonVocal self-loop: 1 - theta * (1 - c_nonvocal)."""
    c_n = 1.0 - theta_value * cfg.leave_mass
    if c_n <= _MIN_SELF_LOOP:
        raise ModelError(
            f"Beat weight {theta_value:.6g} leaves no NonVocal self-transition mass "
            f"(max allowed weight is {1.0 / cfg.leave_mass:.6g}); lower w or raise sigma"
        )
    return c_n


def note_transition(
    cfg: NoteTransitionConfig,
    prior: np.ndarray,
    from_note: int,
    to_note: int,
    theta_value: float,
) -> float:
    """Probability of moving between two note states under beat weight ``theta_value``."""
    c_n = nonvocal_self_loop(cfg, theta_value)
    pitch_from, seg_from = divmod(int(from_note), 3)
    pitch_to, seg_to = divmod(int(to_note), 3)
    same_pitch = pitch_from == pitch_to

    if seg_from == Segment.NON_VOCAL:
        if seg_to == Segment.ATTACK:
            return float(prior[pitch_from, pitch_to] * theta_value)
        if seg_to == Segment.NON_VOCAL and same_pitch:
            return c_n
        return 0.0
    if seg_from == Segment.ATTACK and same_pitch:
        if seg_to == Segment.ATTACK:
            return cfg.c_attack
        if seg_to == Segment.STABLE:
            return 1.0 - cfg.c_attack
        return 0.0
    if seg_from == Segment.STABLE and same_pitch:
        if seg_to == Segment.STABLE:
            return cfg.c_stable
        if seg_to == Segment.NON_VOCAL:
            return 1.0 - cfg.c_stable
    return 0.0


def note_transition_matrix(
    cfg: NoteTransitionConfig, prior: np.ndarray, theta_value: float
) -> np.ndarray:
    """Dense note transition matrix for one beat weight."""
    pitch_count = prior.shape[0]
    size = pitch_count * 3
    matrix = np.zeros((size, size))
    idx = np.arange(pitch_count) * 3
    a, s, n = idx + Segment.ATTACK, idx + Segment.STABLE, idx + Segment.NON_VOCAL
    matrix[a, a] = cfg.c_attack
    matrix[a, s] = 1.0 - cfg.c_attack
    matrix[s, s] = cfg.c_stable
    matrix[s, n] = 1.0 - cfg.c_stable
    matrix[n, n] = nonvocal_self_loop(cfg, theta_value)
    matrix[np.ix_(n, a)] = prior * theta_value
    return matrix


def bar_tempo_transition(
    space: BarTempoStateSpace, cfg: TempoTransitionConfig, from_state: int
) -> List[Tuple[int, float]]:
    """Successors of a bar-tempo state.

    The position advances by one frame. Only when the next position is a beat
    may the tempo move to an adjacent tempo state, landing on the same beat.
    """
    tempo, position = space.decompose(from_state)
    length = int(space.bar_lengths[tempo])
    nxt = space.state_index(tempo, (position + 1) % length)
    beat = int(space.beat_of_state[nxt])

    neighbours = [t for t in (tempo - 1, tempo + 1) if 0 <= t < space.num_tempi]
    if beat == 0 or not neighbours or cfg.tempo_change_prob == 0.0:
        return [(nxt, 1.0)]

    share = cfg.tempo_change_prob / len(neighbours)
    successors = [(nxt, 1.0 - cfg.tempo_change_prob)]
    for t in neighbours:
        successors.append((int(space.offsets[t] + space.beat_positions[t][beat - 1]), share))
    return sorted(successors)


def _bar_tempo_arcs(
    space: BarTempoStateSpace, cfg: TempoTransitionConfig
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All bar-tempo arcs as ``(src, dst, prob)`` arrays, vectorized per tempo."""
    srcs, dsts, probs = [], [], []
    p_change = cfg.tempo_change_prob
    for t in range(space.num_tempi):
        length = int(space.bar_lengths[t])
        offset = int(space.offsets[t])
        src = offset + np.arange(length)
        dst = offset + (np.arange(length) + 1) % length
        neighbours = [u for u in (t - 1, t + 1) if 0 <= u < space.num_tempi]

        stay = np.ones(length)
        if neighbours and p_change > 0.0:
            beat = space.beat_of_state[dst]
            crossing = beat > 0
            stay[crossing] = 1.0 - p_change
            for u in neighbours:
                target = space.offsets[u] + space.beat_positions[u][beat[crossing] - 1]
                srcs.append(src[crossing])
                dsts.append(target)
                probs.append(np.full(int(crossing.sum()), p_change / len(neighbours)))
        srcs.append(src)
        dsts.append(dst)
        probs.append(stay)
    return np.concatenate(srcs), np.concatenate(dsts), np.concatenate(probs)


@dataclass(frozen=True, eq=False)
class SparseTransitionModel:
    """Factorized transitions over a joint state space.

    Bar-tempo arcs are kept as a padded predecessor table (``pred_states``,
    ``pred_log_probs``, ascending source order, padding repeats the first
    predecessor with log-probability -inf). Note arcs are generated from the
    pitch-jump prior and the per-state beat weight ``theta``.
    """

    joint: JointStateSpace
    note_cfg: NoteTransitionConfig
    tempo_cfg: TempoTransitionConfig
    prior: np.ndarray
    theta: np.ndarray
    pred_states: np.ndarray
    pred_log_probs: np.ndarray
    arcs: Tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)

    @property
    def max_out_degree(self) -> int:
        src = self.arcs[0]
        bar_tempo_degree = int(np.bincount(src).max())
        return bar_tempo_degree * (1 + self.joint.notes.pitch_count)

    def note_matrix(self, bar_tempo_state: int) -> np.ndarray:
        return note_transition_matrix(self.note_cfg, self.prior, float(self.theta[bar_tempo_state]))

    def bar_tempo_successors(self, bar_tempo_state: int) -> List[Tuple[int, float]]:
        src, dst, prob = self.arcs
        mask = src == bar_tempo_state
        return sorted(zip(dst[mask].tolist(), prob[mask].tolist()))

    def successors(self, joint_state: int) -> List[Tuple[int, float]]:
        """Nonzero successors of a joint state with their probabilities."""
        bt, note = self.joint.decompose(joint_state)
        out: Dict[int, float] = {}
        for dst, p_bt in self.bar_tempo_successors(bt):
            row = self.note_matrix(dst)[note]
            for to_note in np.flatnonzero(row):
                out[self.joint.index(dst, int(to_note))] = p_bt * float(row[to_note])
        return sorted(out.items())

    def to_dense(self) -> np.ndarray:
        """Dense joint matrix built arc by arc from the element-wise rules (small models only)."""
        size = len(self.joint)
        bt_space = self.joint.bar_tempo
        notes = self.joint.notes
        matrix = np.zeros((size, size))
        for bt in range(len(bt_space)):
            for dst, p_bt in bar_tempo_transition(bt_space, self.tempo_cfg, bt):
                weight = float(self.theta[dst])
                for n_from in range(len(notes)):
                    for n_to in range(len(notes)):
                        p_note = note_transition(self.note_cfg, self.prior, n_from, n_to, weight)
                        if p_note > 0.0:
                            matrix[self.joint.index(bt, n_from), self.joint.index(dst, n_to)] = (
                                p_bt * p_note
                            )
        return matrix

    def row_sums(self) -> np.ndarray:
        """Outgoing mass of every joint state, computed from the factorized tables."""
        src, dst, prob = self.arcs
        notes = self.joint.notes
        sums = np.zeros((len(self.joint.bar_tempo), len(notes)))
        # A and S rows do not depend on the beat weight
        attack_row = self.note_cfg.c_attack + (1.0 - self.note_cfg.c_attack)
        stable_row = self.note_cfg.c_stable + (1.0 - self.note_cfg.c_stable)
        prior_rows = self.prior.sum(axis=1)
        for s, d, p in zip(src, dst, prob):
            c_n = 1.0 - self.theta[d] * self.note_cfg.leave_mass
            nonvocal_rows = c_n + self.theta[d] * prior_rows
            row = np.empty(len(notes))
            row[Segment.ATTACK :: 3] = attack_row
            row[Segment.STABLE :: 3] = stable_row
            row[Segment.NON_VOCAL :: 3] = nonvocal_rows
            sums[s] += p * row
        return sums.reshape(-1)


def build_joint_transitions(
    joint: JointStateSpace,
    meter: MeterConfig,
    note_cfg: NoteTransitionConfig,
    tempo_cfg: TempoTransitionConfig,
    max_states: int = DEFAULT_MAX_STATES,
) -> SparseTransitionModel:
    """Assemble the factorized transition model and validate the beat weights.

    Raises:
        ResourceRefusal: If the joint space exceeds ``max_states``.
        ModelError: If some bar position's beat weight leaves the NonVocal self-loop <= 0.
    """
    if len(joint) > max_states:
        raise ResourceRefusal(
            "Joint transition model is over the state budget",
            required=len(joint),
            cap=max_states,
            unit="states",
        )

    space = joint.bar_tempo
    distances, beats = beat_distances(space, meter)
    weights = theta_values(note_cfg, distances, beats, meter)
    worst = float(weights.max())
    nonvocal_self_loop(note_cfg, worst)
    logger.debug(
        "Beat weights (%s): min %.6g, max %.6g over %d bar positions",
        note_cfg.weighting,
        float(weights.min()),
        worst,
        len(weights),
    )

    src, dst, prob = _bar_tempo_arcs(space, tempo_cfg)
    order = np.lexsort((src, dst))
    src_sorted, dst_sorted = src[order], dst[order]
    with np.errstate(divide="ignore"):
        log_sorted = np.log(prob[order])

    counts = np.bincount(dst_sorted, minlength=len(space))
    width = int(counts.max())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(len(dst_sorted)) - starts[dst_sorted]

    pred_states = np.repeat(src_sorted[starts][:, None], width, axis=1)
    pred_log = np.full((len(space), width), -np.inf)
    pred_states[dst_sorted, slot] = src_sorted
    pred_log[dst_sorted, slot] = log_sorted

    return SparseTransitionModel(
        joint=joint,
        note_cfg=note_cfg,
        tempo_cfg=tempo_cfg,
        prior=pitch_jump_prior(joint.notes, note_cfg),
        theta=weights,
        pred_states=pred_states,
        pred_log_probs=pred_log,
        arcs=(src, dst, prob),
    )
