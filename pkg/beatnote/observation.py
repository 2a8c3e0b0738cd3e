"""Observation models: accent GMMs per bar-position bin and the pitch model.

Both models work in the log domain on whole feature sequences; the scalar
helpers exist for inspection and tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from beatnote.exceptions import ConfigurationError, InputError
from beatnote.models import FrameFeatures, MeterConfig, Segment
from beatnote.statespace import JointStateSpace, NoteStateSpace

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(eq=False)
class RhythmPattern:
    """Per-bin Gaussian mixtures with diagonal covariances over the flux vector.

    Arrays are shaped ``weights (bins, K)``, ``means (bins, K, D)`` and
    ``variances (bins, K, D)``, with ``bins = B * bins_per_beat`` of ``meter``.
    ``smoothing`` is the moving-average window the pattern was trained with;
    None means the pattern lives in raw flux units and features are used as given.
    """

    meter: MeterConfig
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    hop: Optional[float] = None
    smoothing: Optional[int] = 5

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)

        bins = self.meter.num_bins
        if self.weights.ndim != 2 or self.weights.shape[0] != bins:
            raise InputError(f"Pattern needs weights for {bins} bins, got {self.weights.shape}")
        expected = self.weights.shape + (self.means.shape[-1],)
        if self.means.shape != expected or self.variances.shape != expected:
            raise InputError(f"Pattern means/variances must be shaped {expected}")
        if not np.allclose(self.weights.sum(axis=1), 1.0, atol=1e-6):
            raise InputError("Pattern component weights must sum to 1 in every bin")
        if np.any(self.variances <= 0):
            raise InputError("Pattern variances must be positive")

    @property
    def num_bins(self) -> int:
        return int(self.weights.shape[0])

    @property
    def components(self) -> int:
        return int(self.weights.shape[1])

    @property
    def dims(self) -> int:
        return int(self.means.shape[-1])

    def log_likelihood(self, flux: np.ndarray) -> np.ndarray:
        """``(T, bins)`` log densities of every frame under every bin's mixture."""
        flux = np.atleast_2d(np.asarray(flux, dtype=float))
        if flux.shape[1] != self.dims:
            raise InputError(f"Flux has {flux.shape[1]} dimensions, pattern expects {self.dims}")
        diff = flux[:, None, None, :] - self.means[None]
        per_component = -0.5 * (
            np.sum(np.log(self.variances), axis=-1)[None]
            + self.dims * _LOG_2PI
            + np.sum(diff**2 / self.variances[None], axis=-1)
        )
        with np.errstate(divide="ignore"):
            log_weights = np.log(self.weights)
        return logsumexp(per_component + log_weights[None], axis=-1)

    @classmethod
    def uniform(cls, meter: MeterConfig, dims: int = 2) -> "RhythmPattern":
        """Identical standard-normal mixture in every bin; carries no rhythmic information."""
        bins = meter.num_bins
        return cls(
            meter=meter,
            weights=np.full((bins, 2), 0.5),
            means=np.zeros((bins, 2, dims)),
            variances=np.ones((bins, 2, dims)),
            smoothing=None,
        )

    def to_dict(self) -> dict:
        return {
            "meter": self.meter.to_dict(),
            "beats_per_bar": self.meter.beats_per_bar,
            "bins_per_beat": self.meter.bins_per_beat,
            "hop": self.hop,
            "smoothing": self.smoothing,
            "bins": [
                {
                    "weights": self.weights[b].tolist(),
                    "means": self.means[b].tolist(),
                    "variances": self.variances[b].tolist(),
                }
                for b in range(self.num_bins)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RhythmPattern":
        try:
            meter = MeterConfig.from_dict(data["meter"])
            bins = data["bins"]
            return cls(
                meter=meter,
                weights=[b["weights"] for b in bins],
                means=[b["means"] for b in bins],
                variances=[b["variances"] for b in bins],
                hop=data.get("hop"),
                smoothing=None if data.get("smoothing") is None else int(data["smoothing"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"Malformed pattern definition: {e}")


@dataclass(frozen=True)
class PitchModel:
    """Gaussian pitch emissions: narrow for Stable states, wide for Attack states."""

    sigma_stable: float = 0.9
    sigma_attack: float = 5.0

    def __post_init__(self) -> None:
        if self.sigma_stable <= 0 or self.sigma_attack <= 0:
            raise ConfigurationError("Pitch model sigmas must be positive")

    def log_likelihoods(
        self, notes: NoteStateSpace, pitch: np.ndarray, voicing: np.ndarray
    ) -> np.ndarray:
        """``(T, 3 * pitch_count)`` log observation probabilities.

        Vocal states share probability ``v`` in proportion to their Gaussian
        densities; each NonVocal state gets ``(1 - v) / pitch_count``. NaN
        pitch means unvoiced and forces ``v = 0``.
        """
        pitch = np.atleast_1d(np.asarray(pitch, dtype=float))
        voicing = np.atleast_1d(np.asarray(voicing, dtype=float)).copy()
        if np.any((voicing < 0) | (voicing > 1)):
            raise InputError("Voicing values must lie in [0, 1]")
        unvoiced = np.isnan(pitch)
        voicing[unvoiced] = 0.0
        observed = np.where(unvoiced, 0.0, pitch)

        means = notes.pitches[None, :]
        attack = norm.logpdf(observed[:, None], loc=means, scale=self.sigma_attack)
        stable = norm.logpdf(observed[:, None], loc=means, scale=self.sigma_stable)
        vocal = np.concatenate([attack, stable], axis=1)
        vocal -= logsumexp(vocal, axis=1, keepdims=True)

        with np.errstate(divide="ignore"):
            log_v = np.log(voicing)[:, None]
            log_rest = np.log((1.0 - voicing) / notes.pitch_count)[:, None]

        out = np.empty((len(pitch), len(notes)))
        out[:, Segment.ATTACK :: 3] = vocal[:, : notes.pitch_count] + log_v
        out[:, Segment.STABLE :: 3] = vocal[:, notes.pitch_count :] + log_v
        out[:, Segment.NON_VOCAL :: 3] = log_rest
        return out

    def to_dict(self) -> dict:
        return {"sigma_stable": self.sigma_stable, "sigma_attack": self.sigma_attack}


def accent_likelihood(pattern: RhythmPattern, flux, bin_index: int) -> float:
    """Density of one flux vector under the mixture of ``bin_index``."""
    flux = np.asarray(flux, dtype=float).reshape(-1)
    if flux.shape[0] != pattern.dims:
        raise InputError(f"Flux has {flux.shape[0]} dimensions, pattern expects {pattern.dims}")
    if not 0 <= bin_index < pattern.num_bins:
        raise InputError(f"Bin {bin_index} out of range for {pattern.num_bins} bins")
    return float(np.exp(pattern.log_likelihood(flux[None, :])[0, bin_index]))


def pitch_likelihoods(
    model: PitchModel, notes: NoteStateSpace, pitch: Optional[float], voicing: float
) -> np.ndarray:
    value = math.nan if pitch is None else float(pitch)
    return np.exp(model.log_likelihoods(notes, np.array([value]), np.array([voicing]))[0])


def joint_observation(
    pattern: RhythmPattern,
    pitch_model: PitchModel,
    joint: JointStateSpace,
    bins: np.ndarray,
    joint_state: int,
    frame: FrameFeatures,
) -> float:
    """Accent likelihood of the state's bin times the pitch likelihood of its note.

    ``bins`` maps bar-tempo states to pattern bins (see ``statespace.bins_of_states``).
    """
    bt, note = joint.decompose(joint_state)
    accent = accent_likelihood(pattern, frame.flux, int(bins[bt]))
    pitch = pitch_likelihoods(pitch_model, joint.notes, frame.pitch, frame.voicing)
    return accent * float(pitch[note])
