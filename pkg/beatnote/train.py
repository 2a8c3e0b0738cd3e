"""Training of rhythmic patterns and management of the note-onset prior."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from beatnote.exceptions import ConfigurationError, InputError, ModelError
from beatnote.features import DEFAULT_SMOOTHING, normalize_features
from beatnote.models import Beat, FeatureSequence, MeterConfig
from beatnote.observation import RhythmPattern

logger = logging.getLogger("beatnote")

VARIANCE_FLOOR = 1e-4
MAX_ITERATIONS = 100
TOLERANCE = 1e-6

BUILTIN_PRIORS: Dict[str, Tuple[float, ...]] = {
    "4/4": (0.8, 0.6, 0.8, 0.6),
}

BUILTIN_METERS: Dict[str, MeterConfig] = {
    "4/4": MeterConfig(meter_id="4/4", beats_per_bar=4, onset_prior=BUILTIN_PRIORS["4/4"]),
}


def onset_prior(meter_id: str, explicit: Optional[Sequence[float]] = None) -> Tuple[float, ...]:
    """Per-beat onset prior of a meter: the explicit vector when given, else the built-in one.

    Raises:
        ConfigurationError: For a meter without a built-in prior and no explicit vector.
    """
    if explicit is not None:
        values = tuple(float(e) for e in explicit)
        if any(e < 0.0 or e > 1.0 for e in values):
            raise ConfigurationError("Onset prior values must be in [0, 1]")
        return values
    if meter_id in BUILTIN_PRIORS:
        return BUILTIN_PRIORS[meter_id]
    raise ConfigurationError(
        f"No built-in onset prior for meter '{meter_id}'; supply one explicitly "
        f"(known: {', '.join(sorted(BUILTIN_PRIORS))})"
    )


def builtin_meter(meter_id: str) -> MeterConfig:
    if meter_id not in BUILTIN_METERS:
        raise ConfigurationError(
            f"Unknown meter '{meter_id}'; pass a meter JSON file "
            f"(built-in: {', '.join(sorted(BUILTIN_METERS))})"
        )
    return BUILTIN_METERS[meter_id]


def assign_bins(times: np.ndarray, beats: Sequence[Beat], meter: MeterConfig) -> np.ndarray:
    """Pattern bin of every frame, interpolating linearly between annotated beats.

    Frames before the first or after the last annotated beat get -1.
    """
    times = np.asarray(times, dtype=float)
    labels = np.full(len(times), -1, dtype=np.int64)
    if len(beats) < 2:
        return labels

    beat_times = np.array([b.time for b in beats])
    beat_index = np.array([b.index for b in beats])
    if np.any(beat_index < 1) or np.any(beat_index > meter.beats_per_bar):
        raise InputError(f"Beat indices must lie in 1..{meter.beats_per_bar}")

    inside = (times >= beat_times[0]) & (times <= beat_times[-1])
    seg = np.clip(np.searchsorted(beat_times, times[inside], side="right") - 1, 0, len(beats) - 2)
    fraction = (times[inside] - beat_times[seg]) / (beat_times[seg + 1] - beat_times[seg])
    within = np.minimum((fraction * meter.bins_per_beat).astype(np.int64), meter.bins_per_beat - 1)
    # a frame exactly on the last beat starts that beat
    on_last = times[inside] >= beat_times[-1]
    start_beat = np.where(on_last, beat_index[-1], beat_index[seg])
    within = np.where(on_last, 0, within)
    labels[inside] = (start_beat - 1) * meter.bins_per_beat + within
    return labels


@dataclass
class GMMFit:
    """A fitted diagonal mixture and its log-likelihood after every EM iteration."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihoods: List[float] = field(default_factory=list)
    converged: bool = False


def _kmeans_plus_plus(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centres = [data[rng.integers(len(data))]]
    for _ in range(1, k):
        d2 = np.min(((data[:, None, :] - np.array(centres)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total > 0:
            centres.append(data[rng.choice(len(data), p=d2 / total)])
        else:
            centres.append(data[rng.integers(len(data))])
    return np.array(centres)


def _component_log_densities(
    data: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> np.ndarray:
    diff = data[:, None, :] - means[None]
    return -0.5 * (
        np.sum(np.log(2.0 * np.pi * variances), axis=-1)[None]
        + np.sum(diff**2 / variances[None], axis=-1)
    )


def fit_gmm(
    data: np.ndarray,
    components: int = 2,
    rng: Optional[np.random.Generator] = None,
    max_iterations: int = MAX_ITERATIONS,
    tolerance: float = TOLERANCE,
    variance_floor: float = VARIANCE_FLOOR,
) -> GMMFit:
    """EM for a diagonal-covariance Gaussian mixture.

    Raises:
        ModelError: If the log-likelihood decreases between iterations.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if len(data) == 0:
        raise InputError("Cannot fit a mixture to an empty data set")
    rng = rng if rng is not None else np.random.default_rng(0)

    n, dims = data.shape
    means = _kmeans_plus_plus(data, components, rng)
    variances = np.tile(np.maximum(data.var(axis=0), variance_floor), (components, 1))
    weights = np.full(components, 1.0 / components)

    fit = GMMFit(weights=weights, means=means, variances=variances)
    previous = None
    for _ in range(max_iterations):
        with np.errstate(divide="ignore"):
            joint = _component_log_densities(data, means, variances) + np.log(weights)[None]
        norm = logsumexp(joint, axis=1)
        ll = float(norm.sum())
        fit.log_likelihoods.append(ll)

        if previous is not None:
            if ll < previous - 1e-9 * abs(previous) - 1e-9:
                raise ModelError(f"EM log-likelihood decreased from {previous:.9g} to {ll:.9g}")
            if abs(ll - previous) <= tolerance * abs(previous):
                fit.converged = True
                break
        previous = ll

        resp = np.exp(joint - norm[:, None])
        mass = resp.sum(axis=0)
        alive = mass > 1e-12
        weights = mass / n
        new_means = means.copy()
        new_vars = variances.copy()
        new_means[alive] = (resp[:, alive].T @ data) / mass[alive, None]
        for k in np.flatnonzero(alive):
            spread = ((data - new_means[k]) ** 2 * resp[:, k : k + 1]).sum(axis=0) / mass[k]
            new_vars[k] = np.maximum(spread, variance_floor)
        means, variances = new_means, new_vars

    fit.weights, fit.means, fit.variances = weights, means, variances
    logger.debug(
        "GMM fit: %d points, %d components, %d iterations, ll=%.6g",
        n,
        components,
        len(fit.log_likelihoods),
        fit.log_likelihoods[-1],
    )
    return fit


def _nearest_populated(bin_index: int, populated: List[int], num_bins: int) -> int:
    def circular(b: int) -> Tuple[int, int]:
        gap = abs(b - bin_index)
        return min(gap, num_bins - gap), b

    return min(populated, key=circular)


def fit_pattern(
    flux: np.ndarray,
    labels: np.ndarray,
    meter: MeterConfig,
    components: int = 2,
    seed: int = 0,
    hop: Optional[float] = None,
    smoothing: int = DEFAULT_SMOOTHING,
) -> RhythmPattern:
    """Fit one mixture per pattern bin from labelled (normalized) flux frames.

    Bins with fewer than ``2 * components`` frames borrow the fit of the nearest
    populated bin. Every bin draws from its own seeded generator, so the result
    does not depend on the order bins are fitted in.
    """
    flux = np.asarray(flux, dtype=float)
    if flux.ndim == 1:
        flux = flux[:, None]
    labels = np.asarray(labels)
    if len(labels) != len(flux):
        raise InputError("Need one bin label per flux frame")

    num_bins = meter.num_bins
    counts = np.bincount(labels[labels >= 0], minlength=num_bins)[:num_bins]
    populated = [b for b in range(num_bins) if counts[b] >= 2 * components]
    if not populated:
        raise InputError(
            f"Empty training set: no pattern bin has {2 * components} or more labelled frames"
        )

    fits: Dict[int, GMMFit] = {}
    for b in populated:
        rng = np.random.default_rng([seed, b])
        fits[b] = fit_gmm(flux[labels == b], components=components, rng=rng)

    sparse = [b for b in range(num_bins) if b not in fits]
    if sparse:
        logger.warning(
            "%d of %d pattern bins have too few frames and borrow a neighbour's fit",
            len(sparse),
            num_bins,
        )
    for b in sparse:
        fits[b] = fits[_nearest_populated(b, populated, num_bins)]

    return RhythmPattern(
        meter=meter,
        weights=np.array([fits[b].weights for b in range(num_bins)]),
        means=np.array([fits[b].means for b in range(num_bins)]),
        variances=np.array([fits[b].variances for b in range(num_bins)]),
        hop=hop,
        smoothing=smoothing,
    )


def train_pattern(
    recordings: Sequence[Tuple[FeatureSequence, Sequence[Beat]]],
    meter: MeterConfig,
    components: int = 2,
    seed: int = 0,
    smoothing: int = DEFAULT_SMOOTHING,
) -> RhythmPattern:
    """Normalize each recording's flux, label frames from its beats and fit the pattern."""
    if not recordings:
        raise InputError("Empty training set: no recordings given")
    all_flux, all_labels, hops = [], [], []
    for features, beats in recordings:
        all_flux.append(normalize_features(features.flux, smoothing))
        all_labels.append(assign_bins(features.times, beats, meter))
        if features.hop is not None:
            hops.append(features.hop)
    hop: Optional[float] = None
    if hops:
        hop = float(np.median(hops))
        if np.ptp(hops) > 1e-3 * hop:
            logger.warning(
                "Training recordings use different hop sizes (%.4f-%.4f s)", min(hops), max(hops)
            )
    return fit_pattern(
        np.concatenate(all_flux),
        np.concatenate(all_labels),
        meter,
        components=components,
        seed=seed,
        hop=hop,
        smoothing=smoothing,
    )
