"""Accent feature extraction and per-recording normalization."""

from __future__ import annotations

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import get_window, stft

from beatnote.exceptions import InputError

logger = logging.getLogger("beatnote")

DEFAULT_HOP = 0.0058
DEFAULT_WINDOW = 0.0464
DEFAULT_SPLIT_HZ = 250.0
DEFAULT_SMOOTHING = 5

_INT_SCALE = {
    np.dtype("uint8"): 128.0,
    np.dtype("int16"): 32768.0,
    np.dtype("int32"): 2147483648.0,
}


def to_float_samples(samples: np.ndarray) -> np.ndarray:
    """Convert mono PCM of a supported sample format to floats in [-1, 1]."""
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise InputError(f"Expected mono samples, got array of shape {samples.shape}")
    if samples.dtype in _INT_SCALE:
        scale = _INT_SCALE[samples.dtype]
        out = samples.astype(float)
        if samples.dtype == np.dtype("uint8"):
            out -= 128.0
        return out / scale
    if samples.dtype in (np.dtype("float32"), np.dtype("float64")):
        return samples.astype(float)
    raise InputError(f"Unsupported sample format {samples.dtype}")


def band_edges(rate: float, bands: int, split_hz: float = DEFAULT_SPLIT_HZ) -> np.ndarray:
    """Band boundaries in Hz: ``[0, split, ..., nyquist]`` with log spacing above the split."""
    nyquist = rate / 2.0
    if bands == 1:
        return np.array([0.0, nyquist])
    inner = np.geomspace(split_hz, nyquist, bands)[:-1]
    return np.concatenate([[0.0], inner, [nyquist]])


def extract_flux(
    samples: np.ndarray,
    rate: int,
    hop: float = DEFAULT_HOP,
    bands: int = 2,
    window: float = DEFAULT_WINDOW,
    split_hz: float = DEFAULT_SPLIT_HZ,
) -> np.ndarray:
    """Band-wise spectral flux, one ``bands``-dimensional vector per hop.

    Half-wave rectified difference of the log magnitude spectrogram between
    consecutive frames, summed over the bins of each band. Frame ``k`` is
    centred on sample ``k * hop * rate``.
    """
    if bands < 1:
        raise InputError(f"bands must be >= 1, got {bands}")
    x = to_float_samples(samples)
    hop_samples = max(1, int(round(hop * rate)))
    win_samples = max(hop_samples, int(round(window * rate)))
    num_frames = 1 + len(x) // hop_samples

    freqs, _, spec = stft(
        x,
        fs=rate,
        window="hann",
        nperseg=win_samples,
        noverlap=win_samples - hop_samples,
        boundary="zeros",
        padded=True,
    )
    # undo scipy's 1/sum(window) scaling to get raw magnitudes
    magnitude = np.abs(spec) * get_window("hann", win_samples).sum()
    log_mag = np.log1p(magnitude)[:, :num_frames]
    if log_mag.shape[1] < num_frames:
        log_mag = np.pad(log_mag, ((0, 0), (0, num_frames - log_mag.shape[1])))

    rise = np.maximum(np.diff(log_mag, axis=1, prepend=log_mag[:, :1]), 0.0)
    edges = band_edges(rate, bands, split_hz)
    flux = np.zeros((num_frames, bands))
    for b in range(bands):
        upper = freqs <= edges[b + 1] if b == bands - 1 else freqs < edges[b + 1]
        in_band = (freqs >= edges[b]) & upper
        flux[:, b] = rise[in_band].sum(axis=0)
    logger.debug("Extracted %d flux frames (%d bands) at hop %.4f s", num_frames, bands, hop)
    return flux


def standardize(flux: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per dimension; constant dimensions are only centred."""
    flux = np.asarray(flux, dtype=float)
    if flux.size == 0:
        raise InputError("Cannot normalize an empty feature sequence")
    if flux.ndim == 1:
        flux = flux[:, None]
    centred = flux - flux.mean(axis=0)
    std = flux.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return centred / scale


def normalize_features(flux: np.ndarray, window: int = DEFAULT_SMOOTHING) -> np.ndarray:
    """Per-recording standardization followed by a centred moving average."""
    if window < 1:
        raise InputError(f"Moving-average window must be >= 1, got {window}")
    standardized = standardize(flux)
    if window == 1:
        return standardized
    return uniform_filter1d(standardized, size=window, axis=0, mode="nearest")


def align_melody(
    frame_times: np.ndarray,
    melody_times: np.ndarray,
    pitch: np.ndarray,
    voicing: np.ndarray,
    vocal_segments: Optional[Sequence[Tuple[float, float]]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Resample a melody track onto the flux frames by nearest melody frame.

    Frames outside every ``vocal_segments`` interval get v=0 and no pitch.
    """
    frame_times = np.asarray(frame_times, dtype=float)
    melody_times = np.asarray(melody_times, dtype=float)
    if len(melody_times) == 0:
        raise InputError("Melody track is empty")
    if np.any(np.diff(melody_times) <= 0):
        raise InputError("Melody times must be strictly increasing")

    right = np.clip(np.searchsorted(melody_times, frame_times), 0, len(melody_times) - 1)
    left = np.clip(right - 1, 0, len(melody_times) - 1)
    use_left = np.abs(frame_times - melody_times[left]) <= np.abs(melody_times[right] - frame_times)
    nearest = np.where(use_left, left, right)
    out_pitch = np.asarray(pitch, dtype=float)[nearest]
    out_voicing = np.asarray(voicing, dtype=float)[nearest]

    if vocal_segments is not None:
        singing = np.zeros(len(frame_times), dtype=bool)
        for start, end in vocal_segments:
            singing |= (frame_times >= start) & (frame_times <= end)
        out_pitch = np.where(singing, out_pitch, np.nan)
        out_voicing = np.where(singing, out_voicing, 0.0)
        logger.debug("%d of %d frames inside vocal segments", int(singing.sum()), len(frame_times))
    return out_pitch, out_voicing
