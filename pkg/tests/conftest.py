"""Shared test fixtures for the beatnote test suite."""

import numpy as np
import pytest

from beatnote.models import FeatureSequence, MeterConfig
from beatnote.observation import RhythmPattern
from beatnote.statespace import build_note_space
from beatnote.train import builtin_meter


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep every test away from the user's config file and environment."""
    monkeypatch.setenv("BEATNOTE_CONFIG", str(tmp_path / "beatnote-config.json"))
    for name in ("BEATNOTE_MEMORY_CAP", "BEATNOTE_MAX_STATES", "BEATNOTE_SPILL_DIR"):
        monkeypatch.delenv(name, raising=False)
    return tmp_path / "beatnote-config.json"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def meter_44():
    return builtin_meter("4/4")


@pytest.fixture
def small_meter():
    """Two beats of four bins each, with a non-flat onset prior."""
    return MeterConfig(meter_id="2/4", beats_per_bar=2, bins_per_beat=4, onset_prior=(0.9, 0.5))


@pytest.fixture
def aksak():
    """9/8 aksak: 2+2+2+3 eighths."""
    return MeterConfig(
        meter_id="9/8",
        beats_per_bar=4,
        beat_fractions=(0.0, 2 / 9, 4 / 9, 6 / 9),
        onset_prior=(1.0, 0.5, 0.5, 0.7),
    )


@pytest.fixture
def small_notes():
    return build_note_space(60, 3)


@pytest.fixture
def peaked_pattern(small_meter):
    """Raw-unit pattern with a strong flux peak on each beat bin."""
    bins = small_meter.num_bins
    means = np.zeros((bins, 2, 1))
    means[::small_meter.bins_per_beat] = 4.0
    return RhythmPattern(
        meter=small_meter,
        weights=np.tile([0.5, 0.5], (bins, 1)),
        means=means,
        variances=np.full((bins, 2, 1), 0.1),
        smoothing=None,
    )


@pytest.fixture
def make_features():
    """Factory for a FeatureSequence on a regular grid."""

    def make(flux, pitch, voicing, hop=0.02, name="test"):
        flux = np.asarray(flux, dtype=float)
        return FeatureSequence(
            times=np.arange(len(flux)) * hop,
            flux=flux,
            pitch=np.asarray(pitch, dtype=float),
            voicing=np.asarray(voicing, dtype=float),
            hop=hop,
            name=name,
        )

    return make
