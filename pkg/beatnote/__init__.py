"""
beatnote
~~~~~~~~

Joint tracking of beats and vocal note onsets. A bar-pointer model of the
metrical cycle and a note model of sung segments are decoded together, so the
position in the bar steers where new notes are likely to start.

Usage:
    >>> from beatnote import JointModel, NoteTransitionConfig, builtin_meter
    >>> from beatnote import read_features, read_pattern, viterbi_full
    >>> features = read_features("song.features.csv")
    >>> model = JointModel.build(
    ...     builtin_meter("4/4"),
    ...     read_pattern("pattern.json"),
    ...     tempo=96,
    ...     frame_hop=features.hop,
    ...     note_cfg=NoteTransitionConfig(weighting="simple", w=1.1, sigma=0.045),
    ... )
    >>> result = viterbi_full(model, features)
    >>> result.onsets[:3]
"""

__version__ = "0.1.0"

from beatnote.decode import (
    DecodeSettings,
    estimate_memory,
    extract_events,
    viterbi_dense,
    viterbi_full,
    viterbi_notes,
    viterbi_reduced,
)
from beatnote.exceptions import (
    BeatNoteError,
    ConfigurationError,
    InputError,
    ModelError,
    ResourceRefusal,
)
from beatnote.features import extract_flux, normalize_features
from beatnote.files import (
    read_beats,
    read_decode,
    read_features,
    read_manifest,
    read_meter,
    read_onsets,
    read_pattern,
    write_features,
    write_pattern,
)
from beatnote.metrics import aggregate, match_events
from beatnote.model import JointModel
from beatnote.models import (
    Beat,
    DecodeResult,
    EventScores,
    FeatureSequence,
    MeterConfig,
    RecordingScores,
    Segment,
    Weighting,
)
from beatnote.observation import PitchModel, RhythmPattern
from beatnote.statespace import (
    BarTempoStateSpace,
    JointStateSpace,
    NoteStateSpace,
    build_bar_tempo_space,
    build_joint_space,
    build_note_space,
)
from beatnote.synth import SynthConfig, make_corpus
from beatnote.train import builtin_meter, fit_gmm, onset_prior, train_pattern
from beatnote.transition import (
    NoteTransitionConfig,
    SparseTransitionModel,
    TempoTransitionConfig,
    build_joint_transitions,
)

__all__ = [
    # Models
    "JointModel",
    "BarTempoStateSpace",
    "NoteStateSpace",
    "JointStateSpace",
    "SparseTransitionModel",
    "RhythmPattern",
    "PitchModel",
    # Configuration
    "MeterConfig",
    "NoteTransitionConfig",
    "TempoTransitionConfig",
    "DecodeSettings",
    "SynthConfig",
    "Segment",
    "Weighting",
    # Data
    "Beat",
    "FeatureSequence",
    "DecodeResult",
    "EventScores",
    "RecordingScores",
    # Operations
    "build_bar_tempo_space",
    "build_note_space",
    "build_joint_space",
    "build_joint_transitions",
    "builtin_meter",
    "onset_prior",
    "extract_flux",
    "normalize_features",
    "fit_gmm",
    "train_pattern",
    "viterbi_full",
    "viterbi_reduced",
    "viterbi_notes",
    "viterbi_dense",
    "extract_events",
    "estimate_memory",
    "make_corpus",
    "match_events",
    "aggregate",
    # Files
    "read_features",
    "write_features",
    "read_beats",
    "read_onsets",
    "read_pattern",
    "write_pattern",
    "read_meter",
    "read_decode",
    "read_manifest",
    # Exceptions
    "BeatNoteError",
    "InputError",
    "ConfigurationError",
    "ModelError",
    "ResourceRefusal",
]
