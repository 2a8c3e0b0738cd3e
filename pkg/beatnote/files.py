"""Reading and writing the on-disk formats.

Feature CSV:   ``time,flux_0..flux_{D-1},pitch_midi,voicing`` (empty pitch = unvoiced)
Beat file:     ``time<TAB>beat_index`` per line
Onset file:    one time per line
Pattern JSON:  see ``RhythmPattern.to_dict``
Decode JSON:   ``{"beats": [{"time", "index"}], "onsets": [...], "log_prob", "config"}``
Manifest JSON: ``{"recordings": [{"name", "features", "beats", "onsets", "meter"}]}``
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.io import wavfile

from beatnote.exceptions import InputError
from beatnote.features import to_float_samples
from beatnote.models import Beat, DecodeResult, FeatureSequence, MeterConfig
from beatnote.observation import RhythmPattern

PathLike = Union[str, Path]

BEAT_UNAWARE_COMMAND = "track-notes"


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read file: {e.strerror or e}", source=str(path))
    except UnicodeDecodeError as e:
        raise InputError(f"File is not UTF-8 text (byte {e.start})", source=str(path))


def _read_json(path: PathLike) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid JSON: {e}", source=str(path))


def _write_json(path: PathLike, data: Any) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _data_lines(path: PathLike) -> Iterator[Tuple[int, List[str]]]:
    for line_no, line in enumerate(_read_text(path).splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield line_no, stripped.replace(",", " ").split()


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------

def read_features(path: PathLike) -> FeatureSequence:
    text = _read_text(path)
    reader = csv.DictReader(text.splitlines())
    header = reader.fieldnames or []
    flux_cols = sorted(
        (c for c in header if c.startswith("flux_")), key=lambda c: int(c.split("_")[1])
    )
    missing = [c for c in ("time", "pitch_midi", "voicing") if c not in header]
    if missing or not flux_cols:
        raise InputError(
            f"Feature header must contain time, flux_0.., pitch_midi, voicing; missing "
            f"{', '.join(missing) or 'flux columns'}",
            source=str(path),
        )

    times, flux, pitch, voicing = [], [], [], []
    for row_num, row in enumerate(reader, 2):
        try:
            times.append(float(row["time"]))
            flux.append([float(row[c]) for c in flux_cols])
            raw_pitch = (row["pitch_midi"] or "").strip()
            pitch.append(float(raw_pitch) if raw_pitch else math.nan)
            voicing.append(float(row["voicing"] or 0.0))
        except (TypeError, ValueError) as e:
            raise InputError(f"Row {row_num}: {e}", source=str(path))

    return FeatureSequence(
        times=times, flux=flux, pitch=pitch, voicing=voicing, name=Path(path).stem
    )


def write_features(path: PathLike, features: FeatureSequence) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    header = ["time"] + [f"flux_{d}" for d in range(features.dims)] + ["pitch_midi", "voicing"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(features)):
            pitch = features.pitch[k]
            writer.writerow(
                [f"{features.times[k]:.6f}"]
                + [f"{x:.6f}" for x in features.flux[k]]
                + ["" if math.isnan(pitch) else f"{pitch:.4f}", f"{features.voicing[k]:.4f}"]
            )


def read_audio(path: PathLike) -> Tuple[np.ndarray, int]:
    """Float samples and sample rate of a WAV file; multichannel audio is averaged to mono."""
    try:
        rate, data = wavfile.read(str(path))
    except (OSError, ValueError) as e:
        raise InputError(f"Cannot read WAV file: {e}", source=str(path))
    if data.ndim == 2:
        samples = np.mean([to_float_samples(data[:, c]) for c in range(data.shape[1])], axis=0)
    else:
        samples = to_float_samples(data)
    return samples, int(rate)


def read_melody(path: PathLike, in_hz: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Melody-extractor output: ``time,pitch[,voicing]`` rows, pitch <= 0 or empty = unvoiced."""
    times, pitch, voicing = [], [], []
    for line_no, fields in _data_lines(path):
        try:
            t = float(fields[0])
        except (IndexError, ValueError):
            if line_no == 1:
                continue  # header
            raise InputError(f"Line {line_no}: expected time and pitch", source=str(path))
        try:
            value = float(fields[1]) if len(fields) > 1 else math.nan
            v = float(fields[2]) if len(fields) > 2 else 1.0
        except ValueError as e:
            raise InputError(f"Line {line_no}: {e}", source=str(path))
        if not value > 0:
            value, v = math.nan, 0.0
        elif in_hz:
            value = 69.0 + 12.0 * math.log2(value / 440.0)
        times.append(t)
        pitch.append(value)
        voicing.append(v)
    if not times:
        raise InputError("Melody file has no frames", source=str(path))
    return np.array(times), np.array(pitch), np.array(voicing)


def read_vocal_segments(path: PathLike) -> List[Tuple[float, float]]:
    segments = []
    for line_no, fields in _data_lines(path):
        try:
            start, end = float(fields[0]), float(fields[1])
        except (IndexError, ValueError):
            raise InputError(f"Line {line_no}: expected start and end times", source=str(path))
        if end < start:
            raise InputError(f"Line {line_no}: segment ends before it starts", source=str(path))
        segments.append((start, end))
    return segments


# ---------------------------------------------------------------------------
# Annotations
# ---------------------------------------------------------------------------

def read_beats(path: PathLike) -> List[Beat]:
    beats = []
    for line_no, fields in _data_lines(path):
        try:
            time, index = float(fields[0]), int(float(fields[1]))
        except (IndexError, ValueError, OverflowError):
            raise InputError(f"Line {line_no}: expected time and beat index", source=str(path))
        if not math.isfinite(time):
            raise InputError(f"Line {line_no}: beat time must be finite", source=str(path))
        beats.append(Beat(time=time, index=index))
    if any(b.time <= a.time for a, b in zip(beats, beats[1:])):
        raise InputError("Beat times must be strictly increasing", source=str(path))
    return beats


def write_beats(path: PathLike, beats: Sequence[Beat]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{b.time:.6f}\t{b.index}\n" for b in beats), encoding="utf-8")


def read_onsets(path: PathLike) -> List[float]:
    onsets = []
    for line_no, fields in _data_lines(path):
        try:
            onsets.append(float(fields[0]))
        except ValueError:
            raise InputError(f"Line {line_no}: expected an onset time", source=str(path))
    return sorted(onsets)


def write_onsets(path: PathLike, onsets: Sequence[float]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{t:.6f}\n" for t in onsets), encoding="utf-8")


# ---------------------------------------------------------------------------
# Models and results
# ---------------------------------------------------------------------------

def read_pattern(path: PathLike) -> RhythmPattern:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError("Pattern file must hold a JSON object", source=str(path))
    return RhythmPattern.from_dict(data)


def write_pattern(path: PathLike, pattern: RhythmPattern) -> None:
    _write_json(path, pattern.to_dict())


def read_meter(path: PathLike) -> MeterConfig:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError("Meter file must hold a JSON object", source=str(path))
    return MeterConfig.from_dict(data)


def write_decode(path: PathLike, result: DecodeResult, config: Dict[str, Any]) -> None:
    _write_json(path, result.to_dict(config))


def read_decode(path: PathLike) -> Tuple[Optional[List[Beat]], List[float]]:
    """Beats and onsets of a decode output file.

    Beats are ``None`` for beat-unaware decodes (``track-notes``), so that an empty
    beat list always means a beat tracker that found no beats.
    """
    data = _read_json(path)
    try:
        beats: Optional[List[Beat]] = [
            Beat(time=float(b["time"]), index=int(b["index"])) for b in data.get("beats", [])
        ]
        onsets = sorted(float(t) for t in data.get("onsets", []))
        command = (data.get("config") or {}).get("command")
    except (AttributeError, KeyError, TypeError, ValueError, OverflowError) as e:
        raise InputError(f"Malformed decode output: {e}", source=str(path))
    if command == BEAT_UNAWARE_COMMAND:
        beats = None
    return beats, onsets


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

@dataclass
class RecordingEntry:
    """One recording of a manifest; paths are resolved against the manifest directory."""

    name: str
    features: Path
    beats: Optional[Path] = None
    onsets: Optional[Path] = None
    meter: str = ""
    result: Optional[Path] = None
    tempo: Optional[float] = None

    @classmethod
    def from_dict(cls, data: dict, base: Path) -> "RecordingEntry":
        def resolve(key: str) -> Optional[Path]:
            value = data.get(key)
            return base / str(value) if value else None

        features = resolve("features")
        if features is None:
            raise InputError(f"Manifest entry {data.get('name', '?')} has no features file")
        try:
            tempo = float(data["tempo"]) if data.get("tempo") is not None else None
        except (TypeError, ValueError):
            raise InputError(f"Manifest entry {features.stem}: tempo must be a number")
        return cls(
            name=str(data.get("name") or features.stem),
            features=features,
            beats=resolve("beats"),
            onsets=resolve("onsets"),
            meter=str(data.get("meter", "")),
            result=resolve("result"),
            tempo=tempo,
        )

    def to_dict(self, base: Path) -> dict:
        def rel(p: Optional[Path]) -> Optional[str]:
            if p is None:
                return None
            return Path(os.path.relpath(Path(p).resolve(), Path(base).resolve())).as_posix()

        data = {
            "name": self.name,
            "features": rel(self.features),
            "beats": rel(self.beats),
            "onsets": rel(self.onsets),
            "meter": self.meter,
            "result": rel(self.result),
            "tempo": self.tempo,
        }
        return {k: v for k, v in data.items() if v is not None}


def read_manifest(path: PathLike) -> List[RecordingEntry]:
    data = _read_json(path)
    items = data.get("recordings") if isinstance(data, dict) else data
    if not isinstance(items, list) or not items:
        raise InputError("Manifest lists no recordings", source=str(path))
    if not all(isinstance(item, dict) for item in items):
        raise InputError("Manifest recordings must be JSON objects", source=str(path))
    base = Path(path).parent
    return [RecordingEntry.from_dict(item, base) for item in items]


def write_manifest(
    path: PathLike, entries: Sequence[RecordingEntry], extra: Optional[Dict[str, Any]] = None
) -> None:
    base = Path(path).parent
    data: Dict[str, Any] = dict(extra or {})
    data["recordings"] = [e.to_dict(base) for e in entries]
    _write_json(path, data)


def write_score_csv(path: PathLike, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in row.items()}
            )
