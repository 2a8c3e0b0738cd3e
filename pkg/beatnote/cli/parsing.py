"""Parsing of CLI argument strings: sizes, number lists, pitch ranges and meters."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional, Tuple

from beatnote.exceptions import ConfigurationError
from beatnote.files import read_meter
from beatnote.models import MeterConfig
from beatnote.train import builtin_meter, onset_prior

_SIZE_UNITS = {
    "": 1,
    "b": 1,
    "kb": 1000,
    "mb": 1000**2,
    "gb": 1000**3,
    "tb": 1000**4,
    "kib": 1024,
    "mib": 1024**2,
    "gib": 1024**3,
    "tib": 1024**4,
}

_SIZE_RE = re.compile(r"^\s*(\d+(?:\.\d*)?|\.\d+)(?:e(\d+))?\s*([a-zA-Z]*)\s*$")


def parse_size(text: str) -> int:
    """Parse a byte count such as ``4294967296``, ``4GiB``, ``500 MB`` or ``1e9``.

    Raises:
        ConfigurationError: On an unknown unit or malformed number.
    """
    match = _SIZE_RE.match(str(text))
    if not match:
        raise ConfigurationError(f"Cannot parse size: {text!r}")
    number, exponent, unit = match.groups()
    if unit.lower() not in _SIZE_UNITS:
        raise ConfigurationError(
            f"Unknown size unit {unit!r} (use B, KB, MB, GB, TB, KiB, MiB, GiB, TiB)"
        )
    value = float(number) * (10 ** int(exponent) if exponent else 1)
    return int(value * _SIZE_UNITS[unit.lower()])


def parse_float_list(text: str) -> Tuple[float, ...]:
    """Parse ``"0.8,0.6,0.8,0.6"`` (commas and/or whitespace) into floats."""
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ConfigurationError("Expected a comma-separated list of numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"Cannot parse number list: {text!r}")


def parse_pitch_range(text: str) -> Tuple[int, int]:
    """Parse ``LOW:HIGH`` MIDI pitches (inclusive) into ``(min_pitch, pitch_count)``."""
    match = re.match(r"^\s*(\d+)\s*[:-]\s*(\d+)\s*$", text)
    if not match:
        raise ConfigurationError(f"Pitch range must look like LOW:HIGH, got {text!r}")
    low, high = int(match.group(1)), int(match.group(2))
    if high < low:
        raise ConfigurationError(f"Pitch range {text!r} is empty")
    return low, high - low + 1


def resolve_meter(value: str, prior: Optional[str] = None) -> MeterConfig:
    """A built-in meter id (``4/4``) or the path of a meter JSON file.

    An explicit ``prior`` list replaces the meter's onset prior.
    """
    path = Path(value)
    if value.endswith(".json") or path.is_file():
        meter = read_meter(path)
    else:
        meter = builtin_meter(value)
    if prior is not None:
        meter = meter.with_prior(onset_prior(meter.meter_id, parse_float_list(prior)))
    return meter
