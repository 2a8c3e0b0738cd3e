"""Settings resolution for the beatnote CLI.

Priority for every setting:
  1. command-line flag
  2. environment variable (``BEATNOTE_MEMORY_CAP``, ``BEATNOTE_MAX_STATES``, ...)
  3. ~/.config/beatnote/config.json (or the file named by ``BEATNOTE_CONFIG``)
  4. built-in default
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from beatnote.cli.parsing import parse_size
from beatnote.decode import DEFAULT_MEMORY_CAP, DecodeSettings
from beatnote.exceptions import ConfigurationError
from beatnote.statespace import DEFAULT_MAX_STATES

CONFIG_DIR = Path.home() / ".config" / "beatnote"
CONFIG_FILE = CONFIG_DIR / "config.json"
CONFIG_ENV = "BEATNOTE_CONFIG"


@dataclass(frozen=True)
class Setting:
    key: str
    env: str
    parse: Callable[[str], Any]
    default: Any
    help: str


def _optional_path(value: str) -> Optional[str]:
    return value or None


SETTINGS: Dict[str, Setting] = {
    s.key: s
    for s in (
        Setting(
            "memory_cap",
            "BEATNOTE_MEMORY_CAP",
            parse_size,
            DEFAULT_MEMORY_CAP,
            "Backpointer memory cap for a decode (bytes, or e.g. 4GiB).",
        ),
        Setting(
            "max_states",
            "BEATNOTE_MAX_STATES",
            int,
            DEFAULT_MAX_STATES,
            "Largest joint state space a model may have.",
        ),
        Setting(
            "spill_dir",
            "BEATNOTE_SPILL_DIR",
            _optional_path,
            None,
            "Directory for on-disk backpointers when spilling.",
        ),
    )
}


def config_path() -> Path:
    override = os.environ.get(CONFIG_ENV)
    return Path(override) if override else CONFIG_FILE


def load_config() -> Dict[str, Any]:
    """Load the user config file; a missing or unreadable file is an empty config."""
    path = config_path()
    if path.exists():
        try:
            data = json.loads(path.read_text())
            return data if isinstance(data, dict) else {}
        except (ValueError, OSError):
            pass
    return {}


def save_setting(key: str, value: str) -> Any:
    """Validate and persist one setting; returns the parsed value."""
    if key not in SETTINGS:
        raise ConfigurationError(f"Unknown setting '{key}' (known: {', '.join(SETTINGS)})")
    parsed = _parse(SETTINGS[key], value, "config value")
    path = config_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    data = load_config()
    data[key] = parsed
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    # Restrict permissions to owner only
    path.chmod(0o600)
    return parsed


def _parse(setting: Setting, value: Any, origin: str) -> Any:
    if value is None or not isinstance(value, str):
        return value
    try:
        return setting.parse(value)
    except ValueError as e:
        raise ConfigurationError(f"Invalid {setting.key} from {origin}: {e}")


def resolve_setting(key: str, flag_value: Any = None) -> Tuple[Any, str]:
    """Value of a setting and where it came from (flag, env, config or default)."""
    setting = SETTINGS[key]
    if flag_value is not None:
        return _parse(setting, flag_value, "command line"), "flag"
    if os.environ.get(setting.env):
        return _parse(setting, os.environ[setting.env], setting.env), "env"
    stored = load_config()
    if stored.get(key) is not None:
        return _parse(setting, stored[key], str(config_path())), "config"
    return setting.default, "default"


def resolve_settings(flags: Optional[Dict[str, Any]] = None) -> Dict[str, Tuple[Any, str]]:
    flags = flags or {}
    return {key: resolve_setting(key, flags.get(key)) for key in SETTINGS}


def decode_settings(
    ctx: click.Context, spill: bool = False, beam: Optional[float] = None
) -> DecodeSettings:
    """DecodeSettings from the resolved settings stored on the root context."""
    settings = ctx.obj["settings"]
    return DecodeSettings(
        memory_cap=int(settings["memory_cap"][0]),
        spill=spill,
        spill_dir=settings["spill_dir"][0],
        beam=beam,
    )


def max_states(ctx: click.Context) -> int:
    return int(ctx.obj["settings"]["max_states"][0])
