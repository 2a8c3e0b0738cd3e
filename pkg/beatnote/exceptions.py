"""Exception classes for beatnote."""

from __future__ import annotations

from typing import Optional

EXIT_INPUT_ERROR = 2
EXIT_RESOURCE_REFUSAL = 3


class BeatNoteError(Exception):
    """Base exception for all beatnote errors."""

    exit_code = 1

    def __init__(
        self,
        message: str = "An error occurred in beatnote",
        source: Optional[str] = None,
    ):
        self.message = message
        self.source = source
        super().__init__(self.message)

    def __str__(self) -> str:
        parts = [self.message]
        if self.source:
            parts.append(f"({self.source})")
        return " ".join(parts)


class InputError(BeatNoteError):
    """Raised when an input file or array cannot be used as given."""

    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message: str = "Invalid input", **kwargs):
        super().__init__(message=message, **kwargs)


class ConfigurationError(InputError):
    """Raised when model parameters are out of range or inconsistent."""

    def __init__(self, message: str = "Invalid configuration", **kwargs):
        super().__init__(message=message, **kwargs)


class ModelError(BeatNoteError):
    """Raised when a model cannot be constructed or trained consistently."""

    def __init__(self, message: str = "Model construction failed", **kwargs):
        super().__init__(message=message, **kwargs)


class ResourceRefusal(BeatNoteError):
    """Raised when a state space or decode would exceed the configured budget."""

    exit_code = EXIT_RESOURCE_REFUSAL

    def __init__(
        self,
        message: str = "Resource budget exceeded",
        required: Optional[int] = None,
        cap: Optional[int] = None,
        unit: str = "bytes",
        **kwargs,
    ):
        self.required = required
        self.cap = cap
        self.unit = unit
        super().__init__(message=message, **kwargs)

    def __str__(self) -> str:
        text = super().__str__()
        if self.required is not None and self.cap is not None:
            required = human_size(self.required, self.unit)
            text += f": requires {required}, cap is {human_size(self.cap, self.unit)}"
        return text


def human_size(value: int, unit: str) -> str:
    if unit != "bytes":
        return f"{value:,} {unit}"
    if value < 1000:
        return f"{value} B"
    size = float(value)
    suffix = "B"
    for suffix in ("KB", "MB", "GB", "TB"):
        size /= 1000
        if size < 1000:
            break
    return f"{size:.1f} {suffix}"
