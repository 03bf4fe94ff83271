"""Utility functions for digit-spectra."""

from __future__ import annotations

import sys
from fractions import Fraction
from typing import Any, Union

# Supported value types for the config echo
SupportedValue = Union[bool, int, float, str, None]


class InconsistencyError(RuntimeError):
    """A proven mathematical guarantee failed to hold; signals a bug."""


def _use_color() -> bool:
    """Check if stderr supports ANSI color codes."""
    return hasattr(sys.stderr, "isatty") and sys.stderr.isatty()


def format_error(headline: str, detail: str = "") -> str:
    """Build a formatted ``[digit-spectra]`` message.

    Adds ANSI bold+red when stderr is a TTY.
    """
    if _use_color():
        head = f"\033[1;31m[digit-spectra]\033[0m \033[1m{headline}\033[0m"
    else:
        head = f"[digit-spectra] {headline}"
    if detail:
        return f"{head}\n{detail}"
    return head


def parse_rational(text: str) -> Fraction | float:
    """Parse ``p/q`` or an integer as an exact Fraction, a decimal as a float.

    Decimals keep float precision; use ``p/q`` for exact values.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty numeric value")
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        if any(ch in text for ch in ".eE"):
            return float(text)
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"invalid rational or decimal value {text!r}: {e}") from None


def serialize_value(value: Any) -> str:
    """Serialize a value for the config echo.

    Floats use ``repr`` so the echo round-trips bit-identically.
    """
    if value is None:
        return ""
    elif isinstance(value, bool):
        return "true" if value else "false"
    elif isinstance(value, Fraction):
        return str(value)
    elif isinstance(value, float):
        return repr(value)
    elif isinstance(value, complex):
        return f"{value.real!r}{value.imag:+}j"
    elif isinstance(value, (set, frozenset)):
        return ",".join(sorted(str(v) for v in value))
    else:
        return str(value)


def flatten_dict(
    data: dict[str, Any],
    parent_key: str = "",
    sep: str = "/",
) -> dict[str, str]:
    """Flatten a nested dictionary into path-based keys with serialized values.

    Lists and tuples of scalars are joined with commas; lists containing
    dicts are expanded to indexed keys.
    """
    items: list[tuple[str, str]] = []

    for key, value in data.items():
        new_key = f"{parent_key}{sep}{key}" if parent_key else key

        if isinstance(value, dict):
            items.extend(flatten_dict(value, new_key, sep).items())
        elif isinstance(value, (list, tuple)):
            if any(isinstance(item, dict) for item in value):
                for i, item in enumerate(value):
                    item_key = f"{new_key}{sep}{i}"
                    if isinstance(item, dict):
                        items.extend(flatten_dict(item, item_key, sep).items())
                    else:
                        items.append((item_key, serialize_value(item)))
            else:
                items.append((new_key, ",".join(serialize_value(v) for v in value)))
        else:
            items.append((new_key, serialize_value(value)))

    return dict(items)
