"""Self-describing CSV and JSON outputs.

A CSV output starts with a ``#``-prefixed header that records the tool
version, the command line and the fully resolved configuration, so any
file can be replayed with ``read_header``. Values are written with
``serialize_value``: floats use repr and round-trip bit-identically.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any

from digit_spectra import __version__
from digit_spectra.utils import flatten_dict, format_error, serialize_value

logger = logging.getLogger("digit_spectra.report")

FORMATS = ("csv", "json")


@dataclass
class Report:
    """Rows of one experiment plus everything needed to reproduce them."""

    command: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    argv: list[str] = field(default_factory=list)
    # JSON-only reports (the contraction certificate) replace the row layout
    document: dict[str, Any] | None = None

    def header_lines(self) -> list[str]:
        lines = [
            f"digit-spectra {__version__}",
            f"command: {self.command}",
            f"argv: {shlex.join(self.argv)}",
        ]
        for key, value in flatten_dict({"config": self.config}).items():
            lines.append(f"{key}: {value}")
        for key, value in flatten_dict({"summary": self.summary}).items():
            lines.append(f"{key}: {value}")
        return lines

    def to_csv(self) -> str:
        buffer = io.StringIO()
        for line in self.header_lines():
            buffer.write(f"# {line}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        if self.columns:
            writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([serialize_value(v) for v in row])
        return buffer.getvalue()

    def to_json(self) -> str:
        body: dict[str, Any] = {
            "tool": "digit-spectra",
            "version": __version__,
            "command": self.command,
            "argv": self.argv,
            "config": flatten_dict(self.config),
        }
        if self.document is not None:
            body.update(self.document)
        else:
            body["summary"] = flatten_dict(self.summary)
            body["columns"] = self.columns
            body["rows"] = [
                {c: serialize_value(v) for c, v in zip(self.columns, row)} for row in self.rows
            ]
        return json.dumps(body, indent=2, default=serialize_value) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown output format {fmt!r} (expected csv or json)")


def _write(text: str, stream: IO[str]) -> None:
    stream.write(text)
    stream.flush()


def emit(report: Report, fmt: str = "csv", path: str | None = None) -> int:
    """Write ``report`` to ``path`` (stdout for None or ``-``); returns an exit code."""
    try:
        text = report.render(fmt)
    except ValueError as e:
        print(format_error("Cannot render output", str(e)), file=sys.stderr)
        return 1
    if path in (None, "-"):
        _write(text, sys.stdout)
        return 0
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        print(format_error(f"Cannot write {path}", str(e)), file=sys.stderr)
        return 1
    logger.info("wrote %d rows to %s", len(report.rows), path)
    return 0


def read_header(path: str | Path) -> dict[str, Any]:
    """Parse the ``#`` header of an emitted CSV.

    Returns a dict with ``version``, ``command``, ``argv`` (as a list),
    ``config`` and ``summary`` (flattened string values).
    """
    header: dict[str, Any] = {"config": {}, "summary": {}}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if text.startswith("digit-spectra "):
                header["version"] = text.split(" ", 1)[1]
                continue
            key, _, value = text.partition(": ")
            if key == "argv":
                header["argv"] = shlex.split(value)
            elif key == "command":
                header["command"] = value
            elif key.startswith("config/"):
                header["config"][key[len("config/"):]] = value
            elif key.startswith("summary/"):
                header["summary"][key[len("summary/"):]] = value
    if "argv" not in header:
        raise ValueError(f"{path} has no digit-spectra header")
    return header


def replay_argv(header: dict[str, Any], output: str) -> list[str]:
    """The recorded command line, redirected to ``output``."""
    argv: list[str] = []
    skip = False
    for arg in header["argv"]:
        if skip:
            skip = False
            continue
        if arg in ("-o", "--output"):
            skip = True
            continue
        if arg.startswith("--output="):
            continue
        argv.append(arg)
    return argv + ["--output", output]


def read_rows(path: str | Path) -> list[list[str]]:
    """Data rows of an emitted CSV, header and column names excluded."""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[1:]
