"""JSON-lines trace stream: schema-versioned header, deterministic body.

One record per line.  The header line is the only place a wall-clock
timestamp appears, so the body of two traces from identical runs compares
byte-for-byte.  Records are serialized with sorted keys and fixed
separators for the same reason.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

SCHEMA = "gapnav-trace/1"


def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


class TraceWriter:
    """Appends records to a JSON-lines trace file."""

    def __init__(self, path, config: dict | None = None,
                 created: str | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w")
        header = {
            "type": "header",
            "schema": SCHEMA,
            "created": created or datetime.now(timezone.utc).isoformat(),
            "config": config or {},
        }
        self._fh.write(_dumps(header) + "\n")

    def write(self, record: dict) -> None:
        self._fh.write(_dumps(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path) -> tuple[dict, list[dict]]:
    """Returns (header, body records); validates the schema tag."""
    header = None
    records = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if header is None:
                if rec.get("type") != "header" or rec.get("schema") != SCHEMA:
                    raise ValueError(f"{path}:1: missing or unknown trace header")
                header = rec
            else:
                records.append(rec)
    if header is None:
        raise ValueError(f"{path}: empty trace")
    return header, records


def trace_body_bytes(path) -> bytes:
    """Everything after the header line, for byte-level determinism checks."""
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    return data[nl + 1:]
