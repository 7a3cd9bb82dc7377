"""
CSV and JSON report writers with a provenance header.

CSV files start with ``# key: value`` comment lines (tool version, command
line, input hashes, every option, timestamp) followed by a header row and
data rows. Floats are written with 17 significant digits, so two runs on the
same inputs produce identical files apart from the timestamp line.
"""

import csv
import hashlib
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from . import __version__

TIMESTAMP_KEY = "timestamp"


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def provenance(
    command: str,
    argv: Sequence[str] = (),
    options: Optional[Dict[str, Any]] = None,
    inputs: Iterable[Union[str, Path]] = (),
    timestamp: bool = True,
) -> Dict[str, Any]:
    """
    Provenance block for a report.

    Example:
        >>> info = provenance("cp-table", ["cp-table", "--n", "1"], {"n": [1]}, timestamp=False)
        >>> info["tool"]
        'smoothcheck 1.0.0'
    """
    info: Dict[str, Any] = {
        "tool": f"smoothcheck {__version__}",
        "command": command,
        "argv": " ".join(str(a) for a in argv),
        "inputs": {str(p): file_sha256(p) for p in inputs},
        "options": dict(sorted((options or {}).items())),
    }
    if timestamp:
        info[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return info


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def _header_lines(info: Dict[str, Any]) -> List[str]:
    lines = [f"# tool: {info['tool']}", f"# command: {info['command']}"]
    if info.get("argv"):
        lines.append(f"# argv: {info['argv']}")
    for path, digest in info.get("inputs", {}).items():
        lines.append(f"# input {path}: sha256 {digest}")
    for key, value in info.get("options", {}).items():
        lines.append(f"# option {key}: {format_value(value)}")
    if TIMESTAMP_KEY in info:
        lines.append(f"# {TIMESTAMP_KEY}: {info[TIMESTAMP_KEY]}")
    return lines


def csv_text(
    header: Sequence[str], rows: Iterable[Sequence[Any]], info: Optional[Dict[str, Any]] = None
) -> str:
    buffer = io.StringIO()
    if info is not None:
        buffer.write("\n".join(_header_lines(info)) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(
    target: Union[str, Path, TextIO],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    info: Optional[Dict[str, Any]] = None,
) -> None:
    """Write a CSV report to a path or an open text stream."""
    text = csv_text(header, rows, info)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text, newline="")


def read_csv(path: Union[str, Path]) -> Tuple[Dict[str, str], List[str], List[List[str]]]:
    """
    Read a report written by write_csv.

    Returns:
        Tuple (metadata, header, rows); metadata maps the comment keys to
        their raw text
    """
    metadata: Dict[str, str] = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
        elif line:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return metadata, header, [row for row in reader]


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "tolist"):
        return _clean(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value


def json_text(data: Dict[str, Any], info: Optional[Dict[str, Any]] = None) -> str:
    payload = dict(data)
    if info is not None:
        payload["provenance"] = info
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def write_json(
    target: Union[str, Path, TextIO],
    data: Dict[str, Any],
    info: Optional[Dict[str, Any]] = None,
) -> None:
    """Write a JSON report (sorted keys, provenance under "provenance")."""
    text = json_text(data, info)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)
