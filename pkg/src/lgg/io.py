"""File formats used by the command-line front end.

Matrix files are either binary (magic ``LGG1``, u32 rows, u32 cols, then
float64 values row-major, all little-endian) or headerless numeric CSV. The
two are told apart by the leading bytes.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput

MAGIC = b"LGG1"
_HEADER = struct.Struct("<4sII")


class MatrixFormatError(InvalidInput):
    """Corrupt or unreadable matrix data at a known byte offset."""

    def __init__(self, message: str, offset: int, path: str | None = None):
        self.offset = offset
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message} (byte offset {offset})")


def encode_matrix(matrix) -> bytes:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise InvalidInput(f"can only store 2-D matrices, got shape {m.shape}")
    rows, cols = m.shape
    if rows >= 2**32 or cols >= 2**32:
        raise InvalidInput("matrix dimensions exceed the u32 header fields")
    return _HEADER.pack(MAGIC, rows, cols) + np.ascontiguousarray(m, dtype="<f8").tobytes()


def decode_matrix(data: bytes, path: str | None = None) -> np.ndarray:
    if len(data) < 4 or data[:4] != MAGIC:
        bad = next((i for i, (a, b) in enumerate(zip(data[:4], MAGIC)) if a != b), min(len(data), 4))
        raise MatrixFormatError("bad magic, expected 'LGG1'", bad, path)
    if len(data) < _HEADER.size:
        raise MatrixFormatError("truncated header", len(data), path)
    _, rows, cols = _HEADER.unpack_from(data)
    expected = _HEADER.size + rows * cols * 8
    if len(data) != expected:
        raise MatrixFormatError(
            f"payload size mismatch: header announces {rows}x{cols}, file has {len(data)} bytes, expected {expected}",
            min(len(data), expected), path)
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def parse_csv_matrix(data: bytes, path: str | None = None) -> np.ndarray:
    """Headerless comma-separated numeric rows of equal length."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MatrixFormatError("not UTF-8 text and not an LGG1 matrix", exc.start, path) from None
    rows = []
    offset = 0
    width = None
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        stripped = line.strip()
        if stripped:
            try:
                values = [float(tok) for tok in stripped.split(",")]
            except ValueError:
                raise MatrixFormatError(f"non-numeric value on line {lineno}",
                                        offset, path) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise MatrixFormatError(f"line {lineno} has {len(values)} columns, expected {width}",
                                        offset, path)
            rows.append(values)
        offset += len(line.encode("utf-8"))
    if not rows:
        raise MatrixFormatError("empty matrix file", 0, path)
    return np.array(rows, dtype=np.float64)


def read_matrix(path) -> np.ndarray:
    """Read an LGG1 or CSV matrix; the format is detected from the first bytes."""
    p = str(path)
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read {p}: {exc.strerror}") from None
    # a CSV never starts with 'L'; anything that does is judged as binary
    if data[:1] == MAGIC[:1]:
        m = decode_matrix(data, p)
    else:
        m = parse_csv_matrix(data, p)
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{p}: matrix contains non-finite values")
    return m


def write_matrix(path, matrix) -> None:
    Path(path).write_bytes(encode_matrix(matrix))


def read_int_column(path, columns: int = 1) -> np.ndarray:
    """Integer CSV with ``columns`` fields per line."""
    m = read_matrix(path)
    if m.shape[1] != columns:
        raise InvalidInput(f"{path}: expected {columns} column(s), found {m.shape[1]}")
    if np.any(m != np.round(m)):
        raise InvalidInput(f"{path}: expected integer values")
    return m.astype(np.int64)


def read_labels(path) -> np.ndarray:
    return read_int_column(path, 1)[:, 0]


def read_partial_labels(path) -> tuple[np.ndarray, np.ndarray]:
    """``index,class`` rows; returns ``(indices, classes)``."""
    m = read_int_column(path, 2)
    return m[:, 0], m[:, 1]


def read_pairs(path) -> list[tuple[int, int]]:
    m = read_int_column(path, 2)
    return [(int(i), int(j)) for i, j in m]


def format_edges(edges) -> str:
    return "".join(f"{i},{j},{w!r}\n" for i, j, w in edges)


def read_edges(path) -> tuple[int, list[tuple[int, int, float]]]:
    """Edge CSV ``i,j,w``; the vertex count is one more than the largest index."""
    m = read_matrix(path)
    if m.shape[1] != 3:
        raise InvalidInput(f"{path}: edge list needs 3 columns")
    ij = m[:, :2]
    if np.any(ij != np.round(ij)) or np.any(ij < 0):
        raise InvalidInput(f"{path}: edge endpoints must be nonnegative integers")
    n = int(ij.max()) + 1
    return n, [(int(i), int(j), float(w)) for i, j, w in m]


def format_pseudo_labels(pseudo_labels, omega) -> str:
    return "".join(f"{i},{int(c)},{float(w)!r}\n" for i, (c, w) in enumerate(zip(pseudo_labels, omega)))


# ---------------------------------------------------------------------------
# JSON reports
# ---------------------------------------------------------------------------

def _encode(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return "null"
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(((str(k), v) for k, v in value.items()), key=lambda kv: kv[0])
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__}")


def dumps(value) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _encode(value)


@dataclass
class RunReport:
    command: str
    parameters: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    version: str = ""

    def to_json(self) -> str:
        return dumps({
            "command": self.command,
            "parameters": self.parameters,
            "metrics": self.metrics,
            "warnings": list(self.warnings),
            "version": self.version,
        })
