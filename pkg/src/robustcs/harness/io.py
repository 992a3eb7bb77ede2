"""Binary PGM images, CSV tables and flat ``key = value`` files."""

import csv
import hashlib
import re
from pathlib import Path

import numpy as np

__all__ = [
    "quantize",
    "write_pgm",
    "read_pgm",
    "write_csv",
    "read_csv",
    "parse_keyvalue",
    "format_keyvalue",
    "read_keyvalue",
    "write_keyvalue",
    "sha256_file",
]


def quantize(frame) -> np.ndarray:
    """Clip to [0, 1] and map to 8-bit levels, rounding halves up."""
    a = np.clip(np.asarray(frame, dtype=float), 0.0, 1.0)
    return np.floor(a * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path, frame) -> None:
    """Write a [0, 1] frame as binary PGM (P5, maxval 255)."""
    q = quantize(frame)
    if q.ndim != 2:
        raise ValueError("frame must be 2-D")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(q.tobytes())


_HEADER_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _tokens(data):
    # header tokens with '#' comments stripped; yields (token, end offset)
    pos = 0
    while True:
        m = _HEADER_TOKEN.match(data, pos)
        if m is None:
            raise ValueError("truncated PGM header")
        yield m.group(1), m.end()
        pos = m.end()


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM file; returns the raw 8-bit levels as ``uint8``."""
    data = Path(path).read_bytes()
    toks = _tokens(data)
    magic, _ = next(toks)
    if magic != b"P5":
        raise ValueError(f"not a binary PGM (magic {magic!r})")
    w, _ = next(toks)
    h, _ = next(toks)
    maxval, end = next(toks)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError("only maxval 255 is supported")
    raster = data[end + 1:end + 1 + w * h]
    if len(raster) != w * h:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)


def read_csv(path):
    """Rows of a CSV with a header, as a list of dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def parse_keyvalue(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped.

    Repeated keys collect into a list in order of appearance.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            prev = out[key]
            out[key] = (prev if isinstance(prev, list) else [prev]) + [value]
        else:
            out[key] = value
    return out


def format_keyvalue(items) -> str:
    lines = []
    for key, value in items:
        values = value if isinstance(value, (list, tuple)) else [value]
        lines.extend(f"{key} = {v}" for v in values)
    return "\n".join(lines) + "\n"


def read_keyvalue(path) -> dict:
    return parse_keyvalue(Path(path).read_text())


def write_keyvalue(path, items) -> None:
    Path(path).write_text(format_keyvalue(items))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
