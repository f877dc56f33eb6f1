"""2D scalar fields and the package's on-disk formats.

A field is a float64 numpy array of shape ``(height, width)``; the row-major
memory layout matches the pixel order of every format below. Images travel as
8-bit grayscale PGM (P2/P5 read, P5 write); real-valued fields (bias
estimates, level sets) use the lossless F64FIELD dump:

    F64FIELD <width> <height>\\n

followed by ``width * height`` little-endian IEEE-754 doubles, row-major.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError, InvalidArgumentError, RangeError

__all__ = [
    "new_field",
    "read_pgm",
    "write_pgm",
    "read_field_dump",
    "write_field_dump",
    "normalize_display",
]

_WHITESPACE = b" \t\r\n\x0b\x0c"


def new_field(width: int, height: int, fill: float = 0.0) -> np.ndarray:
    """Constant field of the given size."""
    if width < 1 or height < 1:
        raise InvalidArgumentError(
            f"field dimensions must be positive, got {width}x{height}"
        )
    if not np.isfinite(fill):
        raise InvalidArgumentError(f"fill value must be finite, got {fill}")
    return np.full((height, width), float(fill), dtype=np.float64)


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Next whitespace-delimited token, skipping ``#`` comments.

    Returns (token, token_start_offset, position_after_token).
    """
    n = len(data)
    while pos < n:
        ch = data[pos]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == 0x23:  # '#'
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("unexpected end of data while reading header", offset=n)
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != 0x23:
        pos += 1
    return data[start:pos], start, pos


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    tok, start, pos = _next_token(data, pos)
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(f"expected integer {what}, got {tok!r}", offset=start) from None
    return value, start, pos


def read_pgm(data: bytes) -> np.ndarray:
    """Decode a P2 (ASCII) or P5 (binary) PGM with maxval <= 255.

    Pixel values are returned as floats in [0, 255]; comment lines are
    skipped. Malformed input raises :class:`FormatError` with the byte
    offset of the problem.
    """
    magic, magic_at, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"unsupported PGM magic {magic!r}", offset=magic_at)
    width, at, pos = _int_token(data, pos, "width")
    if width < 1:
        raise FormatError(f"width must be positive, got {width}", offset=at)
    height, at, pos = _int_token(data, pos, "height")
    if height < 1:
        raise FormatError(f"height must be positive, got {height}", offset=at)
    maxval, at, pos = _int_token(data, pos, "maxval")
    if maxval < 1 or maxval > 255:
        raise FormatError(f"maxval must be in [1, 255], got {maxval}", offset=at)

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise FormatError("missing whitespace before P5 raster", offset=pos)
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise FormatError(
                f"P5 raster truncated: need {count} bytes, have {len(raster)}",
                offset=len(data),
            )
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
        if values.max(initial=0.0) > maxval:
            bad = int(np.argmax(values > maxval))
            raise FormatError(
                f"pixel value {int(values[bad])} exceeds maxval {maxval}",
                offset=pos + bad,
            )
    else:
        values = np.empty(count, dtype=np.float64)
        for i in range(count):
            v, at, pos = _int_token(data, pos, "pixel")
            if v < 0 or v > maxval:
                raise FormatError(
                    f"pixel value {v} outside [0, maxval={maxval}]", offset=at
                )
            values[i] = v
    return values.reshape(height, width)


def write_pgm(field: np.ndarray, clamp: bool = False) -> bytes:
    """Encode a field as binary P5 with maxval 255, rounding half-up.

    With ``clamp=False`` every value must already lie in [0, 255];
    ``clamp=True`` clips first.
    """
    v = np.asarray(field, dtype=np.float64)
    if not np.isfinite(v).all():
        raise InvalidArgumentError("field contains non-finite values")
    if clamp:
        v = np.clip(v, 0.0, 255.0)
    elif v.min() < 0.0 or v.max() > 255.0:
        bad = v.min() if v.min() < 0.0 else v.max()
        raise RangeError(f"value {bad} outside [0, 255] and clamp is off")
    h, w = v.shape
    raster = np.floor(v + 0.5).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + raster.tobytes()


def write_field_dump(field: np.ndarray) -> bytes:
    """Lossless little-endian float64 dump with an ASCII header line."""
    v = np.ascontiguousarray(field, dtype=np.float64)
    if not np.isfinite(v).all():
        raise InvalidArgumentError("field contains non-finite values")
    h, w = v.shape
    return f"F64FIELD {w} {h}\n".encode("ascii") + v.astype("<f8").tobytes()


def read_field_dump(data: bytes) -> np.ndarray:
    """Inverse of :func:`write_field_dump`; round trip is bit-exact."""
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing F64FIELD header line", offset=len(data))
    parts = data[:nl].split()
    if len(parts) != 3 or parts[0] != b"F64FIELD":
        raise FormatError(f"bad F64FIELD header {data[:nl]!r}", offset=0)
    try:
        w, h = int(parts[1]), int(parts[2])
    except ValueError:
        raise FormatError(f"bad F64FIELD dimensions {data[:nl]!r}", offset=0) from None
    if w < 1 or h < 1:
        raise FormatError(f"dimensions must be positive, got {w}x{h}", offset=0)
    payload = data[nl + 1 :]
    need = w * h * 8
    if len(payload) < need:
        raise FormatError(
            f"payload truncated: need {need} bytes, have {len(payload)}",
            offset=len(data),
        )
    if len(payload) > need:
        raise FormatError("trailing bytes after payload", offset=nl + 1 + need)
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(h, w)
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise FormatError(f"non-finite value at pixel index {bad}", offset=nl + 1 + bad * 8)
    return values


def normalize_display(field: np.ndarray) -> np.ndarray:
    """Affine min-max map onto [0, 255]; a constant field maps to all-128."""
    v = np.asarray(field, dtype=np.float64)
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        return np.full_like(v, 128.0)
    return (v - lo) * (255.0 / (hi - lo))
