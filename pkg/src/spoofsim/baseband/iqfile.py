"""Headerless interleaved I/Q sample files (signed 8-bit or 16-bit little-endian)."""
from __future__ import annotations

import os

import numpy as np

from ..errors import IoFailure

FORMATS = {8: np.dtype("i1"), 16: np.dtype("<i2"), "sc8": np.dtype("i1"), "sc16": np.dtype("<i2")}


def _dtype(fmt) -> np.dtype:
    try:
        return FORMATS[fmt]
    except KeyError:
        raise ValueError(f"unsupported I/Q format {fmt!r}; use 8/16 or 'sc8'/'sc16'") from None


def _chunks(stream):
    if isinstance(stream, np.ndarray):
        yield stream
    else:
        yield from stream


def write_iq(stream, path, fmt=8) -> int:
    """Write (n, 2) integer I/Q blocks (array or iterable of arrays); returns bytes written."""
    dt = _dtype(fmt)
    lim = np.iinfo(dt)
    written = 0
    try:
        with open(path, "wb") as fh:
            for block in _chunks(stream):
                block = np.asarray(block)
                if block.ndim != 2 or block.shape[1] != 2:
                    raise ValueError("I/Q blocks must have shape (n, 2)")
                if block.size and (block.min() < lim.min or block.max() > lim.max):
                    raise ValueError(f"sample outside the {dt} range")
                data = np.ascontiguousarray(block, dtype=dt).tobytes()
                fh.write(data)
                written += len(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc
    return written


def read_iq(path, fmt=8, count: int = -1, offset: int = 0) -> np.ndarray:
    """Read complex samples; ``count``/``offset`` are in complex samples."""
    dt = _dtype(fmt)
    try:
        raw = np.fromfile(path, dtype=dt, count=2 * count if count >= 0 else -1,
                          offset=2 * offset * dt.itemsize)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc
    if raw.size % 2:
        raw = raw[:-1]
    return to_complex(raw.reshape(-1, 2))


def to_complex(iq: np.ndarray) -> np.ndarray:
    out = np.empty(iq.shape[0], dtype=np.complex64)
    out.real = iq[:, 0]
    out.imag = iq[:, 1]
    return out


def sample_count(path, fmt=8) -> int:
    return os.path.getsize(path) // (2 * _dtype(fmt).itemsize)
