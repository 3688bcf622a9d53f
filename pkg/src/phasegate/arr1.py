"""ARR1: a minimal binary array container used by the CLI.

Layout: the 4 magic bytes ``ARR1``, one UTF-8 JSON header line terminated by
``\\n``, then the raw payload. The header carries ``dtype`` (``f64``, ``c128``
or ``u8``), ``shape`` and ``order`` (always ``row-major``). Payloads are
little-endian; ``c128`` stores interleaved re/im float64 pairs.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["ArrFormatError", "write_arr1", "read_arr1"]

MAGIC = b"ARR1"

_DTYPES = {
    "f64": np.dtype("<f8"),
    "c128": np.dtype("<c16"),
    "u8": np.dtype("u1"),
}


class ArrFormatError(ValueError):
    """Malformed ARR1 stream (bad magic, header, or truncated payload)."""


def _dtype_tag(a):
    if a.dtype == np.bool_ or a.dtype == np.uint8:
        return "u8"
    if np.issubdtype(a.dtype, np.complexfloating):
        return "c128"
    if np.issubdtype(a.dtype, np.floating) or np.issubdtype(a.dtype, np.integer):
        return "f64"
    raise ValueError(f"unsupported dtype {a.dtype}")


def write_arr1(path, array):
    """Serialize an array to ARR1. Floats widen to f64, complex to c128."""
    a = np.asarray(array)
    tag = _dtype_tag(a)
    data = np.ascontiguousarray(a.astype(_DTYPES[tag], copy=False))
    header = {"dtype": tag, "shape": list(a.shape), "order": "row-major"}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(data.tobytes())


def read_arr1(path):
    """Read an ARR1 file back to an ndarray (f8, c16 or u1)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ArrFormatError(f"{path}: bad magic {magic!r}")
        header_bytes = bytearray()
        while True:
            ch = fh.read(1)
            if not ch:
                raise ArrFormatError(f"{path}: unterminated header")
            if ch == b"\n":
                break
            header_bytes += ch
            if len(header_bytes) > 65536:
                raise ArrFormatError(f"{path}: header too long")
        try:
            header = json.loads(header_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ArrFormatError(f"{path}: bad header ({exc})") from exc
        tag = header.get("dtype")
        shape = header.get("shape")
        if tag not in _DTYPES or not isinstance(shape, list):
            raise ArrFormatError(f"{path}: bad header fields {header!r}")
        if header.get("order") != "row-major":
            raise ArrFormatError(f"{path}: unsupported order {header.get('order')!r}")
        dtype = _DTYPES[tag]
        count = int(np.prod([int(s) for s in shape])) if shape else 1
        payload = fh.read()
        expected = count * dtype.itemsize
        if len(payload) != expected:
            raise ArrFormatError(
                f"{path}: payload is {len(payload)} bytes, expected {expected}"
            )
        return np.frombuffer(payload, dtype=dtype).reshape([int(s) for s in shape]).copy()
