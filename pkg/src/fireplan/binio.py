"""Deterministic binary container for cached arrays.

Layout: magic, format version, a canonical-JSON header, then named numpy
arrays as raw C-order bytes. Writing the same payload twice produces
byte-identical files (no timestamps, no compression nondeterminism).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

MAGIC = b"FPLN"
FORMAT_VERSION = 1


class CacheFormatError(Exception):
    """Raised when a cache file is missing, truncated or incompatible."""


def write_container(path: Path | str, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> None:
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        f.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name])
            name_b = name.encode("utf-8")
            dtype_b = arr.dtype.str.encode("ascii")
            f.write(struct.pack("<H", len(name_b)))
            f.write(name_b)
            f.write(struct.pack("<H", len(dtype_b)))
            f.write(dtype_b)
            f.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<Q", dim))
            data = arr.tobytes()
            f.write(struct.pack("<Q", len(data)))
            f.write(data)


def read_container(path: Path | str) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CacheFormatError(f"cache file not found: {path}")
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise CacheFormatError(f"{path}: not a fireplan cache file")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise CacheFormatError(f"{path}: unsupported cache version {version}")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        (count,) = struct.unpack("<I", f.read(4))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", f.read(2))
            name = f.read(nlen).decode("utf-8")
            (dlen,) = struct.unpack("<H", f.read(2))
            dtype = np.dtype(f.read(dlen).decode("ascii"))
            (ndim,) = struct.unpack("<B", f.read(1))
            shape = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(ndim))
            (nbytes,) = struct.unpack("<Q", f.read(8))
            buf = f.read(nbytes)
            if len(buf) != nbytes:
                raise CacheFormatError(f"{path}: truncated array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return header, arrays
