"""Deterministic binary container: JSON header + raw little-endian array blobs.

Layout: 8-byte magic, u32 format version, u64 header length, UTF-8 JSON
header, concatenated array bytes. Identical content always produces identical
bytes (keys sorted, no timestamps), so save -> load -> save round-trips
bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from typing import Any

import numpy as np

from ..errors import CheckpointVersionError, LoadError

MAGIC = b"TDCONT01"
FORMAT_VERSION = 1
_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def write_container(path: str, meta: dict[str, Any],
                    arrays: dict[str, np.ndarray]) -> None:
    """Write atomically (temp file + rename); ``meta`` must be JSON-serializable."""
    index = []
    blobs = []
    offset = 0
    for key in sorted(arrays):
        arr = np.ascontiguousarray(arrays[key])
        if arr.dtype.kind == "f":
            arr = arr.astype("<f8", copy=False)
        elif arr.dtype.kind in "iu":
            arr = arr.astype("<i8", copy=False)
        else:
            raise LoadError(f"unsupported array dtype {arr.dtype} for {key!r}")
        raw = arr.tobytes()
        index.append({"key": key, "shape": list(arr.shape),
                      "dtype": arr.dtype.str, "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    header = {
        "meta": meta,
        "arrays": index,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
    os.replace(tmp, path)


def read_container(path: str) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Load (meta, arrays); any structural damage raises LoadError with no partial state."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LoadError(f"{path}: {exc.strerror or exc}") from exc
    if len(data) < len(MAGIC) + 12 or data[:len(MAGIC)] != MAGIC:
        raise LoadError(f"{path}: not a taskdial container")
    version, header_len = struct.unpack_from("<IQ", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: container version {version} is incompatible "
            f"(this build reads version {FORMAT_VERSION})")
    start = len(MAGIC) + 12
    try:
        header = json.loads(data[start:start + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise LoadError(f"{path}: corrupt header ({exc})") from exc
    blob = data[start + header_len:]
    if hashlib.sha256(blob).hexdigest() != header.get("blob_sha256"):
        raise LoadError(f"{path}: array blob checksum mismatch (corrupt or truncated)")
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise LoadError(f"{path}: unknown dtype {entry['dtype']!r}")
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        arr = np.frombuffer(blob[lo:hi], dtype=dtype).reshape(entry["shape"]).copy()
        arrays[entry["key"]] = arr
    return header["meta"], arrays
