"""Binary checkpoint format for named float64 tensors.

Layout: magic "LESACKPT1", then per tensor: name length (u16 LE), UTF-8
name, rank (u8), dims (u32 LE each), payload as f64 LE row-major. A zero
name length ends the tensor stream; an optional UTF-8 JSON document may
follow it (used by model checkpoints for their config trailer). Round trips
are byte-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

__all__ = ["MAGIC", "save_tensors", "load_tensors"]

MAGIC = b"LESACKPT1"


def _write_tensor(out: bytearray, name: str, arr: np.ndarray) -> None:
    encoded = name.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise DataError(f"tensor name too long: {name!r}")
    out += struct.pack("<H", len(encoded))
    out += encoded
    out += struct.pack("<B", arr.ndim)
    for d in arr.shape:
        out += struct.pack("<I", d)
    out += np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], config: dict | None = None) -> None:
    out = bytearray(MAGIC)
    for name in sorted(tensors):
        _write_tensor(out, name, tensors[name])
    if config is not None:
        out += struct.pack("<H", 0)
        out += json.dumps(config, sort_keys=True).encode("utf-8")
    Path(path).write_bytes(bytes(out))


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict | None]:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise DataError(f"{path}: bad checkpoint magic")
    pos = len(MAGIC)
    tensors: dict[str, np.ndarray] = {}
    config = None

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise DataError(f"{path}: truncated checkpoint")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    while pos < len(raw):
        (name_len,) = struct.unpack("<H", take(2))
        if name_len == 0:
            trailer = raw[pos:]
            if trailer:
                try:
                    config = json.loads(trailer.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    raise DataError(f"{path}: malformed config trailer") from exc
            break
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank)) if rank else ()
        count = int(np.prod(dims)) if dims else 1
        payload = take(8 * count)
        arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
        tensors[name] = arr
    return tensors, config
