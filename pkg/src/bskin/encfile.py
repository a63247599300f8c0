"""Binary format for encoded point sets.

Layout (little-endian): magic "BSKN", version u32, count u64, then `count`
packed records (point_index u64, chain u32, bone u32, phi f64, section u32,
t f64, h f64, sin_beta f64, flags u32). An optional trailer "HASH" + 8 bytes
carries the source-skeleton digest for the job sanity check.
"""

from __future__ import annotations

import struct

import numpy as np

from . import errors
from .encoder import ENC_DTYPE, EncodedSet

MAGIC = b"BSKN"
VERSION = 1
HASH_MAGIC = b"HASH"


def save_encoded(es: EncodedSet, path):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(es.records)))
        f.write(es.records.tobytes())
        if es.skeleton_hash:
            f.write(HASH_MAGIC)
            f.write(es.skeleton_hash)


def load_encoded(path) -> EncodedSet:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise errors.ParseError(f"{path}: bad magic {magic!r} at byte 0")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise errors.UnsupportedFormat(f"{path}: unsupported version {version}")
        (count,) = struct.unpack("<Q", f.read(8))
        buf = f.read(ENC_DTYPE.itemsize * count)
        if len(buf) != ENC_DTYPE.itemsize * count:
            raise errors.ParseError(
                f"{path}: truncated record data at byte {16 + len(buf)}")
        records = np.frombuffer(buf, dtype=ENC_DTYPE, count=count).copy()
        trailer = f.read(4)
        sk_hash = b""
        if trailer == HASH_MAGIC:
            sk_hash = f.read(8)
            if len(sk_hash) != 8:
                raise errors.ParseError(f"{path}: truncated hash trailer")
    return EncodedSet(records, sk_hash)
