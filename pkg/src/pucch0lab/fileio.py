"""Small helpers shared by the binary file formats (datasets, models, IQ).

All formats are little-endian, start with a 4-byte magic and a u32
version, and raise FileFormatError with the failing byte offset so a
corrupt file points at itself.
"""

from __future__ import annotations

import struct
from typing import BinaryIO


class FileFormatError(Exception):
    """Malformed or truncated binary file."""


class NumericalError(RuntimeError):
    """A computation produced a non-finite value."""


def read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    offset = fh.tell()
    data = fh.read(n)
    if len(data) != n:
        raise FileFormatError(
            f"truncated file: wanted {n} bytes for {what} at offset {offset}, "
            f"got {len(data)}")
    return data


def expect_magic(fh: BinaryIO, magic: bytes, version: int) -> None:
    got = read_exact(fh, 4, "magic")
    if got != magic:
        raise FileFormatError(
            f"bad magic at offset 0: expected {magic!r}, got {got!r}")
    ver = read_u32(fh, "format version")
    if ver != version:
        raise FileFormatError(
            f"unsupported {magic.decode()} version {ver} (expected {version})")


def read_u32(fh: BinaryIO, what: str) -> int:
    return struct.unpack("<I", read_exact(fh, 4, what))[0]


def read_u64(fh: BinaryIO, what: str) -> int:
    return struct.unpack("<Q", read_exact(fh, 8, what))[0]


def write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def write_u64(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<Q", value))
