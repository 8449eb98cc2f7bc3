"""Binary sketch file format (version 1).

Layout, all integers little-endian:

    magic "DSK1"                      4 bytes
    version                           u16  (= 1)
    scheme tag                        u8   (0 regular, 1 aligned, 2 lsh)
    d                                 u32
    scheme params:
        regular: h                    f64
        aligned: widths               d * f64
        lsh:     seed                 u64
                 W row-major          d*d * f64
                 b                    d * f64
                 h                    f64
    count-sketch seed                 u64
    K, R                              u32, u32
    recovery tag                      u8   (0 mean, 1 median)
    n                                 u64
    counters row-major                K*R * i64
    H (heap capacity)                 u32
    entry count                       u32
    entries, sorted by bin id         each: d * i64 bin, f64 count
    CRC32 of all preceding bytes      u32

Deserialization validates structure first, then the checksum, and only
then materializes objects: corrupt input never yields partial state. Any
single-byte corruption is caught either structurally (magic, tags, length
arithmetic) or by the CRC.
"""

import struct
import zlib

import numpy as np

from .countsketch import CountSketch
from .errors import FormatError
from .partition import AlignedGrid, LshGrid, RegularGrid
from .sketch import DensitySketch
from .topbins import TopBins

MAGIC = b"DSK1"
FORMAT_VERSION = 1

_SCHEME_TAGS = {"regular": 0, "aligned": 1, "lsh": 2}
_RECOVERY_TAGS = {"mean": 0, "median": 1}
_RECOVERY_NAMES = {v: k for k, v in _RECOVERY_TAGS.items()}


def to_bytes(sketch: DensitySketch) -> bytes:
    part = sketch.partitioner
    cs = sketch.cs
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HBI", FORMAT_VERSION, _SCHEME_TAGS[part.scheme], part.dim)
    if part.scheme == "regular":
        out += struct.pack("<d", part.width)
    elif part.scheme == "aligned":
        out += part.widths.astype("<f8").tobytes()
    else:
        out += struct.pack("<Q", part.seed)
        out += part.projection.astype("<f8").tobytes()
        out += part.offsets.astype("<f8").tobytes()
        out += struct.pack("<d", part.width)
    out += struct.pack("<QIIBQ", cs.seed, cs.depth, cs.width, _RECOVERY_TAGS[cs.recovery], sketch.n)
    out += cs.counters.astype("<i8").tobytes()
    bins, counts = sketch.heap.entries_arrays()
    out += struct.pack("<II", sketch.heap.capacity, len(counts))
    for i in range(len(counts)):
        out += bins[i].astype("<i8").tobytes()
        out += struct.pack("<d", counts[i])
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise FormatError("truncated sketch data")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)

    def ints(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<i8").astype(np.int64)


def from_bytes(data: bytes) -> DensitySketch:
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise FormatError("expected bytes")
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError("bad magic: not a sketch file")
    r = _Reader(data)
    r.take(4)
    version, scheme_tag, dim = r.unpack("<HBI")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if scheme_tag not in (0, 1, 2):
        raise FormatError(f"unknown scheme tag {scheme_tag}")
    if dim < 1:
        raise FormatError("dimension must be >= 1")

    if scheme_tag == 0:
        (h,) = r.unpack("<d")
        part_args = ("regular", h, None, None, None)
    elif scheme_tag == 1:
        widths = r.floats(dim)
        part_args = ("aligned", None, widths, None, None)
    else:
        (lsh_seed,) = r.unpack("<Q")
        W = r.floats(dim * dim).reshape(dim, dim)
        b = r.floats(dim)
        (h,) = r.unpack("<d")
        part_args = ("lsh", h, None, lsh_seed, (W, b))

    cs_seed, depth, width, recovery_tag, n = r.unpack("<QIIBQ")
    if depth < 1 or width < 1:
        raise FormatError("count-sketch dimensions must be >= 1")
    if recovery_tag not in _RECOVERY_NAMES:
        raise FormatError(f"unknown recovery tag {recovery_tag}")
    counters = r.ints(depth * width).reshape(depth, width)

    heap_capacity, n_entries = r.unpack("<II")
    if heap_capacity < 1:
        raise FormatError("heap capacity must be >= 1")
    if n_entries > heap_capacity:
        raise FormatError("heap entry count exceeds capacity")
    # the format is fully determined from here: refuse before allocating
    # if the entry section plus checksum cannot match the actual length
    if r.pos + n_entries * (dim * 8 + 8) + 4 != len(data):
        raise FormatError("length mismatch in heap entry section")
    entry_bins = np.empty((n_entries, dim), dtype=np.int64)
    entry_counts = np.empty(n_entries, dtype=np.float64)
    for i in range(n_entries):
        entry_bins[i] = r.ints(dim)
        (entry_counts[i],) = r.unpack("<d")

    (stored_crc,) = r.unpack("<I")
    if r.pos != len(data):
        raise FormatError("trailing bytes after checksum")
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise FormatError("checksum mismatch: sketch data is corrupted")

    try:
        scheme, h, widths, lsh_seed, lsh_arrays = part_args
        if scheme == "regular":
            part = RegularGrid(dim, h)
        elif scheme == "aligned":
            part = AlignedGrid(widths)
        else:
            W, b = lsh_arrays
            part = LshGrid(dim, h, lsh_seed, projection=W, offsets=b)
        cs = CountSketch(depth, width, cs_seed, _RECOVERY_NAMES[recovery_tag])
        cs.counters = counters
        heap = TopBins(heap_capacity)
        for i in range(n_entries):
            count = float(entry_counts[i])
            if not count > 0.0 or not np.isfinite(count):
                raise FormatError("heap entry with non-positive count")
            heap.update(tuple(entry_bins[i].tolist()), count)
        if len(heap) != n_entries:
            raise FormatError("duplicate heap entries")
    except ValueError as exc:
        raise FormatError(f"invalid sketch parameters: {exc}") from exc
    return DensitySketch._from_parts(part, cs, heap, n)
