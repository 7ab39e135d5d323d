"""Binary interchange formats shared across pipeline stages.

WRDESC (little-endian): magic ``WRDESC1\\0`` (8 bytes), u32 version=1, u32 dim,
u64 count, count rows of dim float32, then a UTF-8 sidecar section: u64 byte
length followed by ``entity_id x y`` lines, one per row, in row order.

Patch dumps use the same header style with magic ``WRPTCH1\\0``: u32 version=1,
u32 side, u64 count, count rows of ceil(side*side/8) packed-bit bytes
(row-major, most significant bit first), then the same sidecar section.

Codebooks and soft-assignment parameters are stored as WRDESC payloads behind
a single text header line (see :func:`write_codebook` / :func:`write_netvlad`).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError

WRDESC_MAGIC = b"WRDESC1\x00"
WRPATCH_MAGIC = b"WRPTCH1\x00"
_VERSION = 1


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file: wanted {n} bytes, got {len(data)}")
    return data


def _encode_sidecar(rows) -> bytes:
    return "".join(f"{eid} {int(x)} {int(y)}\n" for eid, x, y in rows).encode("utf-8")


def _decode_sidecar(data: bytes, count: int):
    lines = data.decode("utf-8").splitlines()
    if len(lines) != count:
        raise FormatError(f"sidecar has {len(lines)} lines for {count} rows")
    rows = []
    for line in lines:
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"bad sidecar line {line!r}")
        rows.append((parts[0], int(parts[1]), int(parts[2])))
    return rows


def write_wrdesc_stream(f, vectors: np.ndarray, rows) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError("vectors must be 2-D")
    n, dim = vectors.shape
    if len(rows) != n:
        raise ValueError("one sidecar row per vector required")
    f.write(WRDESC_MAGIC)
    f.write(np.uint32(_VERSION).tobytes())
    f.write(np.uint32(dim).tobytes())
    f.write(np.uint64(n).tobytes())
    f.write(vectors.tobytes())
    sidecar = _encode_sidecar(rows)
    f.write(np.uint64(len(sidecar)).tobytes())
    f.write(sidecar)


def read_wrdesc_stream(f):
    magic = _read_exact(f, 8)
    if magic != WRDESC_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    version = int(np.frombuffer(_read_exact(f, 4), "<u4")[0])
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    dim = int(np.frombuffer(_read_exact(f, 4), "<u4")[0])
    count = int(np.frombuffer(_read_exact(f, 8), "<u8")[0])
    if dim == 0:
        raise FormatError("dim must be positive")
    vectors = np.frombuffer(_read_exact(f, 4 * dim * count), "<f4").reshape(count, dim).copy()
    side_len = int(np.frombuffer(_read_exact(f, 8), "<u8")[0])
    rows = _decode_sidecar(_read_exact(f, side_len), count)
    return vectors, rows


def write_wrdesc(path, vectors: np.ndarray, rows) -> None:
    with open(path, "wb") as f:
        write_wrdesc_stream(f, vectors, rows)


def read_wrdesc(path):
    with open(path, "rb") as f:
        out = read_wrdesc_stream(f)
        if f.read(1):
            raise FormatError("trailing bytes after sidecar")
        return out


# ---------------------------------------------------------------------------
# Patch dump (boundary interface for external patch embedders)


def write_patch_dump(path, masks: np.ndarray, rows, side: int = 32) -> None:
    masks = np.asarray(masks, dtype=bool)
    if masks.ndim != 3 or masks.shape[1:] != (side, side):
        raise ValueError(f"masks must be (n, {side}, {side})")
    if len(rows) != len(masks):
        raise ValueError("one sidecar row per mask required")
    packed = np.packbits(masks.reshape(len(masks), -1), axis=1)
    with open(path, "wb") as f:
        f.write(WRPATCH_MAGIC)
        f.write(np.uint32(_VERSION).tobytes())
        f.write(np.uint32(side).tobytes())
        f.write(np.uint64(len(masks)).tobytes())
        f.write(np.ascontiguousarray(packed).tobytes())
        sidecar = _encode_sidecar(rows)
        f.write(np.uint64(len(sidecar)).tobytes())
        f.write(sidecar)


def read_patch_dump(path):
    with open(path, "rb") as f:
        magic = _read_exact(f, 8)
        if magic != WRPATCH_MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        version = int(np.frombuffer(_read_exact(f, 4), "<u4")[0])
        if version != _VERSION:
            raise FormatError(f"unsupported version {version}")
        side = int(np.frombuffer(_read_exact(f, 4), "<u4")[0])
        count = int(np.frombuffer(_read_exact(f, 8), "<u8")[0])
        row_bytes = (side * side + 7) // 8
        packed = np.frombuffer(_read_exact(f, row_bytes * count), np.uint8).reshape(count, row_bytes)
        masks = np.unpackbits(packed, axis=1)[:, : side * side].reshape(count, side, side).astype(bool)
        side_len = int(np.frombuffer(_read_exact(f, 8), "<u8")[0])
        rows = _decode_sidecar(_read_exact(f, side_len), count)
        if f.read(1):
            raise FormatError("trailing bytes after sidecar")
        return masks, rows


# ---------------------------------------------------------------------------
# Model containers


def write_codebook(path, centers: np.ndarray, seed: int) -> None:
    centers = np.asarray(centers)
    with open(path, "wb") as f:
        f.write(f"WRCB1 n_clusters={len(centers)} seed={int(seed)}\n".encode("ascii"))
        write_wrdesc_stream(f, centers, [(f"center-{k}", 0, 0) for k in range(len(centers))])


def read_codebook(path):
    """Returns (centers float64, seed). Centers round-trip at float32 precision."""
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").strip()
        fields = header.split()
        if len(fields) != 3 or fields[0] != "WRCB1":
            raise FormatError(f"bad codebook header {header!r}")
        n_clusters = int(fields[1].split("=")[1])
        seed = int(fields[2].split("=")[1])
        vectors, _rows = read_wrdesc_stream(f)
    if len(vectors) != n_clusters:
        raise FormatError("codebook header count disagrees with payload")
    return vectors.astype(float), seed


def write_netvlad(path, centers: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> None:
    centers = np.asarray(centers)
    weights = np.asarray(weights)
    biases = np.asarray(biases).reshape(1, -1)
    if centers.shape != weights.shape or biases.shape[1] != centers.shape[0]:
        raise ValueError("inconsistent parameter shapes")
    k, dim = centers.shape
    with open(path, "wb") as f:
        f.write(f"WRNV1 n_clusters={k} dim={dim}\n".encode("ascii"))
        write_wrdesc_stream(f, centers, [(f"center-{i}", 0, 0) for i in range(k)])
        write_wrdesc_stream(f, weights, [(f"weight-{i}", 0, 0) for i in range(k)])
        write_wrdesc_stream(f, biases, [("bias", 0, 0)])


def read_netvlad(path):
    """Returns (centers, weights, biases) as float64 arrays."""
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").strip()
        fields = header.split()
        if len(fields) != 3 or fields[0] != "WRNV1":
            raise FormatError(f"bad parameter header {header!r}")
        k = int(fields[1].split("=")[1])
        dim = int(fields[2].split("=")[1])
        centers, _ = read_wrdesc_stream(f)
        weights, _ = read_wrdesc_stream(f)
        biases, _ = read_wrdesc_stream(f)
    if centers.shape != (k, dim) or weights.shape != (k, dim) or biases.shape != (1, k):
        raise FormatError("parameter payload shapes disagree with header")
    return centers.astype(float), weights.astype(float), biases[0].astype(float)


def write_meta(path, **fields) -> None:
    """JSON sidecar carrying config hash and seed for binary artifacts."""
    Path(str(path) + ".meta.json").write_text(json.dumps(fields, sort_keys=True) + "\n", encoding="utf-8")
