"""Local descriptors at fixed keypoints: native RootSIFT and external embeddings.

The native descriptor is a standard 4x4 spatial grid of 8-bin orientation
histograms over a 16x16 window (offsets -8..7) around the keypoint, with
trilinear interpolation and Gaussian spatial weighting (sigma = 8 px).
Keypoints come from contours, so there is no scale or orientation estimation:
descriptors are computed upright at a fixed scale. Gradients are centered
differences on the ink mask after a 3x3 box smoothing, which removes the
all-zero plateaus a raw binary image would produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import EntityId
from .errors import DimMismatch, EmptyDescriptor, UnknownEntity

SIFT_DIM = 128
_WINDOW = 16  # sampling window side; offsets -8..7 around the keypoint
_GRID = 4
_ORI_BINS = 8
_SIGMA = 8.0
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class LocalDescriptorSet:
    """Descriptors of one entity, parallel to their keypoints."""

    entity: EntityId
    vectors: np.ndarray  # (n, dim) float64
    keypoints: np.ndarray  # (n, 2) int64, columns (x, y)

    def __post_init__(self):
        v = np.asarray(self.vectors)
        k = np.asarray(self.keypoints)
        if v.ndim != 2 or k.ndim != 2 or k.shape[1] != 2:
            raise ValueError("vectors must be (n, dim) and keypoints (n, 2)")
        if len(v) != len(k):
            raise ValueError("vectors and keypoints must be parallel")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)


def _box_smooth(a: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1)
    return (
        p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
        + p[1:-1, :-2] + p[1:-1, 1:-1] + p[1:-1, 2:]
        + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    ) / 9.0


def gradient_field(ink: np.ndarray):
    """Centered-difference gradients of the box-smoothed ink mask."""
    sm = _box_smooth(np.asarray(ink, dtype=float))
    p = np.pad(sm, 1)
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return gx, gy


@lru_cache(maxsize=1)
def _window_geometry():
    offs = np.arange(_WINDOW) - _WINDOW // 2
    dy, dx = np.meshgrid(offs, offs, indexing="ij")
    dy = dy.ravel()
    dx = dx.ravel()
    gauss = np.exp(-(dx**2 + dy**2) / (2.0 * _SIGMA**2))
    cell_w = _WINDOW / _GRID
    rcoord = (dy + _WINDOW // 2) / cell_w - 0.5
    ccoord = (dx + _WINDOW // 2) / cell_w - 0.5
    r0 = np.floor(rcoord).astype(int)
    c0 = np.floor(ccoord).astype(int)
    fr = rcoord - r0
    fc = ccoord - c0
    slots = []  # per slot: (columns, cell_base, weight) over the 256 offsets
    for dr, wr in ((r0, 1.0 - fr), (r0 + 1, fr)):
        for dc, wc in ((c0, 1.0 - fc), (c0 + 1, fc)):
            valid = (dr >= 0) & (dr < _GRID) & (dc >= 0) & (dc < _GRID)
            cols = np.nonzero(valid)[0]
            base = (dr[cols] * _GRID + dc[cols]) * _ORI_BINS
            slots.append((cols, base, (wr * wc)[cols]))
    return dy, dx, gauss, slots


def sift_descriptors(ink: np.ndarray, kps: np.ndarray, chunk: int = 2048):
    """Raw SIFT histograms for many keypoints on one image.

    Returns ``(descriptors, kept)``: keypoints whose window has zero gradient
    energy are dropped. Entries are non-negative; apply :func:`root_sift` to
    obtain the final descriptor.
    """
    ink = np.asarray(ink, dtype=bool)
    kps = np.asarray(kps, dtype=np.int64).reshape(-1, 2)
    h, w = ink.shape
    if len(kps) and (
        kps[:, 0].min() < 0 or kps[:, 0].max() >= w or kps[:, 1].min() < 0 or kps[:, 1].max() >= h
    ):
        raise ValueError("keypoint outside image bounds")
    if len(kps) == 0:
        return np.empty((0, SIFT_DIM)), kps

    gx, gy = gradient_field(ink)
    mag = np.hypot(gx, gy)
    obin = np.mod(np.arctan2(gy, gx), _TWO_PI) * (_ORI_BINS / _TWO_PI)
    obin[obin >= _ORI_BINS] -= _ORI_BINS
    half = _WINDOW // 2
    mag_p = np.pad(mag, half)
    obin_p = np.pad(obin, half)

    dy, dx, gauss, slots = _window_geometry()
    out = np.empty((len(kps), SIFT_DIM))
    for start in range(0, len(kps), chunk):
        part = kps[start : start + chunk]
        rows = part[:, 1][:, None] + (dy + half)[None, :]
        cols = part[:, 0][:, None] + (dx + half)[None, :]
        mw = mag_p[rows, cols] * gauss[None, :]
        ob = obin_p[rows, cols]
        o0 = np.floor(ob).astype(int)
        fo = ob - o0
        o1 = o0 + 1
        o1[o1 == _ORI_BINS] = 0
        n = len(part)
        rowbase = (np.arange(n) * SIFT_DIM)[:, None]
        acc = np.zeros(n * SIFT_DIM)
        for cols_s, base_s, w_s in slots:
            contrib = mw[:, cols_s] * w_s[None, :]
            for obins, ow in ((o0, 1.0 - fo), (o1, fo)):
                idx = rowbase + base_s[None, :] + obins[:, cols_s]
                acc += np.bincount(idx.ravel(), weights=(contrib * ow[:, cols_s]).ravel(), minlength=n * SIFT_DIM)
        out[start : start + chunk] = acc.reshape(n, SIFT_DIM)

    keep = out.sum(axis=1) > 0.0
    return out[keep], kps[keep]


def sift_descriptor(ink: np.ndarray, kp) -> np.ndarray:
    """Raw SIFT histogram at one keypoint; EmptyDescriptor on zero energy."""
    desc, kept = sift_descriptors(ink, np.asarray(kp, dtype=np.int64).reshape(1, 2))
    if len(kept) == 0:
        raise EmptyDescriptor(f"zero gradient energy in window at {tuple(np.asarray(kp))}")
    return desc[0]


def root_sift(raw: np.ndarray) -> np.ndarray:
    """l1-normalize, take elementwise square roots, l2-normalize.

    Accepts a single vector or a batch of rows; raises EmptyDescriptor when a
    row is all zero.
    """
    raw = np.asarray(raw, dtype=float)
    single = raw.ndim == 1
    mat = raw[None, :] if single else raw
    if (mat < 0).any():
        raise ValueError("raw descriptor entries must be non-negative")
    l1 = mat.sum(axis=1, keepdims=True)
    if (l1 == 0).any():
        raise EmptyDescriptor("all-zero descriptor")
    y = np.sqrt(mat / l1)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return y[0] if single else y


def compute_descriptor_set(entity: EntityId, ink: np.ndarray, kps: np.ndarray) -> LocalDescriptorSet:
    """RootSIFT descriptors for given keypoints, skipping zero-energy windows."""
    raw, kept = sift_descriptors(ink, kps)
    vectors = root_sift(raw) if len(raw) else np.empty((0, SIFT_DIM))
    return LocalDescriptorSet(entity, vectors, kept)


def load_external_descriptors(path, manifest) -> dict:
    """Load an interchange descriptor file, grouped per entity.

    Every sidecar entity id must exist in ``manifest``; vectors keep the dtype
    geometry they were exported with (no renormalization).
    """
    from .formats import read_wrdesc

    vectors, rows = read_wrdesc(path)
    known = {str(e.entity) for e in manifest.entries}
    groups: dict[str, list[int]] = {}
    for i, (eid, _x, _y) in enumerate(rows):
        if eid not in known:
            raise UnknownEntity(f"descriptor row references unknown entity {eid!r}")
        groups.setdefault(eid, []).append(i)
    out = {}
    for eid, idx in groups.items():
        kp = np.asarray([(rows[i][1], rows[i][2]) for i in idx], dtype=np.int64)
        out[EntityId.parse(eid)] = LocalDescriptorSet(
            EntityId.parse(eid), np.asarray(vectors[idx], dtype=float), kp
        )
    return out


def check_dims(a: np.ndarray, b: np.ndarray, what: str = "vectors") -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimMismatch(f"{what}: {a.shape[-1]} vs {b.shape[-1]}")
