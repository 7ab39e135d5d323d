"""Contour keypoint detection, feature-count budgeting, 32x32 patch extraction.

Keypoints are (n, 2) int64 arrays with columns (x, y); masks use True for ink.
"""

from __future__ import annotations

import numpy as np

PATCH_SIDE = 32


def contour_keypoints(ink: np.ndarray) -> np.ndarray:
    """Ink pixels with at least one non-ink 4-neighbor, in row-major order.

    The image border counts as non-ink, so strokes touching the edge stay on
    the contour.
    """
    ink = np.asarray(ink, dtype=bool)
    if ink.size == 0 or not ink.any():
        return np.empty((0, 2), dtype=np.int64)
    pad = np.pad(ink, 1, constant_values=False)
    interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    ys, xs = np.nonzero(ink & ~interior)
    return np.stack([xs, ys], axis=1).astype(np.int64)


def budget_keypoints(kps: np.ndarray, max_count: int, seed) -> np.ndarray:
    """Uniform subset of at most ``max_count`` keypoints, input order preserved.

    ``seed`` may be an int or a numpy Generator; identical seeds give identical
    subsets. When the input already fits the budget it is returned unchanged.
    """
    kps = np.asarray(kps)
    if max_count < 1:
        raise ValueError("max_count must be positive")
    if len(kps) <= max_count:
        return kps
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.choice(len(kps), size=max_count, replace=False)
    idx.sort()
    return kps[idx]


def extract_patches(ink: np.ndarray, kps: np.ndarray, side: int = PATCH_SIDE):
    """Cut one ``side``x``side`` patch per keypoint, zero-padded at borders.

    Patches without a single ink pixel are dropped. Returns ``(patches, kept)``
    where ``patches`` has shape (m, side, side) and ``kept`` holds the
    corresponding keypoints.
    """
    ink = np.asarray(ink, dtype=bool)
    kps = np.asarray(kps, dtype=np.int64).reshape(-1, 2)
    if len(kps) == 0:
        return np.empty((0, side, side), dtype=bool), kps
    half = side // 2
    pad = np.pad(ink, half, constant_values=False)
    offs = np.arange(side) - half
    rows = kps[:, 1][:, None, None] + offs[None, :, None] + half
    cols = kps[:, 0][:, None, None] + offs[None, None, :] + half
    patches = pad[rows, cols]
    keep = patches.any(axis=(1, 2))
    return patches[keep], kps[keep]


def write_keypoint_dump(path, per_entity: dict) -> None:
    """Text dump, one ``entity_id x y`` line per keypoint."""
    with open(path, "w", encoding="utf-8") as f:
        for entity in sorted(per_entity, key=str):
            for x, y in np.asarray(per_entity[entity]).reshape(-1, 2):
                f.write(f"{entity} {int(x)} {int(y)}\n")


def read_keypoint_dump(path) -> dict:
    out: dict[str, list] = {}
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entity, x, y = line.split()
            out.setdefault(entity, []).append((int(x), int(y)))
    return {k: np.asarray(v, dtype=np.int64).reshape(-1, 2) for k, v in out.items()}
