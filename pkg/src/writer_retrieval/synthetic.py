"""Seeded pseudo-handwriting corpus with per-writer style parameters.

Glyphs are parametric stroke programs shared by all writers; a writer modulates
slant, stroke width, curvature, scale, spacing and baseline wobble. Style
parameters are laid out on a low-discrepancy sequence over writer index so that
writers spread out in style space deterministically, with the spread magnitude
controlled by ``style_spread`` and per-instance jitter by ``noise``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .corpus import DatasetManifest, EntityId, ManifestEntry, save_manifest
from .errors import InvalidConfig
from .utils import config_digest, derived_rng

VOCABULARY = (
    "and", "the", "dann", "with", "that", "other", "like", "will",
    "which", "from", "this", "have", "mein", "word", "time", "hand",
    "over", "line", "must", "then",
)

_GLYPH_PX = 20
_INK_LEVEL = 45
_PAPER_LEVEL = 220

# one irrational increment per style dimension (powers of the d=4 plastic number)
_STRIDES = (0.8566748838545029, 0.7338918566271259, 0.6287067210378087, 0.5385972572236101)


@dataclass(frozen=True)
class SynthConfig:
    writers: int
    pages_per_writer: int
    lines_per_page: int
    words_per_line: int
    style_spread: float = 1.0
    noise: float = 1.0
    seed: int = 0
    train_fraction: float = 0.4

    def __post_init__(self):
        for name in ("writers", "pages_per_writer", "lines_per_page", "words_per_line"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if not 0.0 <= self.train_fraction <= 1.0:
            raise InvalidConfig("train_fraction must lie in [0, 1]")
        if self.style_spread < 0 or self.noise < 0:
            raise InvalidConfig("style_spread and noise must be non-negative")

    def as_dict(self) -> dict:
        return {
            "writers": self.writers,
            "pages_per_writer": self.pages_per_writer,
            "lines_per_page": self.lines_per_page,
            "words_per_line": self.words_per_line,
            "style_spread": self.style_spread,
            "noise": self.noise,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
        }


@dataclass(frozen=True)
class WriterStyle:
    slant: float
    width: float
    curvature: float
    scale: float
    spacing_sigma: float
    wobble: float
    jitter_sigma: float


@lru_cache(maxsize=64)
def _glyph_strokes(ch: str) -> tuple:
    """Stroke control points for one letter, identical for every corpus."""
    rng = derived_rng(0x61F9, "glyph", ch)
    lattice = np.array([0.08, 0.3, 0.5, 0.7, 0.92])
    n_strokes = 2 + int(rng.integers(0, 2))
    strokes = []
    for _ in range(n_strokes):
        npts = 2 + int(rng.integers(0, 2))
        pts = np.stack(
            [rng.choice(lattice, size=npts), rng.choice(lattice, size=npts)],
            axis=1,
        )
        # reject zero-length segments by nudging duplicates apart
        for i in range(1, npts):
            if np.allclose(pts[i], pts[i - 1]):
                pts[i] += 0.18
        strokes.append(pts)
    return tuple(s.copy() for s in strokes)


def writer_style(cfg: SynthConfig, writer_idx: int) -> WriterStyle:
    """Deterministic style for one writer; spread over a Kronecker sequence."""
    rng = derived_rng(cfg.seed, "style", writer_idx)
    offsets = derived_rng(cfg.seed, "style-offsets").random(4)
    u = [(offsets[j] + writer_idx * _STRIDES[j]) % 1.0 for j in range(4)]
    spread = cfg.style_spread
    slant = (u[0] - 0.5) * 1.0 * spread
    width = max(1.0, 1.9 + (u[1] - 0.5) * 1.7 * spread)
    curvature = (u[2] - 0.5) * 1.1 * spread
    scale = max(0.55, 1.0 + (u[3] - 0.5) * 0.5 * spread)
    spacing_sigma = cfg.noise * (0.4 + 0.6 * rng.random())
    wobble = cfg.noise * (0.4 + 0.8 * rng.random())
    jitter_sigma = cfg.noise * 0.35
    return WriterStyle(slant, width, curvature, scale, spacing_sigma, wobble, jitter_sigma)


def _stamp_disks(mask: np.ndarray, pts: np.ndarray, radius: float) -> None:
    r = max(radius, 0.6)
    ir = int(np.ceil(r))
    dy, dx = np.mgrid[-ir : ir + 1, -ir : ir + 1]
    offs = np.argwhere(dx * dx + dy * dy <= r * r + 1e-9) - ir
    xs = np.round(pts[:, 0]).astype(int)
    ys = np.round(pts[:, 1]).astype(int)
    h, w = mask.shape
    for oy, ox in offs:
        yy = ys + oy
        xx = xs + ox
        ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        mask[yy[ok], xx[ok]] = True


def _polyline_points(pts: np.ndarray, step: float = 0.45) -> np.ndarray:
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        dist = float(np.hypot(*(b - a)))
        n = max(2, int(np.ceil(dist / step)) + 1)
        t = np.linspace(0.0, 1.0, n)[:, None]
        out.append(a[None, :] * (1 - t) + b[None, :] * t)
    return np.concatenate(out, axis=0)


def _bow(pts: np.ndarray, amount: float) -> np.ndarray:
    """Insert a bowed midpoint into each segment to curve the stroke."""
    if abs(amount) < 1e-9:
        return pts
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        mid = (a + b) / 2.0
        d = b - a
        norm = np.hypot(*d)
        if norm > 1e-9:
            normal = np.array([-d[1], d[0]]) / norm
            mid = mid + normal * amount * norm * 0.5
        out.extend([mid, b])
    return np.stack(out)


def render_word_mask(word: str, style: WriterStyle, rng: np.random.Generator) -> np.ndarray:
    """Rasterize one word instance as a boolean ink mask."""
    g = _GLYPH_PX * style.scale
    height = int(np.ceil(g * 1.5)) + 6
    baseline = height - 3 - int(0.12 * g)
    glyph_w = 0.62 * g
    est_w = int(np.ceil(len(word) * (glyph_w + 0.2 * g) + abs(style.slant) * g + 10))
    mask = np.zeros((height, est_w), dtype=bool)
    cursor = 3.0 + max(0.0, style.slant) * g
    for ch in word:
        base_y = baseline + rng.normal(0.0, style.wobble)
        for stroke in _glyph_strokes(ch):
            pts = np.asarray(stroke, dtype=float).copy()
            pts = _bow(pts, style.curvature)
            if style.jitter_sigma > 0:
                pts = pts + rng.normal(0.0, style.jitter_sigma / max(g, 1.0), size=pts.shape)
            xs = cursor + pts[:, 0] * glyph_w
            ys = base_y - pts[:, 1] * g
            xs = xs + style.slant * (baseline - ys) * 0.6
            _stamp_disks(mask, _polyline_points(np.stack([xs, ys], axis=1)), style.width / 2.0)
        gap = 0.16 * g + rng.normal(0.0, style.spacing_sigma)
        cursor += glyph_w + max(1.0, gap)
    # trim trailing blank columns but keep a fixed 3px margin
    cols = np.nonzero(mask.any(axis=0))[0]
    right = (cols[-1] + 4) if cols.size else est_w
    return mask[:, : min(est_w, right)]


def _compose_row(masks: list[np.ndarray], gap: int, pad: int = 3) -> np.ndarray:
    height = max(m.shape[0] for m in masks)
    width = sum(m.shape[1] for m in masks) + gap * (len(masks) - 1) + 2 * pad
    out = np.zeros((height + 2 * pad, width), dtype=bool)
    x = pad
    for m in masks:
        y = pad + (height - m.shape[0]) // 2
        out[y : y + m.shape[0], x : x + m.shape[1]] |= m
        x += m.shape[1] + gap
    return out


def _compose_column(masks: list[np.ndarray], gap: int, pad: int = 4) -> np.ndarray:
    width = max(m.shape[1] for m in masks)
    height = sum(m.shape[0] for m in masks) + gap * (len(masks) - 1) + 2 * pad
    out = np.zeros((height, width + 2 * pad), dtype=bool)
    y = pad
    for m in masks:
        out[y : y + m.shape[0], pad : pad + m.shape[1]] |= m
        y += m.shape[0] + gap
    return out


def _to_gray(mask: np.ndarray, rng: np.random.Generator, noise: float) -> np.ndarray:
    gray = np.where(mask, _INK_LEVEL, _PAPER_LEVEL).astype(np.int16)
    if noise > 0:
        amp = int(round(12 * noise))
        if amp > 0:
            gray = gray + rng.integers(-amp, amp + 1, size=gray.shape, dtype=np.int16)
    return np.clip(gray, 0, 255).astype(np.uint8)


def generate_synthetic_corpus(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Render a deterministic corpus to ``out_dir`` and return its manifest.

    Layout: ``images/<writer>/<page>/...`` with one PNG per page, line and
    word entity; the manifest is written to ``manifest.tsv``. Identical configs
    produce byte-identical trees.
    """
    from .corpus import save_gray  # local import keeps module load light

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    n_train = int(round(cfg.train_fraction * cfg.writers))
    if cfg.writers >= 2:
        n_train = min(max(n_train, 0), cfg.writers - 1)

    entries: list[ManifestEntry] = []
    for w in range(cfg.writers):
        writer = f"w{w:03d}"
        split = "train" if w < n_train else "test"
        style = writer_style(cfg, w)
        for p in range(cfg.pages_per_writer):
            page = f"p{p:02d}"
            page_dir = out_dir / "images" / writer / page
            page_dir.mkdir(parents=True, exist_ok=True)
            text_rng = derived_rng(cfg.seed, "text", w, p)
            line_masks = []
            line_records = []  # (line_idx, words, word_masks)
            for l in range(cfg.lines_per_page):
                words = [VOCABULARY[int(text_rng.integers(0, len(VOCABULARY)))] for _ in range(cfg.words_per_line)]
                word_masks = []
                for k, word in enumerate(words):
                    rng = derived_rng(cfg.seed, "word", w, p, l, k)
                    word_masks.append(render_word_mask(word, style, rng))
                gap = int(round(0.55 * _GLYPH_PX * style.scale))
                line_masks.append(_compose_row(word_masks, gap))
                line_records.append((l, words, word_masks))
            page_mask = _compose_column(line_masks, gap=int(round(0.45 * _GLYPH_PX * style.scale)))

            page_entity = EntityId(writer, page)
            rel = f"images/{writer}/{page}/page.png"
            save_gray(out_dir / rel, _to_gray(page_mask, derived_rng(cfg.seed, "px", str(page_entity)), cfg.noise))
            entries.append(ManifestEntry(page_entity, rel, split))

            for l, words, word_masks in line_records:
                line_entity = EntityId(writer, page, l)
                rel = f"images/{writer}/{page}/line{l}.png"
                save_gray(
                    out_dir / rel,
                    _to_gray(line_masks[l], derived_rng(cfg.seed, "px", str(line_entity)), cfg.noise),
                )
                entries.append(ManifestEntry(line_entity, rel, split, " ".join(words)))
                for k, word in enumerate(words):
                    word_entity = EntityId(writer, page, l, k)
                    rel = f"images/{writer}/{page}/l{l}w{k}.png"
                    save_gray(
                        out_dir / rel,
                        _to_gray(word_masks[k], derived_rng(cfg.seed, "px", str(word_entity)), cfg.noise),
                    )
                    entries.append(ManifestEntry(word_entity, rel, split, word))

    manifest = DatasetManifest(out_dir, tuple(entries))
    header = f"synthetic corpus seed={cfg.seed} config_hash={config_digest(cfg.as_dict())}"
    save_manifest(manifest, out_dir / "manifest.tsv", header=header)
    return manifest
