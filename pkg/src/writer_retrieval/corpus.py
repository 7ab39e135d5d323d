"""Dataset ingestion: entity identity, manifests, Otsu binarization, word filtering.

Images are plain numpy arrays: grayscale pages are ``uint8`` arrays of shape
(height, width); binarized images are boolean ink masks of the same shape with
``True`` marking ink (dark) pixels.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DegenerateHistogram, FormatError

PAGE, LINE, WORD = "page", "line", "word"
SPLITS = ("train", "test")

_CROP_RE = re.compile(r"^(?P<path>.+)#(?P<x>\d+),(?P<y>\d+),(?P<w>\d+),(?P<h>\d+)$")


@dataclass(frozen=True)
class EntityId:
    """Hierarchical identity of a retrieval unit: writer/page, optional line/word.

    The string form is ``writer-page[-line[-word]]`` and round-trips through
    :meth:`parse` / ``str()`` losslessly, which requires writer and page labels
    to be free of dashes and whitespace.
    """

    writer: str
    page: str
    line: int | None = None
    word: int | None = None

    def __post_init__(self):
        for label in (self.writer, self.page):
            if not label or "-" in label or any(c.isspace() for c in label):
                raise ValueError(f"bad entity label {label!r}: must be non-empty, without '-' or whitespace")
        if self.word is not None and self.line is None:
            raise ValueError("word index requires a line index")
        for idx in (self.line, self.word):
            if idx is not None and (not isinstance(idx, int) or idx < 0):
                raise ValueError(f"line/word indices must be non-negative integers, got {idx!r}")

    @property
    def level(self) -> str:
        if self.word is not None:
            return WORD
        if self.line is not None:
            return LINE
        return PAGE

    def page_id(self) -> "EntityId":
        return EntityId(self.writer, self.page)

    def line_id(self) -> "EntityId":
        if self.line is None:
            raise ValueError(f"{self} has no line component")
        return EntityId(self.writer, self.page, self.line)

    def __str__(self) -> str:
        parts = [self.writer, self.page]
        if self.line is not None:
            parts.append(str(self.line))
        if self.word is not None:
            parts.append(str(self.word))
        return "-".join(parts)

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        parts = text.split("-")
        if len(parts) < 2 or len(parts) > 4:
            raise ValueError(f"cannot parse entity id {text!r}")
        line = word = None
        try:
            if len(parts) >= 3:
                line = int(parts[2])
            if len(parts) == 4:
                word = int(parts[3])
        except ValueError as exc:
            raise ValueError(f"cannot parse entity id {text!r}") from exc
        return cls(parts[0], parts[1], line, word)


# ---------------------------------------------------------------------------
# Image IO


def load_gray(path) -> np.ndarray:
    """Load an image as 8-bit grayscale (luma conversion for color inputs)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_gray(path, img: np.ndarray) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path, format="PNG")


def save_binary(path, ink: np.ndarray) -> None:
    """Write an ink mask as a 1-bit PNG (ink pixels black)."""
    gray = np.where(np.asarray(ink, bool), 0, 255).astype(np.uint8)
    Image.fromarray(gray, mode="L").convert("1").save(path, format="PNG")


# ---------------------------------------------------------------------------
# Binarization


def otsu_threshold(img: np.ndarray) -> int:
    """Threshold in [0, 255] maximizing between-class variance of the histogram.

    Scores are compared in exact integer arithmetic so ties are resolved
    deterministically toward the smallest threshold.
    """
    img = np.asarray(img)
    if img.size == 0:
        raise DegenerateHistogram("empty image")
    flat = img.astype(np.int64).ravel()
    if flat.min() < 0 or flat.max() > 255:
        raise ValueError("grayscale intensities must lie in [0, 255]")
    hist = np.bincount(flat, minlength=256).tolist()
    total = sum(hist)
    grand = sum(i * h for i, h in enumerate(hist))

    best_t = -1
    best_num = 0  # (s0*w1 - s1*w0)^2
    best_den = 1  # w0*w1
    w0 = 0
    s0 = 0
    for t in range(256):
        w0 += hist[t]
        s0 += t * hist[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        s1 = grand - s0
        num = (s0 * w1 - s1 * w0) ** 2
        den = w0 * w1
        # compare num/den > best_num/best_den exactly
        if best_t < 0 or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_t < 0:
        raise DegenerateHistogram("all pixels share one intensity value")
    return best_t


def binarize(img: np.ndarray) -> np.ndarray:
    """Otsu-binarize a grayscale image; dark pixels (<= threshold) become ink."""
    t = otsu_threshold(img)
    return np.asarray(img) <= t


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class ManifestEntry:
    entity: EntityId
    path: str  # relative to the manifest directory; may carry a "#x,y,w,h" crop suffix
    split: str
    transcription: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise FormatError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    """Immutable list of entities with image paths and split tags."""

    root: Path
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        seen = set()
        writer_split: dict[str, str] = {}
        for e in self.entries:
            key = str(e.entity)
            if key in seen:
                raise FormatError(f"duplicate entity id {key}")
            seen.add(key)
            prev = writer_split.setdefault(e.entity.writer, e.split)
            if prev != e.split:
                raise FormatError(f"writer {e.entity.writer} has inconsistent split tags")

    def level_entries(self, level: str, split: str | None = None) -> list[ManifestEntry]:
        out = [e for e in self.entries if e.entity.level == level]
        if split is not None:
            out = [e for e in out if e.split == split]
        return out

    def entry(self, entity: EntityId | str) -> ManifestEntry:
        want = str(entity)
        for e in self.entries:
            if str(e.entity) == want:
                return e
        raise KeyError(want)

    def writers(self, split: str | None = None) -> list[str]:
        seen = []
        for e in self.entries:
            if split is not None and e.split != split:
                continue
            if e.entity.writer not in seen:
                seen.append(e.entity.writer)
        return seen

    def lines_of(self, page: EntityId) -> list[ManifestEntry]:
        out = [
            e
            for e in self.entries
            if e.entity.level == LINE and e.entity.writer == page.writer and e.entity.page == page.page
        ]
        return sorted(out, key=lambda e: e.entity.line)

    def load_gray(self, entry: ManifestEntry) -> np.ndarray:
        """Load the entity's grayscale crop, honoring an optional bbox suffix."""
        m = _CROP_RE.match(entry.path)
        if m:
            img = load_gray(self.root / m.group("path"))
            x, y, w, h = (int(m.group(k)) for k in ("x", "y", "w", "h"))
            if w <= 0 or h <= 0 or y + h > img.shape[0] or x + w > img.shape[1]:
                raise FormatError(f"crop {entry.path!r} outside image bounds")
            return img[y : y + h, x : x + w]
        return load_gray(self.root / entry.path)

    def load_ink(self, entry: ManifestEntry) -> np.ndarray:
        return binarize(self.load_gray(entry))


def serialize_manifest(manifest: DatasetManifest) -> str:
    lines = []
    for e in manifest.entries:
        fields = [str(e.entity), e.path, e.split]
        if e.transcription is not None:
            fields.append(e.transcription)
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def parse_manifest(text: str, root: Path, check_paths: bool = True) -> DatasetManifest:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise FormatError(f"manifest line {lineno}: expected 3 or 4 tab-separated fields")
        try:
            entity = EntityId.parse(fields[0])
        except ValueError as exc:
            raise FormatError(f"manifest line {lineno}: {exc}") from exc
        transcription = fields[3] if len(fields) == 4 else None
        entries.append(ManifestEntry(entity, fields[1], fields[2], transcription))
    manifest = DatasetManifest(Path(root), tuple(entries))
    if check_paths:
        for e in manifest.entries:
            m = _CROP_RE.match(e.path)
            rel = m.group("path") if m else e.path
            if not (manifest.root / rel).is_file():
                raise FormatError(f"missing image file for {e.entity}: {rel}")
    return manifest


def load_manifest(path, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), path.parent, check_paths=check_paths)


def save_manifest(manifest: DatasetManifest, path, header: str | None = None) -> None:
    text = serialize_manifest(manifest)
    if header:
        text = "".join(f"# {line}\n" for line in header.splitlines()) + text
    Path(path).write_text(text, encoding="utf-8")


def filter_words(manifest: DatasetManifest) -> DatasetManifest:
    """Drop word entries whose transcription has no letter or digit.

    Entries above word level, and word entries without a transcription, pass
    through unchanged; order is preserved.
    """

    def keep(e: ManifestEntry) -> bool:
        if e.entity.level != WORD or e.transcription is None:
            return True
        return any(c.isalpha() or c.isdigit() for c in e.transcription)

    return replace(manifest, entries=tuple(e for e in manifest.entries if keep(e)))
