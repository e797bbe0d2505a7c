"""Paragraph samples and the on-disk manifest format.

A manifest is a UTF-8 tab-separated file, one row per sample:

    image-path<TAB>transcript<TAB>writer-id<TAB>split

Transcripts escape newline, tab and backslash as ``\\n``, ``\\t`` and
``\\\\`` so the file stays line-oriented and diff-friendly. Image paths are
resolved relative to the manifest's directory.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .charset import Charset


class Source(str, enum.Enum):
    GENUINE = "genuine"
    SYNTHETIC = "synthetic"


class ManifestError(ValueError):
    pass


@dataclass
class ParagraphSample:
    """A grayscale paragraph image with transcript and provenance.

    ``image`` is float32 (H, W) in [0, 1], white background, dark ink.
    """

    image: np.ndarray
    transcript: str
    writer_id: str
    source: Source = Source.GENUINE
    line_boxes: list[tuple[int, int, int, int]] | None = None
    split: str | None = None
    path: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.image.ndim != 2:
            raise ValueError(f"expected a 2-D grayscale image, got shape {self.image.shape}")


def escape_transcript(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")


def unescape_transcript(text: str) -> str:
    out = []
    it = iter(range(len(text)))
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


def normalize_canvas(image: np.ndarray, canvas: tuple[int, int]) -> np.ndarray:
    """Fit ``image`` into ``canvas`` preserving aspect, pad with white."""
    import cv2

    h, w = image.shape
    th, tw = canvas
    if (h, w) == (th, tw):
        return image.astype(np.float32, copy=False)
    scale = min(th / h, tw / w)
    nh, nw = max(1, int(round(h * scale))), max(1, int(round(w * scale)))
    resized = cv2.resize(image.astype(np.float32), (nw, nh), interpolation=cv2.INTER_AREA)
    out = np.ones((th, tw), dtype=np.float32)
    out[:nh, :nw] = resized
    return out


def save_manifest(samples, directory, name: str = "manifest.tsv") -> Path:
    """Write sample images as PNGs plus the manifest file; returns its path."""
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, s in enumerate(samples):
        rel = Path("images") / f"{i:06d}_{_safe(s.writer_id)}.png"
        arr = np.clip(np.rint(s.image * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(directory / rel)
        rows.append(
            "\t".join(
                [str(rel), escape_transcript(s.transcript), s.writer_id, s.split or ""]
            )
        )
    path = directory / name
    path.write_text("\n".join(rows) + ("\n" if rows else ""), encoding="utf-8")
    return path


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-._" else "_" for c in name)


def load_manifest(
    path,
    canvas: tuple[int, int] | None = None,
    charset: Charset | None = None,
    source: Source = Source.GENUINE,
    validate_splits: bool = True,
) -> list[ParagraphSample]:
    """Load samples listed in a manifest file.

    With ``canvas`` given, images are normalized to that size. Charset
    violations and overlapping writer sets between splits raise
    ManifestError; the latter check enforces the writer-disjoint
    (zero-shot) protocol and only runs when split labels are present.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    samples = []
    split_writers: dict[str, set[str]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ManifestError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
        rel, raw_transcript, writer_id, split = parts
        img_path = (base / rel).resolve()
        if not img_path.is_file():
            raise ManifestError(f"{path}:{lineno}: missing image file {img_path}")
        transcript = unescape_transcript(raw_transcript)
        if charset is not None:
            bad = charset.invalid_chars(transcript)
            if bad:
                raise ManifestError(
                    f"{path}:{lineno}: transcript characters outside the charset: {bad[:5]}"
                )
        image = np.asarray(Image.open(img_path).convert("L"), dtype=np.float32) / 255.0
        if canvas is not None:
            image = normalize_canvas(image, canvas)
        split = split or None
        if split:
            split_writers.setdefault(split, set()).add(writer_id)
        samples.append(
            ParagraphSample(
                image=image,
                transcript=transcript,
                writer_id=writer_id,
                source=source,
                split=split,
                path=img_path,
            )
        )
    if validate_splits:
        _check_disjoint_writers(split_writers)
    return samples


def _check_disjoint_writers(split_writers: dict[str, set[str]]) -> None:
    names = sorted(split_writers)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            overlap = split_writers[a] & split_writers[b]
            if overlap:
                raise ManifestError(
                    f"writer sets of splits {a!r} and {b!r} overlap: {sorted(overlap)[:5]}"
                )
