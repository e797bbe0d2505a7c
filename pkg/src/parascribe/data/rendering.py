"""Synthetic paragraph rendering from true-type fonts.

Each font spec (file plus size/shear/stroke parameters) acts as one
synthetic "writer"; rendering the same text with the same spec and seed is
bit-reproducible. Ink is dark on a white canvas, values in [0, 1].
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .charset import Charset
from .manifest import ParagraphSample, Source

DEFAULT_WRAP_BUDGET = 60

# Small built-in vocabulary for generating toy corpora without an external
# text file.
WORDS = (
    "the quick brown fox jumps over a lazy dog and then runs far away "
    "while seven wizards brew strong black tea near an old stone bridge "
    "under pale winter light small birds gather to watch ships drift past "
    "green hills where quiet rivers bend through deep valleys full of "
    "tall grass young children play simple games with round wooden toys "
    "every morning brings fresh bread warm milk sweet honey ripe fruit "
    "people write long letters about distant towns busy markets loud "
    "trains slow boats high towers narrow streets bright lamps soft rain"
).split()


class GlyphCoverageError(ValueError):
    """Font cannot render one or more requested characters."""

    def __init__(self, font: str, missing):
        self.missing = sorted(set(missing))
        super().__init__(f"font {font} lacks glyphs for: {''.join(self.missing)!r}")


class CanvasOverflowError(ValueError):
    """Wrapped text does not fit the canvas."""


@dataclass(frozen=True)
class FontSpec:
    """A parametrized font resource; the identity defines the writer id."""

    path: str
    size: int = 18
    shear: float = 0.0  # horizontal shear, positive leans right
    stroke_width: int = 0

    @property
    def writer_id(self) -> str:
        stem = Path(self.path).stem
        tag = f"{stem}-sz{self.size}"
        if self.shear:
            tag += f"-sh{self.shear:+.2f}"
        if self.stroke_width:
            tag += f"-st{self.stroke_width}"
        return tag

    def load(self) -> ImageFont.FreeTypeFont:
        return _load_font(self.path, self.size)


@functools.lru_cache(maxsize=256)
def _load_font(path: str, size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(path, size=size)


@functools.lru_cache(maxsize=256)
def _font_codepoints(path: str) -> frozenset[int]:
    from fontTools.ttLib import TTFont

    font = TTFont(path, fontNumber=0, lazy=True)
    cmap = font.getBestCmap() or {}
    return frozenset(cmap)


def missing_glyphs(font_path: str, chars) -> set[str]:
    """Characters of ``chars`` without a cmap entry in the font file."""
    cps = _font_codepoints(font_path)
    return {c for c in chars if c not in ("\n",) and ord(c) not in cps}


def find_font_files(directories=None) -> list[Path]:
    """Discover .ttf/.otf files, defaulting to matplotlib's bundled fonts."""
    if directories is None:
        import matplotlib

        directories = [
            Path(matplotlib.get_data_path()) / "fonts" / "ttf",
            Path("/usr/share/fonts"),
        ]
    found = []
    for d in directories:
        d = Path(d)
        if d.is_dir():
            found.extend(sorted(d.rglob("*.ttf")))
            found.extend(sorted(d.rglob("*.otf")))
    return found


def text_fonts(charset: Charset, directories=None) -> list[Path]:
    """Discovered fonts that cover the full charset (symbol fonts drop out)."""
    chars = charset.symbols
    return [p for p in find_font_files(directories) if not missing_glyphs(str(p), chars)]


def wrap_text(text: str, max_chars: int = DEFAULT_WRAP_BUDGET) -> list[str]:
    """Greedy word wrap at a character budget; explicit newlines are kept."""
    lines = []
    for raw_line in text.split("\n"):
        words = raw_line.split(" ")
        current = ""
        for word in words:
            if len(word) > max_chars:
                raise CanvasOverflowError(
                    f"word {word!r} exceeds the wrap budget of {max_chars} characters"
                )
            candidate = word if not current else current + " " + word
            if len(candidate) <= max_chars:
                current = candidate
            else:
                lines.append(current)
                current = word
        lines.append(current)
    return lines


def render_paragraph(
    text: str,
    font: FontSpec,
    canvas: tuple[int, int],
    rng: np.random.Generator | None = None,
    wrap_budget: int = DEFAULT_WRAP_BUDGET,
    margin_frac: float = 0.05,
    line_spacing: float = 1.35,
    jitter_frac: float = 0.15,
    charset: Charset | None = None,
) -> ParagraphSample:
    """Render ``text`` onto a white canvas, one wrapped line per row.

    ``rng`` drives small per-line horizontal jitter (up to ``jitter_frac``
    of the font size); pass None for a fixed layout. The transcript stores
    the wrapped layout with explicit newlines.

    Raises GlyphCoverageError for unrenderable characters and
    CanvasOverflowError when the wrapped text exceeds the canvas.
    """
    height, width = canvas
    if text:
        missing = missing_glyphs(font.path, set(text))
        if missing:
            raise GlyphCoverageError(font.path, missing)
        if charset is not None:
            bad = charset.invalid_chars(text)
            if bad:
                raise ValueError(f"text contains characters outside the charset: {bad}")

    image = Image.new("L", (width, height), color=255)
    if not text:
        return ParagraphSample(
            image=np.asarray(image, dtype=np.float32) / 255.0,
            transcript="",
            writer_id=font.writer_id,
            source=Source.SYNTHETIC,
            line_boxes=[],
        )

    lines = wrap_text(text, wrap_budget)
    pil_font = font.load()
    draw = ImageDraw.Draw(image)
    margin = int(round(margin_frac * min(height, width)))
    ascent, descent = pil_font.getmetrics()
    line_height = int(round((ascent + descent) * line_spacing))
    if margin + len(lines) * line_height > height:
        raise CanvasOverflowError(
            f"{len(lines)} lines at {line_height}px exceed canvas height {height}"
        )

    boxes = []
    y = margin
    for line in lines:
        x = margin
        if rng is not None and jitter_frac > 0:
            x += int(rng.integers(0, max(1, int(font.size * jitter_frac)) + 1))
        if line:
            bbox = draw.textbbox((x, y), line, font=pil_font, stroke_width=font.stroke_width)
            if bbox[2] > width - margin // 2:
                raise CanvasOverflowError(
                    f"line {line!r} is {bbox[2]}px wide, canvas width is {width}"
                )
            draw.text((x, y), line, fill=0, font=pil_font, stroke_width=font.stroke_width)
            boxes.append(tuple(bbox))
        y += line_height

    arr = np.asarray(image, dtype=np.float32) / 255.0
    if font.shear:
        arr = _shear_image(arr, font.shear)
    return ParagraphSample(
        image=arr,
        transcript="\n".join(lines),
        writer_id=font.writer_id,
        source=Source.SYNTHETIC,
        line_boxes=boxes,
    )


def _shear_image(arr: np.ndarray, shear: float) -> np.ndarray:
    """Horizontal shear around the image center, white background fill."""
    import cv2

    h, w = arr.shape
    m = np.array([[1.0, shear, -shear * h / 2.0], [0.0, 1.0, 0.0]], dtype=np.float64)
    return cv2.warpAffine(
        arr, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=1.0
    )


def random_paragraph_text(
    rng: np.random.Generator,
    n_lines: tuple[int, int] = (2, 4),
    words_per_line: tuple[int, int] = (2, 4),
    vocabulary=WORDS,
) -> str:
    lines = []
    for _ in range(int(rng.integers(n_lines[0], n_lines[1] + 1))):
        k = int(rng.integers(words_per_line[0], words_per_line[1] + 1))
        lines.append(" ".join(rng.choice(vocabulary) for _ in range(k)))
    return "\n".join(lines)


def render_corpus(
    fonts,
    n_samples: int,
    canvas: tuple[int, int],
    rng: np.random.Generator,
    wrap_budget: int = DEFAULT_WRAP_BUDGET,
    text_source=None,
    **render_kwargs,
) -> list[ParagraphSample]:
    """Render ``n_samples`` paragraphs cycling over ``fonts``.

    ``text_source``: either a callable(rng) -> str or a list of strings to
    sample from; defaults to the built-in word vocabulary.
    """
    samples = []
    for i in range(n_samples):
        font = fonts[i % len(fonts)]
        if text_source is None:
            text = random_paragraph_text(rng)
        elif callable(text_source):
            text = text_source(rng)
        else:
            text = text_source[int(rng.integers(0, len(text_source)))]
        samples.append(
            render_paragraph(text, font, canvas, rng=rng, wrap_budget=wrap_budget, **render_kwargs)
        )
    return samples
