from .augment import AugmentPolicy, augment
from .charset import Charset, UnknownCharacterError, DEFAULT_SYMBOLS
from .manifest import (
    ManifestError,
    ParagraphSample,
    Source,
    load_manifest,
    normalize_canvas,
    save_manifest,
)
from .rendering import (
    CanvasOverflowError,
    FontSpec,
    GlyphCoverageError,
    find_font_files,
    missing_glyphs,
    render_corpus,
    render_paragraph,
    random_paragraph_text,
    text_fonts,
    wrap_text,
)

__all__ = [
    "AugmentPolicy",
    "augment",
    "Charset",
    "UnknownCharacterError",
    "DEFAULT_SYMBOLS",
    "ManifestError",
    "ParagraphSample",
    "Source",
    "load_manifest",
    "normalize_canvas",
    "save_manifest",
    "CanvasOverflowError",
    "FontSpec",
    "GlyphCoverageError",
    "find_font_files",
    "missing_glyphs",
    "render_corpus",
    "render_paragraph",
    "random_paragraph_text",
    "text_fonts",
    "wrap_text",
]
