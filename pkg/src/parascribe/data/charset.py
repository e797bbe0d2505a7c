"""Character set and transcript tokenization.

Token ids 0..3 are reserved for PAD/START/END/NEWLINE; visible symbols
start at index 4. START/END are only prepended/appended for recognizer
decoding targets, never emitted by :meth:`Charset.encode`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# IAM-style symbol inventory: space, digits, Latin letters, common punctuation.
DEFAULT_SYMBOLS = (
    " !\"#&'()*+,-./0123456789:;?"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "abcdefghijklmnopqrstuvwxyz"
)

PAD = 0
START = 1
END = 2
NEWLINE = 3
NUM_SPECIALS = 4


class UnknownCharacterError(ValueError):
    """A transcript character (or token id) outside the charset."""

    def __init__(self, char, position):
        self.char = char
        self.position = position
        super().__init__(f"character {char!r} at position {position} is not in the charset")


@dataclass(frozen=True)
class Charset:
    """Ordered symbol inventory plus the four reserved special tokens.

    ``newline_as_space=True`` selects the newline-token-free variant: "\\n"
    is mapped to a single space during encoding, so the model never sees
    the newline token and must place line breaks on its own.
    """

    symbols: str = DEFAULT_SYMBOLS
    newline_as_space: bool = False
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("charset symbols must be unique")
        if "\n" in self.symbols:
            raise ValueError("newline is a special token, not a symbol")
        object.__setattr__(
            self, "_index", {c: i + NUM_SPECIALS for i, c in enumerate(self.symbols)}
        )

    @property
    def vocab_size(self) -> int:
        return NUM_SPECIALS + len(self.symbols)

    @property
    def pad(self) -> int:
        return PAD

    @property
    def start(self) -> int:
        return START

    @property
    def end(self) -> int:
        return END

    @property
    def newline(self) -> int:
        return NEWLINE

    def __contains__(self, char: str) -> bool:
        return char == "\n" or char in self._index

    def invalid_chars(self, text: str) -> list[tuple[int, str]]:
        """(position, char) pairs of ``text`` that cannot be encoded."""
        return [(i, c) for i, c in enumerate(text) if c not in self]

    def encode(self, text: str) -> list[int]:
        if self.newline_as_space:
            text = text.replace("\n", " ")
        ids = []
        for pos, char in enumerate(text):
            if char == "\n":
                ids.append(NEWLINE)
                continue
            try:
                ids.append(self._index[char])
            except KeyError:
                raise UnknownCharacterError(char, pos) from None
        return ids

    def decode(self, ids) -> str:
        chars = []
        for pos, tok in enumerate(ids):
            tok = int(tok)
            if tok in (PAD, START, END):
                continue
            if tok == NEWLINE:
                chars.append("\n")
            elif NUM_SPECIALS <= tok < self.vocab_size:
                chars.append(self.symbols[tok - NUM_SPECIALS])
            else:
                raise UnknownCharacterError(tok, pos)
        return "".join(chars)

    def decoding_target(self, text: str) -> list[int]:
        """START + encoded text + END, the teacher-forcing target layout."""
        return [START] + self.encode(text) + [END]
