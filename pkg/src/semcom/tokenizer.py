"""WordPiece tokenization against a fixed vocabulary, plus the fixed-width
token-ID/bit mapping the modulator consumes.

Bit order is LSB-first throughout: token ID ``d`` becomes bits
``b_0..b_{m-1}`` with ``d = sum(b_i * 2**i)``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

DEFAULT_TOKEN_BITS = 16

_TOKEN_SPLIT = re.compile(r"[a-z0-9]+|[^a-z0-9\s]")


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token table; a token's line number is its ID."""

    entries: tuple[str, ...]
    unk_token: str = "[UNK]"
    continuation_prefix: str = "##"

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise VocabularyError("vocabulary entries must be unique")
        if self.unk_token not in self.entries:
            raise VocabularyError(f"vocabulary has no {self.unk_token} entry")
        object.__setattr__(self, "_token_to_id", {tok: i for i, tok in enumerate(self.entries)})
        digest = hashlib.sha256("\n".join(self.entries).encode("utf-8")).hexdigest()
        object.__setattr__(self, "_hash", digest[:16])

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def token_to_id(self) -> dict:
        return self._token_to_id

    @property
    def unk_id(self) -> int:
        return self._token_to_id[self.unk_token]

    @property
    def hash(self) -> str:
        return self._hash


def load_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as handle:
        entries = [line.rstrip("\n") for line in handle]
    return Vocabulary(tuple(e for e in entries if e))


@dataclass(frozen=True)
class TokenFrame:
    """A token-ID sequence bound to the vocabulary it was produced with."""

    ids: tuple[int, ...]
    vocab_hash: str


@dataclass(frozen=True, eq=False)
class BitStream:
    """A 0/1 array whose length is a multiple of ``token_width``."""

    bits: np.ndarray
    token_width: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "bits", bits)
        if self.token_width < 1:
            raise ValueError("token_width must be at least 1")
        if bits.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if bits.size % self.token_width:
            raise ValueError(f"bit count {bits.size} is not a multiple of width {self.token_width}")
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0 or 1")

    def __len__(self) -> int:
        return int(self.bits.size)

    def with_token_width(self, token_width: int) -> "BitStream":
        return BitStream(self.bits, token_width)


def _basic_split(text: str) -> list[str]:
    words: list[str] = []
    for chunk in text.lower().split():
        words.extend(_TOKEN_SPLIT.findall(chunk))
    return words


def _split_word(word: str, vocab: Vocabulary) -> list[int]:
    # greedy longest-prefix match; any unmatchable remainder sinks the word
    ids: list[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = vocab.continuation_prefix + piece
            if piece in vocab.token_to_id:
                match = piece
                break
            end -= 1
        if match is None:
            return [vocab.unk_id]
        ids.append(vocab.token_to_id[match])
        start = end
    return ids


def wordpiece_tokenize(text: str, vocab: Vocabulary) -> TokenFrame:
    """Lowercase, split on whitespace and punctuation, then greedily match
    each word against the vocabulary, falling back to the unknown token."""
    ids: list[int] = []
    for word in _basic_split(text):
        ids.extend(_split_word(word, vocab))
    return TokenFrame(tuple(ids), vocab.hash)


_ATTACH_LEFT = frozenset(";.,:?!)")
_ATTACH_RIGHT = frozenset("(")
_ATTACH_BOTH = frozenset("-/'")


def detokenize(frame: TokenFrame, vocab: Vocabulary) -> str:
    """Rebuild text: continuation pieces concatenate onto the previous word,
    words join with single spaces, and common punctuation reattaches to its
    neighbours so serialized clause text survives a tokenize round trip."""
    if frame.vocab_hash != vocab.hash:
        raise ValueError("frame was produced with a different vocabulary")
    prefix = vocab.continuation_prefix
    parts: list[str] = []
    glue_next = False
    for token_id in frame.ids:
        if not 0 <= token_id < len(vocab):
            raise ValueError(f"token id {token_id} outside vocabulary")
        token = vocab.entries[token_id]
        if token.startswith(prefix):
            parts.append(token[len(prefix):])
            glue_next = False
            continue
        attach_left = token in _ATTACH_LEFT or token in _ATTACH_BOTH
        if parts and not glue_next and not attach_left:
            parts.append(" ")
        parts.append(token)
        glue_next = token in _ATTACH_RIGHT or token in _ATTACH_BOTH
    return "".join(parts)


def ids_to_bits(frame: TokenFrame, token_width: int = DEFAULT_TOKEN_BITS) -> BitStream:
    """Emit ``token_width`` bits per ID, LSB first."""
    ids = np.asarray(frame.ids, dtype=np.int64)
    if ids.size:
        if ids.min() < 0:
            raise ValueError("token ids must be non-negative")
        if ids.max() >= 1 << token_width:
            raise ValueError(f"token id {int(ids.max())} does not fit in {token_width} bits")
    shifts = np.arange(token_width, dtype=np.int64)
    bits = ((ids[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return BitStream(bits, token_width)


def bits_to_ids(stream: BitStream, vocab: Vocabulary) -> tuple[TokenFrame, int]:
    """Reassemble IDs from ``stream`` and bind them to ``vocab``.

    IDs at or beyond the vocabulary size are replaced by the unknown ID;
    the second return value counts those corrupt IDs.
    """
    width = stream.token_width
    groups = stream.bits.reshape(-1, width).astype(np.int64)
    weights = np.int64(1) << np.arange(width, dtype=np.int64)
    ids = (groups * weights).sum(axis=1)
    corrupt = ids >= len(vocab)
    corrupted = int(corrupt.sum())
    ids = np.where(corrupt, vocab.unk_id, ids)
    frame = TokenFrame(tuple(int(i) for i in ids), vocab.hash)
    return frame, corrupted
