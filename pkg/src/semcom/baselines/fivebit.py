"""Fixed-width text codec: 5 bits per character over a 32-symbol alphabet."""

from __future__ import annotations

import numpy as np

from ..tokenizer import BitStream

CHAR_BITS = 5

# 26 letters, space, four punctuation marks, and '#' escaping a spelled-out
# digit ("3" travels as "#three").
ALPHABET = "abcdefghijklmnopqrstuvwxyz .,-'#"
_DIGIT_MARKER = "#"
_CHAR_TO_INDEX = {ch: i for i, ch in enumerate(ALPHABET)}
_DIGIT_NAMES = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
}
_NAME_TO_DIGIT = {name: digit for digit, name in _DIGIT_NAMES.items()}


def _escape(text: str) -> str:
    out = []
    for ch in text.lower():
        if ch in _DIGIT_NAMES:
            out.append(_DIGIT_MARKER + _DIGIT_NAMES[ch])
        elif ch in _CHAR_TO_INDEX and ch != _DIGIT_MARKER:
            out.append(ch)
        else:
            out.append(" ")
    return "".join(out)


def encode_5bit(text: str) -> BitStream:
    """Map text onto the alphabet (unknown characters become spaces) and
    emit 5 bits per character, LSB first."""
    escaped = _escape(text)
    indices = np.array([_CHAR_TO_INDEX[ch] for ch in escaped], dtype=np.int64)
    shifts = np.arange(CHAR_BITS, dtype=np.int64)
    bits = ((indices[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return BitStream(bits, CHAR_BITS)


def decode_5bit(stream: BitStream) -> str:
    """Invert :func:`encode_5bit`, folding digit escapes back to digits."""
    if stream.bits.size % CHAR_BITS:
        raise ValueError(f"stream length {stream.bits.size} is not a multiple of {CHAR_BITS}")
    groups = stream.bits.reshape(-1, CHAR_BITS).astype(np.int64)
    weights = np.int64(1) << np.arange(CHAR_BITS, dtype=np.int64)
    indices = (groups * weights).sum(axis=1)
    chars = [ALPHABET[i] for i in indices]
    out: list[str] = []
    position = 0
    while position < len(chars):
        ch = chars[position]
        if ch == _DIGIT_MARKER:
            tail = "".join(chars[position + 1:position + 6])
            for name, digit in _NAME_TO_DIGIT.items():
                if tail.startswith(name):
                    out.append(digit)
                    position += 1 + len(name)
                    break
            else:
                out.append(ch)
                position += 1
        else:
            out.append(ch)
            position += 1
    return "".join(out)
