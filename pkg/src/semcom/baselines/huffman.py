"""Canonical Huffman codes over character frequencies.

Code lengths come from the usual two-smallest merge; codewords are then
reassigned canonically, shortest first with ties broken by character, so a
table is reproducible from its lengths alone.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..tokenizer import BitStream


@dataclass(frozen=True)
class HuffmanTable:
    """char -> (code length, code value); codes read MSB first."""

    codes: dict

    def __post_init__(self):
        decoder = {(length, value): ch for ch, (length, value) in self.codes.items()}
        object.__setattr__(self, "_decoder", decoder)
        object.__setattr__(self, "_max_length", max(length for length, _ in self.codes.values()))

    @property
    def code_lengths(self) -> dict:
        return {ch: length for ch, (length, _) in self.codes.items()}

    def expected_length(self, corpus: str) -> float:
        frequency = Counter(corpus)
        total = sum(frequency.values())
        return sum(frequency[ch] * self.codes[ch][0] for ch in frequency) / total


def _code_lengths(corpus: str) -> dict:
    frequency = Counter(corpus)
    if not frequency:
        raise ValueError("corpus must be non-empty")
    if len(frequency) == 1:
        return {next(iter(frequency)): 1}
    heap = []
    for order, (ch, count) in enumerate(sorted(frequency.items())):
        heap.append((count, order, {ch: 0}))
    heapq.heapify(heap)
    order = len(heap)
    while len(heap) > 1:
        count_a, _, depths_a = heapq.heappop(heap)
        count_b, _, depths_b = heapq.heappop(heap)
        merged = {ch: depth + 1 for ch, depth in depths_a.items()}
        merged.update({ch: depth + 1 for ch, depth in depths_b.items()})
        heapq.heappush(heap, (count_a + count_b, order, merged))
        order += 1
    return heap[0][2]


def huffman_build(corpus: str) -> HuffmanTable:
    """Build a canonical table from character frequencies in ``corpus``."""
    lengths = _code_lengths(corpus)
    ordered = sorted(lengths, key=lambda ch: (lengths[ch], ch))
    codes: dict = {}
    value = 0
    previous_length = lengths[ordered[0]]
    for i, ch in enumerate(ordered):
        if i:
            value = (value + 1) << (lengths[ch] - previous_length)
        codes[ch] = (lengths[ch], value)
        previous_length = lengths[ch]
    return HuffmanTable(codes)


def huffman_encode(text: str, table: HuffmanTable) -> BitStream:
    bits: list[int] = []
    for ch in text:
        if ch not in table.codes:
            raise ValueError(f"character {ch!r} not in the Huffman table")
        length, value = table.codes[ch]
        bits.extend((value >> k) & 1 for k in range(length - 1, -1, -1))
    return BitStream(np.array(bits, dtype=np.uint8), token_width=1)


def huffman_decode(stream: BitStream, table: HuffmanTable) -> str:
    """Walk the prefix code; an incomplete trailing codeword is dropped."""
    out: list[str] = []
    length = 0
    value = 0
    for bit in stream.bits:
        value = (value << 1) | int(bit)
        length += 1
        ch = table._decoder.get((length, value))
        if ch is not None:
            out.append(ch)
            length = 0
            value = 0
        elif length >= table._max_length:
            # no codeword extends past max length, so this group can never match
            raise ValueError("invalid codeword")
    return "".join(out)
