"""Transmitted-symbol accounting shared by every method under comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tokenizer import BitStream, TokenFrame
from .fivebit import encode_5bit
from .huffman import HuffmanTable, huffman_encode
from .reed_solomon import RSCode, rs_encode


@dataclass(frozen=True)
class MethodCount:
    method: str
    bits: int
    bits_per_symbol: int
    symbols: int


def count_symbols(bit_count: int, bits_per_symbol: int) -> int:
    """Symbols needed for ``bit_count`` bits: the ceiling of their ratio."""
    if bits_per_symbol not in (1, 2, 4):
        raise ValueError("bits_per_symbol must be 1, 2, or 4")
    if bit_count < 0:
        raise ValueError("bit_count must be non-negative")
    return -(-bit_count // bits_per_symbol)


def bits_to_bytes(stream: BitStream) -> bytes:
    """Pack a bit stream into bytes, LSB first, zero-padding the tail."""
    bits = stream.bits
    pad = (-bits.size) % 8
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return np.packbits(bits.reshape(-1, 8), axis=1, bitorder="little").tobytes()


def bytes_to_bits(data: bytes, bit_count: int | None = None) -> BitStream:
    """Unpack bytes back into bits (LSB first), trimmed to ``bit_count``."""
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bit_count is not None:
        if bit_count > bits.size:
            raise ValueError(f"requested {bit_count} bits from {bits.size}")
        bits = bits[:bit_count]
    return BitStream(bits.copy(), token_width=1)


def count_token_method(frame: TokenFrame, token_width: int, bits_per_symbol: int) -> MethodCount:
    bits = len(frame.ids) * token_width
    return MethodCount("semantic-tokens", bits, bits_per_symbol, count_symbols(bits, bits_per_symbol))


def count_5bit_rs(text: str, code: RSCode, bits_per_symbol: int) -> MethodCount:
    encoded = rs_encode(bits_to_bytes(encode_5bit(text)), code)
    bits = len(encoded) * 8
    return MethodCount("5bit+rs", bits, bits_per_symbol, count_symbols(bits, bits_per_symbol))


def count_huffman_rs(text: str, table: HuffmanTable, code: RSCode, bits_per_symbol: int) -> MethodCount:
    encoded = rs_encode(bits_to_bytes(huffman_encode(text, table)), code)
    bits = len(encoded) * 8
    return MethodCount("huffman+rs", bits, bits_per_symbol, count_symbols(bits, bits_per_symbol))
