"""Classical comparison chains: fixed 5-bit text coding, canonical Huffman
coding, Reed-Solomon protection, and transmitted-symbol accounting."""

from .accounting import (MethodCount, bits_to_bytes, bytes_to_bits, count_5bit_rs,
                         count_huffman_rs, count_symbols, count_token_method)
from .fivebit import ALPHABET, CHAR_BITS, decode_5bit, encode_5bit
from .huffman import HuffmanTable, huffman_build, huffman_decode, huffman_encode
from .reed_solomon import RSCode, RsDecodeResult, rs_decode, rs_encode

__all__ = [
    "ALPHABET",
    "CHAR_BITS",
    "HuffmanTable",
    "MethodCount",
    "RSCode",
    "RsDecodeResult",
    "bits_to_bytes",
    "bytes_to_bits",
    "count_5bit_rs",
    "count_huffman_rs",
    "count_symbols",
    "count_token_method",
    "decode_5bit",
    "encode_5bit",
    "huffman_build",
    "huffman_decode",
    "huffman_encode",
    "rs_decode",
    "rs_encode",
]
