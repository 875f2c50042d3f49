"""Semantic communication over simulated digital channels.

Scene graphs serialize to triple text, tokenize to fixed-width WordPiece
IDs, travel as Gray-coded QAM symbols through AWGN or Rayleigh channels,
and come back through equalization, demodulation, structured repair, and
retrieval-augmented question answering. Classical 5-bit/Huffman/RS chains
and an evaluation harness ride along for comparison.
"""

from .phy import ChannelConfig, apply_channel, get_constellation, lmmse_equalize, ml_demodulate, modulate
from .scene_graph import SceneGraph, StructuredSummary, load_scene_graph, serialize_triples, summarize
from .tokenizer import Vocabulary, load_vocabulary, wordpiece_tokenize

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "SceneGraph",
    "StructuredSummary",
    "Vocabulary",
    "__version__",
    "apply_channel",
    "get_constellation",
    "lmmse_equalize",
    "load_scene_graph",
    "load_vocabulary",
    "ml_demodulate",
    "modulate",
    "serialize_triples",
    "summarize",
    "wordpiece_tokenize",
]
