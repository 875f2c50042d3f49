"""Receiver-side enhancement: repair the recovered description against the
structured summary, then chunk, embed, store, and retrieve context for
question answering.

The structured summary is treated as authoritative when the language model
produces something unusable, so repair can only preserve or improve the
structured fields, never lose them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass

import numpy as np

from .llm import LlmError, LlmRequest, answer
from .scene_graph import StructuredSummary, from_json, to_json

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 4
DEFAULT_EMBED_DIM = 256

ANSWER_SYSTEM = (
    "You answer questions about a described scene. Use only the numbered "
    "context statements; if the context does not contain the answer, say so."
)
REPAIR_SYSTEM = (
    "You repair a possibly corrupted scene description using trusted "
    "structured data. Reply with a single JSON object with keys \"number\", "
    "\"location\", and \"relationship\" in the same format as the structured data."
)

_EMBED_SPLIT = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Chunk:
    category: str
    text: str


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise ValueError("embedding must be one-dimensional")

    @property
    def dim(self) -> int:
        return int(self.values.size)


class HashEmbedder:
    """Deterministic offline embedder: each token's SHA-256 digest picks an
    index and a sign, and the accumulated vector is L2-normalized. Texts
    sharing no tokens are orthogonal except for hash collisions."""

    def __init__(self, dim: int = DEFAULT_EMBED_DIM):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim

    def token_index(self, token: str) -> tuple[int, float]:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % self.dim
        sign = 1.0 if digest[4] & 1 else -1.0
        return index, sign

    def embed(self, text: str) -> EmbeddingVector:
        values = np.zeros(self.dim)
        for token in _EMBED_SPLIT.findall(text.lower()):
            index, sign = self.token_index(token)
            values[index] += sign
        norm = np.linalg.norm(values)
        if norm > 0:
            values /= norm
        return EmbeddingVector(values)


class ServiceEmbedder:
    """Embeds through an external embeddings endpoint; same call shape as
    the chat client, kept here so the store never knows the difference."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.model = model
        self._api_key = api_key
        self.timeout = timeout

    def embed(self, text: str) -> EmbeddingVector:
        import requests

        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        response = requests.post(self.endpoint, json={"model": self.model, "input": text},
                                 headers=headers, timeout=self.timeout)
        response.raise_for_status()
        body = response.json()
        return EmbeddingVector(np.asarray(body["data"][0]["embedding"], dtype=np.float64))


def embed(text: str, embedder) -> EmbeddingVector:
    if not text:
        raise ValueError("cannot embed empty text")
    return embedder.embed(text)


class VectorStore:
    """In-memory list of (vector, chunk) with one chunk per category."""

    def __init__(self):
        self.entries: list[tuple[EmbeddingVector, Chunk]] = []

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def dim(self) -> int | None:
        return self.entries[0][0].dim if self.entries else None

    def add(self, chunk: Chunk, vector: EmbeddingVector) -> None:
        if self.entries and vector.dim != self.dim:
            raise ValueError(f"vector dim {vector.dim} does not match store dim {self.dim}")
        if any(existing.category == chunk.category for _, existing in self.entries):
            raise ValueError(f"duplicate chunk category {chunk.category!r}")
        self.entries.append((vector, chunk))


def build_store(chunks, embedder) -> VectorStore:
    store = VectorStore()
    for chunk in chunks:
        store.add(chunk, embed(chunk.text, embedder))
    return store


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    norm_a = np.linalg.norm(a.values)
    norm_b = np.linalg.norm(b.values)
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(a.values @ b.values / (norm_a * norm_b))


def retrieve_top_k(store: VectorStore, query: EmbeddingVector, k: int = DEFAULT_TOP_K) -> list[Chunk]:
    """The k best chunks by cosine similarity, ties broken by category name."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not store.entries:
        raise ValueError("store is empty")
    if query.dim != store.dim:
        raise ValueError(f"query dim {query.dim} does not match store dim {store.dim}")
    ranked = sorted(
        ((cosine_similarity(query, vector), chunk) for vector, chunk in store.entries),
        key=lambda pair: (-pair[0], pair[1].category),
    )
    return [chunk for _, chunk in ranked[:k]]


def _category_regions(summary: StructuredSummary, category: str) -> list[str]:
    regions: list[str] = []
    for object_id in sorted(summary.location):
        if summary.categories.get(object_id) == category:
            region = summary.location[object_id]
            if region not in regions:
                regions.append(region)
    return regions


def chunk_summary(summary: StructuredSummary) -> list[Chunk]:
    """One chunk per category, in category order: the count, the regions of
    that category's objects, and the triples that mention it."""
    chunks: list[Chunk] = []
    for category in sorted(summary.number):
        count = summary.number[category]
        if count == 1:
            sentences = [f"There is 1 {category}."]
        else:
            sentences = [f"There are {count} {category}(s)."]
        regions = _category_regions(summary, category)
        sentences.append(f"Locations: {', '.join(regions)}." if regions else "Locations: unknown.")
        triples = [
            f"{subject} {predicate} {obj}"
            for subject, predicate, obj in summary.relationship
            if category in (subject, obj)
        ]
        sentences.append(f"Relations: {', '.join(triples)}." if triples else "Relations: none.")
        chunks.append(Chunk(category, " ".join(sentences)))
    return chunks


def build_prompt(question: str, chunks, model: str = "mock") -> LlmRequest:
    """Fixed template: numbered context statements, then the question."""
    lines = ["Context:"]
    for i, chunk in enumerate(chunks, 1):
        lines.append(f"{i}. {chunk.text}")
    lines.append("")
    lines.append(f"Question: {question}")
    return LlmRequest(system=ANSWER_SYSTEM, user="\n".join(lines), model=model)


def _parse_summary_reply(reply: str) -> StructuredSummary | None:
    start = reply.find("{")
    end = reply.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        return from_json(reply[start:end + 1])
    except (ValueError, json.JSONDecodeError):
        return None


def _merge_summaries(base: StructuredSummary, update: StructuredSummary) -> StructuredSummary:
    number = dict(base.number)
    number.update(update.number)
    location = dict(base.location)
    location.update(update.location)
    relationship = update.relationship if update.relationship else base.relationship
    return StructuredSummary(number, location, relationship, dict(base.categories))


def repair_with_structure(recovered_text: str, summary: StructuredSummary, client,
                          transcript=None, model: str = "mock") -> StructuredSummary:
    """Ask the model to reconcile the recovered description with the
    structured summary; fall back to the summary whenever the reply cannot
    be used. The output never loses fields the input summary had."""
    request = LlmRequest(
        system=REPAIR_SYSTEM,
        user=(f"Recovered description: {recovered_text}\n"
              f"Structured data: {to_json(summary)}"),
        model=model,
    )
    try:
        reply = answer(request, client, transcript)
    except LlmError as exc:
        logger.warning("repair call failed, keeping structured summary: %s", exc)
        return summary
    parsed = _parse_summary_reply(reply)
    if parsed is None:
        logger.warning("repair reply was not a summary object, keeping structured summary")
        return summary
    return _merge_summaries(summary, parsed)
