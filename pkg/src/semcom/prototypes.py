"""Prototype-space relation embeddings.

Entities embed as an affine map of a class prototype plus an instance
offset. A subject/object pair combines through
``relu(s + o) - (s - o)**2`` elementwise; the combined vector is scored
against per-predicate anchor vectors with a temperature softmax, and a
row-norm regularizer over the anchors' cosine-similarity matrix pushes
them apart. Analytic gradients are provided for both loss terms, with a
central-finite-difference fallback for checking them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("subject", "object", "predicate")


@dataclass
class PrototypeSpace:
    """All trainable parameters of the embedding model."""

    dim: int
    subject_transform: np.ndarray
    object_transform: np.ndarray
    predicate_transform: np.ndarray
    subject_prototypes: np.ndarray
    object_prototypes: np.ndarray
    predicate_prototypes: np.ndarray
    subject_offset: np.ndarray
    object_offset: np.ndarray
    predicate_offset: np.ndarray
    predicate_anchors: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        d = self.dim
        for name in ("subject_transform", "object_transform", "predicate_transform"):
            if getattr(self, name).shape != (d, d):
                raise ValueError(f"{name} must have shape ({d}, {d})")
        for name in ("subject_prototypes", "object_prototypes", "predicate_prototypes", "predicate_anchors"):
            array = getattr(self, name)
            if array.ndim != 2 or array.shape[1] != d:
                raise ValueError(f"{name} must have shape (classes, {d})")
        for name in ("subject_offset", "object_offset", "predicate_offset"):
            if getattr(self, name).shape != (d,):
                raise ValueError(f"{name} must have shape ({d},)")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def n_predicates(self) -> int:
        return int(self.predicate_anchors.shape[0])

    def param_items(self) -> dict:
        return {
            "subject_transform": self.subject_transform,
            "object_transform": self.object_transform,
            "predicate_transform": self.predicate_transform,
            "subject_prototypes": self.subject_prototypes,
            "object_prototypes": self.object_prototypes,
            "predicate_prototypes": self.predicate_prototypes,
            "subject_offset": self.subject_offset,
            "object_offset": self.object_offset,
            "predicate_offset": self.predicate_offset,
            "predicate_anchors": self.predicate_anchors,
        }

    def clone(self) -> "PrototypeSpace":
        return PrototypeSpace(
            self.dim,
            *(array.copy() for array in self.param_items().values()),
            temperature=self.temperature,
        )


def random_space(dim: int, n_classes: int, n_predicates: int, seed: int = 0,
                 temperature: float = 1.0) -> PrototypeSpace:
    """Standard-normal parameters scaled by 1/sqrt(dim)."""
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(dim)

    def draw(*shape):
        return scale * rng.standard_normal(shape)

    return PrototypeSpace(
        dim,
        draw(dim, dim), draw(dim, dim), draw(dim, dim),
        draw(n_classes, dim), draw(n_classes, dim), draw(n_classes, dim),
        draw(dim), draw(dim), draw(dim),
        draw(n_predicates, dim),
        temperature=temperature,
    )


def embed_entity(kind: str, space: PrototypeSpace, class_index: int, instance_offset=None) -> np.ndarray:
    """Affine embedding: transform @ prototype[class] + offset.

    ``instance_offset`` defaults to the offset stored in the space for
    that kind.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    transform = getattr(space, f"{kind}_transform")
    prototypes = getattr(space, f"{kind}_prototypes")
    if not 0 <= class_index < prototypes.shape[0]:
        raise ValueError(f"class index {class_index} outside [0, {prototypes.shape[0]})")
    offset = getattr(space, f"{kind}_offset") if instance_offset is None else np.asarray(instance_offset, dtype=float)
    if offset.shape != (space.dim,):
        raise ValueError(f"offset must have shape ({space.dim},)")
    return transform @ prototypes[class_index] + offset


def match_score(subject: np.ndarray, obj: np.ndarray) -> np.ndarray:
    """Elementwise relu(s + o) - (s - o)**2."""
    subject = np.asarray(subject, dtype=float)
    obj = np.asarray(obj, dtype=float)
    if subject.shape != obj.shape:
        raise ValueError(f"shape mismatch: {subject.shape} vs {obj.shape}")
    return np.maximum(subject + obj, 0.0) - (subject - obj) ** 2


def _logits(relation: np.ndarray, space: PrototypeSpace) -> np.ndarray:
    if space.temperature <= 0:
        raise ValueError("temperature must be positive")
    relation = np.asarray(relation, dtype=float)
    if relation.shape != (space.dim,):
        raise ValueError(f"relation vector must have shape ({space.dim},)")
    return space.predicate_anchors @ relation / space.temperature


def entity_loss(relation: np.ndarray, target_index: int, space: PrototypeSpace) -> float:
    """Cross-entropy of the anchor softmax at the target predicate,
    stabilized by max subtraction."""
    logits = _logits(relation, space)
    if not 0 <= target_index < logits.size:
        raise ValueError(f"target index {target_index} outside [0, {logits.size})")
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[target_index])


def entity_loss_grad(relation: np.ndarray, target_index: int, space: PrototypeSpace) -> dict:
    """Gradients of :func:`entity_loss` w.r.t. the relation vector, the
    anchors, and the temperature."""
    logits = _logits(relation, space)
    if not 0 <= target_index < logits.size:
        raise ValueError(f"target index {target_index} outside [0, {logits.size})")
    shifted = logits - logits.max()
    probabilities = np.exp(shifted)
    probabilities /= probabilities.sum()
    residual = probabilities.copy()
    residual[target_index] -= 1.0
    relation = np.asarray(relation, dtype=float)
    return {
        "relation": space.predicate_anchors.T @ residual / space.temperature,
        "predicate_anchors": np.outer(residual, relation) / space.temperature,
        "temperature": float(-(residual @ logits) / space.temperature),
    }


def prototype_regularizer(space: PrototypeSpace) -> float:
    """Sum of row L2 norms of the anchors' cosine-similarity matrix."""
    anchors = space.predicate_anchors
    norms = np.linalg.norm(anchors, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero-norm predicate anchor")
    unit = anchors / norms[:, None]
    similarity = unit @ unit.T
    return float(np.sqrt((similarity ** 2).sum(axis=1)).sum())


def prototype_regularizer_grad(space: PrototypeSpace) -> dict:
    """Gradient of :func:`prototype_regularizer` w.r.t. the anchors.

    With S the cosine matrix and r_i its row norms, dL/ds_ij = s_ij / r_i
    off the constant diagonal; the chain rule through the normalized
    anchors gives the expression below.
    """
    anchors = space.predicate_anchors
    norms = np.linalg.norm(anchors, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero-norm predicate anchor")
    unit = anchors / norms[:, None]
    similarity = unit @ unit.T
    row_norms = np.sqrt((similarity ** 2).sum(axis=1))
    coefficient = similarity / row_norms[:, None]
    np.fill_diagonal(coefficient, 0.0)
    both_sides = coefficient + coefficient.T
    gradient = (both_sides @ unit - (both_sides * similarity).sum(axis=1)[:, None] * unit) / norms[:, None]
    return {"predicate_anchors": gradient}


def total_loss(space: PrototypeSpace, batch) -> float:
    """Mean entity loss over ``batch`` (relation, target) pairs plus the
    anchor regularizer."""
    if not batch:
        raise ValueError("batch must be non-empty")
    mean = sum(entity_loss(relation, target, space) for relation, target in batch) / len(batch)
    return float(mean + prototype_regularizer(space))


def total_loss_grad(space: PrototypeSpace, batch) -> dict:
    if not batch:
        raise ValueError("batch must be non-empty")
    anchor_grad = np.zeros_like(space.predicate_anchors)
    temperature_grad = 0.0
    for relation, target in batch:
        grads = entity_loss_grad(relation, target, space)
        anchor_grad += grads["predicate_anchors"]
        temperature_grad += grads["temperature"]
    anchor_grad /= len(batch)
    temperature_grad /= len(batch)
    anchor_grad += prototype_regularizer_grad(space)["predicate_anchors"]
    return {"predicate_anchors": anchor_grad, "temperature": temperature_grad}


def numeric_gradient(function, space: PrototypeSpace, epsilon: float = 1e-5) -> dict:
    """Central finite differences of ``function(space)`` w.r.t. every
    parameter in the space, the temperature included."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    work = space.clone()
    gradients: dict = {}
    for name, array in work.param_items().items():
        grad = np.zeros_like(array)
        flat = array.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            high = function(work)
            flat[i] = original - epsilon
            low = function(work)
            flat[i] = original
            grad_flat[i] = (high - low) / (2.0 * epsilon)
        gradients[name] = grad
    original = work.temperature
    work.temperature = original + epsilon
    high = function(work)
    work.temperature = original - epsilon
    low = function(work)
    work.temperature = original
    gradients["temperature"] = (high - low) / (2.0 * epsilon)
    return gradients


def numeric_gradient_array(function, x: np.ndarray, epsilon: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``function(x)`` for a plain array."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float).copy()
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + epsilon
        high = function(x)
        flat[i] = original - epsilon
        low = function(x)
        flat[i] = original
        grad_flat[i] = (high - low) / (2.0 * epsilon)
    return grad
