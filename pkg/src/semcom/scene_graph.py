"""Scene graphs: typed objects and relations, triple serialization, region
quantization on a 3x3 grid, and the number/location/relationship summary."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ROW_LABELS = ("top", "middle", "bottom")
COL_LABELS = ("left", "center", "right")
REGION_LABELS = tuple(f"{row}-{col}" for row in ROW_LABELS for col in COL_LABELS)


class SceneGraphError(ValueError):
    """Schema violation in a scene-graph document.

    ``path`` names the offending field, e.g. ``objects[2].bbox``.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0


@dataclass(frozen=True)
class ObjectNode:
    id: int
    category: str
    box: BoundingBox


@dataclass(frozen=True)
class RelationEdge:
    subject_id: int
    predicate: str
    object_id: int


@dataclass(frozen=True)
class SceneGraph:
    image_width: float
    image_height: float
    objects: tuple[ObjectNode, ...]
    relations: tuple[RelationEdge, ...]

    def object_by_id(self, object_id: int) -> ObjectNode:
        for node in self.objects:
            if node.id == object_id:
                return node
        raise KeyError(object_id)

    @property
    def categories(self) -> dict[int, str]:
        return {node.id: node.category for node in self.objects}


@dataclass(frozen=True)
class StructuredSummary:
    """The number/location/relationship record the receiver reasons over.

    ``categories`` maps object id to category so chunks can attribute
    regions; it is derived bookkeeping and never serialized.
    """

    number: dict[str, int]
    location: dict[int, str]
    relationship: tuple[tuple[str, str, str], ...]
    categories: dict[int, str] = field(default_factory=dict, compare=False)


def load_labels(path) -> list[str]:
    """Read a newline-delimited label file, skipping blank lines."""
    with open(path, encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]


def _require(condition: bool, message: str, path: str) -> None:
    if not condition:
        raise SceneGraphError(message, path)


def load_scene_graph(document: str, categories=None) -> SceneGraph:
    """Parse and validate a scene-graph JSON document.

    When ``categories`` is given, every object category must come from it.
    Raises :class:`SceneGraphError` naming the offending field otherwise.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SceneGraphError(f"invalid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "document must be an object", "")

    image = raw.get("image")
    _require(isinstance(image, dict), "missing image block", "image")
    width = image.get("width")
    height = image.get("height")
    _require(isinstance(width, (int, float)) and width > 0, "width must be positive", "image.width")
    _require(isinstance(height, (int, float)) and height > 0, "height must be positive", "image.height")

    allowed = set(categories) if categories is not None else None
    objects: list[ObjectNode] = []
    seen_ids: set[int] = set()
    raw_objects = raw.get("objects", [])
    _require(isinstance(raw_objects, list), "objects must be a list", "objects")
    for i, entry in enumerate(raw_objects):
        where = f"objects[{i}]"
        _require(isinstance(entry, dict), "object must be an object", where)
        object_id = entry.get("id")
        _require(isinstance(object_id, int) and not isinstance(object_id, bool), "id must be an integer", f"{where}.id")
        _require(object_id not in seen_ids, f"duplicate object id {object_id}", f"{where}.id")
        seen_ids.add(object_id)
        category = entry.get("category")
        _require(isinstance(category, str) and bool(category), "category must be a non-empty string", f"{where}.category")
        if allowed is not None:
            _require(category in allowed, f"unknown category {category!r}", f"{where}.category")
        bbox = entry.get("bbox")
        _require(isinstance(bbox, list) and len(bbox) == 4, "bbox must be [x_min, y_min, x_max, y_max]", f"{where}.bbox")
        _require(all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox), "bbox entries must be numbers", f"{where}.bbox")
        x_min, y_min, x_max, y_max = (float(v) for v in bbox)
        _require(x_min < x_max and y_min < y_max, "bbox must satisfy x_min < x_max and y_min < y_max", f"{where}.bbox")
        _require(0 <= x_min and x_max <= width and 0 <= y_min and y_max <= height, "bbox must lie within the image", f"{where}.bbox")
        objects.append(ObjectNode(object_id, category, BoundingBox(x_min, y_min, x_max, y_max)))

    relations: list[RelationEdge] = []
    raw_relations = raw.get("relations", [])
    _require(isinstance(raw_relations, list), "relations must be a list", "relations")
    for i, entry in enumerate(raw_relations):
        where = f"relations[{i}]"
        _require(isinstance(entry, dict), "relation must be an object", where)
        subject = entry.get("subject")
        obj = entry.get("object")
        predicate = entry.get("predicate")
        _require(isinstance(subject, int) and not isinstance(subject, bool), "subject must be an integer id", f"{where}.subject")
        _require(isinstance(obj, int) and not isinstance(obj, bool), "object must be an integer id", f"{where}.object")
        _require(isinstance(predicate, str) and bool(predicate), "predicate must be a non-empty string", f"{where}.predicate")
        _require(subject in seen_ids, f"subject id {subject} does not name an object", f"{where}.subject")
        _require(obj in seen_ids, f"object id {obj} does not name an object", f"{where}.object")
        _require(subject != obj, "relation endpoints must differ", where)
        relations.append(RelationEdge(subject, predicate, obj))

    return SceneGraph(float(width), float(height), tuple(objects), tuple(relations))


def serialize_triples(graph: SceneGraph) -> str:
    """Render the graph as text clauses joined by ``"; "``.

    Relation clauses come first, ordered by (subject id, object id); objects
    that appear in no relation follow as bare category clauses.
    """
    names = graph.categories
    clauses = []
    linked: set[int] = set()
    for edge in sorted(graph.relations, key=lambda e: (e.subject_id, e.object_id)):
        clauses.append(f"{names[edge.subject_id]} {edge.predicate} {names[edge.object_id]}")
    for edge in graph.relations:
        linked.add(edge.subject_id)
        linked.add(edge.object_id)
    for node in sorted(graph.objects, key=lambda n: n.id):
        if node.id not in linked:
            clauses.append(node.category)
    return "; ".join(clauses)


def _third_index(coordinate: float, extent: float) -> int:
    # boundary points belong to the lower-index cell, so left/top wins
    if coordinate <= extent / 3.0:
        return 0
    if coordinate <= 2.0 * extent / 3.0:
        return 1
    return 2


def quantize_location(box: BoundingBox, width: float, height: float) -> str:
    """Map a box center onto the 3x3 region grid."""
    if width <= 0 or height <= 0:
        raise ValueError("image extent must be positive")
    cx, cy = box.center
    row = _third_index(cy, height)
    col = _third_index(cx, width)
    return f"{ROW_LABELS[row]}-{COL_LABELS[col]}"


def summarize(graph: SceneGraph) -> StructuredSummary:
    """Build the per-category counts, per-object regions, and category-level
    triples (in relation order) for a graph."""
    names = graph.categories
    number: dict[str, int] = {}
    location: dict[int, str] = {}
    for node in graph.objects:
        number[node.category] = number.get(node.category, 0) + 1
        location[node.id] = quantize_location(node.box, graph.image_width, graph.image_height)
    relationship = tuple(
        (names[edge.subject_id], edge.predicate, names[edge.object_id]) for edge in graph.relations
    )
    return StructuredSummary(number, location, relationship, dict(names))


def to_json(summary: StructuredSummary) -> str:
    """Canonical JSON: sorted keys, compact separators, ids as strings."""
    payload = {
        "number": {str(k): int(v) for k, v in summary.number.items()},
        "location": {str(k): v for k, v in summary.location.items()},
        "relationship": [list(t) for t in summary.relationship],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> StructuredSummary:
    """Parse canonical summary JSON back into a :class:`StructuredSummary`."""
    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValueError("summary must be a JSON object")
    missing = {"number", "location", "relationship"} - set(raw)
    if missing:
        raise ValueError(f"summary is missing keys: {sorted(missing)}")
    number_raw = raw["number"]
    location_raw = raw["location"]
    relationship_raw = raw["relationship"]
    if not isinstance(number_raw, dict) or not isinstance(location_raw, dict):
        raise ValueError("number and location must be JSON objects")
    if not isinstance(relationship_raw, list):
        raise ValueError("relationship must be a JSON list")
    number = {}
    for key, value in number_raw.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ValueError(f"count for {key!r} must be a non-negative integer")
        number[str(key)] = value
    location = {}
    for key, value in location_raw.items():
        if value not in REGION_LABELS:
            raise ValueError(f"unknown region label {value!r}")
        location[int(key)] = value
    relationship = []
    for entry in relationship_raw:
        if not isinstance(entry, list) or len(entry) != 3 or not all(isinstance(v, str) for v in entry):
            raise ValueError("relationship entries must be [subject, predicate, object] strings")
        relationship.append(tuple(entry))
    return StructuredSummary(number, location, tuple(relationship))
