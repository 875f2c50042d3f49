import pathlib

import pytest

from semcom.enhance import HashEmbedder
from semcom.evaluate import LabelSets, PipelineContext
from semcom.llm import MockLlm
from semcom.scene_graph import load_labels, load_scene_graph
from semcom.tokenizer import load_vocabulary

ROOT = pathlib.Path(__file__).resolve().parent.parent
SAMPLE = ROOT / "sample_data"
DATA = pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def vocab():
    return load_vocabulary(SAMPLE / "vocab.txt")


@pytest.fixture(scope="session")
def category_labels():
    return load_labels(SAMPLE / "categories.txt")


@pytest.fixture(scope="session")
def predicate_labels():
    return load_labels(SAMPLE / "predicates.txt")


@pytest.fixture(scope="session")
def labels(category_labels, predicate_labels):
    return LabelSets(tuple(category_labels), tuple(predicate_labels))


def _graph(name, categories=None):
    return load_scene_graph((SAMPLE / name).read_text(encoding="utf-8"), categories)


@pytest.fixture(scope="session")
def city_graph(category_labels):
    return _graph("city_block.json", category_labels)


@pytest.fixture(scope="session")
def harbor_graph(category_labels):
    return _graph("harbor.json", category_labels)


@pytest.fixture(scope="session")
def airfield_graph(category_labels):
    return _graph("airfield.json", category_labels)


@pytest.fixture
def context(vocab):
    return PipelineContext(vocab=vocab, llm=MockLlm(), embedder=HashEmbedder())
