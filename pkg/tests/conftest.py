from __future__ import annotations

import sys
from pathlib import Path

import pytest

from perturbkit.attack import ResourcePaths
from perturbkit.constraints import load_pos_lexicon, load_stopwords
from perturbkit.dataset import DatasetSchema, load_csv
from perturbkit.model_bridge import BuiltinLexiconClassifier
from perturbkit.transformations import load_embedding_table, load_synonym_lexicon

ASSETS = Path(__file__).resolve().parent.parent / "assets"


@pytest.fixture(scope="session")
def assets_dir() -> Path:
    return ASSETS


@pytest.fixture(scope="session")
def resources() -> ResourcePaths:
    return ResourcePaths(
        embedding=str(ASSETS / "toy_embedding.txt"),
        lexicon=str(ASSETS / "toy_synonyms.json"),
        stopwords=str(ASSETS / "stopwords.txt"),
        pos_lexicon=str(ASSETS / "pos_lexicon.tsv"),
    )


@pytest.fixture(scope="session")
def sentiment_model_path() -> str:
    return str(ASSETS / "sentiment_lexicon.tsv")


@pytest.fixture()
def sentiment_model(sentiment_model_path) -> BuiltinLexiconClassifier:
    return BuiltinLexiconClassifier.from_file(sentiment_model_path)


@pytest.fixture(scope="session")
def demo_records():
    return load_csv(ASSETS / "demo_reviews.csv", DatasetSchema(("text",), "label"))


@pytest.fixture(scope="session")
def toy_embedding():
    return load_embedding_table(ASSETS / "toy_embedding.txt", k=8)


@pytest.fixture(scope="session")
def toy_synonyms():
    return load_synonym_lexicon(ASSETS / "toy_synonyms.json")


@pytest.fixture(scope="session")
def toy_stopwords():
    return load_stopwords(ASSETS / "stopwords.txt")


@pytest.fixture(scope="session")
def toy_pos():
    return load_pos_lexicon(ASSETS / "pos_lexicon.tsv")


@pytest.fixture(scope="session")
def stub_server_command(sentiment_model_path=str(ASSETS / "sentiment_lexicon.tsv")):
    def command(model: str = "lexicon", latency_ms: int = 0) -> str:
        parts = [sys.executable, "-m", "perturbkit.stub_server", "--model", model]
        if model == "lexicon":
            parts += ["--weights", sentiment_model_path]
        if latency_ms:
            parts += ["--latency-ms", str(latency_ms)]
        return " ".join(parts)

    return command
