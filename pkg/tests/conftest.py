import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from cam import preprocess as prep
from cam.pipeline import BuildConfig, CamModel, build
from cam.semantics import EmbeddingTable

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

warnings.filterwarnings("ignore", message="fit stopped at gradient norm")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def toy_dataset() -> prep.RawDataset:
    return prep.load_csv(FIXTURES / "toy_credit.csv", "label")


@pytest.fixture(scope="session")
def toy_embeddings() -> EmbeddingTable:
    return EmbeddingTable.load(FIXTURES / "toy_embeddings.json")


@pytest.fixture(scope="session")
def toy_build_config() -> BuildConfig:
    return BuildConfig(kinds={"region": "categorical"}, root_label="default_risk", max_rounds=4)


@pytest.fixture(scope="session")
def toy_cam(toy_dataset, toy_embeddings, toy_build_config) -> CamModel:
    return build(toy_dataset, toy_embeddings, toy_build_config, seed=0)


@pytest.fixture(scope="session")
def dialogue_cam() -> CamModel:
    return CamModel.load(FIXTURES / "dialogue_model.json")


@pytest.fixture(scope="session")
def dialogue_raw() -> dict:
    with open(FIXTURES / "dialogue_instance.json", "r", encoding="utf-8") as fh:
        return json.load(fh)["features"]


def random_flat_model(rng: np.random.Generator, n_features=None):
    """A concept-free tree with random weights, plus its parameters."""
    from cam.qaf import ArgumentNode, Edge, QafModel

    n = int(n_features or rng.integers(2, 9))
    names = [f"f{i}" for i in range(n)]
    weights = rng.uniform(-3, 3, n)
    bias = float(rng.uniform(-3, 3))
    nodes = [ArgumentNode(f, "feature", f, round=0) for f in names]
    nodes.append(ArgumentNode("c_g", "root", "root", base_score=1.0 / (1.0 + np.exp(-bias)), round=1))
    edges = [Edge(f, "c_g", float(w)) for f, w in zip(names, weights)]
    model = QafModel(nodes=tuple(nodes), edges=tuple(edges), root="c_g",
                     embedding_dim=0, feature_order=tuple(names))
    return model, weights, bias
