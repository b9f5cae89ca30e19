"""Concept-and-argumentation model engine for interpretable tabular classification."""

from .errors import CamError
from .learner import TrainConfig, logistic, train_base, train_field_wise
from .pipeline import BuildConfig, CamModel, build, evaluate_model
from .preprocess import PreprocessModel, RawDataset
from .qaf import ArgumentNode, Edge, QafModel, attackers, root_polarity, supporters, validate
from .reasoner import StrengthAssignment, auc, evaluate, filter_concept, predict
from .semantics import EmbeddingTable, abstract_concept, cosine_similarity, propose_groups

__all__ = [
    "ArgumentNode", "BuildConfig", "CamError", "CamModel", "Edge", "EmbeddingTable",
    "PreprocessModel", "QafModel", "RawDataset", "StrengthAssignment", "TrainConfig",
    "abstract_concept", "attackers", "auc", "build", "cosine_similarity", "evaluate",
    "evaluate_model", "filter_concept", "logistic", "predict", "propose_groups",
    "root_polarity", "supporters", "train_base", "train_field_wise", "validate",
]

__version__ = "0.1.0"
