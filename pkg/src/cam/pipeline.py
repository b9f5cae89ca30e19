"""Model construction: alternate semantic grouping with field-wise fitting
and AUC filtering until no new concept survives.

Each round trains the top layer over the current frontier, proposes
candidate pairs, fits each candidate field-wise against the frozen
context, and keeps a candidate only if its evaluation AUC does not drop
below the pre-candidate model's. Kept candidates replace their children
in the frontier and the top layer is retrained; if the combined insertion
ever degrades evaluation AUC, candidates are re-admitted greedily in
descending candidate-AUC order until non-degradation holds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import preprocess as prep
from .errors import MissingMeaningError, SchemaError, SingleClassError
from .learner import BaseFit, TrainConfig, logistic, train_base, train_field_wise
from .qaf import ArgumentNode, Edge, QafModel, clamp_base_score, from_document, to_document
from .reasoner import auc, filter_concept, predict_batch
from .semantics import ConceptCandidate, EmbeddingTable, abstract_concept, propose_groups

SCHEMA_VERSION = 1


@dataclass
class BuildConfig:
    """Everything build() needs besides the dataset and embeddings."""

    threshold: float = 0.55
    max_rounds: int = 5
    train: TrainConfig = field(default_factory=TrainConfig)
    root_id: str = "c_g"
    root_label: str = "target"
    eval_fraction: float = 0.2
    kinds: dict = field(default_factory=dict)
    sentinels: dict = field(default_factory=dict)
    label_map: Optional[dict] = None
    label_column: Optional[str] = None

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if not (0.0 < self.threshold <= 1.0):
            raise ValueError("threshold must lie in (0, 1]")

    def to_document(self) -> dict:
        return {
            "threshold": self.threshold,
            "max_rounds": self.max_rounds,
            "train": self.train.to_document(),
            "root_id": self.root_id,
            "root_label": self.root_label,
            "eval_fraction": self.eval_fraction,
            "kinds": dict(self.kinds),
            "sentinels": {k: list(v) for k, v in self.sentinels.items()},
            "label_map": self.label_map,
            "label_column": self.label_column,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "BuildConfig":
        return cls(
            threshold=doc.get("threshold", 0.55),
            max_rounds=doc.get("max_rounds", 5),
            train=TrainConfig.from_document(doc.get("train", {})),
            root_id=doc.get("root_id", "c_g"),
            root_label=doc.get("root_label", "target"),
            eval_fraction=doc.get("eval_fraction", 0.2),
            kinds=doc.get("kinds", {}),
            sentinels=doc.get("sentinels", {}),
            label_map=doc.get("label_map"),
            label_column=doc.get("label_column"),
        )


@dataclass
class CandidateReport:
    id: str
    children: tuple[str, str]
    similarity: float
    mixed: bool
    auc_candidate: float
    auc_org: float
    kept: bool
    readmitted: bool = False

    def to_document(self) -> dict:
        return {
            "id": self.id, "children": list(self.children), "similarity": self.similarity,
            "mixed": self.mixed, "auc_candidate": self.auc_candidate, "auc_org": self.auc_org,
            "kept": self.kept, "readmitted": self.readmitted,
        }


@dataclass
class RoundReport:
    round: int
    frontier: list[str]
    org_auc: float
    candidates: list[CandidateReport]
    post_frontier: list[str]
    consolidated_auc: float
    eval_split: dict

    def to_document(self) -> dict:
        return {
            "round": self.round,
            "frontier": list(self.frontier),
            "org_auc": self.org_auc,
            "candidates": [c.to_document() for c in self.candidates],
            "post_frontier": list(self.post_frontier),
            "consolidated_auc": self.consolidated_auc,
            "eval_split": dict(self.eval_split),
        }


@dataclass
class CamModel:
    """The trained artifact: tree, transforms, reports, and provenance."""

    qaf: QafModel
    preprocess: prep.PreprocessModel
    rounds: list[RoundReport]
    config: dict
    seed: int
    eval_auc: float
    sample_row: Optional[dict] = None

    def to_document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "eval_auc": self.eval_auc,
            "qaf": to_document(self.qaf),
            "preprocess": self.preprocess.to_document(),
            "rounds": [r.to_document() for r in self.rounds],
            "config": self.config,
            "sample_row": self.sample_row,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "CamModel":
        if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unknown model schema version {doc.get('schema_version')!r}")
        rounds = [
            RoundReport(
                round=rd["round"], frontier=rd["frontier"], org_auc=rd["org_auc"],
                candidates=[CandidateReport(
                    id=cd["id"], children=tuple(cd["children"]), similarity=cd["similarity"],
                    mixed=cd["mixed"], auc_candidate=cd["auc_candidate"], auc_org=cd["auc_org"],
                    kept=cd["kept"], readmitted=cd.get("readmitted", False),
                ) for cd in rd["candidates"]],
                post_frontier=rd["post_frontier"], consolidated_auc=rd["consolidated_auc"],
                eval_split=rd.get("eval_split", {}),
            )
            for rd in doc.get("rounds", [])
        ]
        return cls(
            qaf=from_document(doc["qaf"]),
            preprocess=prep.PreprocessModel.from_document(doc["preprocess"]),
            rounds=rounds,
            config=doc.get("config", {}),
            seed=int(doc.get("seed", 0)),
            eval_auc=float(doc["eval_auc"]),
            sample_row=doc.get("sample_row"),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CamModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


class _Workspace:
    """Mutable state for one build: node registry and frozen subtrees."""

    def __init__(self, feature_ids, embeddings: EmbeddingTable, config: BuildConfig):
        self.config = config
        self.embeddings = EmbeddingTable(
            dim=embeddings.dim, provenance=embeddings.provenance, vectors=dict(embeddings.vectors)
        )
        label_map = config.label_map or {}
        self.nodes: dict[str, ArgumentNode] = {}
        for fid in feature_ids:
            entry = label_map.get(fid, {})
            self.nodes[fid] = ArgumentNode(
                id=fid, kind="feature", label=entry.get("label", fid),
                description=entry.get("description"),
                meaning=tuple(self.embeddings.get(fid)), round=0,
            )
        self.feature_ids = list(feature_ids)
        self.concept_order: list[str] = []
        self.internal_edges: dict[str, tuple[Edge, Edge]] = {}

    def remove_concept(self, concept_id: str) -> None:
        self.nodes.pop(concept_id, None)
        self.internal_edges.pop(concept_id, None)
        if concept_id in self.concept_order:
            self.concept_order.remove(concept_id)
        self.embeddings.vectors.pop(concept_id, None)

    def add_concept(self, candidate: ConceptCandidate, round_index: int,
                    child_weights: tuple[float, float], bias: float) -> None:
        node, edges = abstract_concept(
            candidate, round_index, label_map=self.config.label_map, embeddings=self.embeddings
        )
        node = ArgumentNode(
            id=node.id, kind="concept", label=node.label, description=node.description,
            meaning=node.meaning, base_score=clamp_base_score(logistic(bias)), round=round_index,
        )
        self.nodes[node.id] = node
        self.embeddings.with_vector(node.id, np.asarray(node.meaning))
        self.internal_edges[node.id] = (
            Edge(edges[0].child, node.id, child_weights[0]),
            Edge(edges[1].child, node.id, child_weights[1]),
        )
        self.concept_order.append(node.id)

    def logit_beta(self, concept_id: str) -> float:
        beta = self.nodes[concept_id].base_score
        return math.log(beta / (1.0 - beta))

    def materialize(self, concept_id: str, columns: dict[str, np.ndarray]) -> np.ndarray:
        """Strength column of a frozen concept subtree, exactly as the reasoner sees it."""
        e_j, e_k = self.internal_edges[concept_id]
        return logistic(self.logit_beta(concept_id) + e_j.weight * columns[e_j.child] + e_k.weight * columns[e_k.child])

    def assemble(self, frontier: list[str], weights: dict[str, float], bias: float,
                 embedding_dim: int, round_index: int) -> QafModel:
        """Full tree for a given top layer; concept internals are frozen."""
        root = ArgumentNode(
            id=self.config.root_id, kind="root", label=self.config.root_label,
            base_score=clamp_base_score(logistic(bias)), round=round_index,
        )
        edges: list[Edge] = [Edge(fid, root.id, float(weights[fid])) for fid in frontier]
        included: set[str] = set()
        stack = list(frontier)
        while stack:
            node_id = stack.pop(0)
            if node_id in included:
                continue
            included.add(node_id)
            if node_id in self.internal_edges:
                e_j, e_k = self.internal_edges[node_id]
                edges.append(e_j)
                edges.append(e_k)
                stack.extend([e_j.child, e_k.child])
        nodes = [self.nodes[fid] for fid in self.feature_ids]
        nodes += [self.nodes[cid] for cid in self.concept_order if cid in included]
        nodes.append(root)
        kept_edges = tuple(e for e in edges if abs(e.weight) >= 1e-12)
        return QafModel(
            nodes=tuple(nodes), edges=kept_edges, root=root.id,
            embedding_dim=embedding_dim, feature_order=tuple(self.feature_ids),
        )


def _model_auc(model: QafModel, x_eval: np.ndarray, y_eval: np.ndarray) -> float:
    return auc(predict_batch(model, x_eval), y_eval)


def reconcile_round(kept_reports, consolidate, org_auc):
    """Integrate kept candidates without degrading the evaluation AUC.

    Tries the full set first. If the combined insertion drops below the
    round's org AUC, candidates are re-admitted greedily in descending
    candidate-AUC order (ties by id), keeping one only while the
    consolidated retrain stays at or above org. Returns the accepted
    reports (readmitted ones marked) and the final consolidation result.
    """
    result = consolidate(list(kept_reports))
    if result[2] >= org_auc:
        return list(kept_reports), result
    accepted: list = []
    best = None
    for report in sorted(kept_reports, key=lambda r: (-r.auc_candidate, r.id)):
        trial = accepted + [report]
        trial_result = consolidate(trial)
        if trial_result[2] >= org_auc:
            accepted = trial
            best = trial_result
            report.readmitted = True
    if best is None:
        return [], result
    return accepted, best


def build(
    dataset: prep.RawDataset,
    embeddings: EmbeddingTable,
    config: BuildConfig,
    seed: int = 0,
) -> CamModel:
    """Construct a CamModel from a labeled dataset and meaning vectors."""
    missing = [c for c in dataset.columns if c not in embeddings]
    if missing:
        raise MissingMeaningError(f"no meaning vector for feature columns: {missing}")

    sentinel_map = {c: frozenset(s) for c, s in (config.sentinels or {}).items()}
    dataset = prep.drop_empty_rows(dataset, sentinel_map)
    train_idx, eval_idx = prep.split_indices(len(dataset), seed, config.eval_fraction)
    train_split = dataset.subset(train_idx)
    eval_split = dataset.subset(eval_idx)
    if len(set(np.unique(eval_split.labels))) < 2 or len(set(np.unique(train_split.labels))) < 2:
        raise SingleClassError("train or eval split contains a single class")

    pre = prep.fit(train_split, kinds=config.kinds, sentinels=config.sentinels,
                   label_column=config.label_column)
    x_train = pre.apply_dataset(train_split)
    x_eval = pre.apply_dataset(eval_split)
    y_train, y_eval = train_split.labels, eval_split.labels

    ws = _Workspace(dataset.columns, embeddings, config)
    cols_train: dict[str, np.ndarray] = {c: x_train[:, i] for i, c in enumerate(dataset.columns)}
    cols_eval: dict[str, np.ndarray] = {c: x_eval[:, i] for i, c in enumerate(dataset.columns)}

    frontier = list(dataset.columns)
    eval_info = {
        "seed": seed, "fraction": config.eval_fraction,
        "n": int(len(eval_split)), "positives": int(y_eval.sum()),
    }
    rounds: list[RoundReport] = []
    final_fit: Optional[BaseFit] = None
    final_frontier = list(frontier)

    for round_index in range(1, config.max_rounds + 1):
        matrix_train = np.column_stack([cols_train[c] for c in frontier])
        base_fit = train_base(matrix_train, y_train, config.train, frontier=list(frontier))
        org_model = ws.assemble(frontier, dict(zip(frontier, base_fit.weights)), base_fit.bias,
                                embeddings.dim, round_index)
        org_auc = _model_auc(org_model, x_eval, y_eval)
        final_fit, final_frontier = base_fit, list(frontier)

        candidates = propose_groups(frontier, ws.embeddings, config.threshold, round_index)
        if not candidates:
            rounds.append(RoundReport(round_index, list(frontier), org_auc, [], list(frontier),
                                      org_auc, dict(eval_info)))
            break

        fits = {}
        reports: list[CandidateReport] = []
        for cand in candidates:
            fw = train_field_wise(base_fit, cand.id, cand.children, list(frontier),
                                  matrix_train, y_train, config.train)
            fits[cand.id] = fw
            cand_frontier = [c for c in frontier if c not in cand.children] + [cand.id]
            trial_ws_weights = {c: w for c, w in zip(frontier, base_fit.weights) if c not in cand.children}
            trial_ws_weights[cand.id] = fw.concept_weight
            ws.add_concept(cand, round_index, fw.child_weights, fw.concept_bias)
            cand_model = ws.assemble(cand_frontier, trial_ws_weights, base_fit.bias,
                                     embeddings.dim, round_index)
            auc_cand = _model_auc(cand_model, x_eval, y_eval)
            kept = filter_concept(auc_cand, org_auc)
            mixed = len({ws.nodes[c].kind for c in cand.children}) > 1
            reports.append(CandidateReport(cand.id, cand.children, cand.similarity, mixed,
                                           auc_cand, org_auc, kept))
            if not kept:
                ws.remove_concept(cand.id)

        kept_reports = [r for r in reports if r.kept]
        if not kept_reports:
            rounds.append(RoundReport(round_index, list(frontier), org_auc, reports,
                                      list(frontier), org_auc, dict(eval_info)))
            break

        def consolidate(selection: list[CandidateReport]):
            grouped = {c for r in selection for c in r.children}
            new_frontier = [c for c in frontier if c not in grouped] + [r.id for r in selection]
            for r in selection:
                if r.id not in cols_train:
                    cols_train[r.id] = ws.materialize(r.id, cols_train)
                    cols_eval[r.id] = ws.materialize(r.id, cols_eval)
            matrix = np.column_stack([cols_train[c] for c in new_frontier])
            fit = train_base(matrix, y_train, config.train, frontier=list(new_frontier))
            model = ws.assemble(new_frontier, dict(zip(new_frontier, fit.weights)), fit.bias,
                                embeddings.dim, round_index)
            return new_frontier, fit, _model_auc(model, x_eval, y_eval)

        kept_reports, (new_frontier, cons_fit, cons_auc) = reconcile_round(
            kept_reports, consolidate, org_auc
        )
        dropped = {r.id for r in reports if r.kept} - {r.id for r in kept_reports}
        for report in reports:
            if report.id in dropped:
                report.kept = False
                ws.remove_concept(report.id)
        if not kept_reports:
            rounds.append(RoundReport(round_index, list(frontier), org_auc, reports,
                                      list(frontier), org_auc, dict(eval_info)))
            break

        rounds.append(RoundReport(round_index, list(frontier), org_auc, reports,
                                  list(new_frontier), cons_auc, dict(eval_info)))
        frontier = new_frontier
        final_fit, final_frontier = cons_fit, list(new_frontier)

    model = ws.assemble(final_frontier, dict(zip(final_frontier, final_fit.weights)),
                        final_fit.bias, embeddings.dim, rounds[-1].round if rounds else 1)
    eval_auc = _model_auc(model, x_eval, y_eval)
    sample_row = dict(zip(dataset.columns, (_jsonable(v) for v in dataset.rows[0]))) if dataset.rows else None
    return CamModel(
        qaf=model, preprocess=pre, rounds=rounds, config=config.to_document(),
        seed=seed, eval_auc=eval_auc, sample_row=sample_row,
    )


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def evaluate_model(cam: CamModel, dataset: prep.RawDataset) -> dict:
    """AUC of the model's predictions over a labeled split.

    The split must be disjoint from training when quoted as evaluation;
    that bookkeeping is the caller's.
    """
    matrix = cam.preprocess.apply_dataset(dataset)
    scores = predict_batch(cam.qaf, matrix)
    return {
        "auc": auc(scores, dataset.labels),
        "n": int(len(dataset)),
        "positives": int(dataset.labels.sum()),
    }
