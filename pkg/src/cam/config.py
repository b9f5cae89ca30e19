"""Run configuration shared by the CLI and the service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import MissingMeaningError, SchemaError
from .learner import TrainConfig
from .pipeline import BuildConfig


@dataclass
class RunConfig:
    """Parsed config file plus CLI overrides."""

    dataset: Optional[str] = None
    label_column: Optional[str] = None
    label_positive: Optional[object] = None
    embeddings: Optional[str] = None
    label_map: Optional[str] = None
    out: str = "artifacts"
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    threshold: float = 0.55
    max_rounds: int = 5
    root_id: str = "c_g"
    root_label: str = "target"
    eval_fraction: float = 0.2
    kinds: dict = field(default_factory=dict)
    sentinels: dict = field(default_factory=dict)
    one_hot_bins: bool = False  # reserved; binned one-hot encoding is not implemented
    train: TrainConfig = field(default_factory=TrainConfig)
    attacker_ranking: str = "influence"

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_document(doc, base_dir=Path(path).parent)

    @classmethod
    def from_document(cls, doc: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        if not isinstance(doc, dict):
            raise SchemaError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise SchemaError(f"unknown config fields: {unknown}")

        def resolve(p):
            if p is None or base_dir is None:
                return p
            candidate = Path(p)
            return str(candidate if candidate.is_absolute() else base_dir / candidate)

        cfg = cls(
            dataset=resolve(doc.get("dataset")),
            label_column=doc.get("label_column"),
            label_positive=doc.get("label_positive"),
            embeddings=resolve(doc.get("embeddings")),
            label_map=resolve(doc.get("label_map")),
            out=resolve(doc.get("out", "artifacts")),
            seeds=[int(s) for s in doc.get("seeds", [0, 1, 2, 3, 4])],
            threshold=float(doc.get("threshold", 0.55)),
            max_rounds=int(doc.get("max_rounds", 5)),
            root_id=doc.get("root_id", "c_g"),
            root_label=doc.get("root_label", "target"),
            eval_fraction=float(doc.get("eval_fraction", 0.2)),
            kinds=doc.get("kinds", {}),
            sentinels=doc.get("sentinels", {}),
            one_hot_bins=bool(doc.get("one_hot_bins", False)),
            train=TrainConfig.from_document(doc.get("train", {})),
            attacker_ranking=doc.get("attacker_ranking", "influence"),
        )
        if cfg.one_hot_bins:
            raise SchemaError("one_hot_bins is reserved and not implemented")
        return cfg

    def sentinels_for(self, columns: list[str]) -> dict:
        """Expand the "*" entry onto every column."""
        shared = list(self.sentinels.get("*", []))
        out = {}
        for col in columns:
            merged = shared + list(self.sentinels.get(col, []))
            if merged:
                out[col] = merged
        return out

    def build_config(self, columns: list[str], label_map: Optional[dict]) -> BuildConfig:
        return BuildConfig(
            threshold=self.threshold,
            max_rounds=self.max_rounds,
            train=self.train,
            root_id=self.root_id,
            root_label=self.root_label,
            eval_fraction=self.eval_fraction,
            kinds=self.kinds,
            sentinels=self.sentinels_for(columns),
            label_map=label_map,
            label_column=self.label_column,
        )

    def require_embeddings(self) -> str:
        if not self.embeddings:
            raise MissingMeaningError("no embeddings path configured")
        return self.embeddings


def load_label_map(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SchemaError("label map must be a JSON object of node id -> {label, description}")
    return doc
