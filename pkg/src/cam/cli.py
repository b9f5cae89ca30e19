"""Command-line entry points: preprocess, train, evaluate, predict, explain, serve."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import preprocess as prep
from .config import RunConfig, load_label_map
from .errors import CamError, MissingMeaningError, NodeNotFoundError
from .explain import dialogue_path, explain
from .pipeline import CamModel, build, evaluate_model
from .qaf import validate
from .reasoner import evaluate as evaluate_strengths
from .reasoner import predict_batch
from .semantics import EmbeddingTable

log = logging.getLogger("cam")


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CAM_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in ("dataset", "out", "threshold", "model"):
        value = getattr(args, name, None)
        if value is not None and hasattr(cfg, name):
            setattr(cfg, name, value)
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "seeds", None):
        cfg.seeds = [int(s) for s in args.seeds]
    return cfg


def _load_dataset(cfg: RunConfig) -> prep.RawDataset:
    if not cfg.dataset:
        raise CamError("no dataset path given (config 'dataset' or --dataset)")
    return prep.load_csv(cfg.dataset, cfg.label_column or "label", cfg.label_positive)


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    dataset = _load_dataset(cfg)
    sentinels = cfg.sentinels_for(dataset.columns)
    dataset = prep.drop_empty_rows(dataset, {c: frozenset(s) for c, s in sentinels.items()})
    seed = cfg.seeds[0]
    train_idx, _ = prep.split_indices(len(dataset), seed, cfg.eval_fraction)
    model = prep.fit(dataset.subset(train_idx), kinds=cfg.kinds, sentinels=sentinels,
                     label_column=cfg.label_column)
    out = Path(args.out or "preprocess.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    print(f"preprocess model written to {out} (fit on train split of seed {seed})")
    if args.dump_transformed:
        matrix = model.apply_dataset(dataset)
        with open(args.dump_transformed, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(dataset.columns)
            writer.writerows(matrix.tolist())
        print(f"transformed dataset written to {args.dump_transformed}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    dataset = _load_dataset(cfg)
    embeddings = EmbeddingTable.load(cfg.require_embeddings())
    label_map = load_label_map(cfg.label_map) if cfg.label_map else None
    build_cfg = cfg.build_config(dataset.columns, label_map)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_seed = []
    for seed in cfg.seeds:
        log.info("training seed %d over %d rows, %d columns", seed, len(dataset), len(dataset.columns))
        cam = build(dataset, embeddings, build_cfg, seed=seed)
        for round_report in cam.rounds:
            log.debug(
                "seed %d round %d: org %.4f, %d candidates, consolidated %.4f",
                seed, round_report.round, round_report.org_auc,
                len(round_report.candidates), round_report.consolidated_auc,
            )
        report = validate(cam.qaf)
        if not report.ok:
            raise CamError(f"seed {seed}: built model failed validation: {report.violations}")
        model_path = out_dir / f"model_seed{seed}.json"
        cam.save(model_path)
        rounds_path = out_dir / f"rounds_seed{seed}.json"
        with open(rounds_path, "w", encoding="utf-8") as fh:
            json.dump([r.to_document() for r in cam.rounds], fh, indent=2)
            fh.write("\n")
        per_seed.append({"seed": seed, "eval_auc": cam.eval_auc,
                         "model": model_path.name, "rounds": rounds_path.name})
        print(f"seed {seed}: eval AUC {cam.eval_auc * 100:.2f}  -> {model_path}")
        if report.inert_nodes:
            print(f"seed {seed}: inert nodes {list(report.inert_nodes)}")

    aucs = np.array([r["eval_auc"] for r in per_seed])
    summary = {
        "seeds": cfg.seeds,
        "per_seed": per_seed,
        "mean_auc": float(aucs.mean()),
        "std_auc": float(aucs.std(ddof=0)),
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"mean eval AUC {aucs.mean() * 100:.2f} (std {aucs.std(ddof=0) * 100:.2f}) over seeds {cfg.seeds}")
    return 0


def _load_model(args) -> CamModel:
    if not args.model:
        raise CamError("no model path given (--model)")
    return CamModel.load(args.model)


def cmd_evaluate(args) -> int:
    cam = _load_model(args)
    cfg = _load_config(args)
    dataset = prep.load_csv(args.dataset or cfg.dataset,
                            cfg.label_column or cam.preprocess.label_column or "label",
                            cfg.label_positive)
    sentinels = {c.name: c.sentinels for c in cam.preprocess.columns}
    dataset = prep.drop_empty_rows(dataset, sentinels)
    if args.split != "all":
        fraction = cam.config.get("eval_fraction", 0.2) if isinstance(cam.config, dict) else 0.2
        train_idx, eval_idx = prep.split_indices(len(dataset), cam.seed, fraction)
        dataset = dataset.subset(train_idx if args.split == "train" else eval_idx)
    metrics = evaluate_model(cam, dataset)
    print(json.dumps(metrics))
    return 0


def _read_instance(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "features" in doc:
        doc = doc["features"]
    if not isinstance(doc, dict):
        raise CamError("instance file must be {feature: raw value} or {'features': {...}}")
    return doc


def cmd_predict(args) -> int:
    cam = _load_model(args)
    if args.features:
        features = _read_instance(args.features)
        x = cam.preprocess.apply_mapping(features)
        strengths = evaluate_strengths(cam.qaf, x)
        print(json.dumps({"score": strengths[cam.qaf.root], "strengths": strengths.strengths}))
        return 0
    if not args.dataset:
        raise CamError("predict needs --features or --dataset")
    cfg = _load_config(args)
    dataset = prep.load_csv(args.dataset, cfg.label_column or cam.preprocess.label_column or "label",
                            cfg.label_positive)
    matrix = cam.preprocess.apply_dataset(dataset)
    scores = predict_batch(cam.qaf, matrix)
    out = args.out or "scores.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "score"])
        for i, s in enumerate(scores):
            writer.writerow([i, repr(float(s))])
    print(f"{len(scores)} scores written to {out}")
    if args.dump_strengths:
        Path(args.dump_strengths).mkdir(parents=True, exist_ok=True)
        for i, row in enumerate(matrix):
            sa = evaluate_strengths(cam.qaf, row)
            with open(Path(args.dump_strengths) / f"row{i}.json", "w", encoding="utf-8") as fh:
                json.dump(sa.strengths, fh, indent=2)
    return 0


def _resolve_query(cam: CamModel, query: str):
    if cam.qaf.has_node(query):
        return query
    by_label = [n.id for n in cam.qaf.nodes if n.label == query]
    if len(by_label) == 1:
        return by_label[0]
    raise NodeNotFoundError(f"unknown argument: {query}")


def cmd_explain(args) -> int:
    cam = _load_model(args)
    features = _read_instance(args.instance)
    x = cam.preprocess.apply_mapping(features)
    strengths = evaluate_strengths(cam.qaf, x)
    ranking = cam.config.get("attacker_ranking", "influence") if isinstance(cam.config, dict) else "influence"
    if args.attacker_ranking:
        ranking = args.attacker_ranking

    if args.path:
        for step in dialogue_path(cam.qaf, strengths, features, ranking):
            label = cam.qaf.node(step.subject).label
            print(f"user: Why is {label} evaluated as {step.subject_strength:.2f}?")
            for line in step.lines:
                print(f"CAM: {line}")
        return 0

    stream = sys.stdin
    while True:
        line = stream.readline()
        if not line:
            break
        query = line.strip()
        if not query:
            continue
        try:
            node_id = _resolve_query(cam, query)
        except NodeNotFoundError as exc:
            print(str(exc))
            continue
        step = explain(cam.qaf, strengths, node_id, features, ranking)
        label = cam.qaf.node(node_id).label
        print(f"user: Why is {label} evaluated as {step.subject_strength:.2f}?")
        for line_text in step.lines:
            print(f"CAM: {line_text}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cam = _load_model(args)
    report = validate(cam.qaf)
    if not report.ok:
        raise CamError(f"model failed validation: {report.violations}")
    app = create_app(cam)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cam", description="Concept-and-argumentation model engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", help="CSV dataset path (overrides config)")
        p.add_argument("--seed", type=int, help="use a single seed")
        if model:
            p.add_argument("--model", required=True, help="model JSON path")

    p = sub.add_parser("preprocess", help="fit per-column transforms")
    common(p)
    p.add_argument("--out", help="output path for the preprocess model JSON")
    p.add_argument("--dump-transformed", help="also dump the transformed dataset CSV")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="build models for each seed")
    common(p)
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seeds", nargs="*", type=int, help="seeds to run")
    p.add_argument("--threshold", type=float, help="grouping similarity threshold")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="AUC of a model over a labeled CSV")
    common(p, model=True)
    p.add_argument("--split", choices=["all", "train", "eval"], default="all")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="score instances")
    common(p, model=True)
    p.add_argument("--features", help="JSON file with one instance's raw features")
    p.add_argument("--out", help="output CSV for batch scores")
    p.add_argument("--dump-strengths", help="directory for per-row strength dumps")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="interactive dialogical explanation")
    common(p, model=True)
    p.add_argument("--instance", required=True, help="JSON file with raw feature values")
    p.add_argument("--path", action="store_true", help="print the dominated reasoning path and exit")
    p.add_argument("--attacker-ranking", choices=["influence", "literal"])
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("serve", help="HTTP service over a trained model")
    common(p, model=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "port", None) is not None and not (1024 <= args.port <= 65535):
        parser.error("port must lie in [1024, 65535]")
    try:
        return args.func(args)
    except MissingMeaningError as exc:
        print(f"error: missing-meaning: {exc}", file=sys.stderr)
        return 2
    except CamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
