"""Regenerate every committed fixture deterministically.

Run from the repository root:

    python tools/make_fixtures.py

Outputs land in fixtures/ and frontend/test/fixtures/. Requires both the
primary package and the exporter to be installed.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from cam.explain import explain
from cam.pipeline import CamModel
from cam.preprocess import ColumnTransform, PreprocessModel
from cam.qaf import ArgumentNode, Edge, QafModel, root_polarity, to_document, validate
from cam.reasoner import evaluate
from cam_exporter.export import DescriptionTable, export

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
FRONTEND_FIXTURES = ROOT / "frontend" / "test" / "fixtures"

# Appendix-style feature descriptions keyed by the dataset's column names.
FICO_DESCRIPTIONS = [
    ("ExternalRiskEstimate", "Consolidated version of risk markers."),
    ("MSinceOldestTradeOpen", "Months Since Oldest Trade Open."),
    ("MSinceMostRecentTradeOpen", "Months Since Most Recent Trade Open."),
    ("AverageMInFile", "Average Months in File."),
    ("NumSatisfactoryTrades", "Number Satisfactory Trades."),
    ("NumTrades60Ever2DerogPubRec", "Number Trades 60+ Ever."),
    ("NumTrades90Ever2DerogPubRec", "Number Trades 90+ Ever."),
    ("PercentTradesNeverDelq", "Percent Trades Never Delinquent."),
    ("MSinceMostRecentDelq", "Months Since Most Recent Delinquency."),
    (
        "MaxDelq2PublicRecLast12M",
        "Max Delinquency/Public Records Last 12 Months. And value of it from 0 to 7 "
        "indicates a drop in delinquent time from 120 days+ to never.",
    ),
    (
        "MaxDelqEver",
        "Max Delinquency Ever. And value of it from 0 to 7 indicates a drop in "
        "delinquent time from 120 days+ to never.",
    ),
    ("NumTotalTrades", "Number of Total Trades (total number of credit accounts)."),
    ("NumTradesOpeninLast12M", "Number of Trades Open in Last 12 Months."),
    (
        "PercentInstallTrades",
        "Percent Installment Trades. Installment is one of several equal payments "
        "for something, spread over an agreed period of time.",
    ),
    ("MSinceMostRecentInqexcl7days", "Months Since Most Recent Inquiries excluding 7days."),
    ("NumInqLast6M", "Number of Inquiries Last 6 Months."),
    ("NumInqLast6Mexcl7days", "Number of Inquiries Last 6 Months excluding 7days."),
    (
        "NetFractionRevolvingBurden",
        "Net Fraction Revolving Burden. This is revolving balance divided by credit limit.",
    ),
    (
        "NetFractionInstallBurden",
        "Net Fraction Installment Burden. This is installment balance divided by original loan amount.",
    ),
    ("NumRevolvingTradesWBalance", "Number Revolving Trades with Balance."),
    (
        "NumInstallTradesWBalance",
        "Number Installment Trades with Balance. Installment is one of several equal "
        "payments for something, spread over an agreed period of time.",
    ),
    ("NumBank2NatlTradesWHighUtilization", "Number of Trades with high utilization ratio."),
    ("PercentTradesWBalance", "Percent Trades with Balance."),
]


def write_fico_fixtures() -> None:
    desc_path = FIXTURES / "fico_descriptions.csv"
    with open(desc_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "description"])
        writer.writerows(FICO_DESCRIPTIONS)

    table = DescriptionTable.from_csv(desc_path)
    embeddings = export(table, "hashed-ngram-256")
    embeddings.provenance = "fixture:hashed-ngram-256"
    embeddings.save(FIXTURES / "fico_embeddings.json")

    config = {
        "dataset": "../data/heloc_dataset_v1.csv",
        "label_column": "RiskPerformance",
        "label_positive": "Bad",
        "embeddings": "fico_embeddings.json",
        "sentinels": {"*": [-9, -8, -7]},
        "root_label": "Risk",
        "seeds": [0, 1, 2, 3, 4],
        "threshold": 0.55,
        "max_rounds": 5,
        "out": "../artifacts/fico",
    }
    with open(FIXTURES / "fico_config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")


def write_toy_fixtures() -> None:
    rng = np.random.default_rng(7)
    n = 800
    income = np.round(np.exp(rng.normal(10.5, 0.5, n)), 2)
    debt_ratio = np.round(rng.beta(2, 5, n), 4)
    u = rng.uniform(0, 1, n)
    inq = rng.poisson(12 * u)
    inq_excl = inq - rng.binomial(inq, 0.25)
    late = rng.poisson(1.5, n)
    region = rng.choice(["A", "B", "C"], size=n, p=[0.5, 0.3, 0.2])

    # Label: a saturating both-inquiries-high interaction plus mild linear terms.
    u2 = np.minimum(inq / 12.0, 1.0)
    u3 = np.minimum(inq_excl / 9.0, 1.0)
    interaction = 1.0 / (1.0 + np.exp(-(10.0 * (u2 + u3) - 12.0)))
    z = (
        4.0 * interaction
        + 1.6 * (debt_ratio - 0.28) * 4.0
        + 0.35 * (late - 1.5)
        - 1.1 * (np.log(income) - 10.5) / 0.5
        + np.where(region == "B", 0.4, np.where(region == "C", -0.3, 0.0))
        - 1.8
    )
    labels = (rng.uniform(0, 1, n) < 1.0 / (1.0 + np.exp(-z))).astype(int)

    income_cells = [f"{v}" for v in income]
    for i in rng.choice(n, size=n // 20, replace=False):
        income_cells[i] = ""  # missing
    region_cells = list(region)
    for i in rng.choice(n, size=5, replace=False):
        region_cells[i] = ""

    with open(FIXTURES / "toy_credit.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["income", "debt_ratio", "num_inq_6m", "num_inq_6m_excl7d", "late_payments", "region", "label"]
        )
        for i in range(n):
            writer.writerow(
                [income_cells[i], debt_ratio[i], inq[i], inq_excl[i], late[i], region_cells[i], labels[i]]
            )

    dim = 8
    basis = np.eye(dim)
    pair_partner = 0.95 * basis[2] + math.sqrt(1 - 0.95**2) * basis[3]
    vectors = {
        "income": basis[0],
        "debt_ratio": basis[1],
        "num_inq_6m": basis[2],
        "num_inq_6m_excl7d": pair_partner / np.linalg.norm(pair_partner),
        "late_payments": basis[4],
        "region": basis[5],
    }
    with open(FIXTURES / "toy_embeddings.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"dim": dim, "provenance": "fixture", "vectors": {k: list(map(float, v)) for k, v in vectors.items()}},
            fh, indent=2,
        )
        fh.write("\n")

    config = {
        "dataset": "toy_credit.csv",
        "label_column": "label",
        "embeddings": "toy_embeddings.json",
        "label_map": "toy_labelmap.json",
        "kinds": {"region": "categorical"},
        "root_label": "default_risk",
        "seeds": [0, 1, 2],
        "threshold": 0.55,
        "max_rounds": 4,
        "out": "../artifacts/toy",
    }
    with open(FIXTURES / "toy_config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    with open(FIXTURES / "toy_labelmap.json", "w", encoding="utf-8") as fh:
        json.dump({"c1_0": {"label": "Inquiry", "description": "number of recent credit inquiries"}}, fh, indent=2)
        fh.write("\n")


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def build_dialogue_model() -> tuple[CamModel, dict]:
    """Hand-built tree whose strengths reproduce the worked dialogue example."""
    x = {
        "FractionInstallBurden": 1.0,
        "PercentInstallTrade": 0.22,
        "InstallTrade": 0.30,
        "TradeRecord": 0.40,
        "ExternalRisk": 0.70,
    }
    w_fi = {"FractionInstallBurden": 0.5, "PercentInstallTrade": 0.3}
    s_fi = 0.54
    b_fi = logit(s_fi) - sum(w_fi[c] * x[c] for c in w_fi)

    w_inst = {"FractionInstall": 0.9, "InstallTrade": 0.4}
    s_inst = 0.69
    b_inst = logit(s_inst) - (w_inst["FractionInstall"] * s_fi + w_inst["InstallTrade"] * x["InstallTrade"])

    w_root = {"Installment": 1.2, "TradeRecord": 0.8, "ExternalRisk": -0.5}
    s_root = 0.92
    b_root = logit(s_root) - (
        w_root["Installment"] * s_inst
        + w_root["TradeRecord"] * x["TradeRecord"]
        + w_root["ExternalRisk"] * x["ExternalRisk"]
    )

    def phi(z: float) -> float:
        return 1.0 / (1.0 + math.exp(-z))

    feature_order = ["FractionInstallBurden", "PercentInstallTrade", "InstallTrade", "TradeRecord", "ExternalRisk"]
    nodes = [
        ArgumentNode(fid, "feature", fid, round=0) for fid in feature_order
    ] + [
        ArgumentNode("FractionInstall", "concept", "FractionInstall", base_score=phi(b_fi), round=1),
        ArgumentNode("Installment", "concept", "Installment", base_score=phi(b_inst), round=2),
        ArgumentNode("Risk", "root", "Risk", base_score=phi(b_root), round=2),
    ]
    edges = [
        Edge("Installment", "Risk", w_root["Installment"]),
        Edge("TradeRecord", "Risk", w_root["TradeRecord"]),
        Edge("ExternalRisk", "Risk", w_root["ExternalRisk"]),
        Edge("FractionInstall", "Installment", w_inst["FractionInstall"]),
        Edge("InstallTrade", "Installment", w_inst["InstallTrade"]),
        Edge("FractionInstallBurden", "FractionInstall", w_fi["FractionInstallBurden"]),
        Edge("PercentInstallTrade", "FractionInstall", w_fi["PercentInstallTrade"]),
    ]
    qaf = QafModel(nodes=tuple(nodes), edges=tuple(edges), root="Risk", embedding_dim=0,
                   feature_order=tuple(feature_order))
    report = validate(qaf)
    assert report.ok, report.violations

    columns = [
        ColumnTransform(name="FractionInstallBurden", kind="numeric", mean=100.0, knots=[100.0], knot_cdf=[0.5]),
        ColumnTransform(name="PercentInstallTrade", kind="numeric", mean=22.0, knots=[22.0], knot_cdf=[0.22]),
        ColumnTransform(name="InstallTrade", kind="numeric", mean=30.0, knots=[30.0], knot_cdf=[0.30]),
        ColumnTransform(name="TradeRecord", kind="numeric", mean=40.0, knots=[40.0], knot_cdf=[0.40]),
        ColumnTransform(name="ExternalRisk", kind="numeric", mean=70.0, knots=[70.0], knot_cdf=[0.70]),
    ]
    pre = PreprocessModel(columns=columns)

    raw = {
        "FractionInstallBurden": "471%",
        "PercentInstallTrade": 22,
        "InstallTrade": 30,
        "TradeRecord": 40,
        "ExternalRisk": 70,
    }
    cam = CamModel(qaf=qaf, preprocess=pre, rounds=[], config={"attacker_ranking": "influence"},
                   seed=0, eval_auc=0.5, sample_row=dict(raw))
    return cam, raw


def write_dialogue_fixtures() -> None:
    cam, raw = build_dialogue_model()
    cam.save(FIXTURES / "dialogue_model.json")
    with open(FIXTURES / "dialogue_instance.json", "w", encoding="utf-8") as fh:
        json.dump({"features": raw}, fh, indent=2)
        fh.write("\n")

    # Service-shaped responses for the frontend tests.
    FRONTEND_FIXTURES.mkdir(parents=True, exist_ok=True)
    polarity = {n.id: root_polarity(cam.qaf, n.id) for n in cam.qaf.nodes if n.id != cam.qaf.root}
    model_payload = {
        "model": to_document(cam.qaf),
        "polarity": polarity,
        "root_label": "Risk",
        "sample": cam.sample_row,
    }
    x = cam.preprocess.apply_mapping(raw)
    strengths = evaluate(cam.qaf, x)
    predict_payload = {"strengths": strengths.strengths, "score": strengths[cam.qaf.root]}
    explain_payload = explain(cam.qaf, strengths, cam.qaf.root, raw).to_document()
    for name, payload in [
        ("model.json", model_payload),
        ("predict.json", predict_payload),
        ("explain_root.json", explain_payload),
    ]:
        with open(FRONTEND_FIXTURES / name, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_fico_fixtures()
    write_toy_fixtures()
    write_dialogue_fixtures()
    print(f"fixtures written under {FIXTURES} and {FRONTEND_FIXTURES}")


if __name__ == "__main__":
    main()
