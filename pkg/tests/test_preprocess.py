from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cam import preprocess as prep
from cam.errors import LabelError, MisalignedInstanceError, UnfittableColumnError


def dataset(columns, rows, labels):
    return prep.RawDataset(columns=columns, rows=rows, labels=np.array(labels, dtype=float))


def rank_oracle(values):
    """(average rank - 0.5) / N for each value, brute force."""
    n = len(values)
    out = []
    for v in values:
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        avg_rank = less + (equal + 1) / 2.0
        out.append((avg_rank - 0.5) / n)
    return out


def test_imputation_mean_over_non_missing():
    ds = dataset(["x"], [[1], [2], [3], [""]], [0, 1, 0, 1])
    model = prep.fit(ds)
    assert model.columns[0].mean == 2.0


def test_constant_column_maps_to_half():
    ds = dataset(["x"], [[5], [5], [5], [5]], [0, 1, 0, 1])
    model = prep.fit(ds)
    assert model.apply([5])[0] == 0.5


def test_training_rows_match_rank_oracle():
    rng = np.random.default_rng(2)
    values = list(rng.integers(0, 10, size=40).astype(float))  # plenty of ties
    labels = list(rng.integers(0, 2, size=40))
    labels[0], labels[1] = 0, 1
    ds = dataset(["x"], [[v] for v in values], labels)
    model = prep.fit(ds)
    expected = rank_oracle(values)
    for v, e in zip(values, expected):
        assert model.apply([v])[0] == pytest.approx(e, abs=1e-12)


def test_target_encoding_smoothing_formula():
    # A: 3 positives, 1 negative; B: 0 positives, 4 negatives; prior 3/8
    rows = [["A"]] * 4 + [["B"]] * 4
    labels = [1, 1, 1, 0, 0, 0, 0, 0]
    ds = dataset(["cat"], rows, labels)
    model = prep.fit(ds, kinds={"cat": "categorical"})
    oracle = Fraction(3) + 10 * Fraction(3, 8)
    oracle = oracle / (Fraction(4) + 10)
    assert model.columns[0].target_map["A"] == pytest.approx(float(oracle), abs=1e-15)
    assert float(oracle) == pytest.approx(0.482, abs=5e-4)


def test_unseen_category_maps_to_prior_quantile():
    rows = [["A"]] * 4 + [["B"]] * 4
    labels = [1, 1, 1, 0, 0, 0, 0, 0]
    ds = dataset(["cat"], rows, labels)
    model = prep.fit(ds, kinds={"cat": "categorical"})
    out = model.apply(["never-seen"])[0]
    assert 0.0 <= out <= 1.0
    # the prior (3/8) sits between the encodings of B and A
    col = model.columns[0]
    assert col.target_map["B"] < col.prior < col.target_map["A"]


def test_min_maps_near_zero_median_to_half_max_above_to_one():
    values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    ds = dataset(["x"], [[v] for v in values], [0, 1, 0, 1, 0, 1, 0])
    model = prep.fit(ds)
    assert model.apply([1.0])[0] == pytest.approx(0.5 / 7, abs=1e-12)  # mid-rank at the minimum
    assert model.apply([4.0])[0] == pytest.approx(0.5, abs=1e-12)
    assert model.apply([0.5])[0] == 0.0
    assert model.apply([471.0])[0] == 1.0


def test_apply_is_monotone_in_numeric_values():
    rng = np.random.default_rng(5)
    values = rng.normal(0, 10, 60)
    ds = dataset(["x"], [[v] for v in values], rng.integers(0, 2, 60))
    model = prep.fit(ds)
    probes = np.sort(rng.normal(0, 12, 40))
    outs = [model.apply([p])[0] for p in probes]
    assert all(a <= b + 1e-15 for a, b in zip(outs, outs[1:]))


def test_all_missing_column_unfittable():
    ds = dataset(["x", "y"], [["", 1], ["", 2]], [0, 1])
    with pytest.raises(UnfittableColumnError, match="'x'"):
        prep.fit(ds)


def test_single_class_labels_rejected():
    ds = dataset(["x"], [[1], [2]], [1, 1])
    with pytest.raises(LabelError):
        prep.fit(ds)


def test_non_binary_labels_rejected():
    with pytest.raises(LabelError):
        dataset(["x"], [[1], [2]], [0, 2])


def test_percent_suffix_parses():
    assert prep.parse_numeric("471%") == 471.0
    assert prep.parse_numeric(" 12.5 % ".replace(" %", "%")) == 12.5
    ds = dataset(["x"], [["10%"], ["20%"], ["30%"]], [0, 1, 0])
    model = prep.fit(ds)
    assert model.apply(["20%"])[0] == 0.5


def test_sentinels_treated_as_missing():
    ds = dataset(["x"], [[-9], [1], [2], [3]], [0, 1, 0, 1])
    model = prep.fit(ds, sentinels={"x": [-9]})
    assert model.columns[0].mean == 2.0


def test_drop_entirely_empty_rows():
    ds = dataset(["x", "y"], [[-9, -9], [1, 2], [-9, 5]], [1, 0, 1])
    kept = prep.drop_empty_rows(ds, {"x": frozenset([-9]), "y": frozenset([-9])})
    assert len(kept) == 2
    assert kept.rows[0] == [1, 2]


def test_misaligned_row_rejected(toy_cam):
    with pytest.raises(MisalignedInstanceError):
        toy_cam.preprocess.apply([1, 2])
    with pytest.raises(MisalignedInstanceError):
        toy_cam.preprocess.apply_mapping({"income": 1})


def test_split_indices_deterministic_and_disjoint():
    t1, e1 = prep.split_indices(100, seed=3)
    t2, e2 = prep.split_indices(100, seed=3)
    assert np.array_equal(t1, t2) and np.array_equal(e1, e2)
    assert len(e1) == 20 and len(t1) == 80
    assert set(t1) | set(e1) == set(range(100))
    t3, _ = prep.split_indices(100, seed=4)
    assert not np.array_equal(t1, t3)


@settings(max_examples=60, deadline=None)
@given(
    train=st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=30),
    probe=st.floats(min_value=-1e7, max_value=1e7, allow_nan=False),
)
def test_numeric_apply_always_in_unit_interval(train, probe):
    labels = [0, 1] * (len(train) // 2) + [0] * (len(train) % 2)
    labels[0], labels[1] = 0, 1
    ds = dataset(["x"], [[v] for v in train], labels)
    model = prep.fit(ds)
    out = model.apply([probe])[0]
    assert 0.0 <= out <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_fuzz_apply_with_categories_and_missing(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
    n = 30
    cats = rng.choice(["A", "B", "C"], n)
    nums = rng.normal(0, 5, n)
    rows = [[cats[i], "" if rng.uniform() < 0.1 else nums[i]] for i in range(n)]
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    ds = dataset(["cat", "num"], rows, labels)
    model = prep.fit(ds, kinds={"cat": "categorical"})
    probe_cat = data.draw(st.sampled_from(["A", "B", "C", "D", ""]))
    probe_num = data.draw(st.one_of(st.just(""), st.floats(-100, 100, allow_nan=False)))
    out = model.apply([probe_cat, probe_num])
    assert np.all(out >= 0.0) and np.all(out <= 1.0)


def test_csv_loader_label_mapping(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,outcome,b\n1,Bad,x\n2,Good,y\n", encoding="utf-8")
    ds = prep.load_csv(path, "outcome", label_positive="Bad")
    assert ds.columns == ["a", "b"]
    assert list(ds.labels) == [1.0, 0.0]
    with pytest.raises(LabelError, match="label column"):
        prep.load_csv(path, "nope")
