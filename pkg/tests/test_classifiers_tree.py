import numpy as np
import pytest

from perfprint.classifiers import train_tree
from perfprint.classifiers.tree import DecisionTreeModel, best_split

from helpers import build_dataset, random_dataset
from oracles import all_split_gains, split_gain


def test_separable_1d_single_root_split():
    d = build_dataset([[0.0], [1.0], [10.0], [11.0]], ["A", "A", "B", "B"])
    model = train_tree(d, min_parent=2)
    root = model.nodes[0]
    assert "threshold" in root
    assert 1.0 < root["threshold"] < 10.0
    assert [model.predict(m.features) for m in d.measurements] == ["A", "A", "B", "B"]
    # one split was enough
    assert sum(1 for n in model.nodes if "threshold" in n) == 1


def test_pure_input_stays_single_leaf():
    d = build_dataset([[1.0], [2.0], [3.0]], ["A", "A", "A"])
    model = train_tree(d, min_parent=2)
    assert len(model.nodes) == 1
    assert "counts" in model.nodes[0]


def test_small_node_is_not_split():
    d = build_dataset([[0.0], [10.0]], ["A", "B"])
    model = train_tree(d, min_parent=10)
    assert len(model.nodes) == 1


def test_root_split_beats_exhaustive_scan():
    for seed in range(8):
        rng = np.random.default_rng(300 + seed)
        d = random_dataset(rng, 3, int(rng.integers(4, 14)), int(rng.integers(2, 7)))
        rows = [m.features.tolist() for m in d.measurements]
        labels = d.labels()
        found = best_split(d.feature_matrix(), d.label_indices(), 3)
        assert found is not None
        _, feature, threshold = found
        chosen_gain = split_gain(rows, labels, feature, threshold)
        best_scanned = max(g for g, _, _ in all_split_gains(rows, labels))
        assert chosen_gain >= best_scanned - 1e-12


def test_hand_built_tree_routing():
    # x0 <= 5 -> leaf A; else x1 <= 2 -> leaf B else leaf C
    nodes = [
        {"feature": 0, "threshold": 5.0, "left": 1, "right": 2},
        {"counts": np.array([4, 0, 0])},
        {"feature": 1, "threshold": 2.0, "left": 3, "right": 4},
        {"counts": np.array([0, 3, 0])},
        {"counts": np.array([0, 0, 2])},
    ]
    model = DecisionTreeModel(
        classes=["A", "B", "C"], nodes=nodes, class_frequency=np.array([4, 3, 2])
    )
    assert model.predict([0.0, 9.0]) == "A"
    assert model.predict([5.0, 9.0]) == "A"  # boundary goes left
    assert model.predict([6.0, 1.0]) == "B"
    assert model.predict([6.0, 3.0]) == "C"


def test_leaf_distribution_argmax_and_topk():
    nodes = [{"counts": np.array([7, 3, 0])}]
    model = DecisionTreeModel(
        classes=["A", "B", "C"], nodes=nodes, class_frequency=np.array([10, 5, 20])
    )
    assert model.predict([0.0]) == "A"
    assert model.predict_topk([0.0], 2) == ["A", "B"]
    # absent class ranks last despite the largest global frequency
    assert model.predict_topk([0.0], 3) == ["A", "B", "C"]


def test_absent_classes_ranked_by_global_frequency():
    nodes = [{"counts": np.array([5, 0, 0, 0])}]
    model = DecisionTreeModel(
        classes=["A", "B", "C", "D"],
        nodes=nodes,
        class_frequency=np.array([5, 2, 9, 2]),
    )
    # C has the highest global frequency; B vs D tie falls to the lower index
    assert model.predict_topk([0.0], 4) == ["A", "C", "B", "D"]


def test_unbounded_tree_memorizes_distinct_vectors():
    rng = np.random.default_rng(4)
    d = random_dataset(rng, 3, 6, 4)
    model = train_tree(d, max_splits=10_000, min_parent=2)
    hits = sum(model.predict(m.features) == m.label for m in d.measurements)
    assert hits == len(d)


def test_capped_tree_beats_majority_class():
    rng = np.random.default_rng(5)
    d = random_dataset(rng, 4, 12, 5)
    model = train_tree(d)  # default caps: N-1 splits, min_parent 10
    hits = sum(model.predict(m.features) == m.label for m in d.measurements)
    majority = max(len(v) for v in d.by_class().values())
    assert hits >= majority


def test_split_budget_is_respected():
    rng = np.random.default_rng(6)
    d = random_dataset(rng, 4, 10, 4)
    model = train_tree(d, max_splits=2, min_parent=2)
    assert sum(1 for n in model.nodes if "threshold" in n) <= 2


def test_threshold_is_midpoint_of_consecutive_values():
    d = build_dataset([[0.0], [2.0], [10.0], [14.0]], ["A", "A", "B", "B"])
    found = best_split(d.feature_matrix(), d.label_indices(), 2)
    assert found is not None
    assert found[2] == pytest.approx(6.0)  # (2 + 10) / 2
