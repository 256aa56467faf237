import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accelspeech.errors import ClassTooSmall, EmptyMatrix, NonFiniteInput, SingleClassDataset
from accelspeech.ml import (
    Dataset, TrainedModel, confusion_matrix, cross_validate, evaluate, holdout, info_gain_ranking,
    information_gain, make_trainer, predict, render_table, split_train_test, stratified_folds,
    train_decision_table, train_random_forest, train_random_subspace,
)
from accelspeech.ml.cart import grow_tree
from accelspeech.ml.data import canonical_classes
from oracles import hand_metrics


def blobs(n=600, k=3, p=4, sep=6.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % k
    centres = rng.normal(0, sep, (k, p))
    X = centres[y] + rng.normal(0, 1, (n, p))
    return Dataset.from_arrays(X, [f"c{v}" for v in y])


def xor(n=200, seed=0):
    rng = np.random.default_rng(seed)
    corners = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], float)
    c = np.arange(n) % 4
    X = corners[c] + rng.normal(0, 0.05, (n, 2))
    y = (corners[c, 0] != corners[c, 1]).astype(int)
    return Dataset.from_arrays(X, y), corners


def ci99(prior, n):
    return 2.576 * math.sqrt(prior * (1 - prior) / n)


TRAINERS = [train_random_forest, train_random_subspace, train_decision_table]


def test_xor_forest_fits_training_data():
    data, corners = xor()
    model = train_random_forest(data, {"n_trees": 25}, seed=1)
    assert np.all(model.predict_index(data.X) == data.y)
    assert model.predict_index(corners).tolist() == [0, 1, 1, 0]
    assert all(t.depth >= 2 for _, t in model.members)


def test_single_tree_fits_xor():
    data, corners = xor()
    tree = grow_tree(data.X, data.y, 2, seed=0)
    assert tree.depth >= 2
    assert np.all(tree.predict_index(data.X) == data.y)


@pytest.mark.parametrize("trainer", TRAINERS)
def test_single_class_gives_constant_model(trainer):
    data = Dataset.from_arrays(np.random.default_rng(0).normal(size=(20, 3)), ["a"] * 20)
    with pytest.warns(SingleClassDataset):
        model = trainer(data, None, 0)
    assert model.flags == ["single_class"]
    assert set(model.predict(data.X)) == {"a"}


@pytest.mark.parametrize("trainer", TRAINERS)
def test_seeded_determinism(trainer):
    data = blobs(n=150)
    params = {"n_trees": 10} if trainer is train_random_forest else None
    assert trainer(data, params, 3).dumps() == trainer(data, params, 3).dumps()


def test_subspace_collapses_to_one_tree():
    data = blobs(n=150, sep=1.0)
    model = train_random_subspace(data, {"n_members": 1, "subspace_fraction": 1.0}, seed=4)
    seed = model.seed
    from accelspeech.ml.models import member_seeds

    tree = grow_tree(data.X, data.y, len(data.classes), seed=member_seeds(seed, 1)[0])
    assert model.members[0][1].to_dict() == tree.to_dict()
    assert np.array_equal(model.predict_index(data.X), tree.predict_index(data.X))


def test_subspace_holdout_on_blobs():
    rep = holdout(blobs(), make_trainer("rss", seed=0), 0.8, seed=0)
    assert rep.accuracy >= 0.95


def test_decision_table_picks_the_informative_feature():
    rng = np.random.default_rng(0)
    n = 300
    X = rng.normal(size=(n, 5))
    # boundary at the median, which is one of the equal-frequency cuts
    y = (X[:, 1] > np.median(X[:, 1])).astype(int)
    model = train_decision_table(Dataset.from_arrays(X, y), seed=0)
    assert model.table["selected"] == (1,)
    assert np.all(model.predict_index(X) == y)


def test_decision_table_on_noise_is_near_prior():
    rng = np.random.default_rng(1)
    n = 600
    X = rng.normal(size=(n, 6))
    y = rng.permutation(np.arange(n) % 3)
    rep = cross_validate(Dataset.from_arrays(X, y), 10, make_trainer("dt", seed=0), seed=0)
    assert abs(rep.accuracy - 1 / 3) <= ci99(1 / 3, n)


def test_predict_rejects_non_finite():
    model = train_random_forest(blobs(n=60), {"n_trees": 3}, 0)
    with pytest.raises(NonFiniteInput):
        predict(model, [np.nan, 0, 0, 0])
    assert predict(model, blobs(n=60).X[0]) in model.classes


@pytest.mark.parametrize("kind", ["rf", "rss", "dt"])
def test_serialization_round_trip(kind):
    data = blobs(n=150, p=25, sep=1.5)
    model = make_trainer(kind, {"n_trees": 10} if kind == "rf" else None, 2)(data)
    back = TrainedModel.loads(model.dumps())
    Z = np.random.default_rng(9).normal(0, 3, (1000, 25))
    assert np.array_equal(back.predict_index(Z), model.predict_index(Z))
    assert back.dumps() == model.dumps()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000))
def test_monotone_transform_keeps_training_accuracy(seed):
    data = blobs(n=120, p=3, sep=1.0, seed=seed)
    acc = lambda d: np.mean(grow_tree(d.X, d.y, 3, seed=seed, max_depth=3).predict_index(d.X) == d.y)  # noqa: E731
    warped = Dataset.from_arrays(np.exp(data.X / 3) * 5 - 2, data.labels)
    assert acc(data) == acc(warped)


def test_split_is_stratified_and_guarded():
    data = blobs(n=50, k=2)
    train, test = split_train_test(data, 0.8, seed=1)
    assert len(train) == 40 and len(test) == 10
    assert sorted(np.bincount(test.y).tolist()) == [5, 5]
    tiny = Dataset.from_arrays(np.zeros((5, 2)), ["a", "a", "a", "a", "b"])
    with pytest.raises(ClassTooSmall):
        split_train_test(tiny)


def test_cv_needs_k_members():
    data = Dataset.from_arrays(np.random.default_rng(0).normal(size=(25, 2)), ["a"] * 20 + ["b"] * 5)
    with pytest.raises(ClassTooSmall):
        cross_validate(data, 10)


@settings(max_examples=30, deadline=None)
@given(sizes=st.lists(st.integers(0, 40), min_size=1, max_size=5), k=st.integers(2, 10),
       seed=st.integers(0, 99))
def test_fold_balance(sizes, k, seed):
    y = np.repeat(np.arange(len(sizes)), sizes)
    if len(y) == 0:
        return
    folds = stratified_folds(y, k, seed)
    for c in range(len(sizes)):
        counts = np.bincount(folds[y == c], minlength=k)
        assert counts.max() - counts.min() <= 1
    total = np.bincount(folds, minlength=k)
    assert total.max() - total.min() <= 1


def test_canonical_class_order():
    assert canonical_classes(["10", "2", "b", "a", "1"]) == ("1", "2", "10", "a", "b")


def test_evaluate_examples():
    rep = evaluate([[8, 2], [1, 9]])
    assert rep.accuracy == 0.85
    assert rep.tp_rate[0] == 0.8 and rep.precision[0] == 8 / 9 and rep.fp_rate[0] == 0.1
    ident = evaluate(np.diag([5, 5]))
    assert ident.weighted == {"tp_rate": 1.0, "fp_rate": 0.0, "precision": 1.0, "recall": 1.0}


def test_evaluate_errors():
    with pytest.raises(EmptyMatrix):
        evaluate(np.zeros((0, 0)))
    with pytest.raises(EmptyMatrix):
        evaluate(np.zeros((2, 2)))


def test_row_format():
    cm = [[987, 13], [13, 987]]
    assert evaluate(cm).row() == "TP 98.7% | FP 1.3% | Precision 98.7% | Recall 98.7%"


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 50), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_evaluate_matches_hand_oracle(cm):
    if sum(map(sum, cm)) == 0:
        return
    rep = evaluate(cm)
    rows, weighted, acc = hand_metrics(cm)
    for i, (tpr, fpr, prec, rec, _) in enumerate(rows):
        assert (rep.tp_rate[i], rep.fp_rate[i], rep.precision[i], rep.recall[i]) == \
            (float(tpr), float(fpr), float(prec), float(rec))
    assert [rep.weighted[k] for k in ("tp_rate", "fp_rate", "precision", "recall")] == \
        [float(w) for w in weighted]
    assert rep.accuracy == float(acc)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_evaluate_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    cm = rng.integers(0, 20, (n, n))
    cm[0, 0] += 1
    perm = rng.permutation(n)
    a, b = evaluate(cm), evaluate(cm[np.ix_(perm, perm)])
    assert np.array_equal(a.tp_rate[perm], b.tp_rate)
    assert np.array_equal(a.fp_rate[perm], b.fp_rate)
    assert a.weighted == b.weighted


def test_confusion_matrix_counts():
    cm = confusion_matrix([0, 1, 1, 2], [0, 2, 1, 2], 3)
    assert cm.tolist() == [[1, 0, 0], [0, 1, 1], [0, 0, 1]]


def test_render_table_layout():
    rep = evaluate([[8, 2], [1, 9]])
    text = render_table([("Automatic", "Random Forest", "Gender", rep)])
    lines = text.splitlines()
    assert "TP Rate" in lines[1] and "Precision" in lines[1]
    assert "| Automatic | Random Forest | Gender" in lines[3]
    assert "85.0%" in lines[3]
    assert len({len(line) for line in lines}) == 1


def test_information_gain():
    y = np.array([0] * 50 + [1] * 50)
    assert information_gain(y.astype(float), y, 10) == pytest.approx(1.0)
    assert information_gain(np.zeros(100), y, 10) == 0.0
    data = Dataset.from_arrays(np.column_stack([np.zeros(100), y, -y]), y, feature_names=["a", "b", "c"])
    ranking = info_gain_ranking(data)
    assert [n for n, _ in ranking] == ["b", "c", "a"]
    with pytest.raises(ValueError):
        info_gain_ranking(data, bins=1)


def test_non_finite_dataset_rejected():
    with pytest.raises(NonFiniteInput):
        Dataset.from_arrays([[0.0, np.inf]], ["a"])
