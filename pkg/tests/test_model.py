import io
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from convengage.model import (
    Baseline,
    ClassWeight,
    LogisticModel,
    TrainConfig,
    TrainingError,
    baseline_predict,
    fit_standardizer,
    load_model,
    objective,
    predict,
    predict_proba,
    sample_weights,
    save_model,
    train_logreg,
    tune_l2,
    validation_split,
)


def blobs(n=200, d=4, seed=0, shift=1.0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.4).astype(np.int8)
    X = rng.normal(size=(n, d)) + shift * y[:, None] * np.linspace(1, 0, d)
    return X, y


# -- standardizer ----------------------------------------------------------------


def test_constant_column_becomes_zero():
    X = np.column_stack([np.full(10, 3.0), np.arange(10.0)])
    out = fit_standardizer(X).apply(X).toarray()
    assert np.all(out[:, 0] == 0)


def test_standardized_column_unchanged():
    z = np.random.default_rng(0).normal(size=50)
    z = (z - z.mean()) / z.std()
    out = fit_standardizer(z[:, None]).apply(z[:, None]).toarray().ravel()
    np.testing.assert_allclose(out, z, atol=1e-9)


def test_statistics_match_two_pass_oracle():
    rng = np.random.default_rng(1)
    X = rng.normal(3, 2, size=(100, 10))
    std = fit_standardizer(X)
    for j in range(10):
        col = [X[i][j] for i in range(100)]
        mean = sum(col) / 100
        var = sum((v - mean) ** 2 for v in col) / 100
        assert std.mean[j] == pytest.approx(mean, rel=1e-12)
        assert std.std[j] == pytest.approx(math.sqrt(var), rel=1e-12)
    out = std.apply(X).toarray()
    np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0), 1, atol=1e-12)


def test_sparse_columns_pass_through():
    X = sp.csr_matrix(np.array([[0.5, 0.0, 4.0], [0.0, 0.25, 8.0], [0.0, 0.0, 6.0]]))
    std = fit_standardizer(X, columns=[2])
    out = std.apply(X).toarray()
    np.testing.assert_array_equal(out[:, :2], X.toarray()[:, :2])
    np.testing.assert_allclose(out[:, 2], [-1.224744871391589, 1.224744871391589, 0.0])


def test_standardizer_rejects_wrong_width_and_empty():
    std = fit_standardizer(np.ones((3, 2)))
    with pytest.raises(ValueError):
        std.apply(np.ones((3, 3)))
    with pytest.raises(ValueError):
        fit_standardizer(np.ones((0, 2)))


# -- training --------------------------------------------------------------------


def test_separable_one_dimensional():
    X, y = np.array([[-1.0], [1.0]]), np.array([0, 1])
    m = train_logreg(X, y, TrainConfig(l2_strength=0.01))
    assert predict(m, X).tolist() == [0, 1]


def test_gradient_zero_on_symmetric_data():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [-1.0, -2.0], [-1.0, -2.0]])
    y = np.array([1, 0, 1, 0], dtype=float)
    _, gw, gb = objective(np.zeros(2), 0.0, X, y, np.ones(4), 1.0)
    assert np.all(gw == 0) and gb == 0


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("mode", [ClassWeight.NONE, ClassWeight.BALANCED])
def test_gradient_matches_finite_differences(seed, mode):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 5))
    y = (rng.random(20) < 0.5).astype(float)
    y[:2] = [0, 1]
    w, b = rng.normal(size=5), float(rng.normal())
    weights = sample_weights(y, mode)
    _, gw, gb = objective(w, b, X, y, weights, 0.3)
    h = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        num = (objective(w + e, b, X, y, weights, 0.3)[0] - objective(w - e, b, X, y, weights, 0.3)[0]) / (2 * h)
        assert gw[j] == pytest.approx(num, rel=1e-4, abs=1e-8)
    num_b = (objective(w, b + h, X, y, weights, 0.3)[0] - objective(w, b - h, X, y, weights, 0.3)[0]) / (2 * h)
    assert gb == pytest.approx(num_b, rel=1e-4, abs=1e-8)


def test_balanced_weights_average_one():
    y = np.array([1, 0, 0, 0])
    w = sample_weights(y, ClassWeight.BALANCED)
    assert w.mean() == pytest.approx(1.0)
    assert w[0] * 1 == pytest.approx(w[1:].sum())


def test_l2_never_grows_weights():
    X, y = blobs()
    norms = [np.linalg.norm(train_logreg(X, y, TrainConfig(l2_strength=l2, max_epochs=5000)).weights)
             for l2 in (0.001, 0.01, 0.1, 1.0, 10.0)]
    assert all(a >= b - 1e-9 for a, b in zip(norms, norms[1:]))


def test_bitwise_deterministic():
    X, y = blobs(seed=3)
    a = train_logreg(X, y, TrainConfig(seed=5))
    b = train_logreg(X, y, TrainConfig(seed=5))
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


@pytest.mark.parametrize("seed", range(3))
def test_loss_decreases_at_small_rate(seed):
    X, y = blobs(seed=seed)
    m = train_logreg(X, y, TrainConfig(learning_rate=0.01, max_epochs=300), record_loss=True)
    h = m.loss_history
    assert len(h) == 300
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_converges_and_stops():
    X, y = blobs(seed=2)
    m = train_logreg(X, y, TrainConfig(tolerance=1e-4, max_epochs=20000))
    assert m.converged and m.epochs < 20000


def test_sparse_and_dense_inputs_agree():
    X, y = blobs(seed=4)
    a = train_logreg(X, y)
    b = train_logreg(sp.csr_matrix(X), y)
    np.testing.assert_allclose(a.weights, b.weights, rtol=1e-10)


def test_single_class_rejected():
    with pytest.raises(TrainingError, match="single class"):
        train_logreg(np.ones((3, 1)), [1, 1, 1])


def test_non_binary_labels_rejected():
    with pytest.raises(TrainingError):
        train_logreg(np.ones((3, 1)), [0, 1, 2])


def test_divergence_names_learning_rate():
    X = np.array([[1e200], [-1e200]])
    with pytest.raises(TrainingError, match="learning rate"):
        train_logreg(X, [1, 0], TrainConfig(learning_rate=1e200))


@pytest.mark.parametrize(
    "kwargs", [{"l2_strength": 0}, {"learning_rate": -1}, {"max_epochs": 0}, {"tolerance": 1.0},
               {"class_weight": "sometimes"}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


# -- prediction --------------------------------------------------------------------


def test_zero_model_is_half():
    m = LogisticModel(np.zeros(3), 0.0)
    X = np.random.default_rng(0).normal(size=(5, 3))
    assert np.all(predict_proba(m, X) == 0.5)
    assert np.all(predict(m, X) == 1)


def test_probabilities_match_independent_sigmoid():
    rng = np.random.default_rng(7)
    m = LogisticModel(rng.normal(size=6), 0.3)
    X = rng.normal(size=(100, 6)) * 5
    expected = [1 / (1 + math.exp(-(sum(a * b for a, b in zip(x, m.weights)) + 0.3))) for x in X]
    np.testing.assert_allclose(predict_proba(m, X), expected, rtol=1e-12)
    assert predict(m, X).tolist() == [int(p >= 0.5) for p in expected]


def test_extreme_scores_stay_in_range():
    m = LogisticModel(np.array([1.0]), 0.0)
    p = predict_proba(m, np.array([[-800.0], [800.0]]))
    assert np.all(np.isfinite(p)) and p[0] >= 0 and p[1] <= 1


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        predict(LogisticModel(np.zeros(3), 0.0), np.zeros((2, 4)))


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-5, 5))
def test_zero_weight_feature_changes_nothing(x, extra):
    m = LogisticModel(np.array([0.5, -1.0, 2.0]), 0.1)
    wider = LogisticModel(np.array([0.5, -1.0, 2.0, 0.0]), 0.1)
    assert predict_proba(m, [x])[0] == predict_proba(wider, [x + [extra]])[0]


def test_save_load_reproduces_predictions(tmp_path):
    X, y = blobs(seed=8)
    std = fit_standardizer(X, columns=[0, 2])
    m = train_logreg(X, y, TrainConfig(), std)
    path = tmp_path / "model.json"
    save_model(m, str(path))
    again = load_model(str(path))
    assert predict_proba(again, X).tobytes() == predict_proba(m, X).tobytes()
    buf = io.StringIO()
    save_model(m, buf)
    assert path.read_text() == buf.getvalue()


def test_load_rejects_other_formats():
    with pytest.raises(ValueError):
        load_model(io.StringIO('{"format": "something", "version": 1}'))


# -- tuning ------------------------------------------------------------------------


def test_validation_split_sizes():
    fit, val = validation_split(100, 0.1, seed=0)
    assert len(val) == 10 and len(fit) == 90
    assert sorted(np.concatenate([fit, val]).tolist()) == list(range(100))
    assert np.array_equal(validation_split(100, 0.1, 0)[1], val)
    with pytest.raises(ValueError):
        validation_split(1)


def test_tuning_ties_go_to_stronger_penalty():
    X, y = blobs(n=300, shift=20.0, seed=1)  # trivially separable: every grid value scores 1.0
    best, scores = tune_l2(X, y, TrainConfig())
    assert [s[1] for s in scores] == [1.0] * 4
    assert best == 1.0


def test_tuning_reports_every_grid_value():
    X, y = blobs(n=300, shift=0.8, seed=2)
    best, scores = tune_l2(X, y, TrainConfig(), grid=(0.01, 0.1))
    assert [s[0] for s in scores] == [0.01, 0.1] and best in (0.01, 0.1)


# -- baselines ----------------------------------------------------------------------


def table_one_train_labels():
    return np.r_[np.ones(134_650, dtype=np.int8), np.zeros(472_412 - 134_650, dtype=np.int8)]


def test_minor_predicts_engaging():
    assert set(baseline_predict(Baseline.MINOR, table_one_train_labels(), 1000)) == {1}
    assert set(baseline_predict("minor", [1, 1, 0], 10)) == {0}


def test_stratified_rate():
    y = table_one_train_labels()
    pred = baseline_predict(Baseline.STRATIFIED, y, 100_000, seed=3)
    assert abs(pred.mean() - y.mean()) < 0.01


def test_uniform_rate():
    pred = baseline_predict(Baseline.UNIFORM, [0, 0, 0, 1], 100_000, seed=4)
    assert abs(pred.mean() - 0.5) < 0.01


@settings(max_examples=20)
@given(st.sampled_from(list(Baseline)), st.integers(0, 1000))
def test_baselines_deterministic(kind, seed):
    y = [0, 1, 1, 0, 0]
    assert np.array_equal(baseline_predict(kind, y, 50, seed), baseline_predict(kind, y, 50, seed))


def test_baseline_needs_training_labels():
    with pytest.raises(ValueError):
        baseline_predict(Baseline.UNIFORM, [], 5)
