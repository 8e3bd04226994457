import csv
import itertools

import numpy as np
import pytest

from teamroles.dataset import LabeledExample
from teamroles.explain import (
    Attribution,
    EmptyBaselines,
    EmptyInput,
    TooManyFeatures,
    exact_shapley,
    gradient_shap,
    shap_summary,
    write_attributions,
    write_summary,
    write_summary_svg,
)
from teamroles.mlp import TrainConfig, forward, train
from teamroles.types import FEATURE_NAMES, BinaryRole, FeatureVector


def linear_fn(weights, bias=0.0):
    weights = np.asarray(weights, dtype=float)
    return lambda x: float(weights @ np.asarray(x) + bias)


def brute_force_shapley(model_fn, x, baseline):
    """Permutation-average oracle, independent of the bitmask enumerator."""
    m = len(x)
    phi = np.zeros(m)
    for order in itertools.permutations(range(m)):
        point = np.array(baseline, dtype=float)
        prev = model_fn(point)
        for i in order:
            point[i] = x[i]
            current = model_fn(point)
            phi[i] += current - prev
            prev = current
    return phi / len(list(itertools.permutations(range(m))))


def small_model(seed=0):
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(80):
        ratios = rng.uniform(0, 1, 4)
        counts = rng.uniform(0, 10, 6)
        label = BinaryRole.LEADERSHIP if counts[0] > 5 else BinaryRole.SUPPORT
        examples.append(
            LabeledExample(f"A{i}", f"W{i}", FeatureVector.from_list(list(ratios) + list(counts)), label)
        )
    return train(examples, TrainConfig(seed=seed, hidden_sizes=(8, 4), epochs=5, learning_rate=0.1))


def test_exact_shapley_linear_model_analytic():
    w = np.array([1.0, -2.0, 0.5, 3.0])
    x = np.array([0.2, 0.8, 0.5, 0.1])
    b = np.array([0.0, 0.5, 0.5, 0.0])
    attr = exact_shapley(linear_fn(w, bias=1.0), x, b)
    assert np.allclose(attr.phi, w * (x - b), atol=1e-12)


def test_exact_shapley_matches_permutation_oracle():
    rng = np.random.default_rng(2)
    model = small_model()

    def fn(x):
        # embed the 5-dim explained point into the model's 10-dim input
        full = np.zeros(10)
        full[:5] = x
        return forward(model.params, full)

    x = rng.uniform(0, 1, 5)
    baseline = rng.uniform(0, 1, 5)
    attr = exact_shapley(fn, x, baseline)
    oracle = brute_force_shapley(fn, x, baseline)
    assert np.allclose(attr.phi, oracle, atol=1e-10)


def test_exact_shapley_efficiency():
    """Attributions sum to prediction minus base value."""
    model = small_model()
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.uniform(0, 1, 10)
        baseline = rng.uniform(0, 1, 10)
        attr = exact_shapley(lambda v: forward(model.params, v), x, baseline)
        assert attr.phi.sum() == pytest.approx(attr.prediction - attr.base_value, abs=1e-9)


def test_exact_shapley_dummy_feature_gets_zero():
    w = np.array([2.0, 0.0, -1.0])
    attr = exact_shapley(linear_fn(w), np.array([1.0, 5.0, 2.0]), np.zeros(3))
    assert attr.phi[1] == pytest.approx(0.0, abs=1e-12)


def test_exact_shapley_symmetry():
    # x1 and x2 enter symmetrically and have equal values
    fn = lambda v: float(v[0] * v[1] + v[0] + v[1] + 3 * v[2])
    attr = exact_shapley(fn, np.array([2.0, 2.0, 1.0]), np.zeros(3))
    assert attr.phi[0] == pytest.approx(attr.phi[1], abs=1e-12)


def test_exact_shapley_identical_point_and_baseline():
    attr = exact_shapley(linear_fn([1.0, 2.0]), np.array([3.0, 4.0]), np.array([3.0, 4.0]))
    assert np.allclose(attr.phi, 0.0)
    assert attr.base_value == attr.prediction


def test_exact_shapley_too_many_features():
    with pytest.raises(TooManyFeatures):
        exact_shapley(lambda v: 0.0, np.zeros(17), np.zeros(17))


def test_gradient_shap_exact_on_linear_model(tmp_path):
    """On a linear network the path estimator is exact for any sample count."""
    model = small_model()
    # make the network linear: bypass ReLU by forcing positive pre-activations
    model.params.b1 = np.full_like(model.params.b1, 50.0)
    model.params.b2 = np.full_like(model.params.b2, 50.0)
    rng = np.random.default_rng(4)
    x = rng.uniform(0.0, 0.2, 10)
    baseline = rng.uniform(0.0, 0.2, 10)
    exact = exact_shapley(lambda v: forward(model.params, v), x, baseline)
    est = gradient_shap(model, x, [baseline], n_samples=512, seed=0)
    # sigmoid output keeps a little curvature; tolerance reflects that
    assert np.allclose(est.phi, exact.phi, atol=5e-3)


def test_gradient_shap_converges_to_exact():
    model = small_model(seed=7)
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 1, 10)
    baseline = np.zeros(10)
    exact = exact_shapley(lambda v: forward(model.params, v), x, baseline)
    coarse = gradient_shap(model, x, [baseline], n_samples=64, seed=1)
    fine = gradient_shap(model, x, [baseline], n_samples=8192, seed=1)
    err_coarse = np.abs(coarse.phi - exact.phi).mean()
    err_fine = np.abs(fine.phi - exact.phi).mean()
    assert err_fine <= err_coarse
    assert err_fine <= 0.02 * max(np.abs(exact.phi).max(), 1e-9)


def test_gradient_shap_deterministic_and_seed_sensitive():
    model = small_model()
    x = np.full(10, 0.5)
    baselines = [np.zeros(10), np.ones(10) * 0.1]
    a = gradient_shap(model, x, baselines, n_samples=128, seed=3)
    b = gradient_shap(model, x, baselines, n_samples=128, seed=3)
    c = gradient_shap(model, x, baselines, n_samples=128, seed=4)
    assert np.array_equal(a.phi, b.phi)
    assert not np.array_equal(a.phi, c.phi)


def test_gradient_shap_validations():
    model = small_model()
    with pytest.raises(EmptyBaselines):
        gradient_shap(model, np.zeros(10), [])
    with pytest.raises(ValueError):
        gradient_shap(model, np.zeros(10), [np.zeros(10)], n_samples=0)


def test_gradient_shap_base_value_is_mean_baseline_output():
    model = small_model()
    baselines = [np.zeros(10), np.full(10, 0.5)]
    attr = gradient_shap(model, np.ones(10), baselines, n_samples=8)
    expected = np.mean([forward(model.params, b) for b in baselines])
    assert attr.base_value == pytest.approx(expected)


def make_attr(phi):
    phi = np.asarray(phi, dtype=float)
    return Attribution(phi=phi, base_value=0.5, prediction=0.5 + phi.sum())


def test_shap_summary_ranks_by_mean_abs():
    attrs = [make_attr([0.1] + [0.0] * 8 + [0.5]), make_attr([-0.3] + [0.0] * 8 + [0.4])]
    rows = shap_summary(attrs)
    assert rows[0].feature == FEATURE_NAMES[9]
    assert rows[0].mean_abs_phi == pytest.approx(0.45)
    assert rows[1].feature == FEATURE_NAMES[0]
    assert rows[1].mean_abs_phi == pytest.approx(0.2)
    # feature 0 flips sign across examples: mean is -0.1, one of two agrees
    assert rows[1].sign_consistency == pytest.approx(0.5)
    # all-zero features tie at 0 and keep index order
    assert [r.feature for r in rows[2:]] == list(FEATURE_NAMES[1:9])


def test_shap_summary_empty():
    with pytest.raises(EmptyInput):
        shap_summary([])


def test_write_attributions_and_summary(tmp_path):
    attrs = [make_attr(np.linspace(-0.2, 0.2, 10)), make_attr(np.zeros(10))]
    path = tmp_path / "attributions.csv"
    write_attributions(attrs, ["W1#1", "W2#3"], path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["example_id"] for r in rows] == ["W1#1", "W2#3"]
    got = [float(rows[0][f"phi_{n}"]) for n in FEATURE_NAMES]
    assert np.allclose(got, attrs[0].phi)
    assert float(rows[0]["prediction"]) == pytest.approx(attrs[0].prediction)

    summary_path = tmp_path / "summary.csv"
    write_summary(shap_summary(attrs), summary_path)
    with open(summary_path, newline="") as fh:
        srows = list(csv.DictReader(fh))
    assert len(srows) == 10
    # |phi| ties at 0.1 for features 0 and 9; index breaks the tie
    assert srows[0]["feature"] == FEATURE_NAMES[0]

    svg_path = tmp_path / "summary.svg"
    write_summary_svg(shap_summary(attrs), svg_path)
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    for name in FEATURE_NAMES:
        assert name in svg


def test_write_attributions_byte_deterministic(tmp_path):
    attrs = [make_attr(np.linspace(-0.1, 0.3, 10))]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_attributions(attrs, ["W1#1"], a)
    write_attributions(attrs, ["W1#1"], b)
    assert a.read_bytes() == b.read_bytes()
