import numpy as np
import pytest

from veilkit.errors import (
    DegenerateData,
    DimMismatch,
    InvalidRetention,
    ZeroVariance,
)
from veilkit.pca import (
    PcaModel,
    component_count,
    fit,
    inverse_transform,
    load_model,
    save_model,
    transform,
)


def brute_force_eig(X):
    """Oracle: explicit covariance build + full symmetric eigendecomposition."""
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def count_oracle(lams, retention):
    """Oracle: explicit cumulative-sum scan."""
    total = float(np.sum(lams))
    running = 0.0
    for m, v in enumerate(lams, start=1):
        running += float(v)
        if running / total >= retention:
            return m
    return len(lams)


def test_component_count_fixtures():
    assert component_count(np.array([9.0, 1.0]), 0.9) == 1
    assert component_count(np.array([9.0, 1.0]), 0.91) == 2
    assert component_count(np.array([5.0, 0.0, 0.0]), 0.5) == 1
    assert component_count(np.array([5.0, 0.0, 0.0]), 1.0) == 1
    with pytest.raises(InvalidRetention):
        component_count(np.array([1.0]), 0.0)
    with pytest.raises(InvalidRetention):
        component_count(np.array([1.0]), 1.5)
    with pytest.raises(ZeroVariance):
        component_count(np.array([0.0, 0.0]), 0.9)


def test_component_count_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        lams = np.sort(rng.random(rng.integers(1, 12)))[::-1]
        r = float(rng.uniform(0.05, 1.0))
        assert component_count(lams, r) == count_oracle(lams, r)


def test_single_axis_variance():
    X = np.full((6, 4), 5.0)
    X[:, 0] = np.arange(6.0)
    model = fit(X, 0.95)
    assert model.output_dim == 1
    expected = np.zeros(4)
    expected[0] = 1.0
    assert np.allclose(np.abs(model.components[:, 0]), expected, atol=1e-12)
    assert model.components[0, 0] > 0  # sign convention
    assert np.isclose(model.eigenvalues[0], np.var(np.arange(6.0), ddof=1), atol=1e-12)


def test_perfect_correlation():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    model = fit(X, 0.99)
    assert model.output_dim == 1
    axis = model.components[:, 0]
    assert np.allclose(np.abs(axis), np.array([1.0, 1.0]) / np.sqrt(2.0), atol=1e-12)
    assert axis[0] > 0


@pytest.mark.parametrize("shape", [(20, 5), (6, 10), (50, 4), (8, 8)])
def test_fit_matches_brute_force_oracle(shape):
    rng = np.random.default_rng(hash(shape) % 2**32)
    X = rng.standard_normal(shape) * rng.uniform(0.5, 3.0, size=shape[1])
    model = fit(X, 0.97)
    vals, vecs = brute_force_eig(X)
    m = model.output_dim
    assert np.allclose(model.eigenvalues, vals[:m], atol=1e-8)
    for i in range(m):
        a = model.components[:, i]
        b = vecs[:, i]
        assert np.allclose(a, b, atol=1e-8) or np.allclose(a, -b, atol=1e-8)


def test_fit_oracle_sweep():
    # smaller version of the acceptance sweep, both solver routes
    rng = np.random.default_rng(99)
    for _ in range(30):
        n = int(rng.integers(5, 51))
        d = int(rng.integers(2, 21))
        X = rng.standard_normal((n, d))
        model = fit(X, float(rng.choice([0.95, 0.97, 0.99, 1.0])))
        vals, vecs = brute_force_eig(X)
        m = model.output_dim
        assert np.allclose(model.eigenvalues, vals[:m], atol=1e-8)
        for i in range(m):
            a, b = model.components[:, i], vecs[:, i]
            assert np.allclose(a, b, atol=1e-8) or np.allclose(a, -b, atol=1e-8)
        # orthonormality
        gram = model.components.T @ model.components
        assert np.allclose(gram, np.eye(m), atol=1e-8)


def test_eigenvalue_mass_conservation():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((15, 6))
    model = fit(X, 1.0)
    total = np.var(X - X.mean(axis=0), axis=0, ddof=1).sum()
    assert np.isclose(model.eigenvalues.sum(), total, atol=1e-8)


def test_transformed_column_variances_equal_eigenvalues():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((40, 7)) * np.array([5, 3, 2, 1, 1, 0.5, 0.1])
    model = fit(X, 0.97)
    Z = transform(model, X)
    assert np.allclose(Z.var(axis=0, ddof=1), model.eigenvalues, atol=1e-8)


def test_reconstruction_error_bounded_by_discarded_mass():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((20, 5)) * np.array([4, 2, 1, 0.5, 0.2])
    for r in (0.9, 0.97, 0.99):
        model = fit(X, r)
        Xr = inverse_transform(model, transform(model, X))
        centered_energy = ((X - X.mean(axis=0)) ** 2).sum()
        rel_sq_err = ((X - Xr) ** 2).sum() / centered_energy
        assert rel_sq_err <= (1.0 - r) + 1e-6


def test_full_retention_is_isometry():
    rng = np.random.default_rng(15)
    X = rng.standard_normal((30, 4))
    model = fit(X, 1.0)
    assert model.output_dim == 4
    Z = transform(model, X)
    d_orig = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    d_new = np.linalg.norm(Z[:, None, :] - Z[None, :, :], axis=2)
    assert np.allclose(d_orig, d_new, atol=1e-8)


def test_transform_of_training_mean_is_zero():
    rng = np.random.default_rng(16)
    X = rng.standard_normal((12, 5)) + 3.0
    model = fit(X, 0.95)
    z = transform(model, model.mean[None, :])
    assert np.allclose(z, 0.0, atol=1e-12)


def test_fit_deterministic():
    rng = np.random.default_rng(17)
    X = rng.standard_normal((25, 9))
    m1 = fit(X, 0.97)
    m2 = fit(X, 0.97)
    np.testing.assert_allclose(m1.components, m2.components, rtol=0, atol=1e-12)
    np.testing.assert_allclose(m1.eigenvalues, m2.eigenvalues, rtol=0, atol=1e-12)
    np.testing.assert_allclose(m1.mean, m2.mean, rtol=0, atol=1e-12)


def test_fit_errors():
    with pytest.raises(DegenerateData):
        fit(np.ones((5, 3)), 0.95)
    with pytest.raises(InvalidRetention):
        fit(np.random.default_rng(0).standard_normal((5, 3)), 0.0)
    with pytest.raises(ValueError):
        fit(np.ones((1, 3)), 0.95)


def test_transform_dim_mismatch():
    X = np.random.default_rng(1).standard_normal((10, 4))
    model = fit(X, 0.95)
    with pytest.raises(DimMismatch):
        transform(model, np.ones((3, 5)))


def test_model_round_trip(tmp_path):
    X = np.random.default_rng(2).standard_normal((12, 6))
    model = fit(X, 0.97)
    path = str(tmp_path / "model.csv")
    save_model(model, path)
    back = load_model(path)
    assert isinstance(back, PcaModel)
    assert np.array_equal(back.mean, model.mean)
    assert np.array_equal(back.components, model.components)
    assert np.array_equal(back.eigenvalues, model.eigenvalues)
    assert back.retention == model.retention
