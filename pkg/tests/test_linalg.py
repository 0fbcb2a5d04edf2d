import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhitting import linalg
from qhitting.errors import DimensionError, SingularSystem


def test_kron_examples():
    assert np.abs(linalg.kron(np.eye(2), np.eye(3)) - np.eye(6)).max() == 0
    a = np.array([[1, 2], [3, 4]])
    out = linalg.kron(a, np.eye(2))
    want = np.array([[1, 0, 2, 0], [0, 1, 0, 2], [3, 0, 4, 0], [0, 3, 0, 4]])
    assert np.abs(out - want).max() == 0


def test_vec_column_stacking():
    x = np.array([[1, 2], [3, 4]])
    assert np.abs(linalg.vec(x) - [1, 3, 2, 4]).max() == 0
    assert np.abs(linalg.unvec(linalg.vec(x)) - x).max() == 0


def test_unvec_rejects_non_square_length():
    with pytest.raises(DimensionError):
        linalg.unvec(np.zeros(5))


def test_vec_sandwich_identity(rng):
    for d in (1, 2, 3, 5):
        a, x, b = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(3))
        lhs = linalg.vec(a @ x @ b)
        rhs = linalg.kron(b.T, a) @ linalg.vec(x)
        assert np.abs(lhs - rhs).max() < 1e-12


def test_kron_apply_matches_dense(rng):
    d = 4
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = rng.normal(size=(d * d, 7)) + 1j * rng.normal(size=(d * d, 7))
    full = np.kron(a, b)
    assert np.abs(linalg.kron_apply(a, b, m) - full @ m).max() < 1e-12
    assert np.abs(linalg.kron_apply(a, b, m[:, 0]) - full @ m[:, 0]).max() < 1e-12
    m2 = m[:, :d * d] if m.shape[1] >= d * d else rng.normal(size=(d * d, d * d))
    assert np.abs(linalg.kron_apply_right(m2, a, b) - m2 @ full).max() < 1e-12


def test_solve_examples():
    x = linalg.solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
    assert np.abs(x - [1, 2, 3]).max() < 1e-15
    x = linalg.solve(np.array([[2.0, 0], [0, 4.0]]), np.array([2.0, 2.0]))
    assert np.abs(x - [1, 0.5]).max() < 1e-15


def test_solve_singular():
    with pytest.raises(SingularSystem) as info:
        linalg.solve(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 0.0]))
    assert info.value.condition > linalg.COND_LIMIT
    with pytest.raises(SingularSystem):
        linalg.solve(np.zeros((2, 2)), np.ones(2))


def test_solve_ill_conditioned_rejected():
    a = np.diag([1.0, 1e-13])
    with pytest.raises(SingularSystem):
        linalg.solve(a, np.ones(2))


def test_solve_random_systems(rng):
    for _ in range(100):
        n = int(rng.integers(1, 30))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n) + 1j * rng.normal(size=n)
        x, info = linalg.solve(a, b, return_info=True)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
        assert info["condition"] < 1e6


def test_solve_shape_errors():
    with pytest.raises(DimensionError):
        linalg.solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(DimensionError):
        linalg.solve(np.eye(2), np.ones(3))


def test_spectral_radius_examples():
    assert abs(linalg.spectral_radius(np.eye(3)) - 1) < 1e-12
    assert abs(linalg.spectral_radius(np.array([[0, 1], [1, 0]])) - 1) < 1e-12
    assert abs(linalg.spectral_radius(np.diag([0.5, -0.9, 0.1])) - 0.9) < 1e-12
    # rotation by 90 degrees: eigenvalues +-i
    assert abs(linalg.spectral_radius(np.array([[0, -1], [1, 0]])) - 1) < 1e-12


def test_power_iteration_agrees_with_dense(rng):
    # positive (entrywise nonnegative) matrix: Perron root is what power iteration sees
    a = rng.random((50, 50)) / 40
    dense = linalg.spectral_radius(a)
    power = linalg.spectral_radius(a, dense_limit=10)
    assert abs(dense - power) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_kron_apply_property(d, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
    b = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
    m = r.normal(size=(d * d, 3)) + 1j * r.normal(size=(d * d, 3))
    assert np.abs(linalg.kron_apply(a, b, m) - np.kron(a, b) @ m).max() < 1e-10
