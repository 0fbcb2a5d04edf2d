import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhitting import (
    Channel,
    DensityMatrix,
    Explicit,
    Geometric,
    TargetSubspace,
    classical_channel,
    compose,
    identity_channel,
    mix,
    projection_map,
    restricted_map,
    sigma_channel,
    unitary_channel,
)
from qhitting import linalg
from qhitting.errors import DimensionError, ValidationError

from conftest import random_density, random_kraus, random_stochastic, random_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ket_bra(d, i):
    m = np.zeros((d, d), dtype=complex)
    m[i, i] = 1
    return m


def test_density_matrix_validation():
    DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValidationError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5]))
    DensityMatrix(np.diag([0.5, 0]), subnormalized=True)


def test_unitary_channel_examples():
    rho = random_density(3, np.random.default_rng(1))
    assert np.abs(unitary_channel(np.eye(3)).apply_matrix(rho) - rho).max() < 1e-15
    assert np.abs(unitary_channel(X).apply_matrix(ket_bra(2, 0)) - ket_bra(2, 1)).max() < 1e-15
    assert np.abs(unitary_channel(H).apply_matrix(ket_bra(2, 0)) - np.full((2, 2), 0.5)).max() < 1e-15
    with pytest.raises(ValidationError):
        unitary_channel(np.array([[1, 1], [0, 1]]))


def test_unitary_superop_radius(rng):
    u = random_unitary(2, rng)
    assert abs(linalg.spectral_radius(unitary_channel(u).superop) - 1) < 1e-10


def test_classical_channel_examples(rng):
    q = np.array([0.2, 0.3, 0.5])
    assert np.abs(classical_channel(np.eye(3)).apply_matrix(np.diag(q)) - np.diag(q)).max() < 1e-15
    out = classical_channel([[0, 1], [1, 0]]).apply_matrix(np.diag([1.0, 0.0]))
    assert np.abs(out - np.diag([0.0, 1.0])).max() < 1e-15
    p = random_stochastic(3, rng)
    out = classical_channel(p).apply_matrix(np.diag(q))
    assert np.abs(out - np.diag(q @ p)).max() < 1e-14
    with pytest.raises(ValidationError):
        classical_channel([[0.5, 0.4], [0, 1]])


def test_classical_superop_matches_kraus(rng):
    p = random_stochastic(4, rng, sparsity=0.3)
    e = classical_channel(p)
    from_kraus = sum(np.kron(k.conj(), k) for k in e.kraus)
    assert np.abs(e.superop - from_kraus).max() < 1e-15


def test_compose_and_mix_examples(rng):
    e = Channel(2, kraus=random_kraus(2, 2, rng))
    assert np.abs(compose(e, identity_channel(2)).superop - e.superop).max() < 1e-12
    assert np.abs(mix([e], [1.0]).superop - e.superop).max() < 1e-12
    xx = compose(unitary_channel(X), unitary_channel(X))
    assert np.abs(xx.superop - np.eye(4)).max() < 1e-12
    with pytest.raises(DimensionError):
        compose(e, identity_channel(3))
    with pytest.raises(ValidationError):
        mix([e, e], [0.5, 0.6])


def test_compose_superop_is_product(rng):
    a = Channel(3, kraus=random_kraus(3, 2, rng))
    b = Channel(3, kraus=random_kraus(3, 3, rng))
    ab = compose(a, b, max_kraus=1)
    assert not ab.has_kraus
    assert np.abs(ab.superop - a.superop @ b.superop).max() < 1e-12
    m = mix([a, b], [0.3, 0.7])
    assert np.abs(m.superop - (0.3 * a.superop + 0.7 * b.superop)).max() < 1e-12


def test_projection_map_examples():
    t = TargetSubspace.from_indices(2, [1])
    rm = projection_map(t, "remove_z")
    assert not isinstance(rm, Channel)
    assert np.abs(rm.apply_matrix(ket_bra(2, 0)) - ket_bra(2, 0)).max() == 0
    assert np.abs(rm.apply_matrix(ket_bra(2, 1))).max() == 0
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert np.abs(rm.apply_matrix(plus) - 0.5 * ket_bra(2, 0)).max() < 1e-15
    keep = projection_map(t, "keep_z").apply_matrix(plus)
    assert np.abs(keep - 0.5 * ket_bra(2, 1)).max() < 1e-15
    out = rm(DensityMatrix(plus))
    assert out.subnormalized and abs(out.trace - 0.5) < 1e-15


def test_target_subspace():
    t = TargetSubspace.from_vectors([[1, 1, 0]])
    assert t.rank == 1 and not t.is_diagonal
    assert np.abs(t.pi_z + t.pi_minus_z - np.eye(3)).max() == 0
    with pytest.raises(ValidationError):
        TargetSubspace(np.array([[1, 1], [0, 0]]))


def test_restricted_map_examples(rng):
    t = TargetSubspace.from_indices(3, [2])
    r = restricted_map(identity_channel(3), t)
    assert np.abs(r.superop - projection_map(t).superop).max() < 1e-15
    assert abs(linalg.spectral_radius(r.superop) - 1) < 1e-12
    e = Channel(3, kraus=random_kraus(3, 2, rng))
    r = restricted_map(e, t)
    s_pi = projection_map(t).superop
    assert np.abs(r.superop - s_pi @ e.superop @ s_pi).max() < 1e-12


def test_restricted_map_superop_only(rng):
    e = Channel(3, kraus=random_kraus(3, 2, rng))
    e_s = Channel(3, superop=np.array(e.superop))
    t = TargetSubspace.from_vectors([[1, 1j, 0]])
    assert np.abs(restricted_map(e_s, t).superop - restricted_map(e, t).superop).max() < 1e-12


def test_grover_restricted_radius_below_one():
    from qhitting.walks import grover_restricted
    for n in (2, 4, 32, 1024):
        e, t, _ = grover_restricted(n)
        assert linalg.spectral_radius(restricted_map(e, t).superop) < 1


def test_step_distributions(rng):
    g = Geometric(0.25)
    assert g.mean == 4 and abs(g.pmf(3) - 0.25 * 0.75 ** 2) < 1e-15 and g.pmf(0) == 0
    with pytest.raises(ValidationError, match="resolvent undefined"):
        Geometric(0.0)
    with pytest.raises(ValidationError):
        Geometric(1.5)
    ex = Explicit({1: 0.5, 3: 0.5})
    assert ex.mean == 2
    with pytest.raises(ValidationError):
        Explicit({0: 0.5, 1: 0.5})
    assert Explicit({0: 0.5, 2: 0.5}, allow_zero=True).mean == 1
    with pytest.raises(ValidationError):
        Explicit({1: 0.5, 2: 0.4})
    samples = [ex.sample(rng) for _ in range(2000)]
    assert set(samples) == {1, 3}


def test_sigma_channel_examples(rng):
    e = unitary_channel(random_unitary(4, rng))
    assert np.abs(sigma_channel(e, Geometric(1.0)).superop - e.superop).max() < 1e-12
    ident = sigma_channel(identity_channel(3), Geometric(0.3))
    assert np.abs(ident.superop - np.eye(9)).max() < 1e-12
    # truncated series oracle on a 2-qubit unitary channel
    s = e.superop
    acc = np.zeros_like(s)
    power = np.eye(16, dtype=complex)
    for t in range(1, 60):
        power = power @ s
        acc += 0.5 ** t * power
    assert np.abs(sigma_channel(e, Geometric(0.5)).superop - acc).max() < 1e-10


def test_sigma_channel_explicit(rng):
    e = Channel(2, kraus=random_kraus(2, 2, rng))
    s = e.superop
    got = sigma_channel(e, Explicit({1: 0.25, 2: 0.75})).superop
    assert np.abs(got - (0.25 * s + 0.75 * s @ s)).max() < 1e-12
    got = sigma_channel(e, Explicit({0: 0.5, 1: 0.5}, allow_zero=True)).superop
    assert np.abs(got - (0.5 * np.eye(4) + 0.5 * s)).max() < 1e-12


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_sigma_channel_matches_series_random(p):
    r = np.random.default_rng(int(p * 100))
    for _ in range(20):
        d = int(r.integers(1, 5))
        e = Channel(d, kraus=random_kraus(d, int(r.integers(1, 4)), r))
        s = e.superop
        acc = np.zeros_like(s)
        power = np.eye(d * d, dtype=complex)
        t = 0
        while (1 - p) ** t >= 1e-12 / 10:
            t += 1
            power = power @ s
            acc += p * (1 - p) ** (t - 1) * power
        assert np.abs(sigma_channel(e, Geometric(p)).superop - acc).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_random_channels_are_cptp(d, n_ops, seed):
    r = np.random.default_rng(seed)
    e = Channel(d, kraus=random_kraus(d, n_ops, r))
    assert e.trace_defect() < 1e-9
    assert e.choi_min_eigenvalue() > -1e-8
    u = unitary_channel(random_unitary(d, r)) if d > 1 else identity_channel(1)
    m = mix([e, u], [0.4, 0.6])
    assert m.trace_defect() < 1e-9 and m.choi_min_eigenvalue() > -1e-8
    c = classical_channel(random_stochastic(d, r))
    assert c.trace_defect() < 1e-9 and c.choi_min_eigenvalue() > -1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_apply_preserves_trace_and_hermiticity(d, seed):
    r = np.random.default_rng(seed)
    e = Channel(d, kraus=random_kraus(d, 3, r))
    rho = random_density(d, r)
    out = e.apply_matrix(rho)
    assert abs(np.trace(out).real - 1) < 1e-10
    assert np.abs(out - out.conj().T).max() < 1e-10
    out_s = Channel(d, superop=np.array(e.superop)).apply_matrix(rho)
    assert np.abs(out - out_s).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_classical_channel_commutes_with_dephasing(d, seed):
    r = np.random.default_rng(seed)
    p = random_stochastic(d, r)
    rho = random_density(d, r)
    out = classical_channel(p).apply_matrix(rho)
    assert np.abs(np.diag(out) - np.diag(rho).real @ p).max() < 1e-12
    assert np.abs(out - np.diag(np.diag(out))).max() < 1e-15
