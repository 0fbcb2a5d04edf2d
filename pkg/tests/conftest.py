import numpy as np
import pytest
import scipy.stats


def random_unitary(d, rng):
    return scipy.stats.unitary_group.rvs(d, random_state=rng)


def random_kraus(d, n_ops, rng):
    """Kraus operators of a random CPTP map (isometry slices)."""
    g = rng.normal(size=(n_ops * d, d)) + 1j * rng.normal(size=(n_ops * d, d))
    q, _ = np.linalg.qr(g)
    return [q[k * d:(k + 1) * d] for k in range(n_ops)]


def random_stochastic(d, rng, sparsity=0.0):
    p = rng.random((d, d))
    p[rng.random((d, d)) < sparsity] = 0
    p[np.arange(d), rng.integers(0, d, d)] += 0.1
    return p / p.sum(axis=1, keepdims=True)


def random_density(d, rng, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def forward_hitting(kraus, pi_z, rho0, p=1.0, tol=1e-13, max_steps=10**6):
    """Oracle: sum over t of t * P(first hit after t steps), by forward evolution.

    Each step applies the Kraus operators, then measures with probability p.
    Independent of the library: no superoperators, no resolvents.
    """
    d = pi_z.shape[0]
    q = np.eye(d) - pi_z
    s = q @ rho0 @ q
    total = 0.0
    for t in range(1, max_steps + 1):
        y = sum(k @ s @ k.conj().T for k in kraus)
        hit = p * np.trace(pi_z @ y).real
        total += t * hit
        s = (1 - p) * y + p * (q @ y @ q)
        alive = np.trace(s).real
        if alive * t < tol and alive < tol:
            return total
    raise RuntimeError("oracle did not converge")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
