"""Built-in chains: Grover search, the coined Hadamard walk on a cycle, and
classical embeddings. Each constructor returns ``(channel, target, rho0)``.
"""
import math

import numpy as np

from .channels import (
    DensityMatrix,
    TargetSubspace,
    check_stochastic,
    classical_channel,
    unitary_channel,
)
from .errors import ValidationError

MAX_FULL_GROVER_QUBITS = 6


def p_grid(steps=100):
    """The measurement probabilities 1/steps, 2/steps, ..., 1."""
    return [k / steps for k in range(1, steps + 1)]


def grover_angle(n_items):
    return math.asin(1 / math.sqrt(n_items))


def grover_restricted(n_items):
    """Grover iteration on span(|x0>, |x0_perp>), basis in that order.

    The step is the rotation [[cos 2g, -sin 2g], [sin 2g, cos 2g]] with
    g = arcsin(1/sqrt(N)); |x0_perp> has positive overlap with |+>, so the
    start state has amplitudes (sin g, cos g).
    """
    if n_items < 2:
        raise ValidationError("Grover search needs at least 2 items")
    g = grover_angle(n_items)
    c, s = math.cos(2 * g), math.sin(2 * g)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    plus = np.array([math.sin(g), math.cos(g)])
    return unitary_channel(rot), TargetSubspace.from_indices(2, [0]), DensityMatrix.pure(plus)


def grover_full(n_qubits, marked=0):
    """Grover iteration G = D O on 2**n_qubits basis states."""
    if n_qubits > MAX_FULL_GROVER_QUBITS:
        raise ValidationError(
            f"full Grover chain limited to {MAX_FULL_GROVER_QUBITS} qubits "
            f"(dense superoperator size {4 ** MAX_FULL_GROVER_QUBITS})"
        )
    if n_qubits < 1:
        raise ValidationError("need at least one qubit")
    n = 2 ** n_qubits
    if not 0 <= marked < n:
        raise ValidationError(f"marked item {marked} out of range for {n} items")
    oracle = np.eye(n, dtype=complex)
    oracle[marked, marked] = -1
    plus = np.full(n, 1 / math.sqrt(n), dtype=complex)
    diffusion = 2 * np.outer(plus, plus) - np.eye(n)
    return (
        unitary_channel(diffusion @ oracle),
        TargetSubspace.from_indices(n, [marked]),
        DensityMatrix.pure(plus),
    )


def cycle_unitary(length):
    """U = S (H kron 1) on coin (x) position, coin first, index = coin * L + x.

    Coin |up> = 0 moves x -> x + 1, coin |down> = 1 moves x -> x - 1.
    """
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    shift = np.zeros((2 * length, 2 * length), dtype=complex)
    for x in range(length):
        shift[(x + 1) % length, x] = 1
        shift[length + (x - 1) % length, length + x] = 1
    return shift @ np.kron(h, np.eye(length))


def coined_cycle(length):
    """Hadamard walk on a cycle from |up, 0> to either coin state at site L // 2."""
    if length < 3:
        raise ValidationError("cycle length must be at least 3")
    far = length // 2
    target = TargetSubspace.from_indices(2 * length, [far, length + far])
    return unitary_channel(cycle_unitary(length)), target, DensityMatrix.basis(2 * length, 0)


def cycle_matrix(length):
    """Symmetric random walk on a cycle as a stochastic matrix."""
    p = np.zeros((length, length))
    for x in range(length):
        p[x, (x + 1) % length] += 0.5
        p[x, (x - 1) % length] += 0.5
    return p


def classical_embed(p, start, target):
    p = check_stochastic(p)
    n = p.shape[0]
    for name, idx in (("start", start), ("target", target)):
        if not 0 <= int(idx) < n:
            raise ValidationError(f"{name} index {idx} out of range for {n} states")
    return classical_channel(p), TargetSubspace.from_indices(n, [int(target)]), DensityMatrix.basis(n, int(start))


def grover_closed_form(n_items, p):
    """h(p) = (1/p) (N^2 p^2 - 16 N p + 16 N + 16 p - 16) / (8 N - 4 N p)."""
    n = n_items
    return (n * n * p * p - 16 * n * p + 16 * n + 16 * p - 16) / (8 * n - 4 * n * p) / p


def grover_plotted_form(n_items, p):
    """The alternative expression (1/p) ((N p)^2 + 16 N - 20 N p + 16 p) / (8 N - 4 N p).

    Kept for comparison only; it disagrees with the chain (N/4 fails at p = 1).
    """
    n = n_items
    return ((n * p) ** 2 + 16 * n - 20 * n * p + 16 * p) / (8 * n - 4 * n * p) / p
