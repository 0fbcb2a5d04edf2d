"""Dense complex linear algebra used by the channel and hitting-time code.

Vectorization is column-stacking throughout, so that

    vec(A X B) = (B^T kron A) vec(X)

and a channel rho -> sum_k K rho K^dag has superoperator sum_k conj(K) kron K.
"""
import warnings

import numpy as np
import scipy.linalg as sla
from scipy.linalg import LinAlgWarning

from .errors import DimensionError, SingularSystem

SOLVE_TOL = 1e-10
COND_LIMIT = 1e12
DENSE_EIG_LIMIT = 4096


def as_matrix(m, name="matrix"):
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} has non-finite entries")
    return a


def kron(a, b):
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vec(m):
    return as_matrix(m).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v, dtype=complex).ravel()
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"cannot unvec a vector of length {v.size} into a {d}x{d} matrix")
    return v.reshape((d, d), order="F")


def kron_apply(a, b, m):
    """Return ``kron(a, b) @ m`` without forming the Kronecker product.

    ``a`` is pa x d, ``b`` is pb x d and ``m`` is d^2 x n (or a length d^2
    vector). Each column of ``m`` is unvectorized to X and mapped to
    b X a^T, which costs O(d^3) per column instead of O(d^4).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    d = a.shape[1]
    m = np.asarray(m)
    vector = m.ndim == 1
    cols = m.reshape(d * d, -1)
    n = cols.shape[1]
    # column j of cols -> X_j = cols[:, j].reshape(d, d, order="F"); stack as (n, d, d)
    xs = cols.T.reshape(n, d, d).transpose(0, 2, 1)
    ys = b @ xs @ a.T
    out = ys.transpose(0, 2, 1).reshape(n, a.shape[0] * b.shape[0]).T
    return out.ravel() if vector else out


def kron_apply_right(m, a, b):
    """Return ``m @ kron(a, b)``."""
    return kron_apply(a.T, b.T, np.asarray(m).T).T


def solve(a, b, tol=SOLVE_TOL, cond_limit=COND_LIMIT, return_info=False):
    """Solve ``a x = b`` by LU with partial pivoting.

    Raises SingularSystem (carrying the 1-norm condition estimate) when the
    estimate exceeds ``cond_limit``. ``b`` may be a vector or a matrix of
    right-hand sides. With ``return_info`` the result is ``(x, info)`` where
    info holds the condition estimate and the relative residual.
    """
    a = as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"solve needs a square matrix, got {a.shape}")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    anorm = np.linalg.norm(a, 1)
    if anorm == 0.0:
        raise SingularSystem("zero matrix", condition=float("inf"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0.0 else 1.0 / rcond
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularSystem(
            f"matrix is singular to working precision (condition estimate {cond:.3g})",
            condition=cond,
        )
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    resid = np.linalg.norm(a @ x - b)
    bound = tol * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
    if resid > bound:
        raise SingularSystem(
            f"residual {resid:.3g} exceeds bound {bound:.3g} (condition estimate {cond:.3g})",
            condition=cond,
        )
    if return_info:
        return x, {"condition": float(cond), "residual": float(resid / max(bound / tol, 1e-300))}
    return x


def spectral_radius(a, dense_limit=DENSE_EIG_LIMIT):
    """Largest eigenvalue magnitude of a square matrix.

    Uses a full eigendecomposition up to ``dense_limit`` rows; larger matrices
    go through :func:`power_spectral_radius` on the matrix-vector product.
    """
    a = as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"spectral_radius needs a square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return 0.0
    if a.shape[0] <= dense_limit:
        return float(np.abs(np.linalg.eigvals(a)).max())
    return power_spectral_radius(lambda v: a @ v, np.ones(a.shape[0], dtype=complex))


def power_spectral_radius(apply, x0, max_iter=10_000, tol=1e-10, trace=None):
    """Estimate the spectral radius of a linear operator by power iteration.

    ``apply`` maps an array to an array of the same shape. The magnitude
    estimate at step k is |<w, A^{k+1} x0>| / |<w, A^k x0>| with ``w`` given by
    ``trace`` (a functional; default: sum of entries), renormalising as we go.
    Started from a strictly positive element this converges to the Perron
    root of a positive map.
    """
    if trace is None:
        trace = np.sum
    x = np.asarray(x0, dtype=complex)
    t = trace(x)
    if t == 0:
        return 0.0
    x = x / t
    prev = None
    est = 0.0
    for _ in range(max_iter):
        y = apply(x)
        t = trace(y)
        if abs(t) < 1e-300:
            return 0.0
        est = abs(t)
        x = y / t
        if prev is not None and abs(est - prev) < tol:
            return float(est)
        prev = est
    return float(est)
