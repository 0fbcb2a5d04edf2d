"""Expected hitting times of quantum Markov chains.

The protocol measures the target observable once before any evolution, then
alternates a block of chain steps with a measurement until the target is
found. All values count applications of the chain step, never measurements;
``HittingResult.rounds`` carries the expected number of failed measurements
(equivalently, the hitting time of the averaged chain E^sigma).
"""
from dataclasses import dataclass, field
import time

import numpy as np

from . import linalg
from .channels import (
    Channel,
    Geometric,
    StepDistribution,
    TargetSubspace,
    _as_array,
    check_stochastic,
    restricted_map,
    sigma_channel,
)
from .errors import (
    DimensionError,
    NonConvergent,
    PreconditionViolated,
    SingularSystem,
    ValidationError,
)

MARGIN_TOL = 1e-9
NEUMANN_TOL = 1e-10
NEUMANN_MAX_TERMS = 1_000_000
NEUMANN_PATIENCE = 10
REACH_TOL = 1e-10

DENSE = "dense_resolvent"
NEUMANN = "neumann_series"
INTERLEAVED = "interleaved_resolvent"


@dataclass
class HittingResult:
    value: float
    method: str
    precondition_margin: float
    rounds: float = float("nan")
    mean_steps: float = 1.0
    solver_stats: dict = field(default_factory=dict)

    @property
    def finite(self):
        return np.isfinite(self.value)


def _check_inputs(e, target, rho0):
    if not isinstance(e, Channel):
        raise ValidationError("hitting times need a trace-preserving Channel")
    if not isinstance(target, TargetSubspace):
        raise ValidationError("target must be a TargetSubspace")
    rho = _as_array(rho0)
    if rho.shape != (e.dim, e.dim) or target.dim != e.dim:
        raise DimensionError(
            f"channel dim {e.dim}, target dim {target.dim}, state shape {rho.shape}"
        )
    return rho


def map_spectral_radius(m):
    """Spectral radius of a CP map: dense eigenvalues up to superop size 4096."""
    if m.dim ** 2 <= linalg.DENSE_EIG_LIMIT:
        return linalg.spectral_radius(m.superop)
    return linalg.power_spectral_radius(
        m.apply_matrix, np.eye(m.dim, dtype=complex), trace=np.trace
    )


def _violation(radius, what="restricted map"):
    return PreconditionViolated(
        f"precondition violated: spectral radius {radius:.12g} of the {what} "
        f"is not below 1 - {MARGIN_TOL:g}; the hitting time is infinite",
        spectral_radius=radius,
    )


def reachable_solve(op, b, tol=REACH_TOL):
    """Solve (I - op) x = b inside the smallest op-invariant subspace holding b.

    Used when the whole-space precondition fails: the series behind the
    resolvent formula only sees the cyclic subspace of b, so the hitting time
    is finite iff op restricted there has spectral radius below 1. Returns
    ``(x, radius, dim)``; the radius is that of the restriction.
    """
    n = b.shape[0]
    scale = max(1.0, np.linalg.norm(op, 1))
    basis = [b / np.linalg.norm(b)]
    while len(basis) < n:
        w = op @ basis[-1]
        v = np.array(basis).T
        for _ in range(2):
            w = w - v @ (v.conj().T @ w)
        h = np.linalg.norm(w)
        if h <= tol * scale:
            break
        basis.append(w / h)
    v = np.array(basis).T
    ov = op @ v
    small = v.conj().T @ ov
    if np.linalg.norm(ov - v @ small) > 1e3 * tol * scale:
        raise SingularSystem("reachable subspace is not invariant to working precision",
                             condition=float("inf"))
    radius = float(np.abs(np.linalg.eigvals(small)).max())
    if radius >= 1 - MARGIN_TOL:
        return None, radius, v.shape[1]
    y = linalg.solve(np.eye(v.shape[1]) - small, v.conj().T @ b)
    return v @ y, radius, v.shape[1]


def hitting_time(e, target, rho0):
    """Expected number of chain steps before a measurement finds the target.

    Evaluates tr[(I - E_{-z})^{-1}(rho_{-z})] with a dense LU solve on the
    superoperator. The initial measurement is part of the protocol: a state
    already inside the target subspace has hitting time 0.
    """
    t0 = time.perf_counter()
    rho = _check_inputs(e, target, rho0)
    q = target.pi_minus_z
    rho_minus = q @ rho @ q
    e_minus = restricted_map(e, target)
    radius = map_spectral_radius(e_minus)
    margin = 1.0 - radius
    if np.abs(rho_minus).max() == 0.0:
        return HittingResult(0.0, DENSE, margin, rounds=0.0,
                             solver_stats={"wall_time": time.perf_counter() - t0})
    n = e.dim ** 2
    b = linalg.vec(rho_minus)
    if margin < MARGIN_TOL:
        x, reach, k = reachable_solve(e_minus.superop, b)
        if x is None:
            raise _violation(radius)
        margin = 1.0 - reach
        info = {"reachable_dim": k, "full_spectral_radius": radius}
    else:
        try:
            x, info = linalg.solve(np.eye(n) - e_minus.superop, b, return_info=True)
        except SingularSystem as exc:
            raise _violation(radius) from exc
    value = float(np.trace(linalg.unvec(x, e.dim)).real)
    info["wall_time"] = time.perf_counter() - t0
    return HittingResult(value, DENSE, margin, rounds=value, solver_stats=info)


def generalized_hitting_time(e, sigma, target, rho0, method="dense", tol=NEUMANN_TOL,
                             max_terms=NEUMANN_MAX_TERMS):
    """Expected number of chain steps when T ~ sigma steps separate measurements.

    ``method``:

    * ``"dense"``: build E^sigma, then mean(sigma) * tr[(I - E^sigma_{-z})^{-1}(rho_{-z})].
    * ``"interleaved"`` (geometric only): one resolvent of the per-step map
      F = ((1-p) I + p P_{-z}) o E, see :func:`geometric_hitting_time`.
    * ``"neumann"`` (geometric only): matrix-free partial sums, see
      :func:`hitting_time_neumann`.
    """
    if not isinstance(sigma, StepDistribution):
        raise ValidationError("sigma must be a StepDistribution")
    if method in ("interleaved", "neumann"):
        if not isinstance(sigma, Geometric):
            raise ValidationError(f"method {method!r} needs a geometric step distribution")
        if method == "interleaved":
            return geometric_hitting_time(e, sigma.p, target, rho0)
        return hitting_time_neumann(e, target, rho0, tol=tol, max_terms=max_terms, p=sigma.p)
    if method != "dense":
        raise ValidationError(f"unknown method {method!r}")
    _check_inputs(e, target, rho0)
    t0 = time.perf_counter()
    es = sigma_channel(e, sigma)
    inner = hitting_time(es, target, rho0)
    stats = dict(inner.solver_stats)
    stats["wall_time"] = time.perf_counter() - t0
    return HittingResult(
        sigma.mean * inner.value,
        DENSE,
        inner.precondition_margin,
        rounds=inner.value,
        mean_steps=sigma.mean,
        solver_stats=stats,
    )


class InterleavedSystem:
    """Reusable pieces of the interleaved solve for one (chain, target, start).

    The superoperator of E and of P_{-z} o E do not depend on p, so a sweep
    builds them once and pays only one LU factorization per p.
    """

    def __init__(self, e, target, rho0):
        rho = _check_inputs(e, target, rho0)
        d = e.dim
        q = target.pi_minus_z
        self.dim = d
        self.rho_minus = q @ rho @ q
        self.s = e.superop
        self.r = linalg.kron_apply(q.conj(), q, self.s)
        self.rhs = np.stack([linalg.vec(self.rho_minus), linalg.vec(np.eye(d))], axis=1)

    def solve(self, p):
        """Generalized hitting time for Geometric(p) through the interleaved map.

        Stepping once and then measuring with probability p evolves the
        surviving (unnormalized) state by F = ((1-p) I + p P_{-z}) o E, and the
        expected step count is tr[(I - F)^{-1}(rho_{-z})].

        Finiteness is certified from X = (I - F)^{-1}(I): F is a positive map,
        so r(F) < 1 iff X is positive definite, and then 1 - r(F) lies in
        [1/lambda_max(X), 1/lambda_min(X)]. The lower end is the margin.
        """
        t0 = time.perf_counter()
        if not 0 < p <= 1:
            raise ValidationError("resolvent undefined: p must lie in (0, 1]")
        d = self.dim
        f = (1 - p) * self.s + p * self.r
        try:
            x, info = linalg.solve(np.eye(d * d) - f, self.rhs, return_info=True)
            cert = linalg.unvec(x[:, 1], d)
            lam = np.linalg.eigvalsh((cert + cert.conj().T) / 2)
        except SingularSystem:
            lam = np.zeros(1)
        if lam.min() <= 0:
            return self._reachable(f, p, t0)
        margin = 1.0 / lam.max()
        info.update(margin_kind="interleaved_lower_bound", margin_upper=float(1.0 / lam.min()),
                    wall_time=time.perf_counter() - t0)
        if np.abs(self.rho_minus).max() == 0.0:
            return HittingResult(0.0, INTERLEAVED, margin, rounds=0.0, mean_steps=1 / p,
                                 solver_stats=info)
        if margin < MARGIN_TOL:
            raise _violation(1 - margin, "interleaved map")
        value = float(np.trace(linalg.unvec(x[:, 0], d)).real)
        return HittingResult(value, INTERLEAVED, margin, rounds=p * value, mean_steps=1 / p,
                             solver_stats=info)


    def _reachable(self, f, p, t0):
        # whole-space certificate failed; retry on the subspace reachable from rho_{-z}
        if np.abs(self.rho_minus).max() == 0.0:
            return HittingResult(0.0, INTERLEAVED, float("nan"), rounds=0.0, mean_steps=1 / p,
                                 solver_stats={"wall_time": time.perf_counter() - t0})
        x, radius, k = reachable_solve(f, self.rhs[:, 0])
        if x is None:
            raise _violation(radius, "interleaved map")
        value = float(np.trace(linalg.unvec(x, self.dim)).real)
        info = {"margin_kind": "reachable_subspace", "reachable_dim": k,
                "wall_time": time.perf_counter() - t0}
        return HittingResult(value, INTERLEAVED, 1.0 - radius, rounds=p * value,
                             mean_steps=1 / p, solver_stats=info)


def geometric_hitting_time(e, p, target, rho0):
    """Generalized hitting time for Geometric(p); see :class:`InterleavedSystem`.

    Equals the sigma-averaged formula but needs one d^2 solve and no
    d^2 x d^2 inverse.
    """
    if not 0 < p <= 1:
        raise ValidationError("resolvent undefined: p must lie in (0, 1]")
    return InterleavedSystem(e, target, rho0).solve(p)


def _step_kraus(e):
    if e.has_kraus:
        ks = e.kraus
        kd = [k.conj().T for k in ks]

        def step(x):
            out = ks[0] @ x @ kd[0]
            for k, k_dag in zip(ks[1:], kd[1:]):
                out += k @ x @ k_dag
            return out
        return step
    return e.apply_matrix


def _tail(history):
    """Geometric estimate of the sum of the terms after the last one."""
    if len(history) <= NEUMANN_PATIENCE:
        return float("inf")
    first, last = history[-1 - NEUMANN_PATIENCE], history[-1]
    if last <= 0:
        return 0.0
    if first <= 0:
        return float("inf")
    r = (last / first) ** (1.0 / NEUMANN_PATIENCE)
    if r >= 1:
        return float("inf")
    return last * r / (1 - r)


def hitting_time_neumann(e, target, rho0, tol=NEUMANN_TOL, max_terms=NEUMANN_MAX_TERMS, p=1.0):
    """Matrix-free partial sums sum_k tr(E_{-z}^k(rho_{-z})).

    Kraus operators act directly on d x d matrices; the superoperator is never
    formed. Summation stops once ``NEUMANN_PATIENCE`` consecutive terms fall
    below ``tol * (1 + partial_sum)``; complex eigenvalues make single small
    terms unreliable. Each term is a surviving probability, so the sequence
    is nonincreasing, and a term only counts as small once the geometric tail
    extrapolated from the last ``NEUMANN_PATIENCE`` ratios is small too
    (slowly mixing chains otherwise stop far from the limit). With ``p < 1`` the summand is the surviving mass of the
    geometric protocol, tr(F^k(rho_{-z})) with F = ((1-p) I + p P_{-z}) o E.
    """
    t0 = time.perf_counter()
    rho = _check_inputs(e, target, rho0)
    if not 0 < p <= 1:
        raise ValidationError("resolvent undefined: p must lie in (0, 1]")
    q = target.pi_minus_z
    step = _step_kraus(e)
    s = q @ rho @ q
    total = 0.0
    quiet = 0
    history = []
    for k in range(max_terms):
        if not s.any():
            stats = {"terms": k, "wall_time": time.perf_counter() - t0}
            return HittingResult(total, NEUMANN, float("nan"), rounds=p * total,
                                 mean_steps=1 / p, solver_stats=stats)
        term = float(np.trace(s).real)
        total += term
        history.append(term)
        quiet = quiet + 1 if abs(term) + _tail(history) < tol * (1 + total) else 0
        if quiet >= NEUMANN_PATIENCE:
            break
        y = step(s)
        if p == 1.0:
            s = q @ y @ q
        else:
            s = (1 - p) * y + p * (q @ y @ q)
    else:
        raise NonConvergent(
            f"Neumann series did not converge in {max_terms} terms "
            f"(last term {history[-1]:.3g}); the precondition is likely violated"
        )
    tail = history[-2 * NEUMANN_PATIENCE:]
    ratio = float("nan")
    if len(tail) > NEUMANN_PATIENCE and tail[0] > 0 and tail[-1] > 0:
        ratio = (tail[-1] / tail[0]) ** (1.0 / (len(tail) - 1))
    stats = {"terms": len(history), "tail_ratio": ratio, "last_term": history[-1],
             "wall_time": time.perf_counter() - t0}
    return HittingResult(total, NEUMANN, 1.0 - ratio, rounds=p * total, mean_steps=1 / p,
                         solver_stats=stats)


def classical_hitting_time(p, q, z):
    """Classical formula q_{-z} (1 - P_{-z})^{-1} 1 for a stochastic matrix.

    ``z`` is a state index or a list of indices; ``P_{-z}`` and ``q_{-z}``
    have the target rows/columns zeroed.
    """
    p = check_stochastic(p)
    n = p.shape[0]
    q = np.asarray(q, dtype=float).ravel()
    if q.size != n:
        raise DimensionError(f"distribution of length {q.size} for a {n}-state chain")
    if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
        raise ValidationError("starting vector is not a probability distribution")
    zs = [int(i) for i in np.atleast_1d(z)]
    if any(not 0 <= i < n for i in zs):
        raise ValidationError(f"target index out of range for {n} states")
    pm = p.copy()
    pm[zs, :] = 0.0
    pm[:, zs] = 0.0
    qm = q.copy()
    qm[zs] = 0.0
    if not qm.any():
        return 0.0
    radius = linalg.spectral_radius(pm)
    if radius >= 1 - MARGIN_TOL:
        raise _violation(radius, "substochastic matrix")
    try:
        x = linalg.solve(np.eye(n) - pm, np.ones(n))
    except SingularSystem as exc:
        raise _violation(radius, "substochastic matrix") from exc
    return float((qm @ x).real)
