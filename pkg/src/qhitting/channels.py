"""States, CP maps and the operator algebra of quantum Markov chains.

A chain step is a :class:`Channel` (completely positive, trace preserving).
Projections and restricted maps are plain :class:`CPMap` objects: they are
trace non-increasing and cannot be passed where a chain step is expected.
Both keep Kraus operators when they have them and build the d^2 x d^2
superoperator only on demand.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from . import linalg
from .errors import DimensionError, ValidationError

HERMITIAN_TOL = 1e-10
TP_TOL = 1e-9
CHOI_TOL = 1e-8
SIGMA_TP_TOL = 1e-8


def _check_square(m, name):
    m = linalg.as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian PSD matrix of unit trace.

    ``subnormalized=True`` marks the output of a projection, whose trace may
    be below one.
    """

    mat: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        m = _check_square(self.mat, "density matrix")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if evals.size and evals.min() < -HERMITIAN_TOL:
            raise ValidationError(f"density matrix has negative eigenvalue {evals.min():.3g}")
        tr = np.trace(m).real
        if self.subnormalized:
            if tr > 1 + HERMITIAN_TOL:
                raise ValidationError(f"sub-normalized state has trace {tr} > 1")
        elif abs(tr - 1) > HERMITIAN_TOL:
            raise ValidationError(f"density matrix has trace {tr}, expected 1")

    @property
    def dim(self):
        return self.mat.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.mat).real)

    @classmethod
    def pure(cls, psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValidationError("zero state vector")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, dim, index):
        if not 0 <= index < dim:
            raise ValidationError(f"basis index {index} out of range for dimension {dim}")
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def diagonal(cls, probs):
        q = np.asarray(probs, dtype=float)
        if np.any(q < 0):
            raise ValidationError("negative probability on the diagonal")
        return cls(np.diag(q).astype(complex))


def _as_array(rho):
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return np.asarray(rho, dtype=complex)


class CPMap:
    """Completely positive linear map on d x d matrices.

    Holds a Kraus list, a superoperator, or both. Instances are treated as
    immutable.
    """

    trace_preserving = False

    def __init__(self, dim, kraus=None, superop=None):
        if kraus is None and superop is None:
            raise ValidationError("a map needs Kraus operators or a superoperator")
        self.dim = int(dim)
        if kraus is not None:
            ks = []
            for k in kraus:
                k = _check_square(k, "Kraus operator")
                if k.shape[0] != self.dim:
                    raise DimensionError(f"Kraus operator of size {k.shape[0]} in a dim-{self.dim} map")
                k.setflags(write=False)
                ks.append(k)
            if not ks:
                ks.append(np.zeros((self.dim, self.dim), dtype=complex))
            kraus = tuple(ks)
        self._kraus = kraus
        if superop is not None:
            superop = _check_square(superop, "superoperator")
            if superop.shape[0] != self.dim ** 2:
                raise DimensionError(f"superoperator of size {superop.shape[0]} for dim {self.dim}")
            superop.setflags(write=False)
            self.__dict__["superop"] = superop

    @property
    def kraus(self):
        return self._kraus

    @property
    def has_kraus(self):
        return self._kraus is not None

    @cached_property
    def superop(self):
        s = np.zeros((self.dim ** 2, self.dim ** 2), dtype=complex)
        for k in self._kraus:
            s += np.kron(k.conj(), k)
        s.setflags(write=False)
        return s

    @property
    def superop_materialized(self):
        return "superop" in self.__dict__

    def apply_matrix(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.dim, self.dim):
            raise DimensionError(f"map of dim {self.dim} applied to shape {x.shape}")
        if self._kraus is not None and not self.superop_materialized:
            out = np.zeros_like(x)
            for k in self._kraus:
                out += k @ x @ k.conj().T
            return out
        return linalg.unvec(self.superop @ linalg.vec(x), self.dim)

    def __call__(self, rho):
        out = self.apply_matrix(_as_array(rho))
        if isinstance(rho, DensityMatrix):
            out = (out + out.conj().T) / 2
            sub = rho.subnormalized or not self.trace_preserving
            return DensityMatrix(out, subnormalized=sub)
        return out

    def choi(self):
        """Choi matrix sum_ij |i><j| kron E(|i><j|)."""
        d = self.dim
        c = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                c[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.apply_matrix(e)
        return c

    def choi_min_eigenvalue(self):
        c = self.choi()
        return float(np.linalg.eigvalsh((c + c.conj().T) / 2).min())

    def trace_defect(self):
        """Max-norm of vec(I)^T S - vec(I)^T, zero for trace-preserving maps."""
        if self._kraus is not None and not self.superop_materialized:
            acc = sum(k.conj().T @ k for k in self._kraus)
            return float(np.abs(acc - np.eye(self.dim)).max())
        row = linalg.vec(np.eye(self.dim)) @ self.superop
        return float(np.abs(row - linalg.vec(np.eye(self.dim))).max())

    def __repr__(self):
        rep = []
        if self._kraus is not None:
            rep.append(f"{len(self._kraus)} Kraus")
        if self.superop_materialized:
            rep.append("superop")
        return f"{type(self).__name__}(dim={self.dim}, {', '.join(rep)})"


class Channel(CPMap):
    """CPTP map: one step of a quantum Markov chain."""

    trace_preserving = True

    def __init__(self, dim, kraus=None, superop=None, tp_tol=TP_TOL):
        super().__init__(dim, kraus=kraus, superop=superop)
        defect = self.trace_defect()
        if defect > tp_tol:
            raise ValidationError(f"map is not trace preserving (defect {defect:.3g})")


def identity_channel(dim):
    return Channel(dim, kraus=[np.eye(dim, dtype=complex)])


def unitary_channel(u, tol=1e-9):
    u = _check_square(u, "unitary")
    if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > tol:
        raise ValidationError("matrix is not unitary")
    return Channel(u.shape[0], kraus=[u])


def check_stochastic(p, tol=1e-12):
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError(f"transition matrix must be square, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("transition matrix has negative or non-finite entries")
    if np.abs(p.sum(axis=1) - 1).max() > tol:
        raise ValidationError("transition matrix rows do not sum to 1")
    return p


def classical_channel(p):
    """Embed a stochastic matrix: rho -> sum_xy P[x,y] |y><x| rho |x><y|."""
    p = check_stochastic(p)
    d = p.shape[0]
    kraus = []
    for x in range(d):
        for y in range(d):
            if p[x, y] > 0:
                k = np.zeros((d, d), dtype=complex)
                k[y, x] = math.sqrt(p[x, y])
                kraus.append(k)
    # diagonal-to-diagonal block only; coherences are killed
    s = np.zeros((d * d, d * d), dtype=complex)
    for x in range(d):
        for y in range(d):
            s[y * d + y, x * d + x] = p[x, y]
    return Channel(d, kraus=kraus, superop=s)


def _map_type(*maps):
    return Channel if all(isinstance(m, Channel) for m in maps) else CPMap


def compose(outer, inner, max_kraus=None):
    """The map rho -> outer(inner(rho))."""
    if outer.dim != inner.dim:
        raise DimensionError(f"cannot compose maps of dims {outer.dim} and {inner.dim}")
    d = outer.dim
    if max_kraus is None:
        max_kraus = d * d
    kraus = None
    if outer.has_kraus and inner.has_kraus and len(outer.kraus) * len(inner.kraus) <= max_kraus:
        kraus = [a @ b for a in outer.kraus for b in inner.kraus]
    superop = None
    if kraus is None or (outer.superop_materialized and inner.superop_materialized):
        superop = outer.superop @ inner.superop
    return _map_type(outer, inner)(d, kraus=kraus, superop=superop)


def mix(maps, weights):
    """Convex combination sum_i w_i E_i."""
    maps = list(maps)
    w = np.asarray(weights, dtype=float)
    if not maps or len(maps) != w.size:
        raise ValidationError("need one weight per map")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValidationError("weights must form a probability vector")
    d = maps[0].dim
    if any(m.dim != d for m in maps):
        raise DimensionError("cannot mix maps of different dimensions")
    if all(m.has_kraus for m in maps):
        kraus = [math.sqrt(wi) * k for m, wi in zip(maps, w) if wi > 0 for k in m.kraus]
        return _map_type(*maps)(d, kraus=kraus)
    superop = sum(wi * m.superop for m, wi in zip(maps, w))
    return _map_type(*maps)(d, superop=superop)


@dataclass(frozen=True, eq=False)
class TargetSubspace:
    """Projector onto the target subspace and its complement."""

    pi_z: np.ndarray
    pi_minus_z: np.ndarray = field(init=False)

    def __post_init__(self):
        p = _check_square(self.pi_z, "target projector")
        if np.abs(p @ p - p).max() > HERMITIAN_TOL or np.abs(p - p.conj().T).max() > HERMITIAN_TOL:
            raise ValidationError("target matrix is not an orthogonal projector")
        p.setflags(write=False)
        q = np.eye(p.shape[0], dtype=complex) - p
        q.setflags(write=False)
        object.__setattr__(self, "pi_z", p)
        object.__setattr__(self, "pi_minus_z", q)

    @property
    def dim(self):
        return self.pi_z.shape[0]

    @property
    def rank(self):
        return int(round(np.trace(self.pi_z).real))

    @classmethod
    def from_indices(cls, dim, indices):
        idx = [int(i) for i in np.atleast_1d(indices)]
        if any(not 0 <= i < dim for i in idx):
            raise ValidationError(f"target index out of range for dimension {dim}")
        p = np.zeros((dim, dim), dtype=complex)
        p[idx, idx] = 1.0
        return cls(p)

    @classmethod
    def from_vectors(cls, vectors):
        v = np.atleast_2d(np.asarray(vectors, dtype=complex))
        q, _ = np.linalg.qr(v.T)
        return cls(q @ q.conj().T)

    @property
    def is_diagonal(self):
        return bool(np.all(self.pi_z == np.diag(np.diag(self.pi_z))))

    def hit_probability(self, rho):
        return float(np.trace(self.pi_z @ _as_array(rho)).real)


def projection_map(target, which="remove_z"):
    """Single-Kraus CP map rho -> Pi rho Pi (not trace preserving)."""
    if which == "remove_z":
        pi = target.pi_minus_z
    elif which == "keep_z":
        pi = target.pi_z
    else:
        raise ValidationError(f"which must be 'keep_z' or 'remove_z', got {which!r}")
    return CPMap(target.dim, kraus=[pi])


def restricted_map(e, target):
    """E_{-z} = P_{-z} o E o P_{-z}."""
    if e.dim != target.dim:
        raise DimensionError(f"map of dim {e.dim} with target of dim {target.dim}")
    q = target.pi_minus_z
    kraus = [q @ k @ q for k in e.kraus] if e.has_kraus else None
    superop = None
    if kraus is None or e.superop_materialized:
        qc = q.conj()
        superop = linalg.kron_apply(qc, q, e.superop)
        superop = linalg.kron_apply_right(superop, qc, q)
    return CPMap(e.dim, kraus=kraus, superop=superop)


class StepDistribution:
    """Distribution of the number of chain steps between two measurements."""

    mean = float("nan")

    def pmf(self, t):
        raise NotImplementedError

    def sample(self, rng):
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(StepDistribution):
    """P(T = t) = p (1 - p)^(t - 1) for t >= 1."""

    p: float

    def __post_init__(self):
        if self.p == 0:
            raise ValidationError("resolvent undefined: geometric parameter p = 0 never measures")
        if not 0 < self.p <= 1:
            raise ValidationError(f"geometric parameter must lie in (0, 1], got {self.p}")

    @property
    def mean(self):
        return 1.0 / self.p

    def pmf(self, t):
        return self.p * (1 - self.p) ** (t - 1) if t >= 1 else 0.0

    def sample(self, rng):
        return int(rng.geometric(self.p))

    def describe(self):
        return f"geometric(p={self.p:g})"


@dataclass(frozen=True)
class Explicit(StepDistribution):
    """Finite-support distribution given as {t: probability}.

    Mass at t = 0 re-measures without evolving and is only accepted with
    ``allow_zero=True``.
    """

    weights: dict
    allow_zero: bool = False

    def __post_init__(self):
        w = {int(t): float(v) for t, v in dict(self.weights).items() if float(v) != 0.0}
        if not w:
            raise ValidationError("explicit distribution has no mass")
        if any(v < 0 for v in w.values()):
            raise ValidationError("negative probability in explicit distribution")
        if any(t < 0 for t in w):
            raise ValidationError("negative step count in explicit distribution")
        if 0 in w and not self.allow_zero:
            raise ValidationError("mass at t = 0 requires allow_zero=True")
        if abs(sum(w.values()) - 1) > 1e-12:
            raise ValidationError("explicit distribution does not sum to 1")
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @property
    def mean(self):
        return float(sum(t * v for t, v in self.weights.items()))

    def pmf(self, t):
        return self.weights.get(int(t), 0.0)

    def sample(self, rng):
        ts = list(self.weights)
        return int(ts[rng.choice(len(ts), p=list(self.weights.values()))])

    def describe(self):
        body = ",".join(f"{t}:{v:g}" for t, v in self.weights.items())
        return f"explicit({body})"


def sigma_channel(e, sigma):
    """The averaged map E^sigma = E_{T~sigma}[E^T] as a superoperator channel.

    Geometric(p) uses the resolvent p E (I - (1-p) E)^{-1}; explicit
    distributions sum their powers of E directly.
    """
    if not isinstance(e, Channel):
        raise ValidationError("sigma_channel needs a trace-preserving channel")
    if isinstance(sigma, Geometric):
        s = e.superop
        if sigma.p == 1.0:
            return e
        n = s.shape[0]
        a = np.eye(n, dtype=complex) - (1 - sigma.p) * s
        x = sigma.p * linalg.solve(a, s)
        return Channel(e.dim, superop=x, tp_tol=SIGMA_TP_TOL)
    if isinstance(sigma, Explicit):
        s = e.superop
        n = s.shape[0]
        acc = np.zeros((n, n), dtype=complex)
        power = np.eye(n, dtype=complex)
        t_prev = 0
        for t, w in sigma.weights.items():
            for _ in range(t - t_prev):
                power = s @ power
            t_prev = t
            acc += w * power
        return Channel(e.dim, superop=acc, tp_tol=SIGMA_TP_TOL)
    raise ValidationError(f"unsupported step distribution {sigma!r}")
