"""Hitting time as a function of the measurement probability p.

Rows are ordered by p whatever order the workers finish in. Rows where the
hitting time is infinite stay in the table with ``analytic = inf``.
"""
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, asdict
import io
import math
import os

from .channels import Geometric
from .errors import NonConvergent, PreconditionViolated
from .hitting import InterleavedSystem, generalized_hitting_time
from .trajectories import ProtocolConfig, estimate_hitting
from .errors import AllCensored

COLUMNS = ("kind", "p", "analytic", "mc_mean", "mc_stderr", "rounds", "precondition_margin", "status")
THREADS_ENV = "QHITTING_THREADS"


def r12(x):
    """Round to the 12 significant digits used in the CSV output."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class SweepRow:
    kind: str
    p: float
    analytic: float = None
    mc_mean: float = None
    mc_stderr: float = None
    rounds: float = None
    precondition_margin: float = None
    status: str = "ok"

    def __post_init__(self):
        for name in COLUMNS[1:-1]:
            object.__setattr__(self, name, r12(getattr(self, name)))


@dataclass
class SweepTable:
    rows: list

    @property
    def points(self):
        return [r for r in self.rows if r.kind == "point"]

    def summary(self, kind="min_analytic"):
        for r in self.rows:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    @property
    def argmin_p(self):
        return self.summary().p

    @property
    def min_value(self):
        return self.summary().analytic

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected sweep header {reader.fieldnames}")
        rows = []
        for rec in reader:
            kw = {c: (float(rec[c]) if rec[c] != "" else None) for c in COLUMNS[1:-1]}
            rows.append(SweepRow(rec["kind"], status=rec["status"], **kw))
        return cls(rows)

    def to_records(self):
        return [asdict(r) for r in self.rows]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{x:.12g}"


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def sweep(e, target, rho0, ps, method="interleaved", mc_n=0, mc_seed=0,
          max_steps=1_000_000, threads=None, tol=1e-10):
    """Evaluate the generalized hitting time for Geometric(p) over ``ps``.

    With ``mc_n > 0`` each row also gets a Monte Carlo estimate (seeded with
    ``mc_seed`` for every p). Summary rows ``min_analytic`` and
    ``min_rounds`` give the minimizing p of the step count and of the
    expected number of failed measurements.
    """
    ps = sorted(float(p) for p in ps)
    threads = threads or default_threads()
    system = InterleavedSystem(e, target, rho0) if method == "interleaved" else None

    def point(p):
        sigma = Geometric(p)
        try:
            if system is not None:
                res = system.solve(p)
            else:
                res = generalized_hitting_time(e, sigma, target, rho0, method=method, tol=tol)
            row = dict(analytic=res.value, rounds=res.rounds,
                       precondition_margin=res.precondition_margin, status="ok")
        except (PreconditionViolated, NonConvergent):
            row = dict(analytic=math.inf, rounds=math.inf, status="infinite")
        if mc_n:
            cfg = ProtocolConfig(sigma=sigma, max_steps=max_steps, seed=mc_seed)
            try:
                est = estimate_hitting(e, target, rho0, cfg, mc_n)
                row.update(mc_mean=est.mean, mc_stderr=est.stderr)
                if est.censored_count:
                    row["status"] += f";censored={est.censored_count}"
            except AllCensored:
                row["status"] += ";all_censored"
        return SweepRow("point", p, **row)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(point, ps))
    else:
        rows = [point(p) for p in ps]
    rows.extend(_summaries(rows))
    return SweepTable(rows)


def _summaries(rows):
    out = []
    for kind, col in (("min_analytic", "analytic"), ("min_rounds", "rounds")):
        finite = [r for r in rows if getattr(r, col) is not None and math.isfinite(getattr(r, col))]
        if not finite:
            out.append(SweepRow(kind, None, status="infinite"))
            continue
        best = min(finite, key=lambda r: (getattr(r, col), r.p))
        out.append(SweepRow(kind, best.p, **{col: getattr(best, col)}))
    return out
