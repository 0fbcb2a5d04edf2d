"""Monte Carlo simulation of the measure / evolve protocol.

Each trajectory keeps the full density matrix and samples only measurement
outcomes (Born rule), so the estimate carries no Kraus-unravelling noise.
Trajectory i draws from its own generator seeded by (seed, i), which makes
the outcome list independent of execution order and worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .channels import Geometric, StepDistribution, _as_array
from .errors import AllCensored, TrajectoryAborted, ValidationError

UNDERFLOW = 1e-300
DEFAULT_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class ProtocolConfig:
    sigma: StepDistribution = Geometric(1.0)
    max_steps: int = DEFAULT_MAX_STEPS
    seed: int = 0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValidationError("max_steps must be at least 1")


@dataclass(frozen=True)
class TrajectoryOutcome:
    steps: int
    measurements: int
    censored: bool = False


@dataclass(frozen=True)
class HittingEstimate:
    mean: float
    stderr: float
    n: int
    censored_count: int
    seed: int

    @property
    def flagged(self):
        """True when censored runs were excluded, so the mean is biased low."""
        return self.censored_count > 0


def trajectory_rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def measure_step(rho, target, u):
    """Measure the target observable on a normalized state.

    Returns ``(hit, post)``: hit when ``u`` falls below tr(Pi_z rho), and the
    renormalized post-measurement state of the observed branch.
    """
    rho = _as_array(rho)
    p_hit = target.hit_probability(rho)
    if u < p_hit:
        keep = target.pi_z
        hit = True
    else:
        keep = target.pi_minus_z
        hit = False
    post = keep @ rho @ keep
    tr = float(np.trace(post).real)
    if tr < UNDERFLOW:
        raise TrajectoryAborted(
            f"post-measurement trace {tr:.3g} underflowed on the {'hit' if hit else 'miss'} branch "
            f"(hit probability {p_hit:.17g}, draw {u:.17g})"
        )
    return hit, post / tr


def _stepper(e):
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


def run_trajectory(e, target, rho0, cfg, rng, _step=None):
    """Simulate one run: measure, then (draw T, apply E T times, measure) until hit.

    ``steps`` counts chain-step applications only. A run that would exceed
    ``cfg.max_steps`` stops at the budget and is reported as censored.
    """
    step = _step or _stepper(e)
    rho = _as_array(rho0)
    steps = 0
    measurements = 1
    hit, rho = measure_step(rho, target, rng.random())
    while not hit:
        t = cfg.sigma.sample(rng)
        if steps + t > cfg.max_steps:
            return TrajectoryOutcome(cfg.max_steps, measurements, censored=True)
        for _ in range(t):
            rho = step(rho)
        steps += t
        # hermitize and renormalize against drift along long runs
        rho = (rho + rho.conj().T) / 2
        rho = rho / np.trace(rho).real
        measurements += 1
        hit, rho = measure_step(rho, target, rng.random())
    return TrajectoryOutcome(steps, measurements)


def run_trajectories(e, target, rho0, cfg, n, workers=1, start=0):
    """Outcomes of trajectories ``start .. start + n - 1`` in index order."""
    step = _stepper(e)

    def chunk(indices):
        return [run_trajectory(e, target, rho0, cfg, trajectory_rng(cfg.seed, i), step)
                for i in indices]

    indices = range(start, start + n)
    if workers <= 1:
        return chunk(indices)
    size = math.ceil(n / workers)
    parts = [indices[k:k + size] for k in range(0, n, size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(chunk, parts))
    return [o for part in results for o in part]


def summarize(outcomes, seed=0):
    done = np.array([o.steps for o in outcomes if not o.censored], dtype=float)
    censored = len(outcomes) - done.size
    if done.size == 0:
        raise AllCensored(f"all {len(outcomes)} trajectories hit the step budget")
    mean = float(done.mean())
    stderr = float(done.std(ddof=1) / math.sqrt(done.size)) if done.size > 1 else float("nan")
    return HittingEstimate(mean, stderr, len(outcomes), censored, seed)


def estimate_hitting(e, target, rho0, cfg, n, workers=1):
    """Sample mean and standard error of the realized hitting time over n runs.

    Censored runs are excluded from the mean and counted in
    ``censored_count``; they are never extrapolated.
    """
    if n < 2:
        raise ValidationError("need at least two trajectories")
    outcomes = run_trajectories(e, target, rho0, cfg, n, workers=workers)
    return summarize(outcomes, seed=cfg.seed)
