"""Replications, summary statistics and the Monte-Carlo checks of the
scaling limits."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exploration import Trajectory, explore_graph, scaled_trajectory, simulate_er_chain
from .fluid import ErrorBoundReport, FluidCurve, VarianceCurve
from .graphs import BoxGeometry, ErParams, build_rgg, sample_er_graph, sample_point_cloud
from .rsa import run_coupled, run_rsa

MODELS = ("er-chain", "er-graph", "rsa", "coupled")


@dataclass(frozen=True)
class RunSpec:
    model: str
    params: object  # ErParams for ER models, BoxGeometry for rsa / coupled
    replications: int = 1
    base_seed: int = 0
    level: float = 0.99
    cell_fraction: float = 1 / 64
    track_area: bool = False  # rsa only; coupled always tracks
    stream: tuple = ()  # extra key separating sweeps that share a base seed

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("confidence level must lie in (0, 1)")
        want = ErParams if self.model.startswith("er") else BoxGeometry
        if not isinstance(self.params, want):
            raise TypeError(f"model {self.model} needs {want.__name__} params")

    @property
    def n(self) -> int:
        if isinstance(self.params, ErParams):
            return self.params.n
        return int(round(self.params.expected_count))


def replicate_rng(base_seed: int, index: int, stream: tuple = ()) -> np.random.Generator:
    """Counter-based stream keyed by ``(base_seed, *stream, index)``."""
    key = tuple(int(k) for k in stream) + (int(index),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=key)))


def run_one(spec: RunSpec, index: int):
    rng = replicate_rng(spec.base_seed, index, spec.stream)
    p = spec.params
    if spec.model == "er-chain":
        return simulate_er_chain(p, rng)
    if spec.model == "er-graph":
        return explore_graph(sample_er_graph(p, rng), rng)
    cloud = sample_point_cloud(p, "fixed", rng)
    graph = build_rgg(cloud, p.radius)
    if spec.model == "rsa":
        return run_rsa(cloud, p, rng, graph=graph, track_area=spec.track_area,
                       cell_fraction=spec.cell_fraction)
    return run_coupled(cloud, p, rng, graph=graph, cell_fraction=spec.cell_fraction)


def _job(args):
    return run_one(*args)


def run_replications(spec: RunSpec, workers: int = 1) -> list:
    """Replicate ``i`` uses :func:`replicate_rng` ``(base_seed, i)``; output is in index order."""
    jobs = [(spec, i) for i in range(spec.replications)]
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_job, jobs))


def hitting_fraction(run) -> float:
    if isinstance(run, Trajectory):
        return run.jamming_fraction
    if hasattr(run, "z_run"):
        return run.z.jamming_fraction
    return run.trajectory.jamming_fraction


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    variance: float  # unbiased; nan when R < 2
    ci_low: float
    ci_high: float
    R: int
    level: float

    @property
    def variance_available(self) -> bool:
        return self.R >= 2


def summarize(values, level: float = 0.99) -> SummaryStats:
    """Mean, unbiased variance and a Student-t interval.

    Sums go through ``math.fsum`` so the result does not depend on the order
    of the replicates.
    """
    x = [float(v) for v in values]
    r = len(x)
    if r == 0:
        raise ValueError("no values")
    mean = math.fsum(x) / r
    if r < 2:
        return SummaryStats(mean, math.nan, mean, mean, r, level)
    var = math.fsum((v - mean) ** 2 for v in x) / (r - 1)
    half = float(stats.t.ppf(0.5 + level / 2, r - 1)) * math.sqrt(var / r)
    return SummaryStats(mean, var, min(mean - half, mean), max(mean + half, mean), r, level)


def estimate_jamming(spec: RunSpec, runs=None) -> SummaryStats:
    """Summary of ``T_N / N`` over the replications."""
    if runs is None:
        runs = run_replications(spec)
    return summarize([hitting_fraction(r) for r in runs], spec.level)


@dataclass
class CltReport:
    samples: np.ndarray  # sqrt(N) (T_N/N - T*)
    mean: float
    variance: float
    target_variance: float
    ks_statistic: float
    ks_pvalue: float


def clt_study(spec: RunSpec, T_star: float, sigma2: float, runs=None) -> CltReport:
    """Standardise the hitting fractions and test them against N(0, sigma2)."""
    if runs is None:
        runs = run_replications(spec)
    n = spec.n
    s = np.sqrt(n) * (np.array([hitting_fraction(r) for r in runs]) - T_star)
    var = float(np.var(s, ddof=1)) if len(s) > 1 else math.nan
    if sigma2 > 0:
        res = stats.kstest(s, stats.norm(0.0, math.sqrt(sigma2)).cdf)
        ks, p = float(res.statistic), float(res.pvalue)
    else:
        ks, p = math.nan, math.nan
    return CltReport(s, float(np.mean(s)), var, sigma2, ks, p)


def sup_deviation(traj: Trajectory, curve, horizon: float) -> float:
    """``sup_{t <= horizon} |Z^N_t - z(t)|`` for the step path against a
    nondecreasing curve: the sup on each step ``[k/N, (k+1)/N)`` is attained
    at one of its ends."""
    n = traj.n_total
    path = scaled_trajectory(traj)
    last = int(math.floor(horizon * n + 1e-9))
    k = np.arange(last + 1)
    left = k / n
    right = np.minimum((k + 1) / n, horizon)
    a = path.values[np.minimum(k, len(path.values) - 1)]
    zl, zr = curve(left), curve(right)
    return float(np.max(np.maximum(np.abs(a - zl), np.abs(a - zr))))


@dataclass
class EnvelopeReport:
    sup_deviations: np.ndarray
    l2_mean: float
    omega_N: float
    deltas: tuple
    tail_empirical: list
    tail_bound: list
    l2_ok: bool
    tails_ok: bool = field(default=True)


def fluid_envelope_check(spec: RunSpec, curve: FluidCurve, bound: ErrorBoundReport, T_star: float,
                         deltas=(0.05, 0.1), runs=None) -> EnvelopeReport:
    """Empirical ``|| sup |Z^N - z| ||_2`` against ``omega_N`` and hitting-time
    tails against ``2 omega_N / delta``."""
    if runs is None:
        runs = run_replications(spec)
    trajs = [r if isinstance(r, Trajectory) else r.z for r in runs]
    sups = np.array([sup_deviation(t, curve, bound.horizon) for t in trajs])
    l2 = float(np.sqrt(np.mean(sups ** 2)))
    frac = np.array([t.jamming_fraction for t in trajs])
    emp = [float(np.mean(np.abs(frac - T_star) >= d)) for d in deltas]
    bnd = [bound.deviation_bound(d) for d in deltas]
    return EnvelopeReport(sups, l2, bound.omega_N, tuple(deltas), emp, bnd, l2 <= bound.omega_N,
                          all(e <= b for e, b in zip(emp, bnd)))


@dataclass
class DiffusionReport:
    times: np.ndarray
    empirical: np.ndarray  # Var(W^N_t)
    predicted: np.ndarray  # m(t)
    relative_gap: np.ndarray


def diffusion_variance_check(spec: RunSpec, times, variance_curve: VarianceCurve, curve=None,
                             runs=None) -> DiffusionReport:
    """Sample variance of ``W^N_t = sqrt(N)(Z^N_t - z(t))`` against ``m(t)``."""
    times = np.asarray(times, dtype=float)
    T = variance_curve.hitting_time
    if np.any(times < 0) or (T is not None and np.any(times >= T)):
        raise ValueError(f"times must lie in [0, T*) = [0, {T})")
    if runs is None:
        runs = run_replications(spec)
    if curve is None:
        curve = FluidCurve(variance_curve.grid, variance_curve.z_values, T)
    n = spec.n
    zt = curve(times)
    w = np.array([np.sqrt(n) * (scaled_trajectory(r)(times) - zt) for r in runs])
    emp = np.var(w, axis=0, ddof=1)
    pred = variance_curve.m(times)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.where(pred > 0, np.abs(emp - pred) / pred, np.where(emp == 0, 0.0, np.inf))
    return DiffusionReport(times, emp, pred, gap)


@dataclass
class BoundTrackingReport:
    upper_gap: float  # sup_t |mean U^N_t - u(t)| on [0, T_lower]
    lower_gap: float  # sup_t |mean L^N_t - l(t)| on [0, T_upper]


def bound_tracking(runs, bounds, n_grid: int = 400) -> BoundTrackingReport:
    """Distance between the replicate-averaged scaled U, L paths and the bound ODEs."""
    def gap(trajs, curve, end):
        t = np.linspace(0.0, end, n_grid)
        mean = np.mean([scaled_trajectory(tr)(t) for tr in trajs], axis=0)
        return float(np.max(np.abs(mean - curve(t))))

    return BoundTrackingReport(
        gap([r.u for r in runs], bounds.upper, bounds.T_lower),
        gap([r.l for r in runs], bounds.lower, bounds.T_upper),
    )
