"""Exploration process on explicit graphs and the one-dimensional ER chain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .graphs import AdjacencyGraph, ErParams


@dataclass
class Trajectory:
    """Explored counts ``Z_0 = 0, ..., Z_T = N`` with ``T`` the hitting time."""

    z_values: np.ndarray
    n_total: int
    active: np.ndarray = None  # selected vertex per step, when known

    def __post_init__(self):
        self.z_values = np.asarray(self.z_values)

    @property
    def hitting_time(self) -> int:
        return len(self.z_values) - 1

    @property
    def jamming_fraction(self) -> float:
        return self.hitting_time / self.n_total

    def increments(self) -> np.ndarray:
        """Blocked vertices per step, ``xi_n = Z_n - Z_{n-1} - 1``."""
        return np.diff(self.z_values) - 1

    def padded(self, length: int) -> np.ndarray:
        """``Z_0..Z_{length-1}``, held at ``N`` after absorption."""
        out = np.full(length, self.n_total, dtype=self.z_values.dtype)
        k = min(length, len(self.z_values))
        out[:k] = self.z_values[:k]
        return out


class VertexPool:
    """Set of unexplored vertices with O(1) uniform draw and O(1) removal."""

    def __init__(self, n: int):
        self.items = np.arange(n, dtype=np.int64)
        self.where = np.arange(n, dtype=np.int64)
        self.size = n

    def __len__(self):
        return self.size

    def __contains__(self, v) -> bool:
        return self.where[v] < self.size

    def draw(self, rng: np.random.Generator) -> int:
        return int(self.items[rng.integers(self.size)])

    def remove(self, v: int):
        k = self.where[v]
        last = self.items[self.size - 1]
        self.items[k], self.items[self.size - 1] = last, v
        self.where[last], self.where[v] = k, self.size - 1
        self.size -= 1


def explore_graph(graph: AdjacencyGraph, rng: np.random.Generator) -> Trajectory:
    """Greedy random exploration: activate a uniform unexplored vertex and
    block its unexplored neighbours, until everything is explored."""
    n = graph.n
    if n < 1:
        raise ValueError("graph has no vertices")
    pool = VertexPool(n)
    z = [0]
    active = []
    while len(pool):
        v = pool.draw(rng)
        pool.remove(v)
        active.append(v)
        for w in graph.neighbors[v]:
            if w in pool:
                pool.remove(w)
        z.append(n - len(pool))
    return Trajectory(np.asarray(z, dtype=np.int64), n, np.asarray(active, dtype=np.int64))


def simulate_er_chain(params: ErParams, rng: np.random.Generator) -> Trajectory:
    """Markov chain ``Z_n = Z_{n-1} + 1 + xi_n`` with
    ``xi_n ~ Binomial(N - Z_{n-1} - 1, c/N)``; no graph is built."""
    n, p = params.n, params.p
    z = [0]
    cur = 0
    while cur < n:
        rest = n - cur - 1
        xi = int(rng.binomial(rest, p)) if rest > 0 else 0
        cur = min(n, cur + 1 + xi)
        z.append(cur)
    return Trajectory(np.asarray(z, dtype=np.int64), n)


class ScaledPath:
    """Right-continuous step function ``t -> Z_{[tN]} / N``, held at 1 after absorption."""

    def __init__(self, traj: Trajectory):
        self.n = traj.n_total
        self.values = traj.z_values / traj.n_total
        self.end = traj.hitting_time / traj.n_total

    def index(self, t):
        # small slack keeps grid points like t = k/N on the right step
        k = np.floor(np.asarray(t, dtype=float) * self.n + 1e-9).astype(np.int64)
        if np.any(k < 0):
            raise ValueError("t must be >= 0")
        return np.minimum(k, len(self.values) - 1)

    def __call__(self, t):
        return self.values[self.index(t)]


def scaled_trajectory(traj: Trajectory) -> ScaledPath:
    return ScaledPath(traj)


def er_mean_blocked(n: int, c: float, x):
    """``gamma_N(x) = (N - x - 1) c / N``."""
    return (n - np.asarray(x, dtype=float) - 1) * c / n


def martingale_residual(traj, params: ErParams) -> np.ndarray:
    """``M_n = Z_n - sum_{i=0}^{n} (1 + gamma_N(Z_i))``.

    The compensator sum starts at ``i = 0`` and runs through ``n``, so
    ``M_0 = -(1 + gamma_N(0))``. ``traj`` may be a :class:`Trajectory` or a
    plain sequence of (possibly non-integer) states.
    """
    if isinstance(traj, Trajectory):
        if traj.n_total != params.n:
            raise ValueError(f"trajectory has N={traj.n_total}, params have N={params.n}")
        z = traj.z_values
    else:
        z = np.asarray(traj)
    z = z.astype(float)
    return z - np.cumsum(1.0 + er_mean_blocked(params.n, params.c, z))


@dataclass(frozen=True)
class PmfGap:
    gap: float
    bound: float
    holds: bool


def binomial_poisson_gap(n: int, c: float, x: int, k: int) -> PmfGap:
    """Compare ``Bin(N - x - 1, c/N)`` and ``Poisson(c (1 - x/N))`` at ``k``
    against the pointwise bound ``(c/N) * Poisson pmf``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if not 0 <= x < n:
        raise ValueError(f"need 0 <= x < n, got x={x}, n={n}")
    b = stats.binom.pmf(k, n - x - 1, c / n)
    q = stats.poisson.pmf(k, c * (1 - x / n))
    gap = abs(float(b) - float(q))
    bound = c / n * float(q)
    return PmfGap(gap, bound, gap <= bound)
