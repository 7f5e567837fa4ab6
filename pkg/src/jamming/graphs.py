"""Random graph models: sparse Erdos-Renyi and Poisson random geometric graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np


@dataclass(frozen=True)
class ErParams:
    """Erdos-Renyi graph on ``n`` vertices with edge probability ``c / n``."""

    n: int
    c: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.c >= 0:
            raise ValueError(f"c must be >= 0, got {self.c!r}")
        if self.c > self.n:
            raise ValueError(f"c must be <= n (edge probability c/n > 1), got c={self.c}, n={self.n}")

    @property
    def p(self) -> float:
        return self.c / self.n


@dataclass(frozen=True)
class BoxGeometry:
    """Axis-aligned box ``[0, L_1] x ... x [0, L_d]`` holding a Poisson process.

    ``c = intensity * v`` where ``v`` is the volume of a ball of the
    connection radius.
    """

    dimension: int
    side_lengths: tuple
    intensity: float
    radius: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        sides = tuple(float(s) for s in self.side_lengths)
        object.__setattr__(self, "side_lengths", sides)
        if len(sides) != self.dimension:
            raise ValueError("need one side length per dimension")
        if any(not s > 0 for s in sides):
            raise ValueError(f"box has zero volume: side lengths {sides}")
        if not self.intensity > 0:
            raise ValueError(f"intensity must be > 0, got {self.intensity}")
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if self.ball_volume >= self.volume:
            raise ValueError("ball volume must be smaller than the box volume")

    @classmethod
    def square(cls, c: float, n: int, dimension: int = 2, intensity: float = 1.0) -> "BoxGeometry":
        """Cube holding ``n`` points on average, with radius chosen to give ``c``."""
        if not c > 0:
            raise ValueError(f"c must be > 0, got {c}")
        side = (n / intensity) ** (1.0 / dimension)
        v = c / intensity
        r = v / 2 if dimension == 1 else math.sqrt(v / math.pi)
        return cls(dimension, (side,) * dimension, intensity, r)

    @property
    def volume(self) -> float:
        return math.prod(self.side_lengths)

    @property
    def ball_volume(self) -> float:
        return ball_volume(self.radius, self.dimension)

    @property
    def c(self) -> float:
        return self.intensity * self.ball_volume

    @property
    def expected_count(self) -> float:
        return self.intensity * self.volume


def ball_volume(radius: float, dimension: int) -> float:
    if dimension == 1:
        return 2.0 * radius
    if dimension == 2:
        return math.pi * radius * radius
    raise ValueError(f"unsupported dimension {dimension}")


@dataclass
class PointCloud:
    positions: np.ndarray  # shape (N, d)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[:, None]

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]


@dataclass
class AdjacencyGraph:
    n: int
    neighbors: list = field(default_factory=list)  # sorted int arrays

    @classmethod
    def from_edges(cls, n: int, i: np.ndarray, j: np.ndarray) -> "AdjacencyGraph":
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        src = np.concatenate([i, j])
        dst = np.concatenate([j, i])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        bounds = np.searchsorted(src, np.arange(n + 1))
        nbrs = [dst[bounds[k]:bounds[k + 1]] for k in range(n)]
        return cls(n, nbrs)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.neighbors) // 2

    def edges(self) -> set:
        return {(u, int(w)) for u in range(self.n) for w in self.neighbors[u] if u < w}


def sample_er_graph(params: ErParams, rng: np.random.Generator) -> AdjacencyGraph:
    """Sample G(n, c/n).

    The number of edges is drawn as Binomial(n(n-1)/2, p) and that many
    distinct pairs are then chosen uniformly, which is the same law as
    flipping one coin per pair but costs O(edges).
    """
    n = params.n
    pairs = n * (n - 1) // 2
    if pairs == 0:
        return AdjacencyGraph(n, [np.empty(0, dtype=np.int64) for _ in range(n)])
    k = int(rng.binomial(pairs, params.p))
    idx = rng.choice(pairs, size=k, replace=False) if k < pairs else np.arange(pairs)
    i, j = _unrank_pairs(np.sort(idx), n)
    return AdjacencyGraph.from_edges(n, i, j)


def _unrank_pairs(idx: np.ndarray, n: int):
    # row i owns the pair indices [start(i), start(i + 1)) for partners j > i
    def start(i):
        return i * n - i * (i + 1) // 2

    idx = np.asarray(idx, dtype=np.int64)
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2).astype(np.int64)
    i -= start(i) > idx  # float floor can land one row off
    i += start(i + 1) <= idx
    return i, idx - start(i) + i + 1


def sample_point_cloud(geom: BoxGeometry, mode: str = "fixed", rng: np.random.Generator = None) -> PointCloud:
    """Uniform points in the box; ``mode='fixed'`` uses N = round(lambda |C|),
    ``mode='poisson'`` draws N ~ Poisson(lambda |C|)."""
    if rng is None:
        rng = np.random.default_rng()
    mean = geom.expected_count
    if not mean > 0:
        raise ValueError("box has zero volume")
    if mode == "fixed":
        n = int(round(mean))
    elif mode == "poisson":
        n = int(rng.poisson(mean))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    sides = np.asarray(geom.side_lengths)
    return PointCloud(rng.random((n, geom.dimension)) * sides)


def _close(a: np.ndarray, b: np.ndarray, r2: float) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d) <= r2


def build_rgg(cloud: PointCloud, r: float, method: str = "grid") -> AdjacencyGraph:
    """Geometric graph: ``i ~ j`` iff ``|X_i - X_j| <= r`` (closed ball, no wraparound)."""
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    pos = cloud.positions
    n = cloud.n
    r2 = r * r
    if method == "brute":
        close = _close(pos, pos, r2)
        i, j = np.nonzero(np.triu(close, k=1))
        return AdjacencyGraph.from_edges(n, i, j)
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")

    cells = np.floor(pos / r).astype(np.int64)
    buckets: dict = {}
    for idx, key in enumerate(map(tuple, cells)):
        buckets.setdefault(key, []).append(idx)
    buckets = {k: np.asarray(v, dtype=np.int64) for k, v in buckets.items()}

    d = cloud.dimension
    # half stencil so every unordered cell pair is visited once
    offsets = [o for o in product((-1, 0, 1), repeat=d) if o > (0,) * d]
    ii, jj = [], []
    for key, members in buckets.items():
        pm = pos[members]
        close = _close(pm, pm, r2)
        a, b = np.nonzero(np.triu(close, k=1))
        ii.append(members[a])
        jj.append(members[b])
        for off in offsets:
            other = buckets.get(tuple(k + o for k, o in zip(key, off)))
            if other is None:
                continue
            a, b = np.nonzero(_close(pm, pos[other], r2))
            ii.append(members[a])
            jj.append(other[b])
    if not ii:
        return AdjacencyGraph.from_edges(n, [], [])
    return AdjacencyGraph.from_edges(n, np.concatenate(ii), np.concatenate(jj))
