"""Random sequential adsorption on geometric graphs, coupled bounding
processes, and the bound ODEs for its fluid limit.

Point membership (who gets explored) is always decided with exact
distances. The explored *region* is tracked only to measure areas: exactly
with interval unions in one dimension, on a raster in two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exploration import Trajectory, VertexPool
from .fluid import FluidCurve, OdeSettings, integrate_until
from .graphs import AdjacencyGraph, BoxGeometry, PointCloud, build_rgg


# --------------------------------------------------------------------------
# explored regions
# --------------------------------------------------------------------------

class IntervalRegion:
    """Exact union of closed intervals inside ``[0, length]``."""

    dimension = 1

    def __init__(self, length: float):
        self.length = float(length)
        self.intervals: list = []
        self.area = 0.0

    @property
    def box_volume(self) -> float:
        return self.length

    def _clip(self, center, radius):
        x = float(np.ravel(center)[0])
        return max(0.0, x - radius), min(self.length, x + radius)

    def _covered(self, a: float, b: float) -> float:
        return sum(max(0.0, min(b, q) - max(a, p)) for p, q in self.intervals)

    def free_area(self, center, radius: float) -> float:
        """Length of the ball inside the box that is not yet covered."""
        if not radius > 0:
            raise ValueError("radius must be > 0")
        a, b = self._clip(center, radius)
        return max(0.0, (b - a) - self._covered(a, b))

    def ball_area(self, center, radius: float) -> float:
        return 2.0 * radius

    def add_ball(self, center, radius: float) -> float:
        new = self.free_area(center, radius)
        a, b = self._clip(center, radius)
        merged = []
        for p, q in self.intervals:
            if q < a or p > b:
                merged.append((p, q))
            else:
                a, b = min(a, p), max(b, q)
        merged.append((a, b))
        merged.sort()
        self.intervals = merged
        self.area = sum(q - p for p, q in merged)
        return new

    def radius_for_free_area(self, center, target: float, r_min: float, r_max: float):
        """Smallest ``rho >= r_min`` whose free area reaches ``target``;
        ``(r_max, True)`` when the box cannot supply it."""
        if self.free_area(center, r_min) >= target:
            return r_min, False
        if self.free_area(center, r_max) < target:
            return r_max, True
        lo, hi = r_min, r_max
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.free_area(center, mid) >= target:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * hi:
                break
        return hi, False

    def perimeter_area(self, center, radius: float) -> float:
        return 0.0

    def area_tolerance(self, radius: float) -> float:
        return 0.0


class RasterRegion:
    """Covered set of a 2-d box as a boolean mask; a cell counts as inside a
    ball when its centre is."""

    dimension = 2

    def __init__(self, sides, cell: float):
        lx, ly = (float(s) for s in sides)
        self.nx = max(1, int(round(lx / cell)))
        self.ny = max(1, int(round(ly / cell)))
        self.hx = lx / self.nx
        self.hy = ly / self.ny
        self.sides = (lx, ly)
        self.cell_area = self.hx * self.hy
        self.mask = np.zeros((self.nx, self.ny), dtype=bool)
        self.count = 0

    @property
    def box_volume(self) -> float:
        return self.sides[0] * self.sides[1]

    @property
    def area(self) -> float:
        return self.count * self.cell_area

    def _range(self, x, radius, h, n, clip=True):
        lo = math.ceil((x - radius) / h - 0.5)
        hi = math.floor((x + radius) / h - 0.5)
        if clip:
            lo, hi = max(lo, 0), min(hi, n - 1)
        return lo, hi

    def _window(self, center, radius):
        x, y = float(center[0]), float(center[1])
        i0, i1 = self._range(x, radius, self.hx, self.nx)
        j0, j1 = self._range(y, radius, self.hy, self.ny)
        if i1 < i0 or j1 < j0:
            return None, None
        dx = (np.arange(i0, i1 + 1) + 0.5) * self.hx - x
        dy = (np.arange(j0, j1 + 1) + 0.5) * self.hy - y
        d2 = dx[:, None] ** 2 + dy[None, :] ** 2
        return (slice(i0, i1 + 1), slice(j0, j1 + 1)), d2

    def free_area(self, center, radius: float) -> float:
        if not radius > 0:
            raise ValueError("radius must be > 0")
        win, d2 = self._window(center, radius)
        if win is None:
            return 0.0
        return int(np.count_nonzero(~self.mask[win] & (d2 <= radius * radius))) * self.cell_area

    def ball_area(self, center, radius: float) -> float:
        """Raster area of the full (unclipped) ball: the raster stand-in for ``v``."""
        x, y = float(center[0]), float(center[1])
        i0, i1 = self._range(x, radius, self.hx, self.nx, clip=False)
        j0, j1 = self._range(y, radius, self.hy, self.ny, clip=False)
        dx = (np.arange(i0, i1 + 1) + 0.5) * self.hx - x
        dy = (np.arange(j0, j1 + 1) + 0.5) * self.hy - y
        inside = dx[:, None] ** 2 + dy[None, :] ** 2 <= radius * radius
        return int(np.count_nonzero(inside)) * self.cell_area

    def add_ball(self, center, radius: float) -> float:
        win, d2 = self._window(center, radius)
        if win is None:
            return 0.0
        sub = self.mask[win]
        new = ~sub & (d2 <= radius * radius)
        k = int(np.count_nonzero(new))
        sub |= new
        self.count += k
        return k * self.cell_area

    def radius_for_free_area(self, center, target: float, r_min: float, r_max: float):
        """Smallest ``rho >= r_min`` such that at least ``target`` free area
        lies within ``rho``; found as an order statistic of free-cell
        distances in a growing window."""
        k = max(1, int(round(target / self.cell_area)))
        diag = math.hypot(*self.sides)
        w = 2.0 * r_min
        while True:
            win, d2 = self._window(center, w)
            if win is not None:
                cand = d2[~self.mask[win] & (d2 <= w * w)]
                if len(cand) >= k:
                    kth = float(np.partition(cand, k - 1)[k - 1])
                    rho = math.sqrt(kth)
                    while rho * rho < kth:  # keep the k-th cell (and its ties) inside
                        rho = math.nextafter(rho, math.inf)
                    return max(r_min, rho), False
            if w >= diag:
                return r_max, True
            w *= 2.0

    def perimeter_area(self, center, radius: float) -> float:
        """Area of the free-in-ball cells touching its complement: the
        resolution-scale uncertainty of :meth:`free_area`."""
        win, d2 = self._window(center, radius + 2 * max(self.hx, self.hy))
        if win is None:
            return 0.0
        s = ~self.mask[win] & (d2 <= radius * radius)
        p = np.pad(s, 1, constant_values=False)
        interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
        return int(np.count_nonzero(s & ~interior)) * self.cell_area

    def area_tolerance(self, radius: float) -> float:
        """Bound on the raster error of a disc area: cells crossing its rim."""
        h = math.hypot(self.hx, self.hy)
        return 2 * math.pi * radius * h + 4 * h * h


def make_region(geom: BoxGeometry, cell_fraction: float = 1 / 64):
    if geom.dimension == 1:
        return IntervalRegion(geom.side_lengths[0])
    return RasterRegion(geom.side_lengths, geom.radius * cell_fraction)


def step_area(region, center, radius: float) -> float:
    """Area newly covered if a ball of ``radius`` is placed at ``center``."""
    return region.free_area(center, radius)


# --------------------------------------------------------------------------
# bound ODEs
# --------------------------------------------------------------------------

_SINGULAR = 1e-9


def upper_bound_closed_form(c: float, t):
    """``u(t) = c t + (t - 1/c) ln(1 - c t)``."""
    t = np.asarray(t, dtype=float)
    return c * t + (t - 1.0 / c) * np.log1p(-c * t)


def lower_jamming_closed_form(c: float) -> float:
    """Hitting time of ``u`` at 1, ``(1 - e^{-c}) / c``.

    From the closed form, ``u' = 1 + c + ln(1 - c t)``; the auxiliary
    ``w = 1 + ln(1 - c t)/c`` vanishes at that time, where ``u = 1``.
    """
    return -math.expm1(-c) / c


def _finish(sol, rhs):
    """Close a guard-stopped solution with one linear step onto the level."""
    if sol.hitting_time is not None:
        return sol
    if not sol.stopped_by_guard:
        raise RuntimeError("bound curve did not reach 1 before t_max")
    t, y = sol.grid[-1], tuple(sol.states[-1])
    t_hit = t + (1.0 - y[0]) / rhs(t, y)[0]
    sol.grid = np.append(sol.grid, t_hit)
    sol.states = np.vstack([sol.states, [1.0, y[1]]])
    sol.hitting_time = t_hit
    return sol


@dataclass
class BoundCurves:
    c: float
    lower: FluidCurve  # l(t)
    upper: FluidCurve  # u(t)
    w2: np.ndarray  # exp(-int_0^t ds / (1 - l(s))) on the lower grid
    clamp_time: float | None  # when the perimeter acceptance of l hits 0

    @property
    def T_lower(self) -> float:
        return self.upper.hitting_time

    @property
    def T_upper(self) -> float:
        return self.lower.hitting_time

    def l(self, t):
        return self.lower(t)

    def u(self, t):
        return self.upper(t)


def integrate_bounds(c: float, settings: OdeSettings = OdeSettings(), perimeter_factor: float = 3.0) -> BoundCurves:
    """Integrate the upper curve ``u`` and lower curve ``l``.

    Both use the auxiliary ``w = exp(-int 1/(1 - x))`` with
    ``w' = -w / (1 - x)``:

        u' = 1 + c w
        l' = 1 + max(0, c (1 - k c t w / (1 - l)) w)

    with ``k = perimeter_factor`` (3 in the plane).
    """
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")

    # Only RK stages that overshoot the singular point x = 1 see the clamps,
    # where w / (1 - x) is a vanishing 0/0.
    def gap(x):
        return max(1.0 - x, _SINGULAR)

    def upper_rhs(t, y):
        u, w = y[0], max(y[1], 0.0)
        return (1.0 + c * w, -w / gap(u))

    def lower_rhs(t, y):
        l, w = y[0], max(y[1], 0.0)
        acc = c * (1.0 - perimeter_factor * c * t * w / gap(l)) * w
        return (1.0 + max(0.0, acc), -w / gap(l))

    def guard(t, y):
        return 1.0 - y[0] < _SINGULAR

    up = _finish(integrate_until(upper_rhs, (0.0, 1.0), settings, guard=guard), upper_rhs)
    lo = _finish(integrate_until(lower_rhs, (0.0, 1.0), settings, guard=guard), lower_rhs)

    g, st = lo.grid[:-1], lo.states[:-1]  # drop the hit node, where the ratio is 0/0
    acc = 1.0 - perimeter_factor * c * g * st[:, 1] / (1.0 - st[:, 0])
    off = np.nonzero(acc <= 0)[0]
    clamp = float(g[off[0]]) if len(off) else None
    return BoundCurves(
        c,
        FluidCurve(lo.grid, lo.states[:, 0], lo.hitting_time),
        FluidCurve(up.grid, up.states[:, 0], up.hitting_time),
        lo.states[:, 1],
        clamp,
    )


# --------------------------------------------------------------------------
# RSA and the coupled processes
# --------------------------------------------------------------------------

@dataclass
class RsaRun:
    trajectory: Trajectory
    step_areas: np.ndarray  # |S_k|, empty when areas were not tracked
    region: object
    selection_order: np.ndarray
    centers: np.ndarray
    interior: np.ndarray  # ball of radius r fully inside the box
    step_perimeter: np.ndarray = None


@dataclass
class CoupledRun:
    z_run: RsaRun
    u: Trajectory = None
    l: Trajectory = None
    r_tilde: np.ndarray = None  # nan once U has absorbed
    saturated: np.ndarray = None
    u_areas: np.ndarray = None
    alpha: np.ndarray = None
    accepted: np.ndarray = None
    l_areas: np.ndarray = None
    alpha_excess: int = 0  # steps where alpha_n exceeded the free-ball probability

    @property
    def z(self) -> Trajectory:
        return self.z_run.trajectory

    def trace_rows(self):
        """Rows ``step, Z, U, L, area_S, r_tilde, alpha`` up to the last absorption."""
        z = self.z.z_values
        steps = max(len(z), len(self.u.z_values) if self.u else 0, len(self.l.z_values) if self.l else 0)
        zp = self.z.padded(steps)
        up = self.u.padded(steps) if self.u else np.full(steps, np.nan)
        lp = self.l.padded(steps) if self.l else np.full(steps, np.nan)

        def at(arr, k):
            return float(arr[k - 1]) if arr is not None and 1 <= k <= len(arr) else float("nan")

        areas = self.z_run.step_areas if len(self.z_run.step_areas) else None
        return [
            (k, int(zp[k]), up[k], lp[k], at(areas, k), at(self.r_tilde, k), at(self.alpha, k))
            for k in range(steps)
        ]


def _interior(pos: np.ndarray, geom: BoxGeometry) -> np.ndarray:
    r = geom.radius
    sides = np.asarray(geom.side_lengths)
    return np.all((pos >= r) & (pos <= sides - r), axis=1)


def _simulate(cloud: PointCloud, geom: BoxGeometry, rng: np.random.Generator, *,
              graph: AdjacencyGraph = None, upper: bool = False, lower: bool = False,
              track_area: bool = True, cell_fraction: float = 1 / 64, alpha_areas: str = "z",
              record_perimeter: bool = False):
    if alpha_areas not in ("z", "l"):
        raise ValueError("alpha_areas must be 'z' or 'l'")
    if (upper or lower) and not track_area:
        raise ValueError("the coupled processes need area tracking")
    pos = cloud.positions
    n = cloud.n
    r = geom.radius
    v = geom.ball_volume
    box = geom.volume
    factor = 2 ** geom.dimension - 1
    diag = math.sqrt(sum(s * s for s in geom.side_lengths))
    if graph is None:
        graph = build_rgg(cloud, r)
    z_rng, u_rng, l_rng = rng.spawn(3)

    region = make_region(geom, cell_fraction) if track_area else None
    pool = VertexPool(n)
    z = [0]
    order, areas, perims = [], [], []

    if upper:
        u_region = make_region(geom, cell_fraction)
        u_pool = VertexPool(n)
        u = [0]
        r_tilde, saturated, u_areas = [], [], []
    if lower:
        dilated = make_region(geom, cell_fraction)
        l_count = 0
        l = [0]
        alphas, accepted, l_areas = [], [], []
        alpha_excess = 0
        l_area_sum = 0.0

    while len(pool):
        v_idx = pool.draw(z_rng)
        x = pos[v_idx]
        step = len(z)  # n
        pool.remove(v_idx)
        newly = [w for w in graph.neighbors[v_idx] if w in pool]
        for w in newly:
            pool.remove(w)
        z.append(n - len(pool))
        order.append(v_idx)

        if lower:
            # free-ball probability under a uniform pick from the unexplored region,
            # measured before this step's ball is laid down
            z_area_before = region.area
            denom = box - (z_area_before if alpha_areas == "z" else l_area_sum)
            alpha = max(0.0, 1.0 - factor * (step - 1) * v / denom) if denom > 0 else 0.0
            free_room = box - z_area_before
            q = (box - dilated.area) / free_room if free_room > 0 else 0.0
            if order[:-1]:
                prev = pos[np.asarray(order[:-1])]
                far = bool(np.min(np.sum((prev - x) ** 2, axis=1)) > 4 * r * r)
            else:
                far = True
            ratio = alpha / q if q > 0 else (1.0 if alpha == 0 else math.inf)
            if ratio > 1:
                alpha_excess += 1
            draw = l_rng.random()
            ok = far and draw < ratio
            l_count += 1 + (len(newly) if ok else 0)
            l.append(l_count)
            alphas.append(alpha)
            accepted.append(ok)
            dilated.add_ball(x, 2 * r)

        if track_area:
            if record_perimeter:
                perims.append(region.perimeter_area(x, r))
            a = region.add_ball(x, r)
            areas.append(a)
            if lower:
                l_areas.append(a if ok else 0.0)
                l_area_sum += l_areas[-1]

        if upper:
            if len(u_pool):
                chosen = v_idx if v_idx in u_pool else u_pool.draw(u_rng)
                u_pool.remove(chosen)
                target = u_region.ball_area(x, r)
                rho, sat = u_region.radius_for_free_area(x, target, r, diag)
                u_areas.append(u_region.add_ball(x, rho))
                live = u_pool.items[:u_pool.size]
                d2 = np.sum((pos[live] - x) ** 2, axis=1)
                for w in live[d2 <= rho * rho].tolist():
                    u_pool.remove(w)
                for w in newly:  # already inside rho >= r; kept explicit for the ordering
                    if w in u_pool:
                        u_pool.remove(w)
                u.append(n - len(u_pool))
                r_tilde.append(rho)
                saturated.append(sat)
            else:
                r_tilde.append(math.nan)
                saturated.append(False)
                u_areas.append(0.0)

    order = np.asarray(order, dtype=np.int64)
    centers = pos[order]
    z_run = RsaRun(
        Trajectory(np.asarray(z, dtype=np.int64), n, order),
        np.asarray(areas),
        region,
        order,
        centers,
        _interior(centers, geom),
        np.asarray(perims) if record_perimeter else None,
    )
    out = CoupledRun(z_run)
    if upper:
        out.u = Trajectory(np.asarray(u, dtype=np.int64), n)
        out.r_tilde = np.asarray(r_tilde)
        out.saturated = np.asarray(saturated, dtype=bool)
        out.u_areas = np.asarray(u_areas)
    if lower:
        # past Z's absorption every remaining point lies within r of a centre,
        # so the perimeter event fails and L gains exactly one point per step
        l.extend(range(l_count + 1, n + 1))
        out.l = Trajectory(np.asarray(l, dtype=np.int64), n)
        out.alpha = np.asarray(alphas)
        out.accepted = np.asarray(accepted, dtype=bool)
        out.l_areas = np.asarray(l_areas)
        out.alpha_excess = alpha_excess
    return out


def run_rsa(cloud: PointCloud, geom: BoxGeometry, rng: np.random.Generator, *, graph=None,
            track_area: bool = True, cell_fraction: float = 1 / 64, record_perimeter: bool = False) -> RsaRun:
    """RSA exploration: activate a uniform unexplored point, explore every
    unexplored point within ``r``, record the newly covered area."""
    return _simulate(cloud, geom, rng, graph=graph, track_area=track_area,
                     cell_fraction=cell_fraction, record_perimeter=record_perimeter).z_run


def run_coupled(cloud: PointCloud, geom: BoxGeometry, rng: np.random.Generator, *, graph=None,
                cell_fraction: float = 1 / 64, alpha_areas: str = "z") -> CoupledRun:
    """Z together with its upper (U) and lower (L) couplings on shared randomness."""
    return _simulate(cloud, geom, rng, graph=graph, upper=True, lower=True,
                     cell_fraction=cell_fraction, alpha_areas=alpha_areas)


def run_coupled_upper(cloud, geom, rng, **kw):
    run = _simulate(cloud, geom, rng, upper=True, **kw)
    return run.z_run, run


def run_coupled_lower(cloud, geom, rng, **kw):
    run = _simulate(cloud, geom, rng, lower=True, **kw)
    return run.z_run, run


# --------------------------------------------------------------------------
# volume bounds
# --------------------------------------------------------------------------

@dataclass
class VolumeBoundReport:
    steps: np.ndarray
    count: np.ndarray  # runs contributing to each step
    mean: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: float
    lower_ok: np.ndarray
    upper_ok: np.ndarray
    vacuous: np.ndarray  # lower bound <= 0
    pathwise_ok: bool
    tolerance: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.pathwise_ok and self.lower_ok.all() and self.upper_ok.all())


def check_volume_bounds(runs, geom: BoxGeometry, interior_only: bool = True, slack_se: float = 3.0,
                        min_count: int = 2) -> VolumeBoundReport:
    """Compare per-step sample means of ``|S_k|`` with

        v (1 - (2^d - 1)(k-1) v / (|C| - sum_{j<k} |S_j|)) <= E|S_k| <= v.

    Steps whose ball is clipped by the walls are dropped when
    ``interior_only``; the upper bound is also checked on every path.
    """
    v = geom.ball_volume
    box = geom.volume
    factor = 2 ** geom.dimension - 1
    tol = max((run.region.area_tolerance(geom.radius) for run in runs), default=0.0)
    horizon = max(len(run.step_areas) for run in runs)
    vals = np.full((len(runs), horizon), np.nan)
    lbs = np.full((len(runs), horizon), np.nan)
    pathwise = True
    for i, run in enumerate(runs):
        a = run.step_areas
        k = np.arange(1, len(a) + 1)
        before = np.concatenate([[0.0], np.cumsum(a)[:-1]])
        lb = v * (1 - factor * (k - 1) * v / (box - before))
        keep = run.interior[:len(a)] if interior_only else np.ones(len(a), dtype=bool)
        vals[i, :len(a)] = np.where(keep, a, np.nan)
        lbs[i, :len(a)] = np.where(keep, lb, np.nan)
        pathwise &= bool(np.all(a <= v + tol))

    cnt = np.sum(~np.isnan(vals), axis=0)
    use = cnt >= min_count
    steps = np.arange(1, horizon + 1)[use]
    vals, lbs, cnt = vals[:, use], lbs[:, use], cnt[use]
    mean = np.nanmean(vals, axis=0)
    se = np.nanstd(vals, axis=0, ddof=1) / np.sqrt(cnt)
    lower = np.nanmean(lbs, axis=0)
    slack = slack_se * se + tol
    vacuous = lower <= 0
    lower_ok = vacuous | (mean + slack >= lower)
    upper_ok = mean - slack <= v
    return VolumeBoundReport(steps, cnt, mean, se, lower, v, lower_ok, upper_ok, vacuous, pathwise, tol)
