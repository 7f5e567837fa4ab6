"""Fluid-limit and variance ODEs, ER closed forms and finite-N error bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OdeSettings:
    h: float = 1e-4
    root_tol: float = 1e-12
    t_max: float = 2.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be > 0, got {self.h}")
        if not self.root_tol > 0:
            raise ValueError(f"root tolerance must be > 0, got {self.root_tol}")


def rk4_step(f, t: float, y: tuple, h: float) -> tuple:
    """One classical RK4 step; states are tuples of floats (small systems only)."""
    half = 0.5 * h
    k1 = f(t, y)
    k2 = f(t + half, tuple(a + half * b for a, b in zip(y, k1)))
    k3 = f(t + half, tuple(a + half * b for a, b in zip(y, k2)))
    k4 = f(t + h, tuple(a + h * b for a, b in zip(y, k3)))
    w = h / 6.0
    return tuple(a + w * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4))


@dataclass
class OdeSolution:
    grid: np.ndarray
    states: np.ndarray  # (len(grid), dim)
    hitting_time: float | None
    stopped_by_guard: bool = False


def integrate_until(f, y0, settings: OdeSettings, level: float = 1.0, component: int = 0,
                    guard=None) -> OdeSolution:
    """Fixed-step RK4 from ``t=0`` until ``y[component]`` first reaches ``level``.

    The crossing step is refined by bisection on the length of a single RK4
    step from the last grid node, so the returned hitting time solves the
    discrete scheme to ``settings.root_tol``. The hit is appended as the final
    grid node. ``guard(t, y)`` returning True stops integration early.
    """
    h = settings.h
    t = 0.0
    y = tuple(float(v) for v in y0)
    ts = [t]
    ys = [y]
    steps = int(math.ceil(settings.t_max / h))
    for k in range(steps):
        y_next = rk4_step(f, t, y, h)
        if y_next[component] >= level:
            lo, hi = 0.0, h
            while hi - lo > settings.root_tol:
                mid = 0.5 * (lo + hi)
                if rk4_step(f, t, y, mid)[component] >= level:
                    hi = mid
                else:
                    lo = mid
            y_hit = list(rk4_step(f, t, y, hi))
            y_hit[component] = level
            ts.append(t + hi)
            ys.append(y_hit)
            return OdeSolution(np.asarray(ts), np.asarray(ys), t + hi)
        t = (k + 1) * h
        y = y_next
        ts.append(t)
        ys.append(y)
        if guard is not None and guard(t, y):
            return OdeSolution(np.asarray(ts), np.asarray(ys), None, True)
    return OdeSolution(np.asarray(ts), np.asarray(ys), None)


@dataclass
class FluidCurve:
    grid: np.ndarray
    values: np.ndarray
    hitting_time: float | None

    def __call__(self, t):
        """Linear interpolation on the RK grid, clamped at 1 past the hitting time."""
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.grid, self.values)
        if self.hitting_time is not None:
            out = np.where(t >= self.hitting_time, 1.0, out)
        return out

    def to_rows(self):
        return list(zip(self.grid.tolist(), self.values.tolist()))


def integrate_fluid(gamma, settings: OdeSettings = OdeSettings()) -> FluidCurve:
    """Solve ``z' = 1 + gamma(z)``, ``z(0) = 0`` up to ``z = 1``."""
    probe = np.array([gamma(x) for x in np.linspace(0.0, 1.0, 101)])
    if np.any(probe < 0):
        raise ValueError("gamma must be nonnegative on [0, 1]")

    def rhs(t, y):
        g = gamma(y[0])
        if g < 0 and y[0] <= 1.0:  # RK stages may overshoot 1 on the last step
            raise ValueError(f"gamma({y[0]}) = {g} < 0")
        return (1.0 + g,)

    sol = integrate_until(rhs, [0.0], settings)
    return FluidCurve(sol.grid, sol.states[:, 0], sol.hitting_time)


def er_gamma(c: float):
    return lambda z: c * (1.0 - z)


def er_fluid_closed_form(c: float, t):
    """``z(t) = ((1 + c)/c)(1 - exp(-c t))``, capped at 1; identity drift when c = 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if c == 0:
        z = t
    else:
        z = (1.0 + c) / c * -np.expm1(-c * t)
    return np.minimum(z, 1.0)


def er_jamming_stats(c: float) -> tuple:
    """Limit jamming constant ``ln(1+c)/c`` and CLT variance ``c / (2 (c+1)^2)``."""
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    if c == 0:
        return 1.0, 0.0
    return math.log1p(c) / c, c / (2.0 * (c + 1.0) ** 2)


def er_variance_closed_form(c: float, t):
    """``m(t) = exp(-2ct)(1 - exp(ct))(exp(ct) - 2c - 1) / (2c)``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(c * t)
    return np.exp(-2 * c * t) * (1 - e) * (e - 2 * c - 1) / (2 * c)


def er_beta_closed_form(c: float, t):
    t = np.asarray(t, dtype=float)
    return (1 + c) * -np.expm1(-c * t) / c - t


def hitting_variance(m_at_hit: float, gamma_at_one: float = 0.0) -> float:
    """CLT variance of the scaled hitting time, ``m(T*) / (1 - gamma(1))^2``.

    Only the ``gamma(1) = 0`` case (ER and every homogeneous model that
    jams with nothing left to block) has been validated.
    """
    if gamma_at_one != 0:
        warnings.warn("hitting_variance is only validated for gamma(1) = 0", stacklevel=2)
    return m_at_hit / (1.0 - gamma_at_one) ** 2


@dataclass
class VarianceCurve:
    grid: np.ndarray
    z_values: np.ndarray
    m_values: np.ndarray
    beta_values: np.ndarray
    hitting_time: float | None

    def m(self, t):
        return np.interp(t, self.grid, self.m_values)


def integrate_diffusion(gamma, dgamma, psi, settings: OdeSettings = OdeSettings()) -> VarianceCurve:
    """Solve the fluid limit together with the variance of the diffusion
    ``dW = gamma'(z) W dt + sqrt(beta') dB``:

        z' = 1 + gamma(z),  m' = 2 gamma'(z) m + psi(z),  beta' = psi(z),

    all started at 0 and stopped when ``z`` reaches 1.
    """
    def rhs(t, y):
        z, m, _ = y
        s = psi(z)
        return (1.0 + gamma(z), 2.0 * dgamma(z) * m + s, s)

    sol = integrate_until(rhs, [0.0, 0.0, 0.0], settings)
    st = sol.states
    return VarianceCurve(sol.grid, st[:, 0], st[:, 1], st[:, 2], sol.hitting_time)


def integrate_variance(c: float, settings: OdeSettings = OdeSettings()) -> VarianceCurve:
    """ER case: ``gamma(z) = psi(z) = c(1 - z)``, ``gamma'(z) = -c``."""
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    g = er_gamma(c)
    return integrate_diffusion(g, lambda z: -c, g, settings)


@dataclass(frozen=True)
class ErrorBoundReport:
    n: int
    horizon: float
    delta_N: float
    gamma_bar_N: float
    psi_bar_N: float
    C_L: float
    omega_N: float
    Omega_N: float

    def deviation_bound(self, delta: float) -> float:
        """Upper bound on ``P(|T_N/N - T*| >= delta)``."""
        if not delta > 0:
            raise ValueError("delta must be > 0")
        return 2.0 * self.omega_N / delta


def fluid_error_bound(n: int, T: float, delta_N: float, gamma_bar: float, psi_bar: float,
                      lipschitz: float, C: float = 1.0) -> ErrorBoundReport:
    """L2 bound on ``sup_{t<=T} |Z^N_t - z(t)|``:

        (delta_N T + (1 + gamma_bar)/N + 2 sqrt(psi_bar T / N)) exp(C_L T)
    """
    omega = (delta_N * T + (1 + gamma_bar) / n + 2 * math.sqrt(psi_bar * T / n)) * math.exp(lipschitz * T)
    return ErrorBoundReport(n, T, delta_N, gamma_bar, psi_bar, lipschitz, omega, C * omega)


def er_error_bound(n: int, c: float, T: float, C: float = 1.0) -> ErrorBoundReport:
    if n < 1 or not c > 0 or not T > 0:
        raise ValueError("need n >= 1, c > 0, T > 0")
    return fluid_error_bound(n, T, c / n, c, c, c, C)


def small_c_expansion(c: float, t):
    """First-order fluid limit for sparse geometric graphs, ``(1+c)t - c t^2 / 2``."""
    t = np.asarray(t, dtype=float)
    return (1 + c) * t - 0.5 * c * t * t
