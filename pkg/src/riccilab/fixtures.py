"""Shipped fixtures: analytic trajectories and prepared initial states.

Analytic trajectories expose snapshots at arbitrary times, so evaluators can
difference them in time with small stencils; gridded trajectories (from
:func:`riccilab.flows.run_flow`) expose stored snapshots instead.  Both meet
the same small protocol: ``kind``, ``snapshot(t)``, ``neighbors(t, delta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import flows as fl
from .geometry import (RadialKahlerMetric, expanding_soliton_construct,
                       make_s_grid)

__all__ = [
    "RadialSnapshot",
    "AnalyticRadialTrajectory",
    "GriddedRadialTrajectory",
    "LineSnapshot",
    "AnalyticLineTrajectory",
    "TorusTrajectory",
    "cigar_trajectory",
    "cigar_gridded_trajectory",
    "flat_heat_kernel_trajectory",
    "flat_static_trajectory",
    "soliton_trajectory",
    "real_cigar_trajectory",
    "real_line_kernel_trajectory",
    "real_line_two_kernel_trajectory",
    "torus_bundle_trajectory",
    "heat_kernel",
    "real_heat_kernel",
]


def heat_kernel(rho, t):
    """Fundamental solution of u_t = Delta u on flat C (complex Laplacian)."""
    return np.exp(-np.asarray(rho) / t) / (np.pi * t)


def real_heat_kernel(x, t):
    """Fundamental solution of u_t = u_xx on the real line."""
    return np.exp(-np.asarray(x) ** 2 / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


@dataclass
class RadialSnapshot:
    """One time slice of a radial trajectory: metric plus optional tensor."""

    t: float
    s: np.ndarray
    g: np.ndarray
    h: np.ndarray | None = None
    u: np.ndarray | None = None
    # exact curvature arrays when the trajectory is analytic
    ric: np.ndarray | None = None
    scalar: np.ndarray | None = None

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.s)


@dataclass
class AnalyticRadialTrajectory:
    """Closed-form radial trajectory; snapshots computed on demand."""

    kind: str                      # 'kahler' or 'real'
    s: np.ndarray
    g_fn: object
    h_fn: object | None = None
    u_fn: object | None = None
    ric_fn: object | None = None
    scalar_fn: object | None = None
    soliton_v: object | None = None     # callable t -> coefficient c with V^z = c z
    label: str = ""
    default_delta: float = 3e-5

    def snapshot(self, t: float) -> RadialSnapshot:
        rho = np.exp(self.s)
        return RadialSnapshot(
            t, self.s, np.asarray(self.g_fn(rho, t), dtype=float),
            None if self.h_fn is None else np.asarray(self.h_fn(rho, t), dtype=float),
            None if self.u_fn is None else np.asarray(self.u_fn(rho, t), dtype=float),
            None if self.ric_fn is None else np.asarray(self.ric_fn(rho, t), dtype=float),
            None if self.scalar_fn is None else np.asarray(self.scalar_fn(rho, t), dtype=float),
        )

    def neighbors(self, t: float, delta: float | None = None):
        d = self.default_delta if delta is None else delta
        return self.snapshot(t - d), self.snapshot(t), self.snapshot(t + d)


@dataclass
class GriddedRadialTrajectory:
    """Adapter exposing a stepped radial flow through the snapshot protocol."""

    kind: str
    traj: fl.Trajectory

    @property
    def s(self) -> np.ndarray:
        return self.traj.states[0].s

    def _convert(self, state: fl.FlowState) -> RadialSnapshot:
        return RadialSnapshot(state.t, state.s, state.g, state.h, state.u)

    def snapshot(self, t: float) -> RadialSnapshot:
        return self._convert(self.traj.state_at(t))

    def neighbors(self, t: float, delta: float | None = None):
        a, b, c = self.traj.neighbors(t)
        return self._convert(a), self._convert(b), self._convert(c)


# ---------------------------------------------------------------------------
# Kahler-convention fixtures


def cigar_trajectory(s: np.ndarray | None = None) -> AnalyticRadialTrajectory:
    """Steady-soliton trajectory g(rho, t) = 1/(e^t + rho); V^z = z."""
    s = make_s_grid(1e-6, 1e4, 2048) if s is None else s

    def g_fn(rho, t):
        return 1.0 / (np.exp(t) + rho)

    def ric_fn(rho, t):
        return np.exp(t) / (np.exp(t) + rho) ** 2

    def scalar_fn(rho, t):
        return np.exp(t) / (np.exp(t) + rho)

    return AnalyticRadialTrajectory("kahler", s, g_fn, h_fn=ric_fn,
                                    ric_fn=ric_fn, scalar_fn=scalar_fn,
                                    soliton_v=lambda t: 1.0, label="cigar")


def cigar_gridded_trajectory(t_end: float = 0.5, dt: float = 1e-3,
                             n: int = 2048, with_ric: bool = True) -> GriddedRadialTrajectory:
    """Cigar evolved by the actual steppers, with h initialized to Ricci."""
    s = make_s_grid(1e-6, 1e4, n)
    rho = np.exp(s)
    w0 = -np.log1p(rho)
    h0 = 1.0 / (1.0 + rho) ** 2 if with_ric else None
    st = fl.FlowState(0.0, s, 1, w0, h=h0, scheme=fl.SchemeParams(dt))
    kind = "lichnerowicz" if with_ric else "kahler"
    cfg = fl.FlowRunConfig(kind, "cigar", t_end, dt, stride=max(1, int(2e-3 / dt)))
    return GriddedRadialTrajectory("kahler", fl.run_flow(cfg, st))


def flat_heat_kernel_trajectory(s: np.ndarray | None = None) -> AnalyticRadialTrajectory:
    """Flat metric with the heat-kernel tensor h_{z z-bar} = w(rho, t)."""
    s = make_s_grid(1e-6, 1e4, 2048) if s is None else s
    one = lambda rho, t: np.ones_like(rho)
    zero = lambda rho, t: np.zeros_like(rho)
    return AnalyticRadialTrajectory("kahler", s, one, h_fn=heat_kernel,
                                    ric_fn=zero, scalar_fn=zero,
                                    soliton_v=lambda t: 1.0 / t,
                                    label="flat-heat-kernel")


def flat_static_trajectory(s: np.ndarray | None = None, h_kind: str = "metric") -> AnalyticRadialTrajectory:
    """Flat static metric with h = g (or no tensor)."""
    s = make_s_grid(1e-6, 1e4, 2048) if s is None else s
    one = lambda rho, t: np.ones_like(rho)
    zero = lambda rho, t: np.zeros_like(rho)
    h_fn = one if h_kind == "metric" else None
    return AnalyticRadialTrajectory("kahler", s, one, h_fn=h_fn,
                                    ric_fn=zero, scalar_fn=zero,
                                    label="flat-static")


@dataclass
class _SolitonProfile:
    spline: CubicSpline
    s_lo: float
    s_hi: float
    slope_lo: float
    slope_hi: float

    def __call__(self, s_hat):
        s_hat = np.asarray(s_hat, dtype=float)
        out = np.empty_like(s_hat)
        lo = s_hat < self.s_lo
        hi = s_hat > self.s_hi
        mid = ~(lo | hi)
        out[mid] = self.spline(s_hat[mid])
        out[lo] = self.spline(self.s_lo) + self.slope_lo * (s_hat[lo] - self.s_lo)
        out[hi] = self.spline(self.s_hi) + self.slope_hi * (s_hat[hi] - self.s_hi)
        return out


def soliton_trajectory(t0: float = 1.0, shape: float = 0.5,
                       s: np.ndarray | None = None):
    """Expanding self-similar trajectory through the constructed profile.

    The time slices are rescales of the reference profile,
    g(rho, t) = tau^(-shape) g0(rho tau^(-(1+shape))) with tau = t/t0, and
    the vector field is V^z = (1 + shape)/t * z.  Returns (trajectory,
    metric, spec).
    """
    s = make_s_grid(1e-6, 1e4, 2048) if s is None else s
    metric, spec = expanding_soliton_construct(1, t0, shape, s)
    w0 = np.log(metric.b)
    prof = _SolitonProfile(CubicSpline(s, w0), float(s[0]), float(s[-1]),
                           float((w0[1] - w0[0]) / (s[1] - s[0])),
                           float((w0[-1] - w0[-2]) / (s[1] - s[0])))
    sig = shape

    def g_fn(rho, t):
        tau = t / t0
        s_hat = np.log(rho) - (1.0 + sig) * np.log(tau)
        return tau ** (-sig) * np.exp(prof(s_hat))

    def v_fn(t):
        return (1.0 + sig) / t

    traj = AnalyticRadialTrajectory("kahler", s, g_fn, h_fn=None,
                                    soliton_v=v_fn, label=f"soliton-{shape}")
    return traj, metric, spec


# ---------------------------------------------------------------------------
# real-convention fixtures


def real_cigar_trajectory(s: np.ndarray | None = None) -> AnalyticRadialTrajectory:
    """The same profile evolved by minus twice its genuine surface Ricci.

    u(rho, t) = 1/(e^{4t} + rho); scalar curvature 4 e^{4t}/(e^{4t} + rho);
    the steady vector field giving equality in the ancient trace quantity is
    V^z = 2 z.
    """
    s = make_s_grid(1e-6, 1e4, 2048) if s is None else s

    def g_fn(rho, t):
        return 1.0 / (np.exp(4.0 * t) + rho)

    def scalar_fn(rho, t):
        return 4.0 * np.exp(4.0 * t) / (np.exp(4.0 * t) + rho)

    return AnalyticRadialTrajectory("real", s, g_fn, scalar_fn=scalar_fn,
                                    soliton_v=lambda t: 2.0, label="real-cigar")


# ---------------------------------------------------------------------------
# real line fixtures (flat, n = 1)


@dataclass
class LineSnapshot:
    t: float
    x: np.ndarray
    h: np.ndarray


@dataclass
class AnalyticLineTrajectory:
    x: np.ndarray
    h_fn: object
    label: str = ""
    default_delta: float = 3e-5
    kind: str = "real-line"

    def snapshot(self, t: float) -> LineSnapshot:
        return LineSnapshot(t, self.x, np.asarray(self.h_fn(self.x, t), dtype=float))

    def neighbors(self, t: float, delta: float | None = None):
        d = self.default_delta if delta is None else delta
        return self.snapshot(t - d), self.snapshot(t), self.snapshot(t + d)


def real_line_kernel_trajectory(n: int = 4001, half_width: float = 30.0) -> AnalyticLineTrajectory:
    x = np.linspace(-half_width, half_width, n)
    return AnalyticLineTrajectory(x, real_heat_kernel, label="line-kernel")


def real_line_two_kernel_trajectory(a: float = 3.0, n: int = 4001,
                                    half_width: float = 30.0) -> AnalyticLineTrajectory:
    """h = d^2/dx^2 of u = kernel(x-a) + kernel(x+a): positive at the midpoint."""
    x = np.linspace(-half_width, half_width, n)

    def h_fn(x, t):
        out = np.zeros_like(x)
        for sgn in (-1.0, 1.0):
            y = x + sgn * a
            w = real_heat_kernel(y, t)
            out = out + w * (y**2 / (4.0 * t**2) - 1.0 / (2.0 * t))
        return out

    return AnalyticLineTrajectory(x, h_fn, label="line-two-kernels")


# ---------------------------------------------------------------------------
# torus bundle fixture


@dataclass
class TorusTrajectory:
    traj: fl.Trajectory
    kind: str = "torus"

    @property
    def grid(self) -> fl.TorusGrid:
        return self.traj.states[0].grid

    def snapshot(self, t: float) -> fl.TorusState:
        return self.traj.state_at(t)

    def neighbors(self, t: float, delta: float | None = None):
        return self.traj.neighbors(t)


def torus_bundle_trajectory(n: int = 64, t_end: float = 1.0, dt: float = 1e-3,
                            amplitude: float = 0.5, lam: float = 1.0) -> TorusTrajectory:
    """Omega0 = lam + amplitude*cos(x1) evolved by the bundle flow."""
    grid = fl.TorusGrid(n)
    X, _ = grid.axes()
    om0 = lam + amplitude * np.cos(X)
    st = fl.TorusState(0.0, grid, np.zeros_like(om0), omega0=om0, lam=lam,
                       scheme=fl.SchemeParams(dt))
    cfg = fl.FlowRunConfig("torus-he", "cosine-bundle", t_end, dt,
                           stride=max(1, int(2e-3 / dt)), grid_n=n)
    return TorusTrajectory(fl.run_flow(cfg, st))
