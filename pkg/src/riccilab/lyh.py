"""Differential-Harnack (LYH-type) quantities and their minimization in V.

Every quantity handled here is, at a fixed space-time point, a convex
quadratic in an auxiliary vector field V:

    value(V) = const + 2 * lin * Re(v) + quad * |v|^2

after reduction to the radial ansatz V^z = v * z (or a plain complex value
on the torus, or a real scalar on the line).  The builders below assemble
(const, lin, quad) arrays over a spatial window for each quantity kind; the
shared minimizer then gives the pointwise infimum in closed form, with a
Tikhonov fallback when the quadratic coefficient degenerates.

Index bookkeeping: V is stored by its (1,0) components; lowered symbols are
produced by metric contraction, and every repeated-index pair of the
quantity definitions is contracted with the inverse metric so that all
terms are frame invariants.  The correspondence used throughout (m = 1):

    grad_z R V_bar-pairing + conj  ->  2 rho R'(rho) Re(v)
    Ric(V, V-bar)                  ->  ric |v|^2 rho
    nabla_z h_{z z-bar}            ->  z-bar P_h,  P_h = e^{-s}(h_s - h w_s)
    Delta_cov h                    ->  e^{-s-w}[h_ss - 2 w_s h_s + (w_s^2 - w_ss) h]

Time derivatives of curvature and trace fields are always obtained by
centered differencing of trajectory snapshots, never from the evolution
identities being verified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fd import derivative_matrix
from .fixtures import (AnalyticLineTrajectory, AnalyticRadialTrajectory,
                       GriddedRadialTrajectory, RadialSnapshot, TorusTrajectory)
from .geometry import curvature, metric_from_radial_g

__all__ = [
    "VectorFieldV",
    "LyhEvaluation",
    "SolitonResiduals",
    "ScanReport",
    "QuantityArrays",
    "trace_harnack_kahler",
    "trace_harnack_ricci",
    "linear_trace_Z",
    "linear_trace_Q",
    "bundle_trace_lyh",
    "minimize_V",
    "soliton_residuals",
    "lyh_scan",
    "default_window",
]

KINDS = ("trace-kahler", "trace-ricci", "linear-Z", "linear-Q", "bundle-trace")


@dataclass
class VectorFieldV:
    """Radial vector field V^z = coeff(rho) * z (coeff complex, per node)."""

    coeff: np.ndarray

    def lowered(self, g: np.ndarray) -> np.ndarray:
        """Components V_(z-bar) = g_(z z-bar) V^z / z, i.e. g * coeff."""
        return g * self.coeff


@dataclass
class LyhEvaluation:
    kind: str
    t: float
    rho: np.ndarray
    value: np.ndarray
    ancient_value: np.ndarray
    trace_h: np.ndarray
    v_used: np.ndarray
    minimized: bool
    regularized: bool = False


@dataclass
class SolitonResiduals:
    y1_norm: float
    y2_norm: float
    eq45_norm: float
    eq46_norm: float


@dataclass
class ScanReport:
    kind: str
    times: list
    min_value: float
    argmin_rho: float
    argmin_t: float
    residuals: SolitonResiduals | None
    fingerprint: str
    curve: list  # (t, min over space) rows


@dataclass
class QuantityArrays:
    """Pointwise quadratic data of one quantity over a spatial window.

    value(v) = const + 2 Re(lin * v) + quad |v|^2; lin is real for the
    radial reductions and complex on the torus.
    """

    kind: str
    t: float
    rho: np.ndarray
    const: np.ndarray
    lin: np.ndarray
    quad: np.ndarray
    trace_h: np.ndarray
    ancient_shift: np.ndarray  # value - ancient_value

    def value_at(self, v: np.ndarray) -> np.ndarray:
        return self.const + 2.0 * np.real(self.lin * v) + self.quad * np.abs(v) ** 2


# ---------------------------------------------------------------------------
# radial helpers


def default_window(s: np.ndarray, rho_lo: float = 1e-2, rho_hi: float = 1e2,
                   edge: int = 8) -> np.ndarray:
    """Interior window clear of boundary stencils and outer truncation."""
    rho = np.exp(s)
    mask = (rho >= rho_lo) & (rho <= rho_hi)
    mask[:edge] = False
    mask[-edge:] = False
    return mask


class _RadialFrame:
    """Derived spatial fields of one radial snapshot."""

    def __init__(self, snap: RadialSnapshot, kind: str):
        self.snap = snap
        self.s = snap.s
        self.rho = snap.rho
        self.g = snap.g
        self.h = snap.h
        n = len(self.s)
        ds = self.s[1] - self.s[0]
        self.D1 = derivative_matrix(n, ds, 1, 8)
        self.w = np.log(self.g)
        self.ws = self.D1 @ self.w
        self.kind = kind
        self._prof = None

    def _profile(self):
        if self._prof is None:
            self._prof = curvature(metric_from_radial_g(self.s, self.g))
        return self._prof

    @property
    def ric(self) -> np.ndarray:
        if self.snap.ric is not None:
            return self.snap.ric
        return self._profile().ricci_radial

    @property
    def scalar(self) -> np.ndarray:
        if self.snap.scalar is not None:
            # analytic fixtures supply the convention-correct scalar directly
            return self.snap.scalar
        out = self._profile().scalar
        if self.kind == "trace-ricci":
            # honest surface curvature of the conformal profile
            out = 4.0 * out
        return out

    def sderiv(self, arr: np.ndarray) -> np.ndarray:
        return self.D1 @ arr

    def rho_deriv(self, arr: np.ndarray) -> np.ndarray:
        return np.exp(-self.s) * (self.D1 @ arr)

    def grad_coeff(self, arr: np.ndarray) -> np.ndarray:
        """P_X with nabla_z X_(z z-bar) = z-bar P_X for a tensor profile."""
        return np.exp(-self.s) * ((self.D1 @ arr) - arr * self.ws)

    def lap_cov(self, arr: np.ndarray) -> np.ndarray:
        wss = self.D1 @ self.ws
        arr_s = self.D1 @ arr
        arr_ss = self.D1 @ arr_s
        return np.exp(-self.s - self.w) * (
            arr_ss - 2.0 * self.ws * arr_s + (self.ws**2 - wss) * arr
        )

    def lap_scalar(self, arr: np.ndarray) -> np.ndarray:
        return np.exp(-self.s - self.w) * (self.D1 @ (self.D1 @ arr))


def _time_derivative(traj, t: float, extract, delta: float | None = None):
    before, mid, after = traj.neighbors(t, delta) if not isinstance(traj, GriddedRadialTrajectory) \
        else traj.neighbors(t)
    dt_minus = mid.t - before.t
    dt_plus = after.t - mid.t
    fa, fm, fb = extract(after), extract(mid), extract(before)
    if abs(dt_plus - dt_minus) < 1e-12 * max(dt_plus, dt_minus):
        return (fa - fb) / (dt_plus + dt_minus), mid
    # non-uniform three-point formula
    d = (fa * dt_minus**2 - fb * dt_plus**2
         + fm * (dt_plus**2 - dt_minus**2)) / (dt_plus * dt_minus * (dt_plus + dt_minus))
    return d, mid


# ---------------------------------------------------------------------------
# quantity builders


def _build_trace_kahler(traj, t: float, window: np.ndarray) -> QuantityArrays:
    frames = {}

    def scalar_of(snap):
        fr = _RadialFrame(snap, "trace-kahler")
        frames[snap.t] = fr
        return fr.scalar

    R_t, mid = _time_derivative(traj, t, scalar_of)
    fr = frames[mid.t]
    Rp = fr.rho_deriv(fr.scalar)
    w = window
    c = R_t[w] + fr.scalar[w] / t
    lin = fr.rho[w] * Rp[w]
    quad = fr.ric[w] * fr.rho[w]
    return QuantityArrays("trace-kahler", t, fr.rho[w], c, lin, quad,
                          fr.scalar[w], fr.scalar[w] / t)


def _build_trace_ricci(traj, t: float, window: np.ndarray) -> QuantityArrays:
    frames = {}

    def scalar_of(snap):
        fr = _RadialFrame(snap, "trace-ricci")
        frames[snap.t] = fr
        return fr.scalar

    R_t, mid = _time_derivative(traj, t, scalar_of)
    fr = frames[mid.t]
    Rp = fr.rho_deriv(fr.scalar)
    w = window
    c = R_t[w] + fr.scalar[w] / t
    lin = 2.0 * fr.rho[w] * Rp[w]
    quad = fr.scalar[w] * fr.g[w] * fr.rho[w]
    return QuantityArrays("trace-ricci", t, fr.rho[w], c, lin, quad,
                          fr.scalar[w], fr.scalar[w] / t)


def _build_linear_Z(traj, t: float, window: np.ndarray) -> QuantityArrays:
    snap = traj.snapshot(t)
    if snap.h is None:
        raise ValueError("trajectory carries no tensor field for linear-Z")
    fr = _RadialFrame(snap, "linear-Z")
    h = snap.h
    w = window
    lap = fr.lap_cov(h)
    P = fr.grad_coeff(h)
    H = h / fr.g
    c = lap[w] / fr.g[w] + fr.ric[w] * h[w] / fr.g[w] ** 2 + H[w] / t
    lin = fr.rho[w] * P[w] / fr.g[w]
    quad = h[w] * fr.rho[w]
    return QuantityArrays("linear-Z", t, fr.rho[w], c, lin, quad, H[w], H[w] / t)


def _build_linear_Q(traj: AnalyticLineTrajectory, t: float,
                    window: np.ndarray) -> QuantityArrays:
    snap = traj.snapshot(t)
    x = snap.x
    dx = x[1] - x[0]
    D1 = derivative_matrix(len(x), dx, 1, 8)
    D2 = derivative_matrix(len(x), dx, 2, 8)
    h = snap.h
    w = window
    c = (D2 @ h)[w] + h[w] / (2.0 * t)
    lin = (D1 @ h)[w]
    quad = h[w]
    return QuantityArrays("linear-Q", t, x[w], c, lin, quad, h[w], h[w] / (2.0 * t))


def _build_bundle_trace(traj: TorusTrajectory, t: float) -> QuantityArrays:
    def omega_of(state):
        return state.omega()

    Om_t, mid = _time_derivative(traj, t, omega_of)
    om = mid.omega()
    n = mid.grid.n
    k = 2j * np.pi * np.fft.fftfreq(n, d=mid.grid.dx)
    om_hat = np.fft.fft2(om)
    om_x = np.real(np.fft.ifft2(om_hat * k[:, None]))
    om_y = np.real(np.fft.ifft2(om_hat * k[None, :]))
    dz = 0.5 * (om_x - 1j * om_y)      # holomorphic gradient component
    c = (Om_t + om / t).ravel()
    return QuantityArrays("bundle-trace", t, np.zeros(om.size), c,
                          dz.ravel(), om.ravel(), om.ravel(), om.ravel() / t)


# ---------------------------------------------------------------------------
# public evaluators


def _finish(qa: QuantityArrays, v: np.ndarray | None, minimize: bool,
            probes: int = 100, seed: int = 0):
    if minimize:
        v_star, value, regularized = _pointwise_minimum(qa)
        _certify(qa, v_star, value, probes, seed)
    else:
        if v is None:
            raise ValueError("pass a vector field or minimize=True")
        v_star = np.broadcast_to(np.asarray(v), qa.const.shape).astype(complex)
        value = qa.value_at(v_star)
        regularized = False
    return LyhEvaluation(qa.kind, qa.t, qa.rho, value, value - qa.ancient_shift,
                         qa.trace_h, v_star, minimize, regularized)


def _pointwise_minimum(qa: QuantityArrays):
    """Closed-form minimizer v* = -conj(lin)/quad with Tikhonov fallback."""
    scale = np.maximum(np.abs(qa.trace_h), 1e-30)
    if np.any(qa.quad < -1e-8 * np.maximum(1.0, scale)):
        raise ValueError("quadratic form has a negative direction: quantity unbounded below")
    eps = 1e-8 * scale
    degenerate = qa.quad <= eps
    quad_reg = np.where(degenerate, qa.quad + np.maximum(eps, 1e-12), qa.quad)
    v_star = -np.conj(qa.lin) / quad_reg
    value = qa.const + 2.0 * np.real(qa.lin * v_star) + quad_reg * np.abs(v_star) ** 2
    return v_star, value, bool(np.any(degenerate))


def trace_harnack_kahler(traj, t: float, v=None, window=None, minimize=False,
                         probes: int = 100, seed: int = 0) -> LyhEvaluation:
    """Trace differential Harnack of the Kahler flow:

        R_t + grad R paired with V (both slots) + Ric(V, V-bar) + R/t.
    """
    window = default_window(traj.s) if window is None else window
    return _finish(_build_trace_kahler(traj, t, window), v, minimize, probes, seed)


def trace_harnack_ricci(traj, t: float, v=None, window=None, minimize=False,
                        probes: int = 100, seed: int = 0) -> LyhEvaluation:
    """Trace differential Harnack of the real flow (honest surface curvature):

        R_t + 2 grad R . V + 2 Ric(V, V) + R/t.
    """
    window = default_window(traj.s) if window is None else window
    return _finish(_build_trace_ricci(traj, t, window), v, minimize, probes, seed)


def linear_trace_Z(traj, t: float, v=None, window=None, minimize=False,
                   probes: int = 100, seed: int = 0) -> LyhEvaluation:
    """Linear trace quantity of a tensor along the Kahler flow:

        g-contractions of [sym grad^2 h + Ric h + grad h V-pairings + h V V-bar]
        + trace(h)/t.
    """
    window = default_window(traj.s) if window is None else window
    return _finish(_build_linear_Z(traj, t, window), v, minimize, probes, seed)


def line_window(traj, t: float, rel_floor: float = 1e-8) -> np.ndarray:
    """Window away from the grid ends and the vanishing tails of h."""
    h = traj.snapshot(t).h
    mask = np.abs(h) > rel_floor * np.abs(h).max()
    mask[:8] = mask[-8:] = False
    return mask


def linear_trace_Q(traj, t: float, v=None, window=None, minimize=False,
                   probes: int = 100, seed: int = 0) -> LyhEvaluation:
    """Real-convention linear trace quantity on the flat line:

        h_xx + 2 h_x V + h V^2 + h/(2t).
    """
    if window is None:
        window = line_window(traj, t)
    return _finish(_build_linear_Q(traj, t, window), v, minimize, probes, seed)


def bundle_trace_lyh(traj: TorusTrajectory, t: float, v=None, minimize=False,
                     probes: int = 100, seed: int = 0) -> LyhEvaluation:
    """Bundle curvature trace quantity on the torus:

        Omega_t + grad Omega V-pairings + Omega_form(V, V-bar) + Omega/t,

    requiring nonnegative initial bundle curvature.
    """
    state0 = traj.traj.states[0]
    if state0.omega0 is None or state0.omega0.min() < 0.0:
        raise ValueError("initial bundle curvature must be nonnegative")
    return _finish(_build_bundle_trace(traj, t), v, minimize, probes, seed)


def minimize_V(traj, t: float, kind: str = "linear-Z", window=None,
               probes: int = 100, seed: int = 0):
    """Pointwise minimizer of a quantity over V, with probe certification.

    Returns (VectorFieldV, LyhEvaluation).  When the quadratic coefficient
    degenerates below max(1e-8 * trace scale, machine floor), a Tikhonov
    regularization is applied and the evaluation is flagged.
    """
    builder = {
        "trace-kahler": trace_harnack_kahler,
        "trace-ricci": trace_harnack_ricci,
        "linear-Z": linear_trace_Z,
        "linear-Q": linear_trace_Q,
    }[kind]
    ev = builder(traj, t, window=window, minimize=True, probes=probes, seed=seed)
    return VectorFieldV(ev.v_used), ev


def _certify(qa: QuantityArrays, v_star, value, probes: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        dv = rng.normal(scale=1.0) + 1j * rng.normal(scale=1.0)
        trial = qa.value_at(v_star + dv)
        if np.any(trial < value - 1e-9 * (1.0 + np.abs(value))):
            raise AssertionError("minimizer certification failed")


# ---------------------------------------------------------------------------
# soliton residuals


def soliton_residuals(traj, t: float, v_coeff, window=None,
                      ancient: bool = False) -> SolitonResiduals:
    """Residuals of the self-similarity identities for a given vector field.

    ``v_coeff`` is the radial coefficient of V^z = v(rho) z, constant or per
    node.  The first-order residual compares the covariant derivative of the
    lowered field with Ric + g/t (the 1/t term dropped for ancient checks);
    the second is the antiholomorphic derivative, which vanishes exactly for
    fields with constant coefficient.  The two quadratic combinations pair
    those against the tensor and curvature as in the variational identities.
    """
    snap = traj.snapshot(t)
    fr = _RadialFrame(snap, "kahler")
    window = default_window(fr.s) if window is None else window
    v = np.broadcast_to(np.asarray(v_coeff, dtype=complex), fr.g.shape)

    def d1(arr):
        # derivative of a constant array is exactly zero; skip the stencil
        if np.ptp(arr.real) == 0.0 and np.ptp(arr.imag) == 0.0:
            return np.zeros_like(arr)
        return fr.D1 @ arr

    q = fr.g * v
    dq = d1(q)
    cov = q + dq                              # nabla_z V_(z-bar) on radial fields
    shift = 0.0 if ancient else fr.g / t
    e45 = (cov - fr.ric - shift) / fr.g       # orthonormal components
    e46 = np.abs(d1(v))                       # |rho v'| in the orthonormal frame
    h = snap.h if snap.h is not None else fr.ric
    h_orth = h / fr.g

    # quadratic-combination residuals
    y2 = h_orth * (np.abs(e45) ** 2 + e46**2)
    lap_ric = fr.lap_cov(fr.ric)
    P_ric = fr.grad_coeff(fr.ric)
    rm = fr.g * fr.ric
    bracket = (lap_ric + rm * fr.ric / fr.g**2
               + 2.0 * fr.rho * np.real(v) * P_ric
               + rm * np.abs(v) ** 2 * fr.rho)
    if not ancient:
        bracket = bracket + fr.ric / t
    y1 = bracket * h / fr.g**2

    w = window
    return SolitonResiduals(
        float(np.abs(y1[w]).max()),
        float(np.abs(y2[w]).max()),
        float(np.abs(e45[w]).max()),
        float(np.abs(e46[w]).max()),
    )


# ---------------------------------------------------------------------------
# scans


def line_soliton_residuals(traj, t: float, v: np.ndarray, window=None) -> SolitonResiduals:
    """Flat real-line analog of the self-similarity residuals.

    On expanders of the real flow the minimizing field satisfies
    dV/dx = 1/(2t) (flat space, n = 1); the antisymmetric residual is empty
    in one dimension.
    """
    snap = traj.snapshot(t)
    x = snap.x
    window = line_window(traj, t) if window is None else window
    D1 = derivative_matrix(len(x), x[1] - x[0], 1, 8)
    e45 = (D1 @ np.real(v)) - 1.0 / (2.0 * t)
    y2 = snap.h * e45**2
    w = window
    return SolitonResiduals(0.0, float(np.abs(y2[w]).max()),
                            float(np.abs(e45[w]).max()), 0.0)


def lyh_scan(traj, kind: str, times, window=None, ancient: bool = False,
             seed: int = 0, fingerprint: str = "") -> ScanReport:
    """Sweep a quantity over (window x times) with pointwise minimization.

    Reports the global minimum, its location, and the soliton residuals of
    the minimizing field at the argmin time (Kahler radial kinds and the
    flat line).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    builder = {
        "trace-kahler": _build_trace_kahler,
        "trace-ricci": _build_trace_ricci,
        "linear-Z": _build_linear_Z,
    }.get(kind)
    curve = []
    best = (np.inf, None, None, None)
    for t in times:
        if kind == "bundle-trace":
            qa = _build_bundle_trace(traj, t)
        elif kind == "linear-Q":
            win = line_window(traj, t) if window is None else window
            qa = _build_linear_Q(traj, t, win)
        else:
            win = default_window(traj.s) if window is None else window
            qa = builder(traj, t, win)
        v_star, value, _ = _pointwise_minimum(qa)
        shifted = value - qa.ancient_shift if ancient else value
        i = int(np.argmin(shifted))
        curve.append((float(t), float(shifted[i])))
        if shifted[i] < best[0]:
            best = (float(shifted[i]), float(qa.rho[i]) if qa.rho.size else 0.0,
                    float(t), v_star)
    residuals = None
    if best[3] is not None and kind in ("trace-kahler", "linear-Z"):
        win = default_window(traj.s) if window is None else window
        v_full = _extend(best[3], win, len(traj.s))
        near = _argmin_neighborhood(np.exp(traj.s), win, best[1])
        residuals = soliton_residuals(traj, best[2], v_full, window=near, ancient=ancient)
    elif best[3] is not None and kind == "linear-Q":
        win = line_window(traj, best[2]) if window is None else window
        v_full = _extend(best[3], win, len(traj.x))
        near = _argmin_neighborhood(traj.x, win, best[1])
        residuals = line_soliton_residuals(traj, best[2], v_full, window=near)
    return ScanReport(kind, list(map(float, times)), best[0], best[1], best[2],
                      residuals, fingerprint, curve)


def _argmin_neighborhood(coords: np.ndarray, window: np.ndarray, at: float,
                         halfwidth: int = 8) -> np.ndarray:
    """Window restricted to +-halfwidth nodes around the argmin coordinate."""
    i = int(np.argmin(np.abs(coords - at)))
    near = np.zeros_like(window)
    near[max(0, i - halfwidth): i + halfwidth + 1] = True
    return near & window


def _extend(values: np.ndarray, window: np.ndarray, n: int) -> np.ndarray:
    """Windowed per-point data extended to the full grid by edge values."""
    full = np.zeros(n, dtype=complex)
    idx = np.where(window)[0]
    full[window] = values
    full[: idx[0]] = values[0]
    full[idx[-1] + 1:] = values[-1]
    # fill interior gaps, if any, by nearest assigned value
    missing = np.where(~window)[0]
    inside = missing[(missing > idx[0]) & (missing < idx[-1])]
    for j in inside:
        full[j] = full[idx[idx < j][-1]]
    return full
