"""U(m)-invariant model Kahler metrics on C^m and their comparison geometry.

A radial metric is defined by a potential profile through

    g_{a b-bar} = phi'(rho) delta_{ab} + phi''(rho) conj(z_a) z_b,
    rho = |z|^2,

sampled on a uniform grid in s = log(rho) with a separately stored origin
value.  Conventions used everywhere in this package:

* Ricci: R_{a b-bar} = -d_a d_b-bar log det(g); scalar R = g^{a b-bar} R_{a b-bar}.
* Laplacian: Delta = g^{a b-bar} d_a d_b-bar, so Delta |z|^2 = m on flat space.
* Distance: radial length element sqrt(b(rho)) d|z| with b = phi' + rho phi''
  (flat space then has the usual Euclidean distance).

Under these conventions the cigar-like fixture g_{z z-bar} = 1/(1+rho) has
scalar curvature 1/(1+rho), and g_{z z-bar} = 1/(1+rho)^2 has constant
scalar curvature 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .fd import derivative_matrix

__all__ = [
    "RadialKahlerMetric",
    "CurvatureProfile",
    "SolitonSpec",
    "DistanceField",
    "make_s_grid",
    "metric_flat",
    "metric_cigar",
    "metric_constant_curvature",
    "metric_from_radial_g",
    "curvature",
    "bisectional_min",
    "distance_from_origin",
    "distance_field",
    "hessian_comparison_check",
    "jacobian_identity_check",
    "expanding_soliton_construct",
    "metric_to_dict",
    "metric_from_dict",
]

SCHEMA_VERSION = 1
CONVENTION_TAG = "ricci=-ddbar-logdet; lap=g^(ab)d_a d_bbar; ds=sqrt(b)d|z|"

DEFAULT_RHO_MIN = 1e-8
DEFAULT_RHO_MAX = 1e4
DEFAULT_GRID = 2048


def make_s_grid(rho_min: float = DEFAULT_RHO_MIN, rho_max: float = DEFAULT_RHO_MAX,
                n: int = DEFAULT_GRID) -> np.ndarray:
    """Uniform grid in s = log(rho) covering (rho_min, rho_max]."""
    if not (0.0 < rho_min < rho_max) or n < 16:
        raise ValueError("invalid radial grid request")
    return np.linspace(np.log(rho_min), np.log(rho_max), n)


@dataclass
class RadialKahlerMetric:
    """Sampled radial Kahler metric with origin closure.

    ``phi1`` and ``phi2`` hold phi'(rho) and phi''(rho) on the s-grid;
    ``origin`` holds their rho -> 0 limits.  ``quality`` records whether the
    profiles come from closed forms ("exact") or from a reconstruction off a
    g-profile ("derived"); curvature evaluation picks its differentiation
    route accordingly.  ``closed_form`` may carry exact callables (keyed
    'g', 'scalar', 'ricci', ...) used by oracles and fixtures.
    """

    m: int
    s: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    origin: tuple[float, float]
    quality: str = "exact"
    closed_form: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.phi1 = np.asarray(self.phi1, dtype=float)
        self.phi2 = np.asarray(self.phi2, dtype=float)
        if not (1 <= self.m <= 4):
            raise ValueError("complex dimension m must be in 1..4")
        if self.s.ndim != 1 or len(self.s) < 16:
            raise ValueError("grid too coarse")
        ds = np.diff(self.s)
        if not np.allclose(ds, ds[0], rtol=1e-12, atol=1e-12):
            raise ValueError("s-grid must be uniform")
        if self.phi1.shape != self.s.shape or self.phi2.shape != self.s.shape:
            raise ValueError("profile arrays must match the grid")
        if self.origin[0] <= 0.0 or not np.isfinite(self.origin[0]):
            raise ValueError("phi'(0) must be finite and positive")
        if np.any(self.phi1 <= 0.0) or np.any(self.b <= 0.0):
            raise ValueError("metric positivity violated: need phi' > 0 and phi' + rho phi'' > 0")

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def a(self) -> np.ndarray:
        """Spherical metric eigenvalue phi'(rho)."""
        return self.phi1

    @property
    def b(self) -> np.ndarray:
        """Radial metric eigenvalue phi' + rho phi''."""
        return self.phi1 + self.rho * self.phi2

    def b_callable(self):
        """Radial eigenvalue as a function of rho (closed form if available)."""
        if "g_radial" in self.closed_form:
            return self.closed_form["g_radial"]
        spline = CubicSpline(self.s, self.b)
        # phi' ~ p0 + p1 rho and phi'' ~ p1 near 0, so b = phi' + rho phi'' ~ p0 + 2 p1 rho
        b0, b1 = self.origin[0], 2.0 * self.origin[1]
        rho_min = float(np.exp(self.s[0]))

        def b_of_rho(rho):
            rho = np.asarray(rho, dtype=float)
            out = np.where(rho < rho_min,
                           b0 + b1 * rho,
                           spline(np.log(np.maximum(rho, rho_min))))
            return out if out.ndim else float(out)

        return b_of_rho


@dataclass
class CurvatureProfile:
    """Radial curvature data of a metric, in the spherical/radial eigenbasis."""

    ricci_radial: np.ndarray
    ricci_spherical: np.ndarray
    scalar: np.ndarray
    scalar_origin: float
    bisectional: dict
    bisectional_min: float | None


@dataclass
class SolitonSpec:
    """Self-similar solution descriptor built by the soliton constructor."""

    kind: str                      # 'expanding' | 'steady' | 'trivial-flat'
    potential_f: np.ndarray        # radial samples of the soliton potential f(rho)
    reference_time: float | None   # t0 for expanding solitons
    vector_coefficient: float      # V^z = c * z on the fixture family
    shape: float
    residual_sup: float


@dataclass
class DistanceField:
    """Distance from a center and the complex Hessian of d^2 along the grid."""

    center: str              # 'origin' for radial metrics, repr of y for flat
    d: np.ndarray
    hess_radial: np.ndarray
    hess_spherical: np.ndarray


# ---------------------------------------------------------------------------
# constructors


def metric_flat(m: int, s: np.ndarray | None = None) -> RadialKahlerMetric:
    """Flat metric on C^m: phi' = 1, phi'' = 0; curvature identically zero."""
    if not (1 <= m <= 4):
        raise ValueError("m must be in 1..4")
    s = make_s_grid() if s is None else np.asarray(s, dtype=float)
    one = np.ones_like(s)
    cf = {
        "g_radial": lambda rho: np.ones_like(np.asarray(rho, dtype=float)),
        "scalar": lambda rho, t=0.0: np.zeros_like(np.asarray(rho, dtype=float)),
        "flat": True,
    }
    return RadialKahlerMetric(m, s, one, np.zeros_like(s), (1.0, 0.0), "exact", cf)


_CIGAR_SERIES_CUT = 0.05
_CIGAR_TERMS = 18


def _cigar_phi1(rho):
    # phi'(rho) = log(1+rho)/rho; alternating series below the cut avoids the
    # 0/0 cancellation without leaving a kink for the differentiation stencils
    rho = np.asarray(rho, dtype=float)
    small = rho < _CIGAR_SERIES_CUT
    out = np.empty_like(rho)
    r = rho[~small]
    out[~small] = np.log1p(r) / r
    rs = rho[small]
    acc = np.zeros_like(rs)
    for k in range(_CIGAR_TERMS, -1, -1):
        acc = acc * (-rs) + 1.0 / (k + 1.0)
    out[small] = acc
    return out


def _cigar_phi2(rho):
    # phi''(rho) = (rho/(1+rho) - log(1+rho))/rho^2
    rho = np.asarray(rho, dtype=float)
    small = rho < _CIGAR_SERIES_CUT
    out = np.empty_like(rho)
    r = rho[~small]
    out[~small] = (r / (1.0 + r) - np.log1p(r)) / r**2
    rs = rho[small]
    # phi'' = sum_{k>=1} (-1)^k k/(k+1) rho^(k-1), assembled by Horner
    acc = np.zeros_like(rs)
    for k in range(_CIGAR_TERMS, 0, -1):
        coeff = ((-1.0) ** k) * k / (k + 1.0)
        acc = acc * rs + coeff
    out[small] = acc
    return out


def metric_cigar(s: np.ndarray | None = None) -> RadialKahlerMetric:
    """The m=1 steady-soliton fixture g_{z z-bar} = 1/(1+rho).

    Closed forms of the evolved profile g(rho, t) = 1/(e^t + rho) and its
    curvature ride along for oracle use.
    """
    s = make_s_grid() if s is None else np.asarray(s, dtype=float)
    rho = np.exp(s)
    cf = {
        "g_radial": lambda r, t=0.0: 1.0 / (np.exp(t) + np.asarray(r, dtype=float)),
        "scalar": lambda r, t=0.0: np.exp(t) / (np.exp(t) + np.asarray(r, dtype=float)),
        "ricci": lambda r, t=0.0: np.exp(t) / (np.exp(t) + np.asarray(r, dtype=float)) ** 2,
        "scalar_t": lambda r, t=0.0: np.exp(t) * np.asarray(r, dtype=float)
        / (np.exp(t) + np.asarray(r, dtype=float)) ** 2,
        "scalar_drho": lambda r, t=0.0: -np.exp(t) / (np.exp(t) + np.asarray(r, dtype=float)) ** 2,
        "ricci_drho": lambda r, t=0.0: -2.0 * np.exp(t) / (np.exp(t) + np.asarray(r, dtype=float)) ** 3,
        "lap_cov_ricci": lambda r, t=0.0: -np.exp(t) * (np.exp(t) - np.asarray(r, dtype=float))
        / (np.exp(t) + np.asarray(r, dtype=float)) ** 3,
        "soliton_vector_coefficient": 1.0,  # V^z = z
    }
    return RadialKahlerMetric(1, s, _cigar_phi1(rho), _cigar_phi2(rho), (1.0, -0.5), "exact", cf)


def metric_constant_curvature(s: np.ndarray | None = None) -> RadialKahlerMetric:
    """The m=1 sanity fixture g_{z z-bar} = 1/(1+rho)^2 with scalar R = 2."""
    s = make_s_grid() if s is None else np.asarray(s, dtype=float)
    rho = np.exp(s)
    phi1 = 1.0 / (1.0 + rho)
    phi2 = -1.0 / (1.0 + rho) ** 2
    cf = {
        "g_radial": lambda r: 1.0 / (1.0 + np.asarray(r, dtype=float)) ** 2,
        "scalar": lambda r: 2.0 * np.ones_like(np.asarray(r, dtype=float)),
        "ricci": lambda r: 2.0 / (1.0 + np.asarray(r, dtype=float)) ** 2,
    }
    return RadialKahlerMetric(1, s, phi1, phi2, (1.0, -1.0), "exact", cf)


def metric_from_radial_g(s: np.ndarray, g: np.ndarray,
                         origin_g: float | None = None,
                         origin_dg: float | None = None) -> RadialKahlerMetric:
    """m = 1 metric from samples of g_{z z-bar}(rho) on the s-grid.

    phi' is reconstructed from the antiderivative identity
    rho phi'(rho) = integral_0^rho g, so the profile is tagged "derived":
    curvature evaluation differentiates log(g) directly instead of trusting
    the reconstructed phi''.
    """
    s = np.asarray(s, dtype=float)
    g = np.asarray(g, dtype=float)
    rho = np.exp(s)
    spline = CubicSpline(s, g * rho)  # integrand of int g drho in s-variable
    anti = spline.antiderivative()
    if origin_g is None:
        origin_g = float(g[0])
    if origin_dg is None:
        # one-sided slope in rho off the first grid nodes
        origin_dg = float((g[1] - g[0]) / (rho[1] - rho[0]))
    # int_0^rho g = series part on [0, rho_min] + spline part
    head = origin_g * rho[0] + 0.5 * origin_dg * rho[0] ** 2
    integral = head + (anti(s) - anti(s[0]))
    phi1 = integral / rho
    phi2 = (g - phi1) / rho
    return RadialKahlerMetric(
        1, s, phi1, phi2, (origin_g, 0.5 * origin_dg), "derived",
        {"g_samples": g},
    )


# ---------------------------------------------------------------------------
# curvature


def _sderiv(values: np.ndarray, ds: float, deriv: int, order: int = 8) -> np.ndarray:
    return derivative_matrix(len(values), ds, deriv, order) @ values


def curvature(metric: RadialKahlerMetric, order: int = 8) -> CurvatureProfile:
    """Ricci eigencomponents, scalar curvature and bisectional minimum.

    The log-determinant G = log det(g) is assembled pointwise from the stored
    profiles and differentiated on the s-grid (high-order stencils), using
    the identities

        ric_spherical = -e^{-s} G_s,   ric_radial = -e^{-s} (G_s)_s.

    Near the origin this is well conditioned because G and its s-derivatives
    vanish like rho for normalized profiles; the accuracy degrades with the
    inverse metric factor where g has decayed (documented in the tests).
    """
    if metric.closed_form.get("flat"):
        z = np.zeros_like(metric.s)
        bis = {"rr": z, "rs": z, "ss": z} if metric.m >= 2 else {"rr": z}
        return CurvatureProfile(z, z, z, 0.0, bis, 0.0)

    rho = metric.rho
    ds = metric.ds
    a = metric.a
    b = metric.b
    m = metric.m

    if metric.quality == "exact":
        # pointwise d/drho log det g from the stored profiles; only phi'''
        # needs a differentiation, and it enters multiplied by rho
        phi3 = np.exp(-metric.s) * _sderiv(metric.phi2, ds, 1, order)
        bprime = 2.0 * metric.phi2 + rho * phi3
        gp = (m - 1) * metric.phi2 / a + bprime / b
    else:
        if m != 1:
            raise ValueError("derived-profile curvature implemented for m = 1 only")
        gp = np.exp(-metric.s) * _sderiv(np.log(b), ds, 1, order)
    ric_sph = -gp
    ric_rad = -(gp + _sderiv(gp, ds, 1, order))   # rho G'' = d(G')/ds
    scalar = (m - 1) * ric_sph / a + ric_rad / b

    p1_0, p2_0 = metric.origin
    scalar_origin = -m * (m + 1) * p2_0 / p1_0**2

    bis = {}
    bis_min: float | None = None
    if m <= 2:
        if m == 1:
            bis = {"rr": scalar}
            bis_min = float(scalar.min())
        else:
            # distinguished components at a point on the radial axis, from the
            # potential profile and its derivatives
            B = metric.phi2
            Bp = _sderiv(B, ds, 1, order) / rho           # phi'''
            bprime = 2.0 * B + rho * Bp
            rho_bpp = _sderiv(bprime, ds, 1, order)       # rho * b''
            r_1111 = -(bprime + rho_bpp) + rho * bprime**2 / b
            r_1122 = -(B + rho * Bp) + rho * B**2 / a
            r_2222 = -2.0 * B
            bis = {
                "rr": r_1111 / b**2,
                "rs": r_1122 / (a * b),
                "ss": r_2222 / a**2,
            }
            bis_min = float(min(v.min() for v in bis.values()))
    return CurvatureProfile(ric_rad, ric_sph, scalar, scalar_origin, bis, bis_min)


def bisectional_min(metric: RadialKahlerMetric) -> float:
    """Grid minimum over the distinguished bisectional components (m <= 2)."""
    if metric.m > 2 and not metric.closed_form.get("flat"):
        raise ValueError("bisectional machinery implemented for m <= 2 only")
    prof = curvature(metric)
    assert prof.bisectional_min is not None
    return prof.bisectional_min


# ---------------------------------------------------------------------------
# distance comparison (Hessian of d^2 against the metric)


def distance_from_origin(metric: RadialKahlerMetric, rho):
    """Geodesic distance from the origin by radial arclength integration."""
    b = metric.b_callable()
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.empty_like(rho_arr)
    for i, r in enumerate(rho_arr):
        u = np.sqrt(r)
        val, _ = quad(lambda v: np.sqrt(b(v * v)), 0.0, u, limit=200, epsabs=1e-12, epsrel=1e-12)
        out[i] = val
    return out if np.ndim(rho) else float(out[0])


def _dsq_hessian_components(metric: RadialKahlerMetric, rho: np.ndarray):
    """Eigencomponents of the complex Hessian of d(0, .)^2 at radii rho."""
    b = metric.b_callable()
    spline_b = None
    if "g_radial" not in metric.closed_form:
        spline_b = CubicSpline(metric.s, metric.b)

    def bprime(r):
        if "g_radial" in metric.closed_form:
            eps = 1e-6 * max(r, 1e-6)
            return (b(r + eps) - b(max(r - eps, 0.0))) / (2.0 * eps if r - eps > 0 else (r + eps) - max(r - eps, 0.0))
        return float(spline_b(np.log(r), 1)) / r

    ell = distance_from_origin(metric, rho)
    u = np.sqrt(rho)
    bu = np.asarray([float(b(r)) for r in rho])
    lp = np.sqrt(bu)                       # ell'(u)
    lpp = np.asarray([u_i * bprime(r) / np.sqrt(float(b(r))) for u_i, r in zip(u, rho)])
    h_rad = (ell * lp + u * lp**2 + u * ell * lpp) / (2.0 * u)
    h_sph = ell * lp / u
    return ell, h_rad, h_sph


def distance_field(metric: RadialKahlerMetric) -> DistanceField:
    """Distance from the origin and Hessian components along the whole grid."""
    rho = metric.rho
    ell, h_rad, h_sph = _dsq_hessian_components(metric, rho)
    return DistanceField("origin", ell, h_rad, h_sph)


def hessian_comparison_check(metric: RadialKahlerMetric, y, samples) -> float:
    """Largest eigenvalue of (d_y^2)_{a b-bar} - g_{a b-bar} over the samples.

    For conforming metrics (nonnegative bisectional curvature) the result is
    <= 0 up to quadrature error.  Curved radial metrics support y = origin
    only; the flat metric supports any center, where the comparison is an
    exact equality.
    """
    if metric.closed_form.get("flat"):
        return 0.0
    if metric.m > 2:
        raise ValueError("comparison check implemented for m <= 2")
    if bisectional_min(metric) < -1e-8:
        raise ValueError("metric violates the nonnegative-bisectional hypothesis")
    if not (y is None or (np.isscalar(y) and float(y) == 0.0) or str(y) == "origin"):
        raise ValueError("curved radial metrics support the origin center only")
    rho = np.asarray(samples, dtype=float)
    if np.any(rho < np.exp(metric.s[0])):
        raise ValueError("samples must avoid the center by at least the grid spacing")
    _, h_rad, h_sph = _dsq_hessian_components(metric, rho)
    b = np.asarray([float(metric.b_callable()(r)) for r in rho])
    viol = h_rad - b
    if metric.m >= 2:
        a_spline = CubicSpline(metric.s, metric.a)
        a_vals = a_spline(np.log(rho))
        viol = np.maximum(viol, h_sph - a_vals)
    return float(viol.max())


# ---------------------------------------------------------------------------
# exponential-map Jacobian identity (flat case)


def jacobian_identity_check(v, x, grad_v=None, step: float = 1e-5):
    """Compare the Jacobian determinant of x -> x + grad v(x) with a Hessian.

    Both sides are finite-differenced independently: the left from the map
    itself, the right as |det D^2(v + d_y^2 / 2)| at x with y the image
    point.  In flat space the two agree for any smooth v with invertible
    differential.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)

    if grad_v is None:
        def grad_v(p, _v=v, _h=step):
            p = np.asarray(p, dtype=float)
            g = np.empty(n)
            for i in range(n):
                e = np.zeros(n)
                e[i] = _h
                g[i] = (_v(p + e) - _v(p - e)) / (2.0 * _h)
            return g

    def phi(p):
        return np.asarray(p, dtype=float) + grad_v(p)

    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        jac[:, j] = (phi(x + e) - phi(x - e)) / (2.0 * step)
    lhs = float(np.linalg.det(jac))
    if lhs <= 0.0:
        raise ValueError("map is degenerate at x (nonpositive Jacobian determinant)")

    y = phi(x)

    def u(p):
        d = np.asarray(p, dtype=float) - y
        return v(p) + 0.5 * float(d @ d)

    hess = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n); ei[i] = step
            ej = np.zeros(n); ej[j] = step
            hess[i, j] = (u(x + ei + ej) - u(x + ei - ej) - u(x - ei + ej) + u(x - ei - ej)) / (4.0 * step**2)
    rhs = float(abs(np.linalg.det(0.5 * (hess + hess.T))))
    return {"lhs": lhs, "rhs": rhs}


# ---------------------------------------------------------------------------
# expanding soliton construction (m = 1)


_SOLITON_SERIES_CUT = 1e-2
_SOLITON_SERIES_ORDER = 12


def _soliton_series(t0: float, c: float, order: int = _SOLITON_SERIES_ORDER):
    """Origin power-series coefficients of the soliton profile.

    With w = log g = sum_k w_k rho^k the profile equation
    w_ss = e^(s+w) (1/t0 - c (1 + w_s)) turns into the recursion

        k^2 w_k = sum_{i+j=k-1} P_i T_j,

    with P the exponential series of w and T_0 = 1/t0 - c, T_j = -c j w_j.
    Returns (w_k, P_k) with P the series of g itself.
    """
    w = np.zeros(order + 1)
    P = np.zeros(order + 1)
    P[0] = 1.0
    T0 = 1.0 / t0 - c
    for k in range(1, order + 1):
        acc = 0.0
        for i in range(k):
            j = k - 1 - i
            Tj = T0 if j == 0 else -c * j * w[j]
            acc += P[i] * Tj
        w[k] = acc / k**2
        # Bell-type recursion for P = exp(w)
        P[k] = sum(j * w[j] * P[k - j] for j in range(1, k + 1)) / k
    return w, P


def _poly_eval(coeffs: np.ndarray, rho: np.ndarray, kmin: int = 0) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in range(len(coeffs) - 1, kmin - 1, -1):
        out = out * rho + coeffs[k]
    return out * rho**kmin if kmin else out


def expanding_soliton_construct(m: int, t0: float, shape: float,
                                s: np.ndarray | None = None):
    """Construct a radial expanding self-similar solution at reference time t0.

    The one-parameter family is pinned at the origin: with w = log g and
    c = (1 + shape)/t0 the profile solves

        w_ss = e^(s + w) * (1/t0 - c * (1 + w_s)),   g(0) = 1,

    so g'(0) = -shape/t0 and curvature is nonnegative for shape >= 0.  The
    potential f with f'(rho) = c g(rho) then satisfies the self-similar
    identity f_{z z-bar} = Ric + g/t0, its pure second covariant derivative
    vanishes identically, and the gradient field is V^z = c z.  shape = 0
    returns the flat fixture with f = rho/t0.

    The grid below rho = 1e-2 is filled from the recursive origin series;
    outward of that the profile is integrated as an ODE with tight
    tolerances, and the reported residual re-evaluates the identity
    independently by differencing the integrated slope array.
    """
    if m != 1:
        raise ValueError("soliton construction implemented for m = 1")
    if t0 <= 0.0:
        raise ValueError("t0 must be positive")
    if shape < 0.0:
        raise ValueError("shape must be >= 0 (decaying, nonnegatively curved family)")
    s = make_s_grid() if s is None else np.asarray(s, dtype=float)
    rho = np.exp(s)
    c = (1.0 + shape) / t0

    if shape == 0.0:
        metric = metric_flat(1, s)
        f = rho / t0
        metric.closed_form["soliton_vector_coefficient"] = 1.0 / t0
        spec = SolitonSpec("trivial-flat", f, t0, 1.0 / t0, 0.0, 0.0)
        return metric, spec

    wk, Pk = _soliton_series(t0, c)
    cut = _SOLITON_SERIES_CUT
    inner = rho <= cut
    n_inner = int(inner.sum())
    if n_inner < 1 or n_inner >= len(s) - 16:
        raise ValueError("grid must straddle the series cut at rho = 1e-2")

    w = np.empty_like(s)
    ws = np.empty_like(s)
    F = np.empty_like(s)  # integral of g from 0 to rho
    r_in = rho[inner]
    w[inner] = _poly_eval(wk[1:], r_in, kmin=0) * r_in
    ws[inner] = _poly_eval(np.arange(len(wk)) * wk, r_in, kmin=0)
    F_coeffs = Pk / (np.arange(len(Pk)) + 1.0)
    F[inner] = _poly_eval(F_coeffs, r_in, kmin=0) * r_in

    s_start = float(np.log(r_in[-1]))
    y0 = [w[inner][-1], ws[inner][-1], F[inner][-1]]

    def rhs(si, y):
        wi, wsi, _ = y
        coeff = np.exp(si + wi)
        return [wsi, coeff * (1.0 / t0 - c * (1.0 + wsi)), np.exp(si + wi)]

    sol = solve_ivp(rhs, (s_start, s[-1]), y0, t_eval=s[~inner], method="DOP853",
                    rtol=1e-13, atol=1e-15)
    if not sol.success:
        raise RuntimeError(f"soliton profile integration failed: {sol.message}")
    w[~inner], ws[~inner], F[~inner] = sol.y

    g = np.exp(w)
    phi1 = F / rho
    phi2 = (g - phi1) / rho
    phi2_series = _poly_eval(Pk[1:] * (np.arange(1, len(Pk)) / np.arange(2, len(Pk) + 1)), r_in)
    phi2[inner] = phi2_series
    g1 = -shape / t0
    metric = RadialKahlerMetric(1, s, phi1, phi2, (1.0, 0.5 * g1), "exact",
                                {"soliton_vector_coefficient": c,
                                 "soliton_shape": shape, "soliton_t0": t0})

    # independent residual of f_{z z-bar} = Ric + g/t0: Ricci is re-derived by
    # differencing the slope array, evaluated where that stencil is clear of
    # the series seam; inside the series region the defect is bounded by the
    # truncated tail.
    ds = float(s[1] - s[0])
    ric = -np.exp(-s) * _sderiv(ws, ds, 1)
    f_hess = c * (g + g * ws)
    residual = f_hess - ric - g / t0
    clear = rho >= 2.0 * cut
    tail = abs(wk[-1]) * cut ** (_SOLITON_SERIES_ORDER - 2)
    resid_sup = max(float(np.abs(residual[clear]).max()), tail)
    f = c * F
    spec = SolitonSpec("expanding", f, t0, c, shape, resid_sup)
    return metric, spec


# ---------------------------------------------------------------------------
# serialization


def metric_to_dict(metric: RadialKahlerMetric) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "convention": CONVENTION_TAG,
        "m": metric.m,
        "s": metric.s.tolist(),
        "phi1": metric.phi1.tolist(),
        "phi2": metric.phi2.tolist(),
        "origin": list(metric.origin),
        "quality": metric.quality,
    }


def metric_from_dict(data: dict) -> RadialKahlerMetric:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("unsupported schema version")
    return RadialKahlerMetric(
        int(data["m"]),
        np.asarray(data["s"], dtype=float),
        np.asarray(data["phi1"], dtype=float),
        np.asarray(data["phi2"], dtype=float),
        (float(data["origin"][0]), float(data["origin"][1])),
        data.get("quality", "exact"),
    )


def metric_to_json(metric: RadialKahlerMetric) -> str:
    return json.dumps(metric_to_dict(metric), sort_keys=True)
