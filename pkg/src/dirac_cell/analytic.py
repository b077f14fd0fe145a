"""Closed-form references: exponential integral, free-space point-source
solution, Neumann heat kernel on the square, its time-integrated series, and
summability / singularity diagnostics.

The square-domain series are normalized to the domain (0, pi)^2 with unit
diffusion and a unit-strength source; callers handle any affine rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TruncationError
from .geometry import as_xy

EULER_MASCHERONI = 0.5772156649015329

_SERIES_CUTOFF = 1.0
_CF_MAX_ITER = 400
_PI2 = math.pi * math.pi


def _e1_series(x: float) -> float:
    total = -EULER_MASCHERONI - math.log(x)
    power = 1.0
    factorial = 1.0
    for k in range(1, 80):
        power *= -x
        factorial *= k
        term = -power / (k * factorial)
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-30):
            break
    return total


def _e1_continued_fraction(x: float) -> float:
    # modified Lentz on E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for j in range(1, _CF_MAX_ITER + 1):
        a = 1.0 if j == 1 else -float((j - 1) ** 2)
        b = x + 2.0 * j - 1.0
        d = b + a * d
        if d == 0.0:
            d = tiny
        c = b + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x) * f


def exp_integral_e1(x: float) -> float:
    """E1(x) = integral of exp(-x*s)/s over s in (1, inf), for x > 0.

    Power series at or below x = 1, modified Lentz continued fraction above;
    both branches agree to ~1e-13 relative accuracy where they overlap.
    """
    if not x > 0:
        raise ParameterError(f"E1 requires a positive argument, got {x}")
    return _e1_series(x) if x <= _SERIES_CUTOFF else _e1_continued_fraction(x)


def freespace_solution(p, t: float) -> float:
    """Concentration at p of a unit point source at the origin switched on at t=0.

    Equals E1(|p|^2 / (4t)) / (4 pi); diverges logarithmically at the origin.
    """
    x, y = as_xy(p)
    if not t > 0:
        raise ParameterError(f"time must be positive, got {t}")
    r2 = x * x + y * y
    if r2 == 0.0:
        raise ParameterError("the free-space solution is singular at the source point")
    return exp_integral_e1(r2 / (4.0 * t)) / (4.0 * math.pi)


def freespace_radial_gradient(r: float, t: float) -> float:
    """d/dr of the free-space solution: -exp(-r^2/(4t)) / (2 pi r)."""
    if not (r > 0 and t > 0):
        raise ParameterError("radius and time must be positive")
    return -math.exp(-r * r / (4.0 * t)) / (2.0 * math.pi * r)


def _mode_order(t: float, tol: float, m_cap: int) -> int:
    """Smallest M with the dropped cosine-mode tail below tol.

    Tail bound: sum_{m>M} 2 e^{-m^2 t} / pi^2 <= 2/pi^2 * e^{-(M+1)^2 t}
    / (1 - e^{-(2M+3) t}).
    """
    for m in range(1, m_cap + 1):
        ratio = math.exp(-(2 * m + 3) * t)
        if ratio >= 1.0:
            continue
        bound = 2.0 / _PI2 * math.exp(-((m + 1) ** 2) * t) / (1.0 - ratio)
        if bound < tol:
            return m
    raise TruncationError(
        f"cannot meet tail tolerance {tol:g} at time {t:g} within {m_cap} modes")


def _kernel_1d(x: float, x0: float, t: float, order: int) -> float:
    m = np.arange(1, order + 1)
    return 1.0 / math.pi + (2.0 / math.pi) * float(
        (np.exp(-m * m * t) * np.cos(m * x) * np.cos(m * x0)).sum())


def neumann_heat_kernel(p, p0, t: float, tol: float = 1e-14, m_cap: int = 20000) -> float:
    """Heat kernel on (0, pi)^2 with no-flux walls, via its cosine expansion.

    Symmetric in its two point arguments; integrates to one over the square.
    """
    if not t > 0:
        raise ParameterError(f"time must be positive, got {t}")
    x, y = as_xy(p)
    x0, y0 = as_xy(p0)
    for v in (x, y, x0, y0):
        if not -1e-12 <= v <= math.pi + 1e-12:
            raise ParameterError(f"coordinate {v} outside [0, pi]")
    order = _mode_order(t, tol, m_cap)
    return _kernel_1d(x, x0, t, order) * _kernel_1d(y, y0, t, order)


def series_truncation_order(tol: float, m_cap: int = 3000) -> int:
    """Truncation order for the time-integrated source series.

    The dropped modes have coefficients bounded by 4 / (pi^2 (m^2 + n^2)),
    and the corresponding L2 tail is below 1/(sqrt(pi) * M); solve that for M.
    """
    if not tol > 0:
        raise ParameterError("tolerance must be positive")
    m = math.ceil(1.0 / (math.sqrt(math.pi) * tol))
    if m > m_cap:
        raise TruncationError(
            f"tolerance {tol:g} needs {m} modes, above the cap {m_cap}")
    return max(8, m)


def series_point_solution_batch(points: np.ndarray, t: float, source,
                                order: int, block: int = 4096) -> np.ndarray:
    """Source series evaluated at many points; see series_point_solution."""
    if not t > 0:
        raise ParameterError(f"time must be positive, got {t}")
    xi, eta = as_xy(source)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    m = np.arange(1, order + 1, dtype=float)
    decay_m = (1.0 - np.exp(-m * m * t)) / (m * m)          # (M,)
    lam = m[:, None] ** 2 + m[None, :] ** 2
    coeff = (4.0 / _PI2) * (1.0 - np.exp(-lam * t)) / lam   # (M, M)
    cos_xi = np.cos(m * xi)
    cos_eta = np.cos(m * eta)

    out = np.empty(len(points))
    for lo in range(0, len(points), block):
        chunk = points[lo:lo + block]
        cx = np.cos(np.outer(m, chunk[:, 0])) * cos_xi[:, None]   # (M, q)
        cy = np.cos(np.outer(m, chunk[:, 1])) * cos_eta[:, None]
        single = (2.0 / _PI2) * (decay_m @ (cx + cy))
        double = np.einsum("mq,mq->q", cx, coeff @ cy)
        out[lo:lo + block] = t / _PI2 + single + double
    return out


def series_point_solution(p, t: float, source, tol: float = 1e-6,
                          m_cap: int = 3000) -> float:
    """Solution on (0, pi)^2 for a unit source at ``source``, secretion only,
    zero initial data, evaluated away from the source point.

    Truncation order follows from ``tol`` through the inverse-frequency
    comparison tail (an L2-type bound; pointwise accuracy additionally
    improves with distance from the source).
    """
    x, y = as_xy(p)
    xi, eta = as_xy(source)
    if x == xi and y == eta:
        raise ParameterError("the series solution is singular at the source point")
    order = series_truncation_order(tol, m_cap)
    return float(series_point_solution_batch(np.array([[x, y]]), t, source, order)[0])


def _gauss_log_radial(f, r_lo: float, r_hi: float, nodes: int = 24) -> float:
    """Integral of f(r) * r dr on [r_lo, r_hi] via Gauss panels in log r."""
    u_lo, u_hi = math.log(r_lo), math.log(r_hi)
    n_panels = max(1, math.ceil((u_hi - u_lo) / 0.5))
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for k in range(n_panels):
        a = u_lo + (u_hi - u_lo) * k / n_panels
        b = u_lo + (u_hi - u_lo) * (k + 1) / n_panels
        u = 0.5 * (b - a) * xs + 0.5 * (a + b)
        r = np.exp(u)
        vals = np.array([f(float(ri)) for ri in r])
        total += 0.5 * (b - a) * float((ws * vals * r * r).sum())
    return total


@dataclass(frozen=True)
class SingularityProfile:
    radii: np.ndarray
    h1_semi_sq: np.ndarray   # gradient energy outside each radius
    l2_sq: np.ndarray        # squared L2 norm outside each radius
    slope: float             # of h1_semi_sq against log(1/r)
    intercept: float
    r_squared: float


def singularity_profile(t: float, radii, n_theta: int = 512,
                        outer_radius: float | None = None) -> SingularityProfile:
    """Annular norms of the free-space point-source solution.

    For each radius r, integrates |grad u|^2 and u^2 over the annulus from r
    out to ``outer_radius`` on a polar grid (uniform angles, log-radial Gauss
    panels), then fits gradient energy against log(1/r).  The gradient energy
    grows like log(1/r) with slope 1/(2 pi); the L2 norm stays bounded.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2:
        raise ParameterError("need at least two radii")
    if not (np.diff(radii) < 0).all():
        raise ParameterError("radii must be strictly decreasing")
    if not (radii > 1e-8).all():
        raise ParameterError("radii below the quadrature resolution (1e-8)")
    if not t > 0:
        raise ParameterError(f"time must be positive, got {t}")
    r_out = 4.0 * float(radii[0]) if outer_radius is None else float(outer_radius)
    if r_out <= radii[0]:
        raise ParameterError("outer radius must exceed the largest profile radius")

    theta_weight = 2.0 * math.pi  # integrand is axisymmetric; angle sum collapses
    del n_theta  # retained in the signature for API stability

    def grad_sq(r):
        g = freespace_radial_gradient(r, t)
        return g * g

    def val_sq(r):
        v = exp_integral_e1(r * r / (4.0 * t)) / (4.0 * math.pi)
        return v * v

    bounds = np.concatenate([[r_out], radii])
    h1_sq = np.zeros(len(radii))
    l2_sq = np.zeros(len(radii))
    acc_h1 = 0.0
    acc_l2 = 0.0
    for k in range(len(radii)):
        acc_h1 += theta_weight * _gauss_log_radial(grad_sq, bounds[k + 1], bounds[k])
        acc_l2 += theta_weight * _gauss_log_radial(val_sq, bounds[k + 1], bounds[k])
        h1_sq[k] = acc_h1
        l2_sq[k] = acc_l2

    xs = np.log(1.0 / radii)
    slope, intercept = np.polyfit(xs, h1_sq, 1)
    fitted = slope * xs + intercept
    ss_res = float(((h1_sq - fitted) ** 2).sum())
    ss_tot = float(((h1_sq - h1_sq.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SingularityProfile(radii=radii, h1_semi_sq=h1_sq, l2_sq=l2_sq,
                              slope=float(slope), intercept=float(intercept),
                              r_squared=r2)


@dataclass(frozen=True)
class SummabilityReport:
    quartic_partial: float       # sum of 1/m^4 up to N
    quartic_limit: float         # pi^4 / 90
    double_partial: float        # sum of m^2/(m^2+n^2)^2 over the N x N box
    ladder: tuple[int, ...]
    ladder_values: tuple[float, ...]
    growth_slope: float          # of the double sum against log N
    growth_r_squared: float


def _double_sum(n: int) -> float:
    m = np.arange(1, n + 1, dtype=float)
    total = 0.0
    for lo in range(0, n, 2048):
        mm = m[lo:lo + 2048][:, None]
        total += float((mm * mm / (mm * mm + m[None, :] ** 2) ** 2).sum())
    return total


def summability_diagnostics(n: int) -> SummabilityReport:
    """Partial sums behind the square-summability / divergence dichotomy.

    The quartic sum converges to pi^4/90; the double sum grows like
    (pi/4) log N, which the report quantifies with a least-squares fit over
    a ladder of box sizes up to N.
    """
    if n < 10:
        raise ParameterError(f"need N >= 10, got {n}")
    m = np.arange(1, n + 1, dtype=float)
    quartic = float((1.0 / m ** 4).sum())

    ladder = sorted({max(10, n // 8), max(10, n // 4), max(10, n // 2), n})
    values = [_double_sum(k) for k in ladder]
    if len(ladder) >= 2:
        xs = np.log(np.array(ladder, dtype=float))
        ys = np.array(values)
        slope, intercept = np.polyfit(xs, ys, 1)
        fitted = slope * xs + intercept
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 - float(((ys - fitted) ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    else:
        slope, r2 = math.nan, math.nan
    return SummabilityReport(
        quartic_partial=quartic,
        quartic_limit=math.pi ** 4 / 90.0,
        double_partial=values[-1],
        ladder=tuple(ladder),
        ladder_values=tuple(values),
        growth_slope=float(slope),
        growth_r_squared=float(r2),
    )
