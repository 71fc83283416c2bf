"""Analytic interfaces (circle, line) and the calibration fields built on them.

Orientation convention: the signed distance d is positive in the "plus" phase
and the unit normal n = grad d points into it.  For a circle the plus phase is
the disk interior; for a line it is the half-plane the normal points into.
All point arguments accept arrays of shape (..., 2) and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularProjectionError(ValueError):
    """Closest-point projection requested at an equidistant degenerate point."""


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.radius - r

    def closest_point(self, x):
        x = np.asarray(x, dtype=float)
        rel = x - np.asarray(self.center)
        r = np.linalg.norm(rel, axis=-1)
        if np.any(r < 1e-12 * self.radius):
            raise SingularProjectionError("projection undefined at the circle center")
        return np.asarray(self.center) + self.radius * rel / r[..., None]

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        rel = x - np.asarray(self.center)
        r = np.linalg.norm(rel, axis=-1)
        if np.any(r < 1e-12 * self.radius):
            raise SingularProjectionError("normal undefined at the circle center")
        return -rel / r[..., None]

    def curvature(self, x, dim: int = 2):
        # -laplacian(d) evaluated at the projected point: (dim-1)/R
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        return np.full(shape, (dim - 1) / self.radius)


@dataclass(frozen=True)
class Line:
    """The line {x : n . x = offset}; d > 0 where n . x > offset."""

    offset: float
    normal_vec: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        n = np.asarray(self.normal_vec, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("line normal must be a unit vector")

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return x @ np.asarray(self.normal_vec) - self.offset

    def closest_point(self, x):
        x = np.asarray(x, dtype=float)
        d = self.signed_distance(x)
        return x - d[..., None] * np.asarray(self.normal_vec)

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.normal_vec), x.shape).copy()

    def curvature(self, x, dim: int = 2):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])


InterfaceState = Circle | Line


def signed_distance(iface: InterfaceState, x):
    return iface.signed_distance(x)


def closest_point(iface: InterfaceState, x):
    return iface.closest_point(x)


def normal_extension(iface: InterfaceState, x):
    return iface.normal(x)


def curvature_extension(iface: InterfaceState, x, dim: int = 2):
    return iface.curvature(x, dim=dim)


# --- cutoff profiles ---------------------------------------------------------

def eta_bar(r):
    """Even cutoff with quadratic decay: (1 - r^2)^2 on [-1, 1], zero outside."""
    r = np.asarray(r, dtype=float)
    inside = np.abs(r) <= 1.0
    return np.where(inside, (1.0 - r * r) ** 2, 0.0)


def eta_tilde(r):
    """Plateau cutoff: 1 on [-1, 1], quintic ramp to 0 on 1 <= |r| <= 2."""
    r = np.abs(np.asarray(r, dtype=float))
    u = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - (6.0 * u**5 - 15.0 * u**4 + 10.0 * u**3)


def _hermite_blend(r):
    # quintic on [0.9, 1] matching value/slope/curvature of r at 0.9 and of 1 at 1
    t = (r - 0.9) / 0.1
    # Hermite data: p(0)=0.9, p'(0)=0.1 (in t units), p''(0)=0; p(1)=1, p'(1)=0, p''(1)=0
    h00 = 1 - 10 * t**3 + 15 * t**4 - 6 * t**5
    h10 = t - 6 * t**3 + 8 * t**4 - 3 * t**5
    h01 = 10 * t**3 - 15 * t**4 + 6 * t**5
    return 0.9 * h00 + 0.1 * h10 + 1.0 * h01


def theta_bar(r):
    """Odd signed ramp: r on [-0.9, 0.9], C^2 blend to +-1 over 0.9 <= |r| <= 1."""
    r = np.asarray(r, dtype=float)
    a = np.abs(r)
    out = np.where(a >= 1.0, 1.0, np.where(a <= 0.9, a, _hermite_blend(np.clip(a, 0.9, 1.0))))
    return np.sign(r) * out


@dataclass(frozen=True)
class CalibrationParams:
    """Tube half-width and mobility entering the calibration fields."""

    delta: float = 0.1
    m: float = 0.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("tube half-width delta must be positive")
        if self.m < 0:
            raise ValueError("mobility must be nonnegative")


def xi_field(iface: InterfaceState, params: CalibrationParams, x):
    """xi = n * eta_bar(d / delta); identically zero outside the delta-tube."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    d = iface.signed_distance(pts)
    w = eta_bar(d / params.delta)
    out = np.zeros(pts.shape)
    mask = w > 0.0
    if np.any(mask):
        out[mask] = iface.normal(pts[mask]) * w[mask, None]
    return out.reshape(x.shape)


def B_field(iface: InterfaceState, params: CalibrationParams, background_velocity, x):
    """B = v + m H n eta_tilde(d / delta); reduces to v outside the 2 delta tube."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    v = np.asarray(background_velocity(pts), dtype=float)
    out = np.array(np.broadcast_to(v, pts.shape), dtype=float)
    if params.m != 0.0:
        d = iface.signed_distance(pts)
        w = eta_tilde(d / params.delta)
        mask = w > 0.0
        if np.any(mask):
            xm = pts[mask]
            out[mask] += (params.m * iface.curvature(xm) * w[mask])[:, None] * iface.normal(xm)
    return out.reshape(x.shape)


def vartheta_field(iface: InterfaceState, params: CalibrationParams, x):
    """Truncated-ramp weight theta_bar(d / delta) in [-1, 1], same sign as d."""
    d = iface.signed_distance(np.asarray(x, dtype=float))
    return theta_bar(d / params.delta)


def calibration_residuals(motion, params: CalibrationParams, background_velocity, x, t,
                          h: float = 1e-4, dt: float = 1e-5, floor: float = 1e-3):
    """Finite-difference check of the transport identities satisfied by the
    extended normal and B inside the tube (where the xi cutoff is inactive,
    these are the identities underlying the calibration estimates; the cutoff
    contributions are exact algebra covered by the xi bound itself).

    ``motion`` maps a time to an InterfaceState (the analytic interface motion);
    spatial derivatives use centered differences with step ``h``, the time
    derivative uses the analytic motion with step ``dt``.  Each residual is
    scaled by its expected decay in the distance, with denominators floored
    to keep ratios finite on the interface itself.
    Returns a dict with keys 'curvature', 'normal_velocity', 'transport_sq',
    'transport_vec'.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    iface = motion(t)
    d = iface.signed_distance(x)

    def xi_at(pts, tt=None):
        return motion(t if tt is None else tt).normal(pts)

    def B_at(pts):
        return B_field(iface, params, background_velocity, pts)

    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    xi0 = xi_at(x)
    xi_xp, xi_xm = xi_at(x + ex), xi_at(x - ex)
    xi_yp, xi_ym = xi_at(x + ey), xi_at(x - ey)
    div_xi = (xi_xp[:, 0] - xi_xm[:, 0] + xi_yp[:, 1] - xi_ym[:, 1]) / (2 * h)
    grad_xi = np.stack([(xi_xp - xi_xm) / (2 * h), (xi_yp - xi_ym) / (2 * h)], axis=1)

    H = iface.curvature(x)
    r_curv = np.abs(div_xi + H)

    B0 = B_at(x)
    v0 = np.asarray(background_velocity(x), dtype=float)
    v0 = np.broadcast_to(v0, x.shape)
    den1 = np.maximum(np.minimum(np.abs(d), 1.0), floor)
    if params.m > 0:
        r_nv = np.abs(np.sum((B0 - v0) / params.m * xi0, axis=-1) + div_xi) / den1
    else:
        r_nv = np.abs(div_xi + H) / den1

    # material derivative of |xi|^2 along B; time derivative from the analytic motion
    sq_p = np.sum(xi_at(x, t + dt) ** 2, axis=-1)
    sq_m = np.sum(xi_at(x, t - dt) ** 2, axis=-1)
    dt_sq = (sq_p - sq_m) / (2 * dt)
    grad_sq_x = (np.sum(xi_xp**2, -1) - np.sum(xi_xm**2, -1)) / (2 * h)
    grad_sq_y = (np.sum(xi_yp**2, -1) - np.sum(xi_ym**2, -1)) / (2 * h)
    adv_sq = B0[:, 0] * grad_sq_x + B0[:, 1] * grad_sq_y
    den2 = np.maximum(np.minimum(d * d, 1.0), floor**2)
    r_sq = np.abs(dt_sq + adv_sq) / den2

    # full vector transport: dt xi + (B.grad) xi + (I - xi ox xi) (grad B)^T xi
    dt_xi = (xi_at(x, t + dt) - xi_at(x, t - dt)) / (2 * dt)
    adv_xi = B0[:, 0, None] * grad_xi[:, 0] + B0[:, 1, None] * grad_xi[:, 1]
    B_xp, B_xm = B_at(x + ex), B_at(x - ex)
    B_yp, B_ym = B_at(x + ey), B_at(x - ey)
    # jacobian J[i,j] = d B_i / d x_j
    J = np.empty(x.shape[:1] + (2, 2))
    J[:, :, 0] = (B_xp - B_xm) / (2 * h)
    J[:, :, 1] = (B_yp - B_ym) / (2 * h)
    Jt_xi = np.einsum("nji,nj->ni", J, xi0)
    proj = Jt_xi - xi0 * np.sum(xi0 * Jt_xi, axis=-1)[:, None]
    r_vec = np.linalg.norm(dt_xi + adv_xi + proj, axis=-1) / den1

    return {
        "curvature": r_curv,
        "normal_velocity": r_nv,
        "transport_sq": r_sq,
        "transport_vec": r_vec,
    }
