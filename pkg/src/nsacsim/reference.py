"""Closed-form solutions of the mobility-modified sharp-interface flow.

The interface law is V = n . v + m H with n the interior normal of the plus
phase and H = (d-1)/R for a circle in d dimensions.  With v identically zero
(or a constant drift U on a periodic box) the momentum balance is satisfied by
a piecewise-constant pressure whose jump across the interface equals
sigma * H, so circles shrinking by R(t) = sqrt(R0^2 - 2 (d-1) m t), i.e.
R(t) = sqrt(R0^2 - 2 m t) in 2D, are exact solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Circle, Line, InterfaceState


class WindowError(ValueError):
    """Time outside the feasibility window of a closed-form solution."""


@dataclass(frozen=True)
class SharpSolution:
    sigma: float
    dim: int = 2

    def velocity(self, x, t):
        raise NotImplementedError

    def pressure(self, x, t):
        raise NotImplementedError

    def interface(self, t) -> InterfaceState:
        raise NotImplementedError


@dataclass(frozen=True)
class ShrinkingCircle(SharpSolution):
    center: tuple[float, float] = (0.5, 0.5)
    r0: float = 0.25
    m: float = 0.0

    def radius(self, t) -> float:
        rr = self.r0**2 - 2.0 * (self.dim - 1) * self.m * t
        if np.any(np.asarray(rr) <= 0.0):
            raise WindowError(f"circle collapsed before t={t}")
        return float(np.sqrt(rr))

    def radius_rate(self, t) -> float:
        return -(self.dim - 1) * self.m / self.radius(t)

    def embedded_until(self, delta: float) -> float:
        """Largest t with R(t) > 2*delta (infinite when m = 0)."""
        if self.m == 0.0:
            return np.inf if self.r0 > 2 * delta else 0.0
        return (self.r0**2 - 4 * delta**2) / (2.0 * (self.dim - 1) * self.m)

    def drift(self, t):
        return np.zeros(2)

    def interface(self, t) -> Circle:
        return Circle(self.center, self.radius(t))

    def velocity(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape)

    def pressure(self, x, t):
        R = self.radius(t)
        d = self.interface(t).signed_distance(np.asarray(x, dtype=float))
        jump = self.sigma * (self.dim - 1) / R
        return np.where(d > 0.0, jump, 0.0)


@dataclass(frozen=True)
class TranslatingCircle(ShrinkingCircle):
    """Galilean boost of the shrinking circle on a periodic box: v = U everywhere."""

    U: tuple[float, float] = (0.0, 0.0)

    def drift(self, t):
        return np.asarray(self.U, dtype=float)

    def interface(self, t) -> Circle:
        c = np.asarray(self.center) + np.asarray(self.U) * t
        return Circle((float(c[0]), float(c[1])), self.radius(t))

    def velocity(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.U, dtype=float), x.shape).copy()


@dataclass(frozen=True)
class StaticLine(SharpSolution):
    offset: float = 0.5
    normal_vec: tuple[float, float] = (0.0, 1.0)

    def interface(self, t) -> Line:
        return Line(self.offset, self.normal_vec)

    def velocity(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape)

    def pressure(self, x, t):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])


def radius(sol: ShrinkingCircle, t) -> float:
    return sol.radius(t)


def sharp_velocity(sol: SharpSolution, x, t):
    return sol.velocity(x, t)


def sharp_pressure(sol: SharpSolution, x, t):
    return sol.pressure(x, t)


def as_interface_state(sol: SharpSolution, t) -> InterfaceState:
    return sol.interface(t)


def motion_law_residual(sol: SharpSolution, t, sample_count: int = 64) -> float:
    """max over sampled interface points of |V - n.v - m H| from the closed forms."""
    iface = sol.interface(t)
    if isinstance(iface, Line):
        # static line: V = 0, v = 0, H = 0
        return 0.0
    theta = np.linspace(0.0, 2 * np.pi, sample_count, endpoint=False)
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    pts = np.asarray(iface.center) + iface.radius * e
    n = iface.normal(pts)
    H = iface.curvature(pts)
    v = sol.velocity(pts, t)
    # V from the time derivative of the signed distance: V = -dt d = -(Rdot + e.cdot)
    rdot = sol.radius_rate(t)
    cdot = sol.drift(t)
    V = -rdot - e @ cdot
    res = np.abs(V - np.sum(n * v, axis=-1) - getattr(sol, "m", 0.0) * H)
    return float(np.max(res))
