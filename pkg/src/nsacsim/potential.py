"""Double-well potential, surface tension constant, and the optimal transition profile.

Everything here is for the quartic family W(s) = c (1 - s^2)^2, which admits
closed forms for psi, sigma and the heteroclinic profile (a scaled tanh).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class PotentialSpec:
    """Quartic double well W(s) = c (1 - s^2)^2 with minima at +-1."""

    c: float = 0.25

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"well coefficient must be positive, got c={self.c}")


def eval_W(spec: PotentialSpec, s):
    """Energy density W(s) = c (1 - s^2)^2."""
    s = np.asarray(s, dtype=float)
    return spec.c * (1.0 - s * s) ** 2


def eval_W_prime(spec: PotentialSpec, s):
    """W'(s) = -4 c s (1 - s^2)."""
    s = np.asarray(s, dtype=float)
    return -4.0 * spec.c * s * (1.0 - s * s)


def eval_W_second(spec: PotentialSpec, s):
    """W''(s) = -4 c (1 - 3 s^2)."""
    s = np.asarray(s, dtype=float)
    return -4.0 * spec.c * (1.0 - 3.0 * s * s)


def max_W_second(spec: PotentialSpec) -> float:
    """max |W''| over [-1, 1]; attained at s = +-1."""
    return 8.0 * spec.c


def eval_psi(spec: PotentialSpec, r):
    """psi(r) = integral_{-1}^{r} sqrt(2 W(s)) ds for r in [-1, 1].

    For the quartic well sqrt(2W(s)) = sqrt(2c) (1 - s^2) on [-1, 1], so the
    integral has the closed form sqrt(2c) (r - r^3/3 + 2/3).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < -1.0 - 1e-12) or np.any(r > 1.0 + 1e-12):
        raise ValueError("psi is only defined on [-1, 1]")
    r = np.clip(r, -1.0, 1.0)
    # grouped so that psi(-1) = 0 exactly in floating point
    return np.sqrt(2.0 * spec.c) * ((r + 1.0) - (r**3 + 1.0) / 3.0)


def sigma(spec: PotentialSpec) -> float:
    """Surface tension sigma = psi(1) = 4 sqrt(2c) / 3."""
    return float(eval_psi(spec, 1.0))


def optimal_profile(spec: PotentialSpec, s):
    """The transition profile solving -theta'' + W'(theta) = 0, theta(0) = 0.

    The first integral theta' = sqrt(2 W(theta)) gives theta(s) = tanh(sqrt(2c) s).
    """
    s = np.asarray(s, dtype=float)
    return np.tanh(np.sqrt(2.0 * spec.c) * s)


def optimal_profile_derivative(spec: PotentialSpec, s):
    """theta'(s) = sqrt(2c) sech^2(sqrt(2c) s)."""
    s = np.asarray(s, dtype=float)
    k = np.sqrt(2.0 * spec.c)
    return k / np.cosh(k * s) ** 2


@dataclass(frozen=True)
class ProfileTable:
    """Tabulated profile with cubic interpolation, clamped to +-1 beyond s_max.

    Used to exercise the tabulated-profile code path; the closed form above is
    the default everywhere else.
    """

    spec: PotentialSpec
    s_max: float = 12.0
    ds: float = 1e-3
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.arange(-self.s_max, self.s_max + self.ds / 2, self.ds)
        vals = optimal_profile(self.spec, s)
        if np.any(np.diff(vals) <= 0):
            raise ValueError("tabulated profile must be strictly increasing")
        if abs(vals[0]) < 1.0 - 1e-6 or abs(vals[-1]) < 1.0 - 1e-6:
            raise ValueError("profile table does not reach +-1 at the ends")
        object.__setattr__(self, "_spline", CubicSpline(s, vals))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self._spline(np.clip(s, -self.s_max, self.s_max))
        return np.where(s >= self.s_max, 1.0, np.where(s <= -self.s_max, -1.0, out))
