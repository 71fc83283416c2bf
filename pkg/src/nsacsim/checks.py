"""Randomized admissible states and exactness suites shared by CLI and tests."""

from __future__ import annotations

import numpy as np

from . import potential as pot
from .fields import Grid, ScalarField, VectorField
from .reference import (ShrinkingCircle, StaticLine, TranslatingCircle,
                        motion_law_residual)
from .solver import FieldState, project_divergence_free


def smooth_random_scalar(rng: np.random.Generator, grid: Grid,
                         modes: int = 4, amplitude: float = 1.0) -> np.ndarray:
    """Low-frequency random Fourier sum on the periodic box."""
    X, Y = grid.meshgrid()
    out = np.zeros(grid.shape)
    for _ in range(modes):
        kx, ky = rng.integers(-3, 4, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.normal(scale=amplitude / modes)
        out += amp * np.sin(2 * np.pi * (kx * X / grid.Lx + ky * Y / grid.Ly) + phase)
    return out


def random_admissible_state(rng: np.random.Generator, eps: float = 0.04,
                            delta: float = 0.1, n: int = 64):
    """Smooth random phi clipped to [-1, 1] plus a random solenoidal velocity,
    paired with a shrinking-circle reference."""
    grid = Grid(n, n, 1.0, 1.0, "periodic")
    phi = np.clip(smooth_random_scalar(rng, grid, amplitude=1.5), -1.0, 1.0)
    vel = project_divergence_free(VectorField(
        grid,
        smooth_random_scalar(rng, grid, amplitude=0.5),
        smooth_random_scalar(rng, grid, amplitude=0.5)))
    m = float(rng.uniform(0.01, 0.1))
    r0 = float(rng.uniform(0.2, 0.35))
    sol = ShrinkingCircle(sigma=pot.sigma(pot.PotentialSpec()),
                          center=(0.5, 0.5), r0=r0, m=m)
    state = FieldState(0.0, ScalarField(grid, phi), vel,
                       ScalarField(grid, np.zeros(grid.shape)))
    return state, sol


def reference_suite():
    """Motion-law residuals of the closed-form sharp-interface solutions."""
    sig = pot.sigma(pot.PotentialSpec())
    cases = [
        ("shrinking_circle", ShrinkingCircle(sigma=sig, r0=0.5, m=0.01), 1.0),
        ("translating_circle",
         TranslatingCircle(sigma=sig, r0=0.5, m=0.01, U=(1.0, 0.25)), 1.0),
        ("static_line", StaticLine(sigma=sig, offset=0.5), 0.0),
    ]
    out = []
    for name, sol, t in cases:
        out.append((name, max(motion_law_residual(sol, tt) for tt in
                              np.linspace(0.0, t, 5))))
    return out
