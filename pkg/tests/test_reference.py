import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nsacsim import potential as pot
from nsacsim import reference as ref
from nsacsim.geometry import Circle, Line

SIGMA = pot.sigma(pot.PotentialSpec())


def circle(m, r0=0.5, center=(0.0, 0.0)):
    return ref.ShrinkingCircle(sigma=SIGMA, center=center, r0=r0, m=m)


# --- radius law --------------------------------------------------------------

def test_zero_mobility_radius_is_constant():
    sol = circle(0.0)
    for t in (0.0, 0.3, 5.0):
        assert ref.radius(sol, t) == 0.5


def test_radius_against_ode_oracle():
    # Rdot = -m/R integrated numerically, independent of the closed form
    m = 0.01
    sol = circle(m)
    ivp = solve_ivp(lambda t, R: -m / R, (0.0, 1.0), [0.5],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    for t in np.linspace(0.0, 1.0, 11):
        assert ref.radius(sol, t) == pytest.approx(ivp.sol(t)[0], abs=1e-10)
    assert ref.radius(sol, 1.0) == pytest.approx(np.sqrt(0.23), abs=1e-12)


def test_radius_window_error():
    sol = circle(0.1, r0=0.1)
    with pytest.raises(ref.WindowError):
        ref.radius(sol, 1.0)   # past collapse at t = 0.05


def test_mean_value_bound_vs_limit():
    rng = np.random.default_rng(2)
    for _ in range(100):
        m = rng.uniform(0.001, 0.1)
        sol = circle(m)
        t = rng.uniform(0.0, 0.5)
        gap = abs(ref.radius(sol, t) - 0.5)
        assert gap <= m * t / ref.radius(sol, t) + 1e-14


def test_first_order_closeness_ratio_under_m_halving():
    t_end = 0.5
    gaps = [abs(ref.radius(circle(m), t_end) - 0.5) for m in (0.1, 0.05, 0.025)]
    for a, b in zip(gaps, gaps[1:]):
        assert a / b == pytest.approx(2.0, abs=0.2)


# --- velocity / pressure -----------------------------------------------------

def test_static_line_trivial_fields():
    sol = ref.StaticLine(sigma=SIGMA, offset=0.5)
    x = np.array([[0.1, 0.2], [0.9, 0.9]])
    assert np.all(ref.sharp_velocity(sol, x, 0.3) == 0.0)
    assert np.all(ref.sharp_pressure(sol, x, 0.3) == 0.0)
    assert ref.motion_law_residual(sol, 0.0) == 0.0


def test_pressure_jump_young_laplace():
    sol = circle(0.01)
    inside = np.array([0.0, 0.0])
    outside = np.array([0.9, 0.0])
    jump = ref.sharp_pressure(sol, inside, 0.0) - ref.sharp_pressure(sol, outside, 0.0)
    assert jump == pytest.approx(SIGMA / 0.5, abs=1e-14)
    assert jump == pytest.approx(1.885618, abs=1e-6)
    # exterior gauge
    assert ref.sharp_pressure(sol, outside, 0.0) == 0.0


def test_pressure_jump_tracks_shrinking_radius():
    sol = circle(0.05)
    for t in (0.0, 0.5, 1.5):
        R = ref.radius(sol, t)
        jump = (ref.sharp_pressure(sol, np.array(sol.center), t)
                - ref.sharp_pressure(sol, np.array([10.0, 0.0]), t))
        assert jump == pytest.approx(SIGMA / R, rel=1e-13)


def test_translating_circle_galilean():
    sol = ref.TranslatingCircle(sigma=SIGMA, center=(0.0, 0.0), r0=0.5,
                                m=0.01, U=(1.0, 0.25))
    x = np.array([[0.3, -0.2], [2.0, 2.0]])
    v = ref.sharp_velocity(sol, x, 0.7)
    assert np.allclose(v, [1.0, 0.25])
    iface = ref.as_interface_state(sol, 0.7)
    assert np.allclose(iface.center, (0.7, 0.175))
    assert iface.radius == pytest.approx(ref.radius(sol, 0.7))


# --- motion law --------------------------------------------------------------

def test_motion_law_residual_all_kinds():
    cases = [
        circle(0.01),
        circle(0.1, r0=0.4),
        ref.TranslatingCircle(sigma=SIGMA, center=(0.5, 0.5), r0=0.3,
                              m=0.02, U=(0.7, -0.3)),
        ref.StaticLine(sigma=SIGMA, offset=0.25),
    ]
    for sol in cases:
        collapse = sol.r0**2 / (2 * sol.m) if isinstance(sol, ref.ShrinkingCircle) else 1.0
        for frac in (0.0, 0.4, 0.8):
            assert ref.motion_law_residual(sol, frac * collapse) < 1e-12


# --- plumbing ----------------------------------------------------------------

def test_as_interface_state():
    sol = circle(0.01, center=(0.25, 0.75))
    iface = ref.as_interface_state(sol, 0.0)
    assert isinstance(iface, Circle)
    assert iface.center == (0.25, 0.75) and iface.radius == 0.5
    assert isinstance(ref.as_interface_state(
        ref.StaticLine(sigma=SIGMA, offset=0.1), 1.0), Line)


def test_half_collapse_radius():
    m = 0.04
    sol = circle(m, r0=0.5)
    t_half = 0.5**2 / (4 * m)
    assert ref.radius(sol, t_half) == pytest.approx(0.5 / np.sqrt(2), rel=1e-13)


def test_embedding_window():
    delta = 0.1
    sol = circle(0.05, r0=0.5)
    horizon = sol.embedded_until(delta)
    # R(horizon) = 2 delta by construction
    assert ref.radius(sol, horizon) == pytest.approx(2 * delta, rel=1e-12)
    assert horizon == pytest.approx((0.5**2 - 4 * delta**2) / (2 * 0.05), rel=1e-12)
