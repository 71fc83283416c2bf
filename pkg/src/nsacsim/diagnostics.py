"""Relative-entropy and bulk-error functionals plus interface extraction.

Discretization convention: the gradient of psi(phi) is evaluated through the
chain rule, grad psi := sqrt(2 W(phi)) * grad_h phi, so the Modica-Mortola
decomposition

    eps/2 |grad phi|^2 + W/eps - xi . grad psi
        = 1/2 (sqrt(eps)|grad phi| - sqrt(2W/eps))^2 + (1 - n_eps . xi)|grad psi|

holds exactly at every node.  The agreement of this convention with the
discrete gradient of the composed field psi(phi) is an O(h^2) consistency
statement checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from skimage import measure

from . import potential as pot
from .fields import ScalarField, gradient, integrate_values, laplacian
from .geometry import (CalibrationParams, InterfaceState, SingularProjectionError,
                       vartheta_field, xi_field)
from .reference import SharpSolution
from .solver import FieldState, h_eps_values

FALLBACK_UNIT_VECTOR = np.array([1.0, 0.0])

# delta-dependent coercivity constants, measured over the randomized suite
# (200 seeded states, delta = 0.1, worst ratio 2.72), droplet trajectories
# (worst 0.90) and a deliberately mismatched state (worst 2.00); pinned with
# at least a 2x safety margin over the observed maxima
PINNED_CONSTANTS = {
    "erel_weighted": 6.0,       # weighted tilt/distance bound vs E_interface
    "erel_equip_diff": 2.5,     # |eps|grad phi|^2 - |grad psi|| bound vs E_interface
    "bulk_weighted": 0.6,       # distance-weighted L1 bound vs E_bulk
    "bulk_l1_sq": 2.0,          # squared L1 bound vs E_bulk
}


class EmptyInterfaceError(RuntimeError):
    """No level-set polyline found where one was required."""


@dataclass(frozen=True)
class EntropyParams:
    epsilon: float
    potential: pot.PotentialSpec = pot.PotentialSpec()
    calib: CalibrationParams = CalibrationParams()


@dataclass
class EntropyReport:
    t: float
    E_total: float
    E_velocity: float
    E_interface: float
    E_bulk: float
    tilt_excess: float
    equipartition: float
    equipartition_normal: float
    tangential_energy: float
    psi_L1: float
    velocity_L2: float
    H_eps_L2: float
    quadrature_tol: float

    COLUMNS = ("t", "E_total", "E_velocity", "E_interface", "E_bulk",
               "tilt_excess", "equipartition", "equipartition_normal",
               "tangential_energy", "psi_L1", "velocity_L2", "H_eps_L2",
               "quadrature_tol")

    def as_dict(self):
        return asdict(self)


def n_eps(grad, fallback=FALLBACK_UNIT_VECTOR):
    """Unit vector grad/|grad|, or the fixed fallback where the gradient vanishes."""
    grad = np.asarray(grad, dtype=float)
    mag = np.linalg.norm(grad, axis=-1)
    safe = np.where(mag > 1e-14, mag, 1.0)
    out = grad / safe[..., None]
    out = np.where((mag > 1e-14)[..., None], out, np.asarray(fallback))
    return out


def _safe_normals(iface: InterfaceState, pts):
    """Extended unit normals, falling back to a fixed direction at medial-axis
    points where the closest-point projection is singular."""
    try:
        return iface.normal(pts)
    except SingularProjectionError:
        out = np.empty(pts.shape)
        flat = pts.reshape(-1, 2)
        res = out.reshape(-1, 2)
        for i, p in enumerate(flat):
            try:
                res[i] = iface.normal(p)
            except SingularProjectionError:
                res[i] = FALLBACK_UNIT_VECTOR
        return out


def _entropy_pieces(state: FieldState, iface: InterfaceState, params: EntropyParams):
    """Node-wise ingredients shared by the functionals below."""
    grid = state.phi.grid
    eps = params.epsilon
    phi = state.phi.values
    g = gradient(state.phi)
    gphi = np.stack([g.u, g.v], axis=-1)
    gnorm = np.linalg.norm(gphi, axis=-1)
    W = pot.eval_W(params.potential, np.clip(phi, -1.0, 1.0))
    sqrt2W = np.sqrt(2.0 * W)
    gpsi = sqrt2W[..., None] * gphi
    gpsi_norm = sqrt2W * gnorm
    pts = grid.points()
    d = iface.signed_distance(pts)
    xi = xi_field(iface, params.calib, pts)
    ne = n_eps(gphi)
    return grid, eps, phi, gphi, gnorm, W, sqrt2W, gpsi, gpsi_norm, pts, d, xi, ne


def _quadrature_tol(grid, integrand) -> float:
    scale = float(np.max(np.abs(integrand))) if integrand.size else 0.0
    return 10.0 * grid.h**2 * grid.Lx * grid.Ly * max(scale, 1.0)


def relative_entropy(state: FieldState, sol: SharpSolution,
                     params: EntropyParams) -> EntropyReport:
    iface = sol.interface(state.t)
    (grid, eps, phi, gphi, gnorm, W, sqrt2W, gpsi, gpsi_norm,
     pts, d, xi, ne) = _entropy_pieces(state, iface, params)

    vref = sol.velocity(pts, state.t)
    dv = np.stack([state.vel.u, state.vel.v], axis=-1) - vref
    vel_err2 = np.sum(dv * dv, axis=-1)
    E_velocity = 0.5 * integrate_values(grid, vel_err2)
    velocity_L2 = float(np.sqrt(integrate_values(grid, vel_err2)))

    interface_integrand = (0.5 * eps * gnorm**2 + W / eps
                           - np.sum(xi * gpsi, axis=-1))
    E_interface = integrate_values(grid, interface_integrand)

    tilt = (1.0 - np.sum(ne * xi, axis=-1)) * gpsi_norm
    equip = 0.5 * (np.sqrt(eps) * gnorm - sqrt2W / np.sqrt(eps)) ** 2
    tube = np.abs(d) < 2.0 * params.calib.delta
    nrm = np.zeros(pts.shape)
    nrm[tube] = _safe_normals(iface, pts[tube])
    dn_phi = np.sum(nrm * gphi, axis=-1)
    gtau = gphi - nrm * dn_phi[..., None]
    equip_normal = np.where(
        tube, 0.5 * (np.sqrt(eps) * np.abs(dn_phi) - sqrt2W / np.sqrt(eps)) ** 2, 0.0)
    tang = np.where(tube, 0.5 * eps * np.sum(gtau * gtau, axis=-1), 0.0)

    sig = pot.sigma(params.potential)
    psi_vals = pot.eval_psi(params.potential, np.clip(phi, -1.0, 1.0))
    chi = (d > 0.0).astype(float)
    psi_l1_integrand = np.abs(sig * chi - psi_vals)

    heps = h_eps_values(state.phi, eps, params.potential)
    vartheta = vartheta_field(iface, params.calib, pts)
    bulk_integrand = (sig * chi - psi_vals) * vartheta

    qtol = _quadrature_tol(grid, interface_integrand)
    return EntropyReport(
        t=state.t,
        E_total=E_velocity + E_interface,
        E_velocity=E_velocity,
        E_interface=E_interface,
        E_bulk=integrate_values(grid, bulk_integrand),
        tilt_excess=integrate_values(grid, tilt),
        equipartition=integrate_values(grid, equip),
        equipartition_normal=integrate_values(grid, equip_normal),
        tangential_energy=integrate_values(grid, tang),
        psi_L1=integrate_values(grid, psi_l1_integrand),
        velocity_L2=velocity_L2,
        H_eps_L2=float(np.sqrt(integrate_values(grid, heps**2))),
        quadrature_tol=qtol,
    )


def bulk_error(state: FieldState, sol: SharpSolution, params: EntropyParams) -> float:
    iface = sol.interface(state.t)
    grid = state.phi.grid
    pts = grid.points()
    d = iface.signed_distance(pts)
    sig = pot.sigma(params.potential)
    psi_vals = pot.eval_psi(params.potential, np.clip(state.phi.values, -1.0, 1.0))
    chi = (d > 0.0).astype(float)
    vartheta = vartheta_field(iface, params.calib, pts)
    return integrate_values(grid, (sig * chi - psi_vals) * vartheta)


def coercivity_suite(state: FieldState, sol: SharpSolution, params: EntropyParams,
                     pinned: dict | None = None) -> dict:
    """Evaluate both sides of each coercivity inequality by quadrature.

    Unit-constant items hold node-wise by algebra under the chain-rule
    convention; the delta-dependent items use pinned measured constants.
    Returns {name: {"lhs":..., "rhs":..., "passed":...}}.
    """
    pinned = {**PINNED_CONSTANTS, **(pinned or {})}
    iface = sol.interface(state.t)
    (grid, eps, phi, gphi, gnorm, W, sqrt2W, gpsi, gpsi_norm,
     pts, d, xi, ne) = _entropy_pieces(state, iface, params)
    rep = relative_entropy(state, sol, params)
    tol = rep.quadrature_tol

    checks = {}

    def add(name, lhs, rhs, constant=1.0):
        checks[name] = {
            "lhs": lhs, "rhs": rhs, "constant": constant,
            "passed": bool(lhs <= constant * rhs + tol),
        }

    add("velocity", rep.E_velocity, rep.E_total)
    add("tilt_excess", rep.tilt_excess, rep.E_interface)
    add("equipartition", rep.equipartition, rep.E_interface)
    add("normal_tangential", rep.equipartition_normal + rep.tangential_energy,
        rep.E_interface)
    add("bulk_nonneg", 0.0, rep.E_bulk)

    mind2 = np.minimum(d * d, 1.0)
    mind1 = np.minimum(np.abs(d), 1.0)
    lhs1 = integrate_values(
        grid, (np.sum((ne - xi) ** 2, axis=-1) + mind2) * (eps * gnorm**2 + gpsi_norm))
    add("weighted_tilt", lhs1, rep.E_interface, pinned["erel_weighted"])

    nxi = np.clip(np.sum(ne * xi, axis=-1), None, 1.0)
    lhs2 = integrate_values(
        grid, (mind1 + np.sqrt(np.maximum(1.0 - nxi, 0.0)))
        * np.abs(eps * gnorm**2 - gpsi_norm))
    add("weighted_equip_diff", lhs2, rep.E_interface, pinned["erel_equip_diff"])

    sig = pot.sigma(params.potential)
    psi_vals = pot.eval_psi(params.potential, np.clip(phi, -1.0, 1.0))
    chi = (d > 0.0).astype(float)
    err = np.abs(sig * chi - psi_vals)
    add("bulk_weighted", integrate_values(grid, err * mind1), rep.E_bulk,
        pinned["bulk_weighted"])
    add("bulk_l1_sq", rep.psi_L1**2, rep.E_bulk, pinned["bulk_l1_sq"])

    return checks


def h_eps_field(state: FieldState, params: EntropyParams) -> ScalarField:
    return ScalarField(state.phi.grid,
                       h_eps_values(state.phi, params.epsilon, params.potential))


def extract_interface(phi: ScalarField, level: float = 0.0) -> list[np.ndarray]:
    """Marching-squares contours of phi at the given level.

    Returns polylines as (N, 2) arrays of (x, y) points; closed polylines are
    oriented counterclockwise.  An empty list is a valid result.
    """
    if abs(level) >= 1.0:
        raise ValueError("level must lie strictly inside (-1, 1)")
    vals = phi.values
    if vals.min() >= level or vals.max() <= level:
        return []
    h = phi.grid.h
    out = []
    for c in measure.find_contours(vals, level):
        xy = np.column_stack([c[:, 1] * h, c[:, 0] * h])
        closed = np.allclose(xy[0], xy[-1])
        if closed:
            area = 0.5 * np.sum(xy[:-1, 0] * xy[1:, 1] - xy[1:, 0] * xy[:-1, 1])
            if area < 0:
                xy = xy[::-1]
        out.append(xy)
    return out


def interface_distance(polylines: list[np.ndarray], iface: InterfaceState) -> float:
    """One-sided Hausdorff distance: max over vertices of |signed distance|."""
    if not polylines:
        raise EmptyInterfaceError("no polylines to compare against the interface")
    return max(float(np.max(np.abs(iface.signed_distance(p)))) for p in polylines)


def mean_contour_radius(polylines: list[np.ndarray], center) -> float:
    """Area-free mean radius of the extracted contour about a given center."""
    if not polylines:
        raise EmptyInterfaceError("no polylines to measure")
    rads = np.concatenate(
        [np.linalg.norm(p - np.asarray(center), axis=-1) for p in polylines])
    return float(np.mean(rads))
