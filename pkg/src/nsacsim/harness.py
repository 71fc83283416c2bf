"""Experiment orchestration: config parsing, case runs, sweeps, rate fits.

Config files are INI-style text (section/key=value).  A sweep runs the solver
for every epsilon in the list with mobility m = m0 * epsilon^beta, evaluates
the entropy diagnostics against both the mobility-modified reference interface
and its m = 0 limit at every snapshot time, and fits convergence rates on the
aggregated error columns.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .diagnostics import (EntropyParams, EntropyReport, extract_interface,
                          interface_distance, mean_contour_radius,
                          relative_entropy)
from .fields import Grid, load_snapshot, save_snapshot
from .geometry import CalibrationParams
from .reference import ShrinkingCircle, StaticLine, TranslatingCircle
from .solver import (FieldState, NsacParams, dissipation, energy,
                     max_stable_dt, step, well_prepared_data)


class ConfigError(ValueError):
    pass


_KNOWN = {
    "sweep": {"epsilons", "beta", "m0", "t_end", "snapshot_every",
              "nodes_per_epsilon", "seed", "output_dir"},
    "geometry": {"kind", "r0", "center_x", "center_y", "ux", "uy", "offset"},
    "grid": {"box", "bc"},
    "diagnostics": {"delta"},
}

GEOMETRY_KINDS = ("shrinking_circle", "translating_circle", "static_line")


@dataclass(frozen=True)
class SweepConfig:
    epsilon_list: tuple[float, ...]
    beta: float
    m0: float = 1.0
    t_end: float = 0.02
    snapshot_every: float | None = None   # None: t_end / 10
    nodes_per_epsilon: float = 6.0
    seed: int = 0
    output_dir: str = "out"
    kind: str = "shrinking_circle"
    r0: float = 0.25
    center: tuple[float, float] = (0.5, 0.5)
    U: tuple[float, float] = (0.0, 0.0)
    offset: float = 0.5
    box: float = 1.0
    bc: str = "periodic"
    delta: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.beta < 2.0):
            raise ConfigError(
                f"beta={self.beta} is outside the admissible range (0, 2); "
                "beta >= 2 lies in the nonconvergence regime of the "
                "vanishing-mobility scaling and is rejected")
        eps = self.epsilon_list
        if len(eps) < 1 or any(e <= 0 for e in eps):
            raise ConfigError("epsilon list must contain positive entries")
        if any(nxt >= prv for nxt, prv in zip(eps[1:], eps[:-1])):
            raise ConfigError("epsilon list must be strictly decreasing")
        if self.kind not in GEOMETRY_KINDS:
            raise ConfigError(f"unknown geometry kind {self.kind!r}")

    @property
    def cadence(self) -> float:
        return self.snapshot_every if self.snapshot_every else self.t_end / 10.0

    def mobility(self, eps: float) -> float:
        return self.m0 * eps**self.beta

    def reference(self, eps: float, mobility: float | None = None):
        m = self.mobility(eps) if mobility is None else mobility
        sig = pot.sigma(pot.PotentialSpec())
        if self.kind == "shrinking_circle":
            return ShrinkingCircle(sigma=sig, center=self.center, r0=self.r0, m=m)
        if self.kind == "translating_circle":
            return TranslatingCircle(sigma=sig, center=self.center, r0=self.r0,
                                     m=m, U=self.U)
        return StaticLine(sigma=sig, offset=self.offset)


def parse_config(text: str) -> SweepConfig:
    cp = ConfigParser()
    cp.read_string(text)
    offenders = []
    for sec in cp.sections():
        if sec not in _KNOWN:
            offenders.append(f"[{sec}]")
            continue
        for key in cp[sec]:
            if key not in _KNOWN[sec]:
                offenders.append(f"[{sec}] {key}")
    if offenders:
        raise ConfigError("unknown config entries: " + ", ".join(sorted(offenders)))
    if "sweep" not in cp or "epsilons" not in cp["sweep"] or "beta" not in cp["sweep"]:
        raise ConfigError("config requires [sweep] with 'epsilons' and 'beta'")
    sw = cp["sweep"]
    geo = cp["geometry"] if "geometry" in cp else {}
    gr = cp["grid"] if "grid" in cp else {}
    dg = cp["diagnostics"] if "diagnostics" in cp else {}
    eps = tuple(float(tok) for tok in sw["epsilons"].replace(",", " ").split())
    return SweepConfig(
        epsilon_list=eps,
        beta=float(sw["beta"]),
        m0=float(sw.get("m0", 1.0)),
        t_end=float(sw.get("t_end", 0.02)),
        snapshot_every=float(sw["snapshot_every"]) if "snapshot_every" in sw else None,
        nodes_per_epsilon=float(sw.get("nodes_per_epsilon", 6.0)),
        seed=int(sw.get("seed", 0)),
        output_dir=sw.get("output_dir", "out"),
        kind=geo.get("kind", "shrinking_circle"),
        r0=float(geo.get("r0", 0.25)),
        center=(float(geo.get("center_x", 0.5)), float(geo.get("center_y", 0.5))),
        U=(float(geo.get("ux", 0.0)), float(geo.get("uy", 0.0))),
        offset=float(geo.get("offset", 0.5)),
        box=float(gr.get("box", 1.0)),
        bc=gr.get("bc", "periodic"),
        delta=float(dg.get("delta", 0.1)),
    )


def format_config(cfg: SweepConfig) -> str:
    """Echo of the effective configuration, re-parseable."""
    lines = ["[sweep]",
             "epsilons = " + " ".join(f"{e:.17g}" for e in cfg.epsilon_list),
             f"beta = {cfg.beta:.17g}",
             f"m0 = {cfg.m0:.17g}",
             f"t_end = {cfg.t_end:.17g}",
             f"snapshot_every = {cfg.cadence:.17g}",
             f"nodes_per_epsilon = {cfg.nodes_per_epsilon:.17g}",
             f"seed = {cfg.seed}",
             f"output_dir = {cfg.output_dir}",
             "", "[geometry]", f"kind = {cfg.kind}",
             f"r0 = {cfg.r0:.17g}",
             f"center_x = {cfg.center[0]:.17g}", f"center_y = {cfg.center[1]:.17g}",
             f"ux = {cfg.U[0]:.17g}", f"uy = {cfg.U[1]:.17g}",
             f"offset = {cfg.offset:.17g}",
             "", "[grid]", f"box = {cfg.box:.17g}", f"bc = {cfg.bc}",
             "", "[diagnostics]", f"delta = {cfg.delta:.17g}", ""]
    return "\n".join(lines)


def output_root(cfg: SweepConfig) -> str:
    root = os.environ.get("NSAC_OUTPUT_ROOT", "")
    return os.path.join(root, cfg.output_dir) if root else cfg.output_dir


# --- single case -------------------------------------------------------------

# stability-bound constants for sup_t sqrt(E_total + E_bulk) <=
# exp(C t_end) (E(0) + E_bulk(0) + C' eps^2 / m), pinned from a calibration
# run of the eps = 0.02, beta = 2/3 droplet (needed C' = 31.8 at C = 5)
STABILITY_BOUND_CONSTANTS = {"C": 5.0, "C_prime": 70.0}

CASE_COLUMNS = (
    ("t",)
    + tuple(f"{c}_vs_m" for c in EntropyReport.COLUMNS[1:])
    + tuple(f"{c}_vs_limit" for c in EntropyReport.COLUMNS[1:])
    + ("radius_extracted", "radius_ref_m", "radius_ref_limit",
       "iface_dist_vs_m", "iface_dist_vs_limit", "energy", "err_conv_vs_m",
       "err_conv_vs_limit")
)


@dataclass
class CaseResult:
    eps: float
    m: float
    rows: list[dict] = field(default_factory=list)
    snapshot_paths: list[str] = field(default_factory=list)
    csv_path: str = ""
    energy_violations: int = 0
    worst_energy_defect: float = 0.0
    states: list[FieldState] = field(default_factory=list)

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def sup(self, name) -> float:
        return float(np.max(self.column(name)))


def case_grid(cfg: SweepConfig, eps: float) -> Grid:
    h_target = eps / cfg.nodes_per_epsilon
    n = int(round(cfg.box / h_target))
    return Grid(n, n, cfg.box, cfg.box, cfg.bc)


def run_case(cfg: SweepConfig, eps: float, outdir: str | None = None,
             keep_states: bool = False) -> CaseResult:
    """Integrate one epsilon and evaluate diagnostics at every snapshot time."""
    if outdir is None:
        outdir = output_root(cfg)
    m = cfg.mobility(eps)
    grid = case_grid(cfg, eps)
    params = NsacParams(epsilon=eps, m=m, t_end=cfg.t_end, grid=grid)
    sol_m = cfg.reference(eps)
    sol_0 = cfg.reference(eps, mobility=0.0)
    calib = CalibrationParams(delta=cfg.delta, m=m)
    eparams = EntropyParams(epsilon=eps, calib=calib)

    if cfg.kind == "static_line" and cfg.bc == "periodic":
        raise ConfigError("a single line interface is not periodic; use bc=dirichlet")
    if cfg.kind != "static_line":
        horizon = sol_m.embedded_until(cfg.delta)
        if cfg.t_end >= horizon:
            raise ConfigError(
                f"t_end={cfg.t_end} exceeds the tube-embedding window {horizon:.4g}")

    iface0 = sol_m.interface(0.0)
    state = well_prepared_data(iface0, params,
                               background_velocity=lambda x: sol_m.velocity(x, 0.0))

    snap_times = np.arange(0.0, cfg.t_end + 1e-12, cfg.cadence)
    if snap_times[-1] < cfg.t_end - 1e-12:
        snap_times = np.append(snap_times, cfg.t_end)

    result = CaseResult(eps=eps, m=m)
    if outdir:
        os.makedirs(outdir, exist_ok=True)

    def record(s: FieldState):
        rep_m = relative_entropy(s, sol_m, eparams)
        rep_0 = relative_entropy(s, sol_0, eparams)
        polylines = extract_interface(s.phi)
        row = {"t": s.t}
        for c in EntropyReport.COLUMNS[1:]:
            row[f"{c}_vs_m"] = rep_m.as_dict()[c]
            row[f"{c}_vs_limit"] = rep_0.as_dict()[c]
        if cfg.kind != "static_line" and polylines:
            center = sol_m.interface(s.t).center
            row["radius_extracted"] = mean_contour_radius(polylines, center)
        else:
            row["radius_extracted"] = math.nan
        row["radius_ref_m"] = (sol_m.radius(s.t)
                               if cfg.kind != "static_line" else math.nan)
        row["radius_ref_limit"] = (sol_0.radius(s.t)
                                   if cfg.kind != "static_line" else math.nan)
        if polylines:
            row["iface_dist_vs_m"] = interface_distance(polylines, sol_m.interface(s.t))
            row["iface_dist_vs_limit"] = interface_distance(polylines, sol_0.interface(s.t))
        else:
            row["iface_dist_vs_m"] = math.nan
            row["iface_dist_vs_limit"] = math.nan
        row["energy"] = energy(s, params)
        row["err_conv_vs_m"] = rep_m.velocity_L2 + rep_m.psi_L1
        row["err_conv_vs_limit"] = rep_0.velocity_L2 + rep_0.psi_L1
        result.rows.append(row)
        if keep_states:
            result.states.append(s)
        if outdir:
            path = os.path.join(outdir, f"snap_eps{eps:.6g}_t{s.t:.6g}.txt")
            save_snapshot(path, grid, s.t, s.phi.values, s.vel.u, s.vel.v,
                          s.p.values)
            result.snapshot_paths.append(path)

    record(state)
    for target in snap_times[1:]:
        while state.t < target - 1e-12:
            v_max = float(np.max(np.hypot(state.vel.u, state.vel.v)))
            dt = params.cfl_safety * max_stable_dt(params, v_max)
            dt = min(dt, target - state.t)
            sub = NsacParams(epsilon=eps, m=m, t_end=cfg.t_end, grid=grid, dt=dt)
            prev = state
            state = step(state, sub)
            bal = dissipation(prev, state, params)
            if not bal["non_increase"]:
                result.energy_violations += 1
            defect = -(bal["energy_drop"] + bal["tol_E"])
            result.worst_energy_defect = max(result.worst_energy_defect, defect)
        record(state)

    if outdir:
        result.csv_path = os.path.join(outdir, f"case_eps{eps:.6g}.csv")
        write_case_csv(result.rows, result.csv_path)
    return result


def write_case_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CASE_COLUMNS)
        for row in rows:
            w.writerow([f"{row[c]:.17g}" for c in CASE_COLUMNS])


def emit_csv(reports: list[EntropyReport], path: str) -> None:
    """One CSV row per time with the documented EntropyReport column order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EntropyReport.COLUMNS)
        for rep in reports:
            d = rep.as_dict()
            w.writerow([f"{d[c]:.17g}" for c in EntropyReport.COLUMNS])


# --- rate fitting ------------------------------------------------------------

@dataclass
class RateFit:
    pairs: tuple[tuple[float, float], ...]
    exponent: float
    residual: float
    predicted: float | None = None


def predicted_exponent(beta: float) -> float:
    """Exponent of eps^(1-beta/2) + eps^beta, the theoretical error scale."""
    return min(1.0 - beta / 2.0, beta)


def fit_rate(pairs, predicted: float | None = None) -> RateFit:
    """Least-squares slope of log(error) against log(eps)."""
    clean = [(e, err) for e, err in pairs if err > 0.0]
    if len(clean) < 3:
        raise ValueError("rate fit needs at least 3 pairs with positive errors")
    x = np.log([e for e, _ in clean])
    y = np.log([err for _, err in clean])
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.sqrt(res[0])) if res.size else 0.0
    return RateFit(tuple(clean), float(coef[0]), residual, predicted)


# --- sweeps ------------------------------------------------------------------

ERROR_COLUMNS = ("err_conv_vs_m", "err_conv_vs_limit", "stability_vs_m",
                 "iface_dist_vs_m", "iface_dist_vs_limit")


@dataclass
class SweepResult:
    config: SweepConfig
    cases: list[CaseResult]
    aggregates: dict[str, list[tuple[float, float]]]
    fits: dict[str, RateFit]
    summary_path: str = ""

    def table(self) -> str:
        lines = ["eps      " + "  ".join(f"{c:>22s}" for c in ERROR_COLUMNS)]
        for i, case in enumerate(self.cases):
            vals = [self.aggregates[c][i][1] for c in ERROR_COLUMNS]
            lines.append(f"{case.eps:<8.5g} "
                         + "  ".join(f"{v:22.6e}" for v in vals))
        lines.append("fitted   " + "  ".join(
            f"{self.fits[c].exponent:22.4f}" if c in self.fits else " " * 22
            for c in ERROR_COLUMNS))
        pred = predicted_exponent(self.config.beta)
        lines.append(f"predicted exponent min(1-beta/2, beta) = {pred:.4f}")
        return "\n".join(lines)


def _case_worker(args):
    cfg, eps, outdir = args
    return run_case(cfg, eps, outdir=outdir)


def case_aggregates(case: CaseResult) -> dict[str, float]:
    stab = np.sqrt(np.maximum(case.column("E_total_vs_m")
                              + np.maximum(case.column("E_bulk_vs_m"), 0.0), 0.0))
    out = {
        "err_conv_vs_m": case.sup("err_conv_vs_m"),
        "err_conv_vs_limit": case.sup("err_conv_vs_limit"),
        "stability_vs_m": float(np.max(stab)),
    }
    for c in ("iface_dist_vs_m", "iface_dist_vs_limit"):
        col = case.column(c)
        out[c] = float(np.nanmax(col)) if not np.all(np.isnan(col)) else math.nan
    return out


def run_sweep(cfg: SweepConfig, workers: int = 1, outdir: str | None = None) -> SweepResult:
    if len(cfg.epsilon_list) < 3:
        raise ConfigError("a sweep needs at least 3 epsilon values for rate fits")
    outdir = outdir if outdir is not None else output_root(cfg)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "effective_config.ini"), "w") as fh:
        fh.write(format_config(cfg))
    jobs = [(cfg, eps, os.path.join(outdir, f"eps{eps:.6g}")) for eps in cfg.epsilon_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(_case_worker, jobs))
    else:
        cases = [_case_worker(j) for j in jobs]
    # deterministic reduce over descending epsilon
    cases.sort(key=lambda c: -c.eps)

    aggregates = {c: [] for c in ERROR_COLUMNS}
    for case in cases:
        ag = case_aggregates(case)
        for c in ERROR_COLUMNS:
            aggregates[c].append((case.eps, ag[c]))

    pred = predicted_exponent(cfg.beta)
    fits = {}
    for c in ERROR_COLUMNS:
        pairs = [(e, v) for e, v in aggregates[c] if not math.isnan(v)]
        if len(pairs) >= 3 and all(v > 0 for _, v in pairs):
            fits[c] = fit_rate(pairs, predicted=pred)

    result = SweepResult(cfg, cases, aggregates, fits)
    result.summary_path = os.path.join(outdir, "summary.csv")
    with open(result.summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "m"] + list(ERROR_COLUMNS))
        for i, case in enumerate(cases):
            w.writerow([f"{case.eps:.17g}", f"{case.m:.17g}"]
                       + [f"{aggregates[c][i][1]:.17g}" for c in ERROR_COLUMNS])
        w.writerow([])
        w.writerow(["column", "fitted_exponent", "residual", "predicted"])
        for c, fit in fits.items():
            w.writerow([c, f"{fit.exponent:.17g}", f"{fit.residual:.17g}",
                        f"{pred:.17g}"])
    with open(os.path.join(outdir, "summary.txt"), "w") as fh:
        fh.write(result.table() + "\n")
    return result


def synthetic_sweep(cfg: SweepConfig, exponents: dict[str, float] | None = None) -> SweepResult:
    """Plumbing self-test: inject exact power-law errors and refit them."""
    exponents = exponents or {c: predicted_exponent(cfg.beta) for c in ERROR_COLUMNS}
    aggregates = {c: [(e, e**p) for e in cfg.epsilon_list]
                  for c, p in exponents.items()}
    fits = {c: fit_rate(aggregates[c], predicted=predicted_exponent(cfg.beta))
            for c in aggregates}
    return SweepResult(cfg, [], aggregates, fits)


def rates_from_csv(path: str) -> dict[str, RateFit]:
    """Refit rates from an existing summary.csv."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = []
    for row in rows[1:]:
        if not row or not row[0] or row[0] == "column":
            break
        data.append([float(tok) for tok in row])
    out = {}
    for j, col in enumerate(header):
        if col in ("eps", "m"):
            continue
        pairs = [(r[0], r[j]) for r in data if not math.isnan(r[j])]
        if len(pairs) >= 3 and all(v > 0 for _, v in pairs):
            out[col] = fit_rate(pairs)
    return out


def load_state(path: str) -> tuple[FieldState, Grid]:
    from .fields import ScalarField, VectorField
    grid, t, phi, u, v, p = load_snapshot(path)
    return FieldState(t, ScalarField(grid, phi), VectorField(grid, u, v),
                      ScalarField(grid, p)), grid
