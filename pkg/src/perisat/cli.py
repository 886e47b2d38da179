"""Command-line entry point: ``perisat synth | analyze | simulate | sweep | validate``.

Exit codes: 0 success, 1 usage or configuration error, 2 synthesis
infeasible, 3 requirement violated.
"""

from __future__ import annotations

import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from .analysis import brl_gamma_certificate, closed_loop_maps, loop_margins, shape_compliance
from .artifact import load_controller, save_controller
from .config import DEFAULT_CONFIG_TEXT, ConfigError, ScenarioConfig, load_config
from .errors import NoBracket, RdeError, SimulationBlowup, UpperBoundInfeasible
from .pipeline import synthesize_weighted
from .satellite import DisturbanceModel, simulate_closed_loop, uncertainty_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_REQUIREMENT = 0, 1, 2, 3

POINTING_LIMIT_DEG = 0.5
GAIN_MARGIN_LIMIT_DB = 6.0
PHASE_MARGIN_LIMIT_DEG = 30.0
GAMMA_REFERENCE, GAMMA_BAND = 1.4, 0.2
AXES = ("roll", "pitch", "yaw")


class RequirementFailure(Exception):
    pass


@dataclass
class RunSummary:
    gamma_optimal: float = math.nan
    gamma_achieved: float = math.nan
    min_gain_margin_db: dict = field(default_factory=dict)
    min_phase_margin_deg: dict = field(default_factory=dict)
    pointing_nominal_deg: dict = field(default_factory=dict)
    pointing_worst_case_deg: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timings_s: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def deterministic_dict(self) -> dict:
        d = asdict(self)
        d.pop("timings_s")
        d["passed"] = self.passed
        return d


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _channel_names(n: int):
    return list(AXES) if n == 3 else [f"ch{i + 1}" for i in range(n)]


def _orbit_points(n: int) -> np.ndarray:
    return np.arange(n) / n


# -- stages ------------------------------------------------------------------

def run_synthesis(cfg: ScenarioConfig):
    plant = cfg.plant()
    We, Wu, sc = cfg.weights(plant)
    s = cfg["synthesis"]
    return synthesize_weighted(plant, We, Wu, sc, cfg.grid(), cfg.bisection(),
                               s["rde_tol"], s["rde_max_periods"])


def run_analysis(cfg: ScenarioConfig, controller, out_dir: Path, summary: RunSummary):
    t0 = time.perf_counter()
    plant = cfg.plant()
    We, Wu, sc = cfg.weights(plant)
    a = cfg["analysis"]
    names = _channel_names(plant.nu)
    report = loop_margins(plant, controller, _orbit_points(a["margin_orbit_points"]),
                          freqs=cfg.margin_freqs(), period=cfg.period)
    _write_csv(out_dir / "margins.csv",
               ["orbit_fraction", "channel", "gain_margin_db", "phase_margin_deg"],
               ((f, names[c], gm, pm) for f, c, gm, pm in report.rows()))
    for c, name in enumerate(names):
        summary.min_gain_margin_db[name] = report.min_gain_margin(c)
        summary.min_phase_margin_deg[name] = report.min_phase_margin(c)
    summary.checks["gain_margin_requirement"] = bool(
        np.all(report.gain_margin_db >= GAIN_MARGIN_LIMIT_DB))
    summary.checks["phase_margin_requirement"] = bool(
        np.all(np.nan_to_num(report.phase_margin_deg, nan=np.inf) >= PHASE_MARGIN_LIMIT_DEG))

    shape_fracs = _orbit_points(a["shape_orbit_points"])
    freqs = cfg.shape_freqs()
    gamma = getattr(controller, "gamma_achieved", math.nan)
    rows = []
    for frac in shape_fracs:
        maps = closed_loop_maps(plant, controller, frac * cfg.period, freqs)
        for label, m in zip(("S", "SP", "KS", "KSP"), maps):
            mag = np.abs(np.diagonal(m.response, axis1=1, axis2=2))
            for k, w in enumerate(freqs):
                for c, name in enumerate(names):
                    rows.append((frac, w, label, name, 20 * math.log10(max(mag[k, c], 1e-300))))
    _write_csv(out_dir / "shapes.csv",
               ["orbit_fraction", "freq_rad_s", "map", "channel", "magnitude_db"], rows)
    if math.isfinite(gamma):
        shapes = shape_compliance(plant, controller, We, Wu, sc, gamma, shape_fracs, freqs,
                                  period=cfg.period)
        summary.checks["shape_compliance"] = shapes.complies(1.1)
    summary.timings_s["analysis"] = time.perf_counter() - t0


def _sim_settings(cfg: ScenarioConfig):
    s = cfg["simulation"]
    return s["theta0_deg"], s["horizon_orbits"], s["steps_per_orbit"], s["disturbance"]


def _require_abacus(cfg: ScenarioConfig):
    if cfg.model != "abacus":
        raise ConfigError("simulation and sweep need scenario.model = abacus")


def run_simulation(cfg: ScenarioConfig, controller, out_dir: Path, summary: RunSummary):
    _require_abacus(cfg)
    t0 = time.perf_counter()
    theta0, horizon, steps, dist_on = _sim_settings(cfg)
    params = cfg.satellite
    dist = DisturbanceModel(params) if dist_on else None
    try:
        res = simulate_closed_loop(cfg.plant(), controller, dist, theta0, horizon,
                                   steps_per_orbit=steps, period=params.period)
    except SimulationBlowup as exc:
        summary.checks["pointing_nominal"] = False
        summary.notes.append(str(exc))
        summary.timings_s["simulation"] = time.perf_counter() - t0
        return None
    th, u = res.theta_deg, res.control
    _write_csv(out_dir / "trajectories.csv",
               ["time_s", "theta1_deg", "theta2_deg", "theta3_deg", "u1_Nm", "u2_Nm", "u3_Nm"],
               ((res.time[k], *th[k], *u[k]) for k in range(res.time.size)))
    summary.pointing_nominal_deg = dict(zip(AXES, map(float, res.final_orbit_max_deg)))
    summary.checks["pointing_nominal"] = bool(np.all(res.final_orbit_max_deg < POINTING_LIMIT_DEG))
    summary.timings_s["simulation"] = time.perf_counter() - t0
    return res


def run_sweep(cfg: ScenarioConfig, controller, out_dir: Path, summary: RunSummary):
    _require_abacus(cfg)
    t0 = time.perf_counter()
    theta0, horizon, steps, dist_on = _sim_settings(cfg)
    rep = uncertainty_sweep(cfg.satellite, controller, dist_on, theta0, horizon,
                            steps_per_orbit=steps,
                            perturb_disturbance=cfg["simulation"]["sweep_perturbs_disturbance"])
    _write_csv(out_dir / "corners.csv",
               ["J1_factor", "J2_factor", "J3_factor", "stable", "failure_time_s",
                "theta1_max_deg", "theta2_max_deg", "theta3_max_deg"],
               ((*c.factors, int(c.stable), c.failure_time if c.failure_time is not None else "",
                 *(c.final_orbit_max_deg if c.stable else ("", "", "")))
                for c in rep.corners))
    lo, hi = rep.theta_min_deg, rep.theta_max_deg
    _write_csv(out_dir / "envelope.csv",
               ["time_s", "theta1_min_deg", "theta1_max_deg", "theta2_min_deg",
                "theta2_max_deg", "theta3_min_deg", "theta3_max_deg"],
               ((rep.time[k], lo[k, 0], hi[k, 0], lo[k, 1], hi[k, 1], lo[k, 2], hi[k, 2])
                for k in range(rep.time.size)))
    summary.pointing_worst_case_deg = dict(zip(AXES, map(float, rep.worst_final_orbit_deg)))
    summary.checks["sweep_all_stable"] = rep.all_stable
    summary.checks["pointing_worst_case"] = bool(
        rep.all_stable and np.all(rep.worst_final_orbit_deg < POINTING_LIMIT_DEG))
    for f in rep.failed:
        summary.notes.append(f"inertia corner {f} unstable")
    summary.timings_s["sweep"] = time.perf_counter() - t0
    return rep


def run_certificate(cfg: ScenarioConfig, synthesis, summary: RunSummary):
    t0 = time.perf_counter()
    cl = synthesis.closed_loop()
    grid, s = cfg.grid(), cfg["synthesis"]
    g = synthesis.gamma_opt
    above = brl_gamma_certificate(cl, 1.1 * g, grid, s["rde_tol"], s["rde_max_periods"])
    below = brl_gamma_certificate(cl, 0.9 * g, grid, s["rde_tol"], s["rde_max_periods"])
    summary.checks["brl_certified_above"] = above
    summary.checks["brl_rejected_below"] = not below
    summary.timings_s["certificate"] = time.perf_counter() - t0


def _synthesize_or_exit(cfg: ScenarioConfig, summary: RunSummary):
    t0 = time.perf_counter()
    try:
        syn = run_synthesis(cfg)
    except (UpperBoundInfeasible, NoBracket, RdeError) as exc:
        click.echo(f"synthesis infeasible: {exc}", err=True)
        raise SystemExit(EXIT_INFEASIBLE)
    summary.gamma_optimal = syn.gamma_opt
    summary.gamma_achieved = syn.gamma_achieved
    summary.timings_s["synthesis"] = time.perf_counter() - t0
    summary.timings_s.update({k: v for k, v in syn.timings.items() if k != "synthesis_total_s"})
    if cfg.model == "abacus":
        ok = abs(syn.gamma_opt - GAMMA_REFERENCE) <= GAMMA_BAND
        summary.checks["gamma_reference_band"] = ok
        if not ok:
            summary.notes.append(f"gamma_opt {syn.gamma_opt:.4f} outside "
                                 f"{GAMMA_REFERENCE} +/- {GAMMA_BAND}")
    return syn


def _finish(summary: RunSummary, out_dir: Path | None):
    if out_dir is not None:
        _write_json(out_dir / "summary.json", summary.deterministic_dict())
        _write_json(out_dir / "timings.json", summary.timings_s)
    for name, ok in summary.checks.items():
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}")
    if not summary.passed:
        raise RequirementFailure(", ".join(k for k, v in summary.checks.items() if not v))


def _load_with_overrides(controller_path, config_path):
    loaded = load_controller(controller_path)
    cfg = loaded.config
    if config_path is not None:
        override = load_config(config_path)
        # analysis and simulation settings may be overridden; the model stays with the artifact
        values = dict(cfg.values)
        values["analysis"] = override.values["analysis"]
        values["simulation"] = override.values["simulation"]
        cfg = ScenarioConfig(values, cfg.text)
    return cfg, loaded


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- click commands ----------------------------------------------------------

config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             default=None, help="Scenario INI file (defaults when omitted).")
out_option = click.option("--out-dir", type=click.Path(file_okay=False), default=".",
                          show_default=True, help="Directory for CSV and JSON outputs.")


@click.group()
def cli():
    """Periodic mixed-sensitivity attitude control for the Abacus satellite."""


@cli.command("default-config")
def default_config():
    """Print the default scenario configuration."""
    click.echo(DEFAULT_CONFIG_TEXT, nl=False)


@cli.command()
@config_option
@click.option("-o", "--output", type=click.Path(dir_okay=False), default="controller.npz",
              show_default=True, help="Controller artifact to write.")
def synth(config_path, output):
    """Synthesize the weighted periodic controller."""
    cfg = load_config(config_path)
    summary = RunSummary()
    syn = _synthesize_or_exit(cfg, summary)
    save_controller(output, cfg, syn)
    click.echo(f"gamma_opt = {syn.gamma_opt:.6f}")
    click.echo(f"gamma_achieved = {syn.gamma_achieved:.6f}")
    click.echo(f"synthesis time = {summary.timings_s['synthesis']:.2f} s")


@cli.command()
@click.argument("controller", type=click.Path(exists=True, dir_okay=False))
@config_option
@out_option
def analyze(controller, config_path, out_dir):
    """Margins over the orbit and frozen closed-loop shapes."""
    cfg, loaded = _load_with_overrides(controller, config_path)
    out = _out_dir(out_dir)
    summary = RunSummary(loaded.metadata["gamma_optimal"], loaded.metadata["gamma_achieved"])
    run_analysis(cfg, loaded.controller, out, summary)
    _finish(summary, out)


@cli.command()
@click.argument("controller", type=click.Path(exists=True, dir_okay=False))
@config_option
@out_option
def simulate(controller, config_path, out_dir):
    """Closed-loop simulation with nominal inertia."""
    cfg, loaded = _load_with_overrides(controller, config_path)
    out = _out_dir(out_dir)
    summary = RunSummary(loaded.metadata["gamma_optimal"], loaded.metadata["gamma_achieved"])
    run_simulation(cfg, loaded.controller, out, summary)
    _finish(summary, out)


@cli.command()
@click.argument("controller", type=click.Path(exists=True, dir_okay=False))
@config_option
@out_option
def sweep(controller, config_path, out_dir):
    """Simulations over all 27 inertia corners."""
    cfg, loaded = _load_with_overrides(controller, config_path)
    out = _out_dir(out_dir)
    summary = RunSummary(loaded.metadata["gamma_optimal"], loaded.metadata["gamma_achieved"])
    run_sweep(cfg, loaded.controller, out, summary)
    _finish(summary, out)


@cli.command()
@config_option
@out_option
def validate(config_path, out_dir):
    """Synthesis, analysis, simulation, sweep and certificate in one run."""
    cfg = load_config(config_path)
    out = _out_dir(out_dir)
    summary = RunSummary()
    syn = _synthesize_or_exit(cfg, summary)
    save_controller(out / "controller.npz", cfg, syn)
    # analyses run on the reloaded artifact, as the standalone commands do
    K = load_controller(out / "controller.npz").controller
    run_analysis(cfg, K, out, summary)
    if cfg.model == "abacus":
        run_simulation(cfg, K, out, summary)
        run_sweep(cfg, K, out, summary)
    run_certificate(cfg, syn, summary)
    click.echo(f"gamma_opt = {syn.gamma_opt:.6f}")
    _finish(summary, out)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="perisat", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_CONFIG
    except RequirementFailure as exc:
        click.echo(f"requirement failed: {exc}", err=True)
        return EXIT_REQUIREMENT
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
