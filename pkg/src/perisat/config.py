"""Scenario configuration: INI sections with unit-suffixed keys."""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import PerisatError
from .ltp import LtpSystem, TimeGrid
from .satellite import AbacusParams, build_abacus
from .synthesis import BisectionConfig
from .weighting import (ScalingSet, diagonal_weight, identity_weight, make_control_weight,
                        make_sensitivity_weight)

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "DEFAULT_CONFIG_TEXT"]


class ConfigError(PerisatError):
    pass


DEFAULT_CONFIG_TEXT = """\
[scenario]
model = abacus

[satellite]
orbit_rate_rad_per_s = 7.292e-5
J1_kg_m2 = 2.8e13
J2_kg_m2 = 1.8e13
J3_kg_m2 = 4.6e13
literal_inertia_exponent = false

[lti]
A = -1
B = 1
C = 1
period_s = 10

[weights]
mode = mixed
omega_bw_rad_per_s = 1.0e-5
omega_u_rad_per_s = 1.3e-3
epsilon = 1e-4
Ve_deg = 0.5, 0.2, 0.5
Vu_Nm = 72100, 259560, 72100
Vd_Nm = 23072, 57680, 23072

[synthesis]
grid_points_per_orbit = 1000
rde_tol = 1e-9
rde_max_periods = 200
gamma_lower = 1.000001
gamma_upper = 100
bisection_rel_tol = 1e-3
bisection_max_iter = 40
suboptimality = 1.1

[simulation]
theta0_deg = 10, 10, 10
horizon_orbits = 5
steps_per_orbit = 10000
disturbance = true
sweep_perturbs_disturbance = false

[analysis]
margin_orbit_points = 100
shape_orbit_points = 20
margin_freq_min_rad_per_s = 1e-8
margin_freq_max_rad_per_s = 1e-1
margin_freq_points = 400
shape_freq_min_rad_per_s = 1e-7
shape_freq_max_rad_per_s = 1e-2
shape_freq_points = 100
"""

_SCHEMA = {
    "scenario": {"model": "choice:abacus,lti"},
    "satellite": {"orbit_rate_rad_per_s": "pos", "J1_kg_m2": "pos", "J2_kg_m2": "pos",
                  "J3_kg_m2": "pos", "literal_inertia_exponent": "bool"},
    "lti": {"A": "matrix", "B": "matrix", "C": "matrix", "period_s": "pos"},
    "weights": {"mode": "choice:mixed,identity", "omega_bw_rad_per_s": "pos",
                "omega_u_rad_per_s": "pos", "epsilon": "unit", "Ve_deg": "vec",
                "Vu_Nm": "vec", "Vd_Nm": "vec"},
    "synthesis": {"grid_points_per_orbit": "int", "rde_tol": "pos", "rde_max_periods": "int",
                  "gamma_lower": "pos", "gamma_upper": "pos", "bisection_rel_tol": "pos",
                  "bisection_max_iter": "int", "suboptimality": "pos"},
    "simulation": {"theta0_deg": "vec_any", "horizon_orbits": "pos", "steps_per_orbit": "int",
                   "disturbance": "bool", "sweep_perturbs_disturbance": "bool"},
    "analysis": {"margin_orbit_points": "int", "shape_orbit_points": "int",
                 "margin_freq_min_rad_per_s": "pos", "margin_freq_max_rad_per_s": "pos",
                 "margin_freq_points": "int", "shape_freq_min_rad_per_s": "pos",
                 "shape_freq_max_rad_per_s": "pos", "shape_freq_points": "int"},
}


def _parse_value(kind: str, raw: str, where: str):
    try:
        if kind.startswith("choice:"):
            opts = kind.split(":", 1)[1].split(",")
            v = raw.strip().lower()
            if v not in opts:
                raise ValueError(f"expected one of {opts}")
            return v
        if kind == "bool":
            v = raw.strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")
        if kind == "int":
            v = int(raw)
            if v < 1:
                raise ValueError("must be a positive integer")
            return v
        if kind in ("pos", "unit"):
            v = float(raw)
            if not (math.isfinite(v) and v > 0) or (kind == "unit" and v >= 1):
                raise ValueError("out of range")
            return v
        if kind in ("vec", "vec_any"):
            v = np.array([float(x) for x in raw.split(",")])
            if not np.all(np.isfinite(v)) or (kind == "vec" and np.any(v <= 0)):
                raise ValueError("entries must be finite" + (" and positive" if kind == "vec" else ""))
            return v
        if kind == "matrix":
            rows = [[float(x) for x in r.split(",")] for r in raw.split(";")]
            if len({len(r) for r in rows}) != 1:
                raise ValueError("ragged matrix")
            return np.array(rows)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc} (got {raw!r})") from None
    raise AssertionError(kind)


@dataclass
class ScenarioConfig:
    values: dict
    text: str = ""

    def __getitem__(self, key):
        return self.values[key]

    @property
    def model(self) -> str:
        return self.values["scenario"]["model"]

    @property
    def satellite(self) -> AbacusParams:
        s = self.values["satellite"]
        return AbacusParams(s["orbit_rate_rad_per_s"], s["J1_kg_m2"], s["J2_kg_m2"],
                            s["J3_kg_m2"], literal_exponent=s["literal_inertia_exponent"])

    def plant(self) -> LtpSystem:
        if self.model == "abacus":
            return build_abacus(self.satellite)
        s = self.values["lti"]
        return LtpSystem.lti(s["A"], s["B"], s["C"])

    @property
    def period(self) -> float:
        if self.model == "abacus":
            return self.satellite.period
        return self.values["lti"]["period_s"]

    def grid(self) -> TimeGrid:
        return TimeGrid(self.period, self.values["synthesis"]["grid_points_per_orbit"])

    def weights(self, plant: LtpSystem):
        """``(We, Wu, scalings)`` for the configured weighting mode."""
        w = self.values["weights"]
        ny, nu = plant.ny, plant.nu
        if w["mode"] == "identity":
            return identity_weight(ny), identity_weight(nu), ScalingSet.identity(ny, nu)
        for key, n in (("Ve_deg", ny), ("Vu_Nm", nu), ("Vd_Nm", nu)):
            if w[key].size != n:
                raise ConfigError(f"weights.{key}: expected {n} entries, got {w[key].size}")
        We = diagonal_weight([make_sensitivity_weight(w["omega_bw_rad_per_s"], w["epsilon"])] * ny)
        Wu = diagonal_weight([make_control_weight(w["omega_u_rad_per_s"])] * nu)
        return We, Wu, ScalingSet.from_degrees(w["Ve_deg"], w["Vu_Nm"], w["Vd_Nm"])

    def bisection(self) -> BisectionConfig:
        s = self.values["synthesis"]
        try:
            return BisectionConfig(s["gamma_lower"], s["gamma_upper"], s["bisection_rel_tol"],
                                   s["bisection_max_iter"], s["suboptimality"])
        except ValueError as exc:
            raise ConfigError(f"synthesis: {exc}") from None

    def margin_freqs(self) -> np.ndarray:
        a = self.values["analysis"]
        return np.logspace(math.log10(a["margin_freq_min_rad_per_s"]),
                           math.log10(a["margin_freq_max_rad_per_s"]), a["margin_freq_points"])

    def shape_freqs(self) -> np.ndarray:
        a = self.values["analysis"]
        return np.logspace(math.log10(a["shape_freq_min_rad_per_s"]),
                           math.log10(a["shape_freq_max_rad_per_s"]), a["shape_freq_points"])


def _read(text: str, parser: configparser.ConfigParser, source: str):
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(text: str = "", source: str = "<config>") -> ScenarioConfig:
    """Defaults overlaid with ``text``; unknown sections or keys are rejected."""
    user = configparser.ConfigParser(interpolation=None)
    user.optionxform = str
    _read(text, user, source)
    for sec in user.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in user[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
    merged = configparser.ConfigParser(interpolation=None)
    merged.optionxform = str
    _read(DEFAULT_CONFIG_TEXT, merged, "<defaults>")
    merged.read_dict({s: dict(user[s]) for s in user.sections()})
    values = {sec: {key: _parse_value(kind, merged[sec][key], f"{sec}.{key}")
                    for key, kind in keys.items()}
              for sec, keys in _SCHEMA.items()}
    s = values["synthesis"]
    if s["gamma_lower"] >= s["gamma_upper"]:
        raise ConfigError("synthesis.gamma_lower must be below synthesis.gamma_upper")
    a = values["analysis"]
    for kind in ("margin", "shape"):
        if a[f"{kind}_freq_min_rad_per_s"] >= a[f"{kind}_freq_max_rad_per_s"]:
            raise ConfigError(f"analysis.{kind}_freq_min_rad_per_s must be below the maximum")
    if values["simulation"]["theta0_deg"].size != 3:
        raise ConfigError("simulation.theta0_deg needs three entries")
    out = io.StringIO()
    merged.write(out)
    return ScenarioConfig(values, out.getvalue())


def load_config(path=None) -> ScenarioConfig:
    if path is None:
        return parse_config("")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, str(path))
