"""Controller artifact: ``.npz`` holding gain grids plus JSON metadata with the scenario config."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ScenarioConfig, parse_config
from .ltp import GriddedMatrixFunction, constant
from .synthesis import StructuredController
from .weighting import assemble_weighted_controller

__all__ = ["ARTIFACT_VERSION", "LoadedController", "save_controller", "load_controller"]

ARTIFACT_VERSION = 1


@dataclass(eq=False)
class LoadedController:
    config: ScenarioConfig
    controller: StructuredController
    metadata: dict


def save_controller(path, config: ScenarioConfig, synthesis) -> None:
    """Write the sampled ``L`` and ``F`` grids; ``synthesis`` is a :class:`WeightedSynthesis`."""
    grid = synthesis.Y.grid
    t = grid.points
    meta = {
        "config": config.text,
        "gamma_optimal": synthesis.gamma_opt,
        "gamma_achieved": synthesis.gamma_achieved,
        "period_s": grid.period,
        "grid_points": grid.n_points,
        "time_invariant": bool(synthesis.controller.realization.is_lti),
        "controller_states": synthesis.controller.nx,
    }
    with open(path, "wb") as fh:
        np.savez(fh, version=np.array(ARTIFACT_VERSION), metadata=np.array(json.dumps(meta, sort_keys=True)),
                 L=synthesis.L.sample(t), F=synthesis.controller.F.sample(t))


def load_controller(path) -> LoadedController:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read controller artifact: {exc}") from None
    with data:
        if "version" not in data.files:
            raise ConfigError("controller artifact has no version field")
        version = int(data["version"])
        if version != ARTIFACT_VERSION:
            raise ConfigError(f"unsupported controller artifact version {version}")
        meta = json.loads(str(data["metadata"]))
        L, F = data["L"], data["F"]
    cfg = parse_config(meta["config"], "<artifact>")
    plant = cfg.plant()
    We, Wu, scalings = cfg.weights(plant)
    if meta["time_invariant"]:
        Lf, Ff = constant(L[0]), constant(F[0])
    else:
        Lf = GriddedMatrixFunction(meta["period_s"], L)
        Ff = GriddedMatrixFunction(meta["period_s"], F)
    K = assemble_weighted_controller(plant, Lf, Ff, We, Wu, scalings,
                                     meta["gamma_achieved"], meta["gamma_optimal"])
    return LoadedController(cfg, K, meta)
