import numpy as np
import pytest

from perisat.config import parse_config
from perisat.pipeline import synthesize_weighted


@pytest.fixture(scope="session")
def abacus_config():
    return parse_config("")


@pytest.fixture(scope="session")
def abacus_design(abacus_config):
    """Default Abacus synthesis, shared across test modules."""
    cfg = abacus_config
    plant = cfg.plant()
    We, Wu, sc = cfg.weights(plant)
    s = cfg["synthesis"]
    syn = synthesize_weighted(plant, We, Wu, sc, cfg.grid(), cfg.bisection(),
                              s["rde_tol"], s["rde_max_periods"])
    return {"config": cfg, "plant": plant, "params": cfg.satellite, "We": We, "Wu": Wu,
            "scalings": sc, "synthesis": syn, "controller": syn.controller}


@pytest.fixture(scope="session")
def abacus_margins(abacus_design):
    from perisat.analysis import loop_margins

    d = abacus_design
    return loop_margins(d["plant"], d["controller"], np.arange(100) / 100,
                        freqs=d["config"].margin_freqs(), period=d["params"].period)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line for a criterion, print it, and assert it."""

    def report(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
