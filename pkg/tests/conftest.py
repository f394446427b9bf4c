import time
from dataclasses import dataclass

import numpy as np
import pytest

from crashskew.garchs import GarchSParams, gram_charlier_loglik
from crashskew.optimizer import fit_garchs
from crashskew.simulate import SimConfig, simulate
from crashskew.synthetic import REFERENCE_POINT

RECOVERY_SEEDS = range(20)
RECOVERY_N = 5000


@dataclass
class Recovery:
    rows: list  # (seed, fit, loglik at the true parameters)
    elapsed: float


@pytest.fixture(scope="session")
def reference_recovery():
    """GARCH-S fits on 20 seeded paths simulated at the reference parameter point."""
    t0 = time.perf_counter()
    rows = []
    for seed in RECOVERY_SEEDS:
        path = simulate(SimConfig(REFERENCE_POINT, RECOVERY_N, seed=seed))
        fit = fit_garchs(path.returns)
        true_ll = gram_charlier_loglik(REFERENCE_POINT, path.returns)[0]
        rows.append((seed, fit, true_ll))
    return Recovery(rows, time.perf_counter() - t0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
