import os
from pathlib import Path

import numpy as np
import pytest

from ccportfolio import AssetUniverse, PortfolioProblem

ACCEPTANCE_RESULTS = {}

DATA_DIR = Path(__file__).parent / "data"


def random_universe(rng, n, scale=0.01):
    a = rng.normal(size=(n, n))
    cov = a @ a.T / n * scale
    cov = (cov + cov.T) / 2
    return AssetUniverse(rng.normal(0.05, 0.05, n), cov)


def u6():
    """Fixed 6-asset universe for the small-instance heuristic checks."""
    mu = np.array([0.04, 0.07, 0.09, 0.12, 0.15, 0.18])
    sd = np.array([0.08, 0.12, 0.15, 0.20, 0.25, 0.32])
    corr = np.full((6, 6), 0.3)
    np.fill_diagonal(corr, 1.0)
    return AssetUniverse(mu, corr * np.outer(sd, sd))


def random_repair_instance(rng):
    """A random (problem, selection, raw weights) triple whose bounds admit the budget."""
    n = int(rng.integers(2, 12))
    k = int(rng.integers(1, n + 1))
    sel = np.sort(rng.choice(n, k, replace=False))
    lower = rng.uniform(0, 1.0 / k, n) * rng.random()
    upper = np.minimum(1.0, lower + rng.uniform(0, 1, n))
    # make sure the selected upper bounds can absorb the budget
    short = 1.0 - upper[sel].sum()
    if short > 0:
        upper[sel] = np.minimum(1.0, upper[sel] + short / k + 1e-9)
    raw = rng.random(k) * (rng.random(k) < 0.9)
    u = AssetUniverse(np.zeros(n), np.eye(n))
    return PortfolioProblem(u, 0.5, k, lower, upper), sel, raw


def port1_path():
    env = os.environ.get("CCPORTFOLIO_PORT1")
    candidates = [Path(env)] if env else []
    candidates.append(DATA_DIR / "port1.txt")
    for p in candidates:
        if p.is_file():
            return p
    return None


@pytest.fixture
def u3():
    return AssetUniverse([0.1, 0.2, 0.3], np.diag([0.1, 0.1, 0.1]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy3_text():
    return "3\n0.001 0.02\n0.002 0.03\n0.003 0.04\n1 1 1.0\n2 2 1.0\n3 3 1.0\n1 2 0.5\n"


def uniform_problem(universe, lam=0.5, k=2, eps=0.01, delta=1.0):
    return PortfolioProblem.uniform(universe, lam, k, eps, delta)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = ""
        if rep.failed:
            detail = str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else rep.longrepr)
            detail = detail.splitlines()[0] if detail else ""
        ACCEPTANCE_RESULTS[number] = (title, rep.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, outcome, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number}: {status}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
