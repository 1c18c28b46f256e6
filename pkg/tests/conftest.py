"""Shared fixtures: expensive pipeline stages are computed once per session."""

from __future__ import annotations

import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pps4bp import continuation as ct
from pps4bp import equalmass as em

# Property tests: at least 200 cases each, derandomized (fixed seed) for reproducibility.
settings.register_profile(
    "pps4bp",
    max_examples=200,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pps4bp")

RNG_SEED = 20240611

ACCEPTANCE_LINES: list[str] = []
SWEEP_SECONDS: list[float] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(RNG_SEED)


@pytest.fixture(scope="session")
def shooting():
    return em.solve_equal_mass()


@pytest.fixture(scope="session")
def baseline_traj(shooting):
    return em.baseline_trajectory(shooting)


@pytest.fixture(scope="session")
def baseline(shooting):
    return em.baseline_orbit(shooting)


@pytest.fixture(scope="session")
def baseline_start(baseline_traj):
    traj, e_hat, _ = baseline_traj
    return traj.states[0].copy(), e_hat


@pytest.fixture(scope="session")
def sweep_records(baseline):
    """The continuation from m = 1 down to m = 0.30 (shared by several test modules)."""
    t0 = time.perf_counter()
    records = ct.sweep(1.0, 0.30, ct.ContinuationConfig(), seed=baseline)
    SWEEP_SECONDS.append(time.perf_counter() - t0)
    return records


@pytest.fixture(scope="session")
def sweep_by_mass(sweep_records):
    return {round(r.m, 2): r for r in sweep_records}
