"""Shared fixtures.  Expensive pipeline results are computed once per session."""

from __future__ import annotations

import numpy as np
import pytest

from magstark.config import RunConfig
from magstark.discretization import BasisSpec
from magstark.model import PotentialModel, ScheduleParams
from magstark.resonance import unperturbed_levels


@pytest.fixture(scope="session")
def default_model() -> PotentialModel:
    return PotentialModel()


@pytest.fixture(scope="session")
def default_schedule() -> ScheduleParams:
    return ScheduleParams()


@pytest.fixture(scope="session")
def default_basis() -> BasisSpec:
    return BasisSpec()


@pytest.fixture(scope="session")
def ground_level(default_model, default_basis):
    """Lowest impurity level of ``H(0)`` at ``B = 1`` with the default model."""
    return unperturbed_levels(1.0, default_model, default_basis)[0]


@pytest.fixture(scope="session")
def default_sweep_rows():
    from magstark.sweep import run_sweep

    return run_sweep(RunConfig(), jobs=None)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


_ESTIMATES: dict = {}


@pytest.fixture(scope="session")
def estimate_at(default_model, default_basis, ground_level):
    """Cached ``estimate_resonance`` at ``B = 1`` with the production ``b``."""
    from magstark.model import FieldParams
    from magstark.resonance import estimate_resonance

    cfg = RunConfig()

    def get(F: float, b: float | None = None):
        b = cfg.sweep.b_auto if b is None else b
        key = (F, b)
        if key not in _ESTIMATES:
            _ESTIMATES[key] = estimate_resonance(
                FieldParams(1.0, F, b), default_model, default_basis, ground_level,
                window_c=cfg.sweep.window_c, eps=cfg.schedule.eps, bump=cfg.sweep.basis_bump,
            )
        return _ESTIMATES[key]

    return get


@pytest.fixture(scope="session")
def h2_report_at(default_model, default_schedule, default_basis, ground_level):
    from magstark.model import FieldParams
    from magstark.resonance import h2_crosscheck

    cache: dict = {}

    def get(F: float):
        if F not in cache:
            b = default_schedule.b_of(F) if F > 0 else 0.0
            cache[F] = h2_crosscheck(FieldParams(1.0, F, b), default_model, default_schedule,
                                     default_basis, ground_level)
        return cache[F]

    return get


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run

ACCEPTANCE: dict[int, str] = {}


def record_acceptance(n: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[n] = f"ACCEPTANCE {n:2d} {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
