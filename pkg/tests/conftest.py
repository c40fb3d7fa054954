"""Shared fixtures.

The desk-scale case-study runs take ~30 s each (millions of RK4 steps), so
they are session-scoped and shared between the scenario reproduction tests
and the acceptance suite.
"""

from __future__ import annotations

import pathlib

import pytest

from phgrid.scenarios import builtin_scenarios, run_scenario

GOLDEN = pathlib.Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def two_machine():
    from phgrid.scenarios import two_machine_default

    return two_machine_default()


@pytest.fixture(scope="session")
def desk_symmetric_run_seed1():
    scn = builtin_scenarios()["symmetric-desk"]
    return scn, run_scenario(scn, seed=1)


@pytest.fixture(scope="session")
def desk_symmetric_run_seed2():
    scn = builtin_scenarios()["symmetric-desk"]
    return scn, run_scenario(scn, seed=2)


@pytest.fixture(scope="session")
def desk_torque_mismatch_run():
    scn = builtin_scenarios()["torque-mismatch-desk"]
    return scn, run_scenario(scn)


@pytest.fixture(scope="session")
def desk_high_flux_run():
    scn = builtin_scenarios()["high-flux-desk"]
    return scn, run_scenario(scn)
