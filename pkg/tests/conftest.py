"""Shared fixtures.

The boundary-value solves are the expensive part of the suite, so each
canonical solution is computed once per session and shared read-only.
"""

from __future__ import annotations

import pytest

from sonic_flow import (
    DopingProfile,
    ModelParams,
    solve_c1_transonic,
    solve_sonic,
    solve_subsonic_elliptic,
    solve_subsonic_shooting,
    solve_supersonic,
    solve_transonic_shock,
)


def params(tau, b, gamma=1.0):
    return ModelParams(tau=tau, doping=DopingProfile.constant(b), gamma=gamma)


@pytest.fixture(scope="session")
def p_main():
    return params(15.0, 1.5)


@pytest.fixture(scope="session")
def p_shock():
    return params(50.0, 1.5)


@pytest.fixture(scope="session")
def p_smooth():
    return params(0.1, 1.5)


@pytest.fixture(scope="session")
def sonic_sol():
    return solve_sonic(params(2.0, 1.0))


@pytest.fixture(scope="session")
def subsonic_sol(p_main):
    return solve_subsonic_shooting(p_main)


@pytest.fixture(scope="session")
def elliptic_sol(p_main):
    return solve_subsonic_elliptic(p_main)


@pytest.fixture(scope="session")
def supersonic_sol(p_main):
    return solve_supersonic(p_main)


@pytest.fixture(scope="session")
def shock_sol(p_shock):
    return solve_transonic_shock(p_shock, 0.9)


@pytest.fixture(scope="session")
def shock_sol_95(p_shock):
    return solve_transonic_shock(p_shock, 0.95)


@pytest.fixture(scope="session")
def c1_sol(p_smooth):
    return solve_c1_transonic(p_smooth, 0.5)
