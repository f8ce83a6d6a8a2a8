"""Shared fixtures: solved reference instances, cached per session."""

import functools

import pytest

from wpcn_aloha.model import NetworkConfig, UserProfile, build_config, path_loss
from wpcn_aloha.solver import solve_proportional_fair


@functools.lru_cache(maxsize=None)
def solved_instance(K, r1, r2, p_avg=1.0, p_max=5.0):
    """(config, policy, diagnostics) for a two-ring study instance."""
    config = build_config(K, r1, r2, p_max=p_max, p_avg=p_avg)
    policy, diagnostics = solve_proportional_fair(config)
    return config, policy, diagnostics


def three_user_config(r1, r2, **kwargs):
    """K=3 instance: one user on the inner ring, two on the outer."""
    users = (
        UserProfile(eta=1.0, omega=path_loss(r1), m=3.0, distance=r1),
        UserProfile(eta=1.0, omega=path_loss(r2), m=3.0, distance=r2),
        UserProfile(eta=1.0, omega=path_loss(r2), m=3.0, distance=r2),
    )
    return NetworkConfig(users=users, **kwargs)


@pytest.fixture(scope="session")
def iv2_wide():
    """K=2, rings (10 m, 20 m), study defaults (clamped case)."""
    return solved_instance(2, 10.0, 20.0)


@pytest.fixture(scope="session")
def iv4_wide():
    return solved_instance(4, 10.0, 20.0)


@pytest.fixture(scope="session")
def interior2_wide():
    """K=2, rings (10 m, 20 m), p_avg = p_max: the cap never binds."""
    return solved_instance(2, 10.0, 20.0, p_avg=5.0)
