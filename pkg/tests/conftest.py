"""Shared fixtures: canonical profiles, interactions, and a seeded rng."""

import numpy as np
import pytest

from vpkit.profiles import Interaction, VelocityProfile


@pytest.fixture
def maxwellian():
    return VelocityProfile.maxwellian(1.0)


@pytest.fixture
def two_stream():
    return VelocityProfile.sum_of_maxwellians(
        [(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]
    )


@pytest.fixture
def repulsive():
    return Interaction.power_law(gamma=2.0, amplitude=1.0, sign=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)
