"""Shared profiles and map contexts for the test suite."""

import pytest

from breathing_billiard import genfun, radius
from breathing_billiard.radius import RadiusProfile

EPS = 0.5


@pytest.fixture(scope="session")
def static_profile():
    return RadiusProfile(1.0)


@pytest.fixture(scope="session")
def static_ctx(static_profile):
    # constant profile: sigma is infinite, pick a working strip
    return genfun.make_context(static_profile, 0.0, EPS, sigma=4.0)


@pytest.fixture(scope="session")
def static_ctx_c(static_profile):
    return genfun.make_context(static_profile, 0.1, EPS, sigma=4.0)


@pytest.fixture(scope="session")
def small_profile():
    # modest breathing profile with sigma just above 2; convenient scale for
    # quadrature and finite-difference oracles
    return RadiusProfile(2.0, ((1, 0.02),))


@pytest.fixture(scope="session")
def small_ctx(small_profile):
    return genfun.make_context(small_profile, 0.3, EPS)


@pytest.fixture(scope="session")
def reference_profile():
    # the classified single-harmonic profile at the scale of the worked
    # examples: sigma ~ 130, rotation window ~ (105, 114)
    return RadiusProfile(9000.0, ((1, 0.05),))


@pytest.fixture(scope="session")
def reference_ctx(reference_profile):
    return genfun.make_context(reference_profile, 1.0, EPS)


@pytest.fixture(scope="session")
def member():
    """Certifiable member constructed by the family search: the smallest mean
    whose rotation window is wider than 1."""
    mean, verdict = radius.find_member(1, 0.05, EPS, min_window=1.0)
    return radius.family_profile(1, 0.05, mean), mean, verdict


@pytest.fixture(scope="session")
def member_ctx(member):
    profile, _, _ = member
    return genfun.make_context(profile, 1.0, EPS)
