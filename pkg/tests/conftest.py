"""Shared fixtures: the default three-level system and prebuilt rate engines.

Engines are session-scoped because their construction (the batched T solves)
dominates the suite runtime; tables per beta are cheap afterwards.
"""

import dataclasses

import pytest

from floquet_ness.model import Truncation, paper_system
from floquet_ness.rates import RateEngine


@pytest.fixture(scope="session")
def spec():
    return paper_system()


@pytest.fixture(scope="session")
def trunc_std():
    return Truncation(nu_cut=8, e_cut=150.0, quad_points=40)


@pytest.fixture(scope="session")
def engine_std(spec, trunc_std):
    return RateEngine(spec, trunc_std)


@pytest.fixture(scope="session")
def trunc_deep():
    # beta -> 0 diagnostics need a deep momentum cutoff (the approach to the
    # infinite-temperature symmetries is logarithmic in the cutoff)
    return Truncation(nu_cut=6, e_cut=2000.0, quad_points=48)


@pytest.fixture(scope="session")
def engine_deep(spec, trunc_deep):
    return RateEngine(spec, trunc_deep)


@pytest.fixture(scope="session")
def spec_lam0():
    return paper_system(lambda_drive=0.0)


@pytest.fixture(scope="session")
def trunc_lam0():
    return Truncation(nu_cut=0, e_cut=200.0, quad_points=40)


@pytest.fixture(scope="session")
def engine_lam0(spec_lam0, trunc_lam0):
    return RateEngine(spec_lam0, trunc_lam0)


@pytest.fixture(scope="session")
def spec_vzero(spec):
    return dataclasses.replace(spec, coupling_strengths=(0.0, 0.0, 0.0))
