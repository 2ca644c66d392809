"""Shared fixtures: grids, a short inner series and the linearized operator."""

import numpy as np
import pytest

from src.numerics.grid import make_grid
from src.profiles.inner import build_inner_series
from src.spectral.operator import LinearizedOperator, eigenpairs
from src.utils.config import GridSpec, InnerConfig, Params
from src.utils.logger import configure_logging


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    configure_logging("WARNING")


@pytest.fixture(scope="session")
def uniform_grid():
    return make_grid(GridSpec.uniform(end=8.0, count=801))


@pytest.fixture(scope="session")
def graded_grid():
    return make_grid(GridSpec.graded(core=4.0, core_count=201, end=2000.0, tail_count=600))


@pytest.fixture(scope="session")
def params():
    return Params(nu=0.02, alpha0=0.01, delta=0.5)


@pytest.fixture(scope="session")
def short_inner(params):
    config = InnerConfig(
        order=3,
        enforce_matching_constraint=False,
        tail_fit_orders=1,
        fit_window=(40.0, 300.0),
        grid=GridSpec.graded(core=4.0, core_count=201, end=400.0, tail_count=300),
    )
    return build_inner_series(params, config)


@pytest.fixture(scope="session")
def line_operator():
    return LinearizedOperator.build(40.0, 0.2)


@pytest.fixture(scope="session")
def eigen(line_operator):
    return eigenpairs(line_operator)


@pytest.fixture
def gaussian():
    def profile(rho, amplitude=0.3, width=1.0):
        return amplitude * np.exp(-((rho / width) ** 2)).astype(complex)

    return profile
