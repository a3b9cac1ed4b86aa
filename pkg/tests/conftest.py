import numpy as np
import pytest

import robustdrift as rd
from robustdrift.cli import default_config_path


def make_market(sigma=None, d=2, m=2, r=0.0, gamma=0.0, h=1.0, T=1.0, x0=1.0):
    if sigma is None:
        sigma = np.eye(d)
    return rd.validate_market(
        rd.MarketParams(d=d, m=m, r=r, sigma=sigma, gamma=gamma, h=h, T=T, x0=x0)
    )


@pytest.fixture(scope="session")
def identity_market():
    """d=2, sigma=I, log utility, full-investment constraint."""
    return make_market()


@pytest.fixture(scope="session")
def identity_geometry(identity_market):
    return rd.constraint_geometry(identity_market)


@pytest.fixture(scope="session")
def table1_config():
    return rd.parse_config(default_config_path())
