import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ptshock.deformation_map import MappedProfile
from ptshock.model import DeformedSystem
from ptshock.profile_dsl import parse

settings.register_profile("ptshock", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ptshock")

warnings.filterwarnings("ignore", category=RuntimeWarning)

CAUCHY = "1/(1+x^2)"
ODD = "x/(1+x^2)"
GAUSS = "exp(-x^2-i*pi/4)"
MULTI = "1/(1+(x-1)^2)+1/(1+(x+1)^2)"
COMPLEX_W0 = "exp(i*pi/4)/(x^2+1)"


@pytest.fixture(scope="session")
def cauchy_u0():
    return parse(CAUCHY)


@pytest.fixture(scope="session")
def eps3():
    return DeformedSystem(3)


@pytest.fixture(scope="session")
def cauchy_w0(cauchy_u0, eps3):
    return MappedProfile(cauchy_u0, eps3)


@pytest.fixture(scope="session")
def complex_w0():
    return parse(COMPLEX_W0)


def max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
