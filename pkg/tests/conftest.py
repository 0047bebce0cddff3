import numpy as np
import pytest

from llecont.model import Params

# detuning/dispersion set of the numerical studies
D, F0, K1 = -0.1, 2.0, 1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def p_study():
    return Params(d=D, zeta=3.0, omega=1.0, f0=F0, f1=0.0, k1=K1)
