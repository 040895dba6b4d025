import hypothesis
import numpy as np
import pytest

from kamtori import GOLDEN_MEAN, DissipativeStandardMap

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def omega():
    return GOLDEN_MEAN


@pytest.fixture(scope="session")
def fam():
    return DissipativeStandardMap(kappa=0.5, alpha=1.0, a=1)


@pytest.fixture(scope="session")
def base_torus(fam, omega):
    return fam.unperturbed_torus(omega, 32)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
