import numpy as np
import pytest

from barrier_scatter import PotentialModel, barrier_spectrum


@pytest.fixture(scope="session")
def aniso2():
    """2D anisotropic gaussian barrier with rates (1, 2)."""
    model = PotentialModel(kind="anisotropic-gaussian", n=2, E0=1.0,
                           Q=np.diag([1.0, 4.0]))
    return model, barrier_spectrum(model)


@pytest.fixture(scope="session")
def cubic2():
    """2D gaussian-plus-cubic barrier, rates (1, 2), with a resonant
    third-order coupling into the fast direction."""
    model = PotentialModel(kind="gaussian-plus-cubic", n=2, E0=1.0,
                           Q=np.diag([1.0, 4.0]), cubic={(2, 1): 0.05})
    return model, barrier_spectrum(model)


@pytest.fixture(scope="session")
def radial2():
    """2D isotropic gaussian barrier, rates (1, 1)."""
    model = PotentialModel(kind="gaussian", n=2, E0=1.0, q=1.0)
    return model, barrier_spectrum(model)
