import numpy as np
import pytest

from pme import geometry


@pytest.fixture(scope="session")
def quad_manifold():
    return geometry.quad_critical(0.5, 3)


@pytest.fixture(scope="session")
def quad_constants(quad_manifold):
    return geometry.fit_comparison_constants(quad_manifold)


@pytest.fixture(scope="session")
def all_builtins():
    return [
        geometry.euclidean(3),
        geometry.hyperbolic(2),
        geometry.quad_critical(0.5, 3),
        geometry.quad_critical(1.0, 2),
        geometry.log_critical(1.0, 2),
    ]


@pytest.fixture(scope="session")
def probe_rhos():
    return np.geomspace(1e-3, 1e3, 500)
