import numpy as np
import pytest

from rankdistill import backend


def backend_params():
    params = [pytest.param(backend.get_kernels("python"), id="python")]
    if backend.HAVE_COMPILED:
        params.append(pytest.param(backend.get_kernels("compiled"), id="compiled"))
    return params


@pytest.fixture(params=backend_params())
def kernels(request):
    """Runs the test once per available kernel backend."""
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
