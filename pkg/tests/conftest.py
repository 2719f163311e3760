import numpy as np
import pytest

from diracgap import kernels

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = kernels.available_backends()[request.param]
    monkeypatch.setattr(kernels, "_impl", mod)
    monkeypatch.setattr(kernels, "BACKEND", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
