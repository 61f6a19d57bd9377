import numpy as np
import pytest

from scents import _kernels, _pykernels


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once with the active backend and once with the NumPy fallback."""
    if request.param == "python":
        monkeypatch.setattr(_kernels, "_impl", _pykernels)
    elif _kernels.BACKEND != "cython":
        pytest.skip("compiled extension not built")
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
