import numpy as np
import pytest

from cran_duality import _pykernels, kernels
from cran_duality.model import ChannelMatrix

ACCEPTANCE_LINES = []


@pytest.fixture
def scalar_channel():
    return ChannelMatrix([[1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend, patching the selected functions."""
    if request.param == "python":
        impl = _pykernels
    else:
        if not kernels.compiled_available():
            pytest.skip("compiled kernels not built")
        from cran_duality import _ckernels as impl
    for name in ("gamma_map", "fixed_point", "perron_root"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
