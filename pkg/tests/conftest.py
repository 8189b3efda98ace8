import numpy as np
import pytest

from umpcodes import _kernels
from umpcodes._kernels import _pykernels


def _backends():
    out = [_pykernels]
    try:
        from umpcodes._kernels import _ckernels
        out.append(_ckernels)
    except ImportError:
        pass
    return out


@pytest.fixture(params=_backends(), ids=lambda m: m.NAME)
def kernel_backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = request.param
    for name in ("viterbi", "forward", "scl"):
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return mod.NAME


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
