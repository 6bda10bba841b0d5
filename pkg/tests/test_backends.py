import os
import subprocess
import sys

import numpy as np
import pytest

from couponflux import _backend, _pykernels
from couponflux.reset import ResetParams, success_probability

pytestmark = pytest.mark.skipif(not _backend.COMPILED, reason="compiled kernels not built")

CASES = [
    ("clumsy_batch", (1, 0.5)),
    ("clumsy_batch", (6, 0.7)),
    ("careless_batch", (1, 0.5)),
    ("careless_batch", (4, 0.8)),
    ("combined_batch", (1, 0.8, 0.5)),
    ("combined_batch", (4, 0.9, 0.85)),
    ("reset_direct_batch", (1, 0.5, None)),
    ("reset_direct_batch", (6, 0.2, None)),
    ("reset_direct_batch", (3, 0.25, np.array([0.1, 0.4, 1.0]))),
    ("reset_regen_batch", (6, 0.2, success_probability(ResetParams(6, 0.2)))),
    ("reset_regen_batch", (1, 0.5, success_probability(ResetParams(1, 0.5)))),
]


@pytest.mark.parametrize("name,args", CASES)
def test_compiled_and_python_kernels_are_bit_identical(name, args):
    cy = _backend.get("cython")
    for seed, start in [(0, 0), (123, 40), (2 ** 64 - 1, 7)]:
        a = getattr(cy, name)(*args, seed, start, 60, 10 ** 7)
        b = getattr(_pykernels, name)(*args, seed, start, 60, 10 ** 7)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("name,args", [("clumsy_batch", (8, 0.5)), ("careless_batch", (5, 0.5)),
                                       ("reset_direct_batch", (8, 0.3, None))])
def test_censoring_is_identical(name, args):
    cy = _backend.get("cython")
    a = getattr(cy, name)(*args, 9, 0, 40, 30)
    b = getattr(_pykernels, name)(*args, 9, 0, 40, 30)
    assert np.array_equal(a, b)
    assert (a == -1).any()


def test_pure_python_selected_by_environment():
    env = dict(os.environ, COUPONFLUX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "from couponflux import _backend; print(_backend.NAME, _backend.COMPILED)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "False"]
