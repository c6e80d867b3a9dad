import numpy as np
import pytest

from nsfinsler import kernels
from nsfinsler.matrix_finsler import family_min_eigs, gen_mfl_pair
from nsfinsler.models import FinslerInstance
from nsfinsler.oracle import alpha_linesearch, cone_search, lambda_min_profile

ACCEPTANCE = {}


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile (or load from cache) every numba kernel once so timed tests
    # measure the algorithms, not the JIT.
    inst = FinslerInstance(np.diag([1.0, -1.0]), np.diag([1.0, -2.0]))
    for name in ("numpy", "numba"):
        if kernels.get(name) is None:
            continue
        prev = kernels.use(name)
        alpha_linesearch(inst)
        lambda_min_profile(inst, [0.0, 1.0])
        cone_search(inst.M, inst.N, samples=20)
        pair = gen_mfl_pair(2, 2, 0, "feasible")
        family_min_eigs(pair, np.zeros((2, 2 - np.linalg.matrix_rank(pair.N22), 2)))
        kernels.use(prev)


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    if kernels.get(request.param) is None:
        pytest.skip("numba unavailable")
    prev = kernels.use(request.param)
    yield request.param
    kernels.use(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
