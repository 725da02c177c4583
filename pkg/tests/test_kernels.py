import os
import subprocess
import sys

import numpy as np
import pytest

from feedback_mediator import kernels
from feedback_mediator._accel import NUMBA_AVAILABLE

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")


def data(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 6, 7).astype(np.float64)
    b = rng.integers(0, 6, 11).astype(np.float64)
    return rng, a, b


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_auc_u_paths_agree(seed):
    _, a, b = data(seed)
    assert kernels.auc_u_nb(a, b) == kernels.auc_u_np(a, b)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_bootstrap_paths_agree(seed):
    rng, a, b = data(seed)
    ia = rng.integers(0, len(a), (700, len(a)))
    ib = rng.integers(0, len(b), (700, len(b)))
    assert np.array_equal(kernels.bootstrap_auc_nb(a, b, ia, ib), kernels.bootstrap_auc_np(a, b, ia, ib))


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_take_sum_paths_agree(seed):
    rng, a, b = data(seed)
    values = np.concatenate([a, b])
    idx = np.argsort(rng.random((300, len(values))), axis=1)[:, :4]
    np.testing.assert_allclose(kernels.row_take_sum_nb(values, idx, 4), kernels.row_take_sum_np(values, idx, 4), rtol=0, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("seed", range(5))
def test_paired_dot_paths_agree(seed):
    rng, a, _ = data(seed)
    x = a - a.mean()
    y = rng.normal(size=len(a))
    perms = np.argsort(rng.random((300, len(a))), axis=1)
    np.testing.assert_allclose(kernels.row_paired_dot_nb(x, y, perms), kernels.row_paired_dot_np(x, y, perms), rtol=0, atol=1e-12)


def test_kernel_tables_cover_same_names():
    assert set(kernels.NUMBA_KERNELS) == set(kernels.NUMPY_KERNELS)


SCRIPT = """
from feedback_mediator import kernels
from feedback_mediator.stats import TwoGroupSample, ResampleConfig, permutation_p, bootstrap_ci
s = TwoGroupSample([0.9, 0.7, 0.66], [0.8, 0.5, 0.2, 0.55, 0.1, 0.3] * 6)
cfg = ResampleConfig(seed=5, permutations=3000, exact_cutoff=0, bootstrap_reps=400)
print(kernels.BACKEND, permutation_p(s, 'auc', cfg).p, repr(bootstrap_ci(s, 'auc', 0.95, cfg)))
"""


def run_backend(disable: bool) -> str:
    env = dict(os.environ)
    env.pop("NUMBA_DISABLE_JIT", None)
    env.pop("FEEDBACK_MEDIATOR_DISABLE_NUMBA", None)
    if disable:
        env["FEEDBACK_MEDIATOR_DISABLE_NUMBA"] = "1"
    return subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True).stdout.split()


@needs_numba
def test_env_flag_selects_backend_with_identical_results():
    fast = run_backend(False)
    slow = run_backend(True)
    assert fast[0] == "numba" and slow[0] == "numpy"
    assert fast[1:] == slow[1:]
