import os
import subprocess
import sys

import numpy as np
import pytest

from qrepeater import _accel, kernels
from qrepeater.bell import BellState, purify, swap_states, symmetric_chain_oracle

from oracles import random_bell_states

needs_numba = pytest.mark.skipif(not _accel.numba_available(), reason="numba not installed")


@pytest.fixture(scope="module")
def batch():
    rng = np.random.default_rng(11)
    return random_bell_states(rng, 500), random_bell_states(rng, 500)


def scalar_reference(fn, s1, s2):
    return np.array([fn(BellState(*x), BellState(*y)) for x, y in zip(s1, s2)], dtype=object)


def test_purify_numpy_matches_scalar(batch):
    s1, s2 = batch
    p, out = kernels.purify_batch_numpy(s1, s2)
    for i, (x, y) in enumerate(zip(s1, s2)):
        pr, o = purify(BellState(*x), BellState(*y))
        assert p[i] == pytest.approx(pr, abs=1e-14)
        np.testing.assert_allclose(out[i], o, atol=1e-13)


def test_swap_numpy_matches_scalar(batch):
    s1, s2 = batch
    out = kernels.swap_batch_numpy(s1, s2)
    for i, (x, y) in enumerate(zip(s1, s2)):
        np.testing.assert_allclose(out[i], swap_states(BellState(*x), BellState(*y)), atol=1e-14)


@needs_numba
def test_numba_matches_numpy(batch):
    s1, s2 = batch
    p_nb, o_nb = kernels.purify_batch_numba(np.ascontiguousarray(s1), np.ascontiguousarray(s2))
    p_np, o_np = kernels.purify_batch_numpy(s1, s2)
    np.testing.assert_allclose(p_nb, p_np, atol=1e-14)
    np.testing.assert_allclose(o_nb, o_np, atol=1e-13)
    np.testing.assert_allclose(
        kernels.swap_batch_numba(np.ascontiguousarray(s1), np.ascontiguousarray(s2)),
        kernels.swap_batch_numpy(s1, s2),
        atol=1e-14,
    )


def test_loop_forms_match_numpy_without_jit(batch):
    s1, s2 = batch
    p, out = kernels._purify_loop(s1[:20], s2[:20])
    p_np, o_np = kernels.purify_batch_numpy(s1[:20], s2[:20])
    np.testing.assert_allclose(p, p_np, atol=1e-14)
    np.testing.assert_allclose(out, o_np, atol=1e-13)
    np.testing.assert_allclose(kernels._swap_loop(s1[:20], s2[:20]), kernels.swap_batch_numpy(s1[:20], s2[:20]))


def test_dispatch_accepts_single_states():
    p, out = kernels.purify_batch([0.638, 0, 0, 0.362], [0.638, 0, 0, 0.362])
    assert p[0] == pytest.approx(0.638**2 + 0.362**2)


def test_backend_flag_respected():
    env = dict(os.environ, QREPEATER_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import qrepeater.kernels as k; print(k.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def _mc_samplers():
    yield "numpy", kernels.symmetric_cost_samples_numpy
    if _accel.numba_available():
        yield "numba", lambda p, n, s: kernels.symmetric_cost_samples_numba(np.asarray(p, float), n, s)


@pytest.mark.parametrize("name,sampler", list(_mc_samplers()))
def test_monte_carlo_agrees_with_chain_oracle(name, sampler):
    chain = symmetric_chain_oracle(0.638, 0.98)
    p_rounds = [s.p_success for s in chain.steps]
    costs = sampler(p_rounds, 100_000, 2024)
    mean = costs.mean()
    se = costs.std(ddof=1) / np.sqrt(costs.size)
    assert abs(mean - chain.expected_base_pairs) <= 3 * se, (name, mean, chain.expected_base_pairs, se)


def test_monte_carlo_no_rounds():
    assert (kernels.symmetric_cost_samples_numpy([], 10, 0) == 1).all()


def test_monte_carlo_certain_success():
    # every purification succeeds, so a depth-k tree costs exactly 2^k
    assert (kernels.symmetric_cost_samples_numpy([1.0, 1.0, 1.0], 50, 1) == 8).all()
    assert (kernels._symmetric_cost_loop(np.array([1.0, 1.0]), 5, 1) == 4).all()
