import os
import subprocess
import sys

import numpy as np
import pytest

from mecgame import kernels
from mecgame.best_response import DEFAULT_SEARCH, transmission_params
from mecgame.engine import random_profile
from mecgame.poa import candidate_tables, objective_weights

from conftest import mixed_network

both = pytest.mark.skipif(len(kernels.available_backends()) < 2,
                          reason="compiled backend not built")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_python_backend_always_present():
    assert "python" in kernels.available_backends()
    assert kernels.BACKEND in kernels.available_backends()


@both
@pytest.mark.parametrize("seed", range(8))
def test_overheads_agree(seed):
    net = mixed_network(9, seed, num_bs=3)
    prof = random_profile(net, np.random.default_rng(seed))
    a = kernels.overheads(net, prof.lam, prof.power, prof.freq, backend="cython")
    b = kernels.overheads(net, prof.lam, prof.power, prof.freq, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-13)
    sub = kernels.overheads(net, prof.lam, prof.power, prof.freq, users=[3, 1],
                            backend="cython")
    np.testing.assert_array_equal(sub, a[[3, 1]])


@both
@pytest.mark.parametrize("seed", range(8))
def test_power_search_agrees(seed):
    net = mixed_network(6, seed, num_bs=2, alpha_t=(1.0, 0.5))
    prof = random_profile(net, np.random.default_rng(seed))
    for n in range(net.n):
        params = transmission_params(net, n, prof)
        pa, va, _ = kernels.power_search(params, net.p_min[n], net.p_max[n],
                                         DEFAULT_SEARCH, backend="cython")
        pb, vb, _ = kernels.power_search(params, net.p_min[n], net.p_max[n],
                                         DEFAULT_SEARCH, backend="python")
        assert va == pytest.approx(vb, rel=1e-12)
        assert pa == pytest.approx(pb, rel=1e-8, abs=1e-12)
        for p in (net.p_min[n], 0.07, net.p_max[n]):
            ta = kernels.transmission_terms(p, params, backend="cython")
            tb = kernels.transmission_terms(p, params, backend="python")
            np.testing.assert_allclose(ta, tb, rtol=1e-12)


@both
@pytest.mark.parametrize("seed", range(5))
def test_enumeration_agrees(seed):
    net = mixed_network(4, seed, num_bs=4)
    lam, pw, fr, counts = candidate_tables(net, 5)
    w = objective_weights(net, "utility")
    ia, va = kernels.enumerate_argmin(net, lam, pw, fr, counts, w, backend="cython")
    ib, vb = kernels.enumerate_argmin(net, lam, pw, fr, counts, w, backend="python")
    np.testing.assert_array_equal(ia, ib)
    assert va == pytest.approx(vb, rel=1e-12)


def test_enumeration_ties_pick_first_index():
    net = mixed_network(2, 0, num_bs=2)
    lam = np.zeros((2, 3))
    pw = np.zeros((2, 3))
    fr = np.full((2, 3), 1e9)
    counts = np.array([3, 3])
    for name in kernels.available_backends():
        idx, _ = kernels.enumerate_argmin(net, lam, pw, fr, counts, np.ones(2), backend=name)
        assert list(idx) == [0, 0]


def test_env_var_forces_python_backend():
    env = dict(os.environ, MECGAME_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from mecgame import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
