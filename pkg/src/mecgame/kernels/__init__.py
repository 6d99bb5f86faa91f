"""Hot numerical kernels with a compiled backend and a pure-Python fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise, or
when ``MECGAME_PURE_PYTHON=1`` is set, the numpy module ``_pykernels`` is
used. Both expose the same raw functions:

overheads
    Per-user total overhead for a strategy profile.
transmission_terms
    Power-dependent part of a user's utility with first/second derivatives.
power_search
    Multistart/bracketed Newton minimisation of that part over the power box.
enumerate_argmin
    Exhaustive weighted-overhead minimisation over a candidate product.
"""
import os

import numpy as np

from mecgame.kernels import _pykernels

try:
    if os.environ.get("MECGAME_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from mecgame.kernels import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_impl = _BACKENDS[BACKEND]


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Raw kernel module by name; ``None`` gives the active one."""
    if name is None:
        return _impl
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")


def set_backend(name):
    """Switch the active backend process-wide (used by benchmarks and tests)."""
    global _impl, BACKEND
    _impl = get_backend(name)
    BACKEND = name


def overheads(net, lam, p, f, users=None, backend=None):
    impl = get_backend(backend)
    if users is None:
        users = range(net.n)
    users = np.asarray(users, dtype=np.int64)
    return impl.overheads(users, lam, p, f, net.own_gain, net.in_ptr, net.in_idx,
                          net.in_gain, net.bits, net.work, net.alpha_t, net.alpha_e,
                          net.kappa, net.bandwidth, net.noise, net.f_cloud,
                          net.kappa_cloud)


def transmission_terms(p, params, backend=None):
    return get_backend(backend).transmission_terms(p, *params)


def power_search(params, p_min, p_max, cfg, backend=None):
    return get_backend(backend).power_search(
        *params, p_min, p_max, cfg.newton_max_iter, cfg.newton_tol,
        cfg.multistart_count, cfg.fallback_grid)


def enumerate_argmin(net, cand_lam, cand_p, cand_f, counts, weights, backend=None):
    return get_backend(backend).enumerate_argmin(
        cand_lam, cand_p, cand_f, counts, weights, net.own_gain, net.in_ptr,
        net.in_idx, net.in_gain, net.bits, net.work, net.alpha_t, net.alpha_e,
        net.kappa, net.bandwidth, net.noise, net.f_cloud, net.kappa_cloud)
