"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--users 50]

Each kernel runs on identical inputs under both backends; results are
checked for agreement before timings are printed.
"""
import argparse
import time

import numpy as np

from mecgame import kernels
from mecgame.best_response import DEFAULT_SEARCH, best_response, transmission_params
from mecgame.engine import random_profile, run_dynamics
from mecgame.poa import candidate_tables, objective_weights
from mecgame.scenario import GeneratorConfig, make_network


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(users):
    net = make_network(GeneratorConfig(num_users=users), 0)
    prof = random_profile(net, np.random.default_rng(0))
    params = [transmission_params(net, n, prof) for n in range(net.n)]
    small = make_network(GeneratorConfig(num_bs=4, num_users=4), 0)
    tables = candidate_tables(small, 16)
    weights = objective_weights(small, "utility")

    def overheads(backend):
        return lambda: [kernels.overheads(net, prof.lam, prof.power, prof.freq, backend=backend)
                        for _ in range(200)][-1]

    def power(backend):
        return lambda: [kernels.power_search(p, net.p_min[n], net.p_max[n], DEFAULT_SEARCH,
                                             backend=backend)[:2]
                        for n, p in enumerate(params)]

    def enumerate_(backend):
        return lambda: kernels.enumerate_argmin(small, *tables, weights, backend=backend)

    def responses(backend):
        def run():
            kernels.set_backend(backend)
            return [best_response(n, prof, net).strategy for n in range(net.n)]
        return run

    def dynamics(backend):
        def run():
            kernels.set_backend(backend)
            return run_dynamics(net).rounds[-1].potential
        return run

    return [("overheads x200", overheads), ("power search, all users", power),
            ("enumeration 17^4", enumerate_), ("best responses, all users", responses),
            ("full dynamics", dynamics)]


def agree(a, b):
    if isinstance(a, tuple) and len(a) == 2 and isinstance(a[0], np.ndarray):
        return np.array_equal(a[0], b[0]) and np.isclose(a[1], b[1], rtol=1e-12)
    try:
        return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-10)
    except (TypeError, ValueError):
        return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--users", type=int, default=50)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy fallback is available")
    original = kernels.BACKEND
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, make in cases(args.users):
        times, outs = {}, {}
        for b in backends:
            times[b], outs[b] = timeit(make(b), args.repeat)
        kernels.set_backend(original)
        if len(backends) == 2 and not agree(outs["cython"], outs["python"]):
            raise SystemExit(f"{name}: backends disagree")
        speed = times["python"] / times["cython"] if "cython" in times else 1.0
        print(f"{name:<28}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
