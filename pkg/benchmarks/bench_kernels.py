"""Timing comparison of the numba kernels against their numpy fallbacks.

Run directly:  python3 benchmarks/bench_kernels.py
Each kernel is timed best-of-5 after a warmup call (so JIT compilation is
excluded), on workloads shaped like the ones the test and acceptance suites
use.  The same seeds feed both backends; outputs are checked to match.
"""

import time

import numpy as np

from diffgeo import NoiseSchedule, boltzmann_sample, double_well, sample_transition_paths, three_mode_1d
from diffgeo.geometry import DiscretizedCurve
from diffgeo.models.gmm import posterior_stats


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(name, make_fn, check=None):
    numba_fn = make_fn("numba")
    numpy_fn = make_fn("numpy")
    numba_fn()  # warm up the JIT
    t_nb, out_nb = best_of(numba_fn)
    t_np, out_np = best_of(numpy_fn)
    if check is not None:
        check(out_nb, out_np)
    print(f"{name:<34} {t_nb * 1e3:>10.2f} {t_np * 1e3:>10.2f} {t_np / t_nb:>9.1f}x")


def main():
    sch = NoiseSchedule.vp_logsnr_linear()
    mix = three_mode_1d()
    dw = double_well()

    print(f"{'kernel':<34} {'numba ms':>10} {'numpy ms':>10} {'speedup':>10}")

    rng = np.random.default_rng(0)
    xs = rng.uniform(-4.0, 4.0, size=(4096, 1))

    def make_stats(force):
        return lambda: posterior_stats(mix, sch, xs, 0.35, force=force)

    def check_stats(a, b):
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, atol=1e-12)

    bench("mixture posterior stats (4096 pts)", make_stats, check_stats)

    def make_langevin(force):
        return lambda: boltzmann_sample(dw, n=256, steps=2000, dt=0.01, seed=11, force=force)

    bench(
        "langevin sampling (256 x 2000)",
        make_langevin,
        lambda a, b: np.testing.assert_array_equal(a, b),
    )

    n_gamma = 128
    s = np.linspace(0.0, 1.0, n_gamma)[:, None]
    curve = DiscretizedCurve(
        (1.0 - s) * np.array([-1.0, 0.0]) + s * np.array([1.0, 0.0]),
        np.full(n_gamma, 0.2),
    )

    def make_tps(force):
        return lambda: sample_transition_paths(
            dw, curve, sch, k_steps=64, dt=4e-4, n_paths=20, seed=5, force=force
        )

    def check_tps(a, b):
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(ca.states, cb.states)

    bench("annealed transition paths (20)", make_tps, check_tps)


if __name__ == "__main__":
    main()
