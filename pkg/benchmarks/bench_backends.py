"""Timing comparison of the numba and pure-numpy kernel backends.

Runs the four hot paths (trajectory ensemble, fixed-step evolution,
correlated-bath branches, master-equation integration) through the public
API under each backend and prints per-case timings and speedups.  Results
are checked to agree across backends while timing.

Usage::

    python benchmarks/bench_backends.py [--n-traj 50000] [--repeat 3]
"""

import argparse
import time

import numpy as np

import qcollide as qc
from qcollide import backend


def _model():
    eta = qc.basis_state(2, 0)
    spec = qc.CollisionSpec(2, 2, qc.partial_swap_unitary(np.pi / 4, 2), eta, 1.0)
    rho0 = qc.basis_state(2, 1)
    return spec, rho0


def _cases(n_traj):
    spec, rho0 = _model()
    grid = np.linspace(0.0, 5.0, 101)
    slots = 1000
    bath = qc.uniform_fixed_m_bath(slots, 1, spec.eta)
    return [
        (
            f"ensemble_average ({n_traj} trajectories, 101 grid points)",
            lambda: qc.ensemble_average(spec, rho0, grid, n_traj, seed=1),
        ),
        (
            "run_periodic (10000 steps)",
            lambda: qc.run_periodic(spec, rho0, 5e-4, 10000),
        ),
        (
            f"run_correlated_bath ({slots} branches x {slots} slots)",
            lambda: qc.run_correlated_bath(spec, bath, rho0, 1.0 / slots),
        ),
        (
            "integrate_me (step 1e-3 to t=5, 101 outputs)",
            lambda: qc.integrate_me(spec, rho0, grid),
        ),
    ]


def _time(fn, repeat):
    fn()  # warm-up: jit compile / cache load
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-traj", type=int, default=50000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = ["numpy"]
    if backend.numba_available():
        backends.insert(0, "numba")
    else:
        print("numba not importable; benchmarking the numpy backend only")

    timings = {}
    results = {}
    for be in backends:
        backend.use(be)
        print(f"\n== backend: {be} ==")
        for name, fn in _cases(args.n_traj):
            best, res = _time(fn, args.repeat)
            timings[(be, name)] = best
            results.setdefault(name, {})[be] = res.state_mats()
            print(f"  {name:55s} {best * 1e3:10.1f} ms")

    if len(backends) == 2:
        print("\n== speedup (numpy / numba) ==")
        for name, _ in _cases(args.n_traj):
            ratio = timings[("numpy", name)] / timings[("numba", name)]
            diff = np.max(np.abs(results[name]["numba"] - results[name]["numpy"]))
            print(f"  {name:55s} {ratio:8.1f}x   (max state diff {diff:.1e})")


if __name__ == "__main__":
    main()
