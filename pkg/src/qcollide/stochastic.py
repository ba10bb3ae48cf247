"""Monte Carlo engine for the random-waiting-time collision model.

Collisions are instantaneous point events: the system state jumps through
the collision map and stays constant in between (no free Hamiltonian).
Waiting times between consecutive collisions are exponential with the
spec's rate ``gamma``, sampled by inverse CDF ``T = -ln(u)/gamma`` with
``u`` in ``(0, 1]`` so ``T`` is always finite.  Every collision uses a
fresh ancilla prepared in ``eta``.

The fixed-collision-number variant conditions on exactly ``n`` collisions
in ``[0, t_max]``: the collision times then follow the law of a Poisson
process conditioned on its count, i.e. the order statistics of ``n``
independent uniforms on ``[0, t_max]``.

Reproducibility: trajectory ``i`` of an ensemble draws from
``RngStream(seed, i)``, and trajectories accumulate in ascending stream
order (parallel workers buffer per-trajectory results), so ensembles are
bit-deterministic for fixed ``(seed, n_traj)`` at any thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._rng import _MASK, RngStream
from .channels import CollisionSpec
from .qmat import DensityMatrix, StateSeries

__all__ = [
    "RngStream",
    "TrajectoryRecord",
    "sample_waiting_time",
    "run_trajectory",
    "run_fixed_n_trajectory",
    "ensemble_average",
]


@dataclass(frozen=True)
class TrajectoryRecord:
    """One realization: its collision times and the state at each grid time."""

    collision_times: np.ndarray
    states_on_grid: list[DensityMatrix] = field(repr=False)

    def __post_init__(self):
        ct = np.asarray(self.collision_times, dtype=np.float64)
        if ct.ndim != 1:
            raise ValueError("collision_times must be 1-D")
        if ct.size and (np.any(ct < 0) or np.any(np.diff(ct) <= 0)):
            raise ValueError("collision_times must be strictly increasing and >= 0")
        ct.setflags(write=False)
        object.__setattr__(self, "collision_times", ct)


def sample_waiting_time(gamma: float, rng: RngStream) -> float:
    """One exponential waiting time ``T = -ln(u)/gamma``.

    Consumes exactly one uniform draw from ``rng``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return -math.log(rng.uniform()) / gamma


def _check_grid(output_times, t_max: float) -> np.ndarray:
    times = np.asarray(output_times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("output_times must be a non-empty 1-D array")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("output_times must be strictly increasing")
    if times[0] < 0 or times[-1] > t_max:
        raise ValueError(f"output_times must lie within [0, {t_max}]")
    return times


def _wrap_grid(times: np.ndarray, grid: np.ndarray, collision_times) -> TrajectoryRecord:
    return TrajectoryRecord(collision_times, [DensityMatrix(g) for g in grid])


def run_trajectory(
    spec: CollisionSpec, rho0: DensityMatrix, output_times, rng: RngStream
) -> TrajectoryRecord:
    """Simulate one trajectory with exponential waiting times.

    Collision times accumulate waiting-time draws until they exceed the last
    output time; the state is recorded at each output time, counting a
    collision that lands exactly on a grid point as already applied.
    """
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    times = _check_grid(output_times, math.inf)
    t_max = float(times[-1])
    ct = []
    t = 0.0
    while True:
        t += sample_waiting_time(spec.gamma, rng)
        if t > t_max:
            break
        ct.append(t)
    ct = np.asarray(ct, dtype=np.float64)
    grid = backend.kernels().trajectory_grid_states(
        backend.kernel_array(spec.u.mat),
        backend.kernel_array(spec.eta.mat),
        backend.kernel_array(rho0.mat),
        spec.d_s,
        spec.d_a,
        ct,
        times,
    )
    return _wrap_grid(times, grid, ct)


def run_fixed_n_trajectory(
    spec: CollisionSpec,
    rho0: DensityMatrix,
    t_max: float,
    n: int,
    output_times,
    rng: RngStream,
) -> TrajectoryRecord:
    """Simulate one trajectory conditioned on exactly ``n`` collisions.

    The ``n`` collision times are the order statistics of independent
    uniforms on ``[0, t_max]``.
    """
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    if n < 0:
        raise ValueError(f"collision count must be non-negative, got {n}")
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    times = _check_grid(output_times, t_max)
    ct = np.sort(np.array([rng.uniform() * t_max for _ in range(n)], dtype=np.float64))
    grid = backend.kernels().trajectory_grid_states(
        backend.kernel_array(spec.u.mat),
        backend.kernel_array(spec.eta.mat),
        backend.kernel_array(rho0.mat),
        spec.d_s,
        spec.d_a,
        ct,
        times,
    )
    return _wrap_grid(times, grid, ct)


def ensemble_average(
    spec: CollisionSpec,
    rho0: DensityMatrix,
    output_times,
    n_traj: int,
    seed: int,
    mode: str = "poisson",
    n: int | None = None,
    t_max: float | None = None,
) -> StateSeries:
    """Average the trajectory states over ``n_traj`` independent trajectories.

    ``mode="poisson"`` draws exponential waiting times over the grid span;
    ``mode="fixed_n"`` forces exactly ``n`` collisions in ``[0, t_max]``
    (default horizon: the last output time).  The result is normalized by
    ``1/n_traj`` only, and bit-identical across repeated calls and thread
    counts.
    """
    if n_traj < 1:
        raise ValueError(f"n_traj must be at least 1, got {n_traj}")
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    if mode == "poisson":
        fixed = -1
        times = _check_grid(output_times, math.inf)
        horizon = float(times[-1])
    elif mode == "fixed_n":
        if n is None or n < 0:
            raise ValueError("fixed_n mode needs a non-negative collision count n")
        fixed = int(n)
        horizon = float(t_max) if t_max is not None else float(np.asarray(output_times)[-1])
        if not horizon > 0:
            raise ValueError(f"t_max must be positive, got {horizon}")
        times = _check_grid(output_times, horizon)
    else:
        raise ValueError(f"mode must be 'poisson' or 'fixed_n', got {mode!r}")
    total = backend.kernels().ensemble_sum(
        backend.kernel_array(spec.u.mat),
        backend.kernel_array(spec.eta.mat),
        backend.kernel_array(rho0.mat),
        spec.d_s,
        spec.d_a,
        float(spec.gamma),
        times,
        horizon,
        int(n_traj),
        np.uint64(seed & _MASK),
        fixed,
    )
    avg = total / n_traj
    return StateSeries(times, [DensityMatrix(m) for m in avg])
