import numpy as np
import pytest
from scipy import stats

import qcollide as qc
from qcollide import (
    CollisionSpec,
    RngStream,
    UnitaryOp,
    basis_state,
    ensemble_average,
    integrate_me,
    partial_swap_unitary,
    run_fixed_n_trajectory,
    run_trajectory,
    trace_distance,
)

from helpers import max_abs, random_density


def _full_swap_spec(gamma=1.0):
    return CollisionSpec(
        2, 2, partial_swap_unitary(np.pi / 2, 2), basis_state(2, 0), gamma
    )


def _sigma_x_spec(gamma=1.0):
    u = UnitaryOp(np.kron(qc.qmat.PAULI_X, np.eye(2)))
    return CollisionSpec(2, 2, u, basis_state(2, 0), gamma)


def test_no_collision_limit():
    spec = CollisionSpec(
        2, 2, partial_swap_unitary(0.7, 2), basis_state(2, 0), 1e-12
    )
    rho0 = random_density(np.random.default_rng(1), 2)
    rec = run_trajectory(spec, rho0, np.linspace(0, 1, 11), RngStream(0, 0))
    assert len(rec.collision_times) == 0
    for s in rec.states_on_grid:
        assert np.array_equal(s.mat, rho0.mat)


def test_full_swap_absorbing():
    spec = _full_swap_spec(gamma=5.0)
    rho0 = basis_state(2, 1)
    grid = np.linspace(0, 2, 41)
    rec = run_trajectory(spec, rho0, grid, RngStream(8, 1))
    assert len(rec.collision_times) > 0
    first = rec.collision_times[0]
    ground = basis_state(2, 0).mat
    for t, s in zip(grid, rec.states_on_grid):
        expected = rho0.mat if t < first else ground
        assert max_abs(s.mat, expected) <= 1e-14


def test_trajectory_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        run_trajectory(_full_swap_spec(), basis_state(3, 0), [0.0, 1.0], RngStream(0, 0))


def test_poisson_count_statistics():
    # collision counts over [0, t_max] are Poisson(gamma * t_max)
    spec = _full_swap_spec(gamma=1.0)
    rho0 = basis_state(2, 1)
    counts = np.array([
        len(run_trajectory(spec, rho0, [0.0, 5.0], RngStream(100, i)).collision_times)
        for i in range(5000)
    ])
    assert abs(counts.mean() - 5.0) < 0.15
    assert abs(counts.var() - 5.0) < 0.5


def test_inter_collision_gaps_exponential():
    spec = _full_swap_spec(gamma=1.0)
    rho0 = basis_state(2, 1)
    gaps = []
    for i in range(300):
        ct = run_trajectory(spec, rho0, [0.0, 400.0], RngStream(55, i)).collision_times
        gaps.append(np.diff(ct))
    pooled = np.concatenate(gaps)
    assert pooled.size > 100000
    stat = stats.kstest(pooled, "expon").statistic
    assert stat <= 0.01


def test_fixed_n_zero_is_constant():
    spec = _sigma_x_spec()
    rho0 = random_density(np.random.default_rng(5), 2)
    rec = run_fixed_n_trajectory(spec, rho0, 1.0, 0, np.linspace(0, 1, 11), RngStream(0, 0))
    assert len(rec.collision_times) == 0
    for s in rec.states_on_grid:
        assert np.array_equal(s.mat, rho0.mat)


def test_fixed_n_single_flip_path():
    # one collision: rho0 before the uniform collision time, X rho0 X after
    spec = _sigma_x_spec()
    rho0 = basis_state(2, 1)
    grid = np.linspace(0, 1, 101)
    rec = run_fixed_n_trajectory(spec, rho0, 1.0, 1, grid, RngStream(3, 9))
    (tc,) = rec.collision_times
    flipped = qc.qmat.PAULI_X @ rho0.mat @ qc.qmat.PAULI_X
    for t, s in zip(grid, rec.states_on_grid):
        expected = rho0.mat if t < tc else flipped
        assert max_abs(s.mat, expected) <= 1e-14


def test_fixed_n_collision_time_is_uniform():
    spec = _sigma_x_spec()
    rho0 = basis_state(2, 1)
    times = np.array([
        run_fixed_n_trajectory(spec, rho0, 2.0, 1, [0.0, 2.0], RngStream(17, i))
        .collision_times[0]
        for i in range(20000)
    ])
    stat = stats.kstest(times / 2.0, "uniform").statistic
    assert stat <= 0.01


def test_fixed_n_rejects_negative_count():
    with pytest.raises(ValueError, match="non-negative"):
        run_fixed_n_trajectory(
            _sigma_x_spec(), basis_state(2, 0), 1.0, -1, [0.0, 1.0], RngStream(0, 0)
        )


def test_ensemble_validation():
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    with pytest.raises(ValueError, match="n_traj"):
        ensemble_average(spec, rho0, [0.0, 1.0], 0, seed=0)
    with pytest.raises(ValueError, match="mode"):
        ensemble_average(spec, rho0, [0.0, 1.0], 10, seed=0, mode="bogus")
    with pytest.raises(ValueError, match="fixed_n"):
        ensemble_average(spec, rho0, [0.0, 1.0], 10, seed=0, mode="fixed_n")


def test_ensemble_no_dynamics_limit():
    spec = CollisionSpec(2, 2, partial_swap_unitary(0.7, 2), basis_state(2, 0), 1e-12)
    rho0 = random_density(np.random.default_rng(2), 2)
    series = ensemble_average(spec, rho0, np.linspace(0, 1, 5), 50, seed=0)
    for s in series.states:
        assert max_abs(s.mat, rho0.mat) <= 1e-15


def test_ensemble_states_unit_trace():
    spec = _full_swap_spec()
    series = ensemble_average(spec, basis_state(2, 1), np.linspace(0, 3, 31), 500, seed=4)
    for s in series.states:
        assert abs(s.mat.trace() - 1.0) <= 1e-12


def test_ensemble_decay_matches_master_equation():
    # population relaxation e^{-gamma t}; bound 3/sqrt(n) + 0.005
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    grid = np.linspace(0, 5, 101)
    n_traj = 40000
    ens = ensemble_average(spec, rho0, grid, n_traj, seed=2025)
    me = integrate_me(spec, rho0, grid)
    sup = max(trace_distance(a, b) for a, b in zip(ens.states, me.states))
    assert sup <= 3 / np.sqrt(n_traj) + 0.005


def test_fixed_n_ensemble_exact_law():
    # exactly one flip at a uniform time: rho(t) = (1 - t/T) rho0 + (t/T) X rho0 X
    spec = _sigma_x_spec()
    rho0 = basis_state(2, 1)
    grid = np.linspace(0, 1, 51)
    ens = ensemble_average(spec, rho0, grid, 20000, seed=7, mode="fixed_n", n=1)
    flipped = basis_state(2, 0).mat
    for t, s in zip(grid, ens.states):
        expected = (1 - t) * rho0.mat + t * flipped
        assert max_abs(s.mat, expected) <= 0.02


def test_ensemble_seed_changes_result():
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    grid = np.linspace(0, 2, 11)
    a = ensemble_average(spec, rho0, grid, 200, seed=1)
    b = ensemble_average(spec, rho0, grid, 200, seed=2)
    assert any(not np.array_equal(x.mat, y.mat) for x, y in zip(a.states, b.states))
