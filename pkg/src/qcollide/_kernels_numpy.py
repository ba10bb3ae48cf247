"""Pure-numpy kernel backend.

Same call signatures as ``_kernels_numba``; see ``backend`` for selection.
State walks exploit that the system state is piecewise constant between
collisions, so grid recording reduces to slice accumulation.  Trajectory
``i`` of a run always draws from the random stream ``(seed, i)``.
"""

from __future__ import annotations

import math

import numpy as np

from ._rng import next_uniform, stream_state


def rng_uint64(seed: int, stream_id: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit words of a stream (cross-backend test hook)."""
    from ._rng import next_uint64

    state = stream_state(int(seed), int(stream_id))
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        state, z = next_uint64(state)
        out[i] = z
    return out


def collision_apply(u, eta, rho, d_s, d_a):
    """One collision: ``Tr_anc{U (rho ⊗ eta) U†}``."""
    joint = np.kron(rho, eta)
    w = u @ joint @ u.conj().T
    return np.einsum("ikjk->ij", w.reshape(d_s, d_a, d_s, d_a))


def poisson_times(gamma, t_max, seed, stream_id):
    """Collision times of one trajectory: exponential waits at rate gamma."""
    state = stream_state(int(seed), int(stream_id))
    out = []
    t = 0.0
    while True:
        state, uni = next_uniform(state)
        t = t + (-math.log(uni) / gamma)
        if t > t_max:
            break
        out.append(t)
    return np.asarray(out, dtype=np.float64)


def fixed_n_times(n, t_max, seed, stream_id):
    """Exactly ``n`` collision times: sorted uniforms on [0, t_max]."""
    state = stream_state(int(seed), int(stream_id))
    ts = np.empty(n, dtype=np.float64)
    for i in range(n):
        state, uni = next_uniform(state)
        ts[i] = uni * t_max
    return np.sort(ts)


def _state_chain(u, eta, rho0, d_s, d_a, n_coll):
    """States after 0..n_coll collisions, stacked."""
    states = np.empty((n_coll + 1, d_s, d_s), dtype=np.complex128)
    states[0] = rho0
    for j in range(n_coll):
        states[j + 1] = collision_apply(u, eta, states[j], d_s, d_a)
    return states


def trajectory_grid_states(u, eta, rho0, d_s, d_a, coll_times, times):
    """State at each grid time; a collision exactly on a grid point counts
    as already applied."""
    states = _state_chain(u, eta, rho0, d_s, d_a, len(coll_times))
    idx = np.searchsorted(coll_times, times, side="right")
    return states[idx]


def ensemble_sum(u, eta, rho0, d_s, d_a, gamma, times, t_max, n_traj, seed, fixed_n):
    """Sum of per-trajectory grid states over ``n_traj`` trajectories.

    ``fixed_n < 0`` selects exponential (Poisson) waiting times; otherwise
    each trajectory gets exactly ``fixed_n`` uniformly placed collisions.
    Trajectories accumulate in ascending stream order.
    """
    n_t = len(times)
    acc = np.zeros((n_t, d_s, d_s), dtype=np.complex128)
    for i in range(n_traj):
        if fixed_n < 0:
            ct = poisson_times(gamma, t_max, seed, i)
        else:
            ct = fixed_n_times(fixed_n, t_max, seed, i)
        bounds = np.searchsorted(times, ct, side="left")
        state = rho0
        for j in range(len(ct) + 1):
            lo = 0 if j == 0 else bounds[j - 1]
            hi = n_t if j == len(ct) else bounds[j]
            if hi > lo:
                acc[lo:hi] += state
            if j < len(ct):
                state = collision_apply(u, eta, state, d_s, d_a)
    return acc


def periodic_series(u_ext, eta_ext, rho0, d_s, d_a_ext, n_steps):
    """Fixed-step evolution: state after 0..n_steps collisions with the
    extended ancilla."""
    return _state_chain(u_ext, eta_ext, rho0, d_s, d_a_ext, n_steps)


def correlated_sum(
    u_ext, eta_emb, rho0, d_s, d_a_ext, slots_flat, slots_off, weights, n_slots
):
    """Weighted sum over bath branches of the per-slot state series.

    Branch ``b`` collides exactly at the slots in
    ``slots_flat[slots_off[b]:slots_off[b+1]]`` (sorted); every other slot
    carries the inert ancilla, which leaves the system state exactly
    unchanged, so only collision slots advance the state.
    """
    acc = np.zeros((n_slots + 1, d_s, d_s), dtype=np.complex128)
    grid = np.arange(n_slots + 1)
    for b in range(len(weights)):
        sl = slots_flat[slots_off[b] : slots_off[b + 1]]
        states = _state_chain(u_ext, eta_emb, rho0, d_s, d_a_ext, len(sl))
        # state after m slots has seen the collisions at slots < m
        counts = np.searchsorted(sl, grid, side="left")
        acc += weights[b] * states[counts]
    return acc


def _rhs_map(u, eta, rho, d_s, d_a, gamma):
    return gamma * (collision_apply(u, eta, rho, d_s, d_a) - rho)


def _rk4_walk(rhs, rho0, out_times, h):
    n = len(out_times)
    out = np.empty((n, rho0.shape[0], rho0.shape[1]), dtype=np.complex128)
    rho = rho0.astype(np.complex128, copy=True)
    t = 0.0
    for idx in range(n):
        remaining = out_times[idx] - t
        while remaining > h * (1.0 + 1e-12):
            rho = _rk4_step(rhs, rho, h)
            remaining -= h
        if remaining > h * 1e-9:
            rho = _rk4_step(rhs, rho, remaining)
        t = out_times[idx]
        out[idx] = rho
    return out


def _rk4_step(rhs, rho, h):
    k1 = rhs(rho)
    k2 = rhs(rho + (0.5 * h) * k1)
    k3 = rhs(rho + (0.5 * h) * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_evolve_map(u, eta, rho0, d_s, d_a, gamma, out_times, h):
    """RK4 integration of ``rho' = gamma (L[rho] - rho)``, landing on every
    output time exactly by shortening the final sub-step."""
    return _rk4_walk(lambda r: _rhs_map(u, eta, r, d_s, d_a, gamma), rho0, out_times, h)


def rk4_evolve_kraus(kraus, kdk_sum, rho0, gamma, out_times, h):
    """RK4 integration of the Lindblad form with jump operators ``kraus``
    and precomputed ``kdk_sum = sum K†K``."""

    def rhs(rho):
        out = np.einsum("nij,jk,nlk->il", kraus, rho, kraus.conj())
        return gamma * (out - 0.5 * (kdk_sum @ rho + rho @ kdk_sum))

    return _rk4_walk(rhs, rho0, out_times, h)
