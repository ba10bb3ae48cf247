"""Numba-jitted kernel backend (default when numba is importable).

Mirrors the ``_kernels_numpy`` signatures.  Matrix products are explicit
loops: the factors here are tiny (joint dimensions of a few dozen), where
loop code beats the per-call overhead of BLAS.  The random stream arithmetic
is the uint64 twin of ``_rng``; waits use ``math.log`` in both backends so
the drawn collision times are bit-identical.

Parallel kernels reduce over fixed-size blocks in ascending stream/branch
order, so results do not depend on the number of threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MULT1 = U64(0xBF58476D1CE4E5B9)
_MULT2 = U64(0x94D049BB133111EB)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_ONE = U64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_TRAJ_BLOCK = 256
_BRANCH_BLOCK = 128


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MULT1
    z = (z ^ (z >> _S27)) * _MULT2
    return z ^ (z >> _S31)


@njit(cache=True)
def _stream_state(seed, stream_id):
    return _mix64(_mix64(seed) + _GAMMA * stream_id)


@njit(cache=True)
def _next_uniform(state):
    state = state + _GAMMA
    z = _mix64(state)
    return state, float((z >> _S11) + _ONE) * _INV53


@njit(cache=True)
def rng_uint64(seed, stream_id, n):
    state = _stream_state(U64(seed), U64(stream_id))
    out = np.empty(n, np.uint64)
    for i in range(n):
        state = state + _GAMMA
        out[i] = _mix64(state)
    return out


@njit(cache=True)
def _kron_into(a, b, out):
    m = a.shape[0]
    p = b.shape[0]
    for i in range(m):
        for j in range(m):
            aij = a[i, j]
            for k in range(p):
                for l in range(p):
                    out[i * p + k, j * p + l] = aij * b[k, l]


@njit(cache=True)
def _mm_into(a, b, out):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            s = 0.0 + 0.0j
            for k in range(n):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def _mm_hdag_into(a, b, out):
    # out = a @ b†
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            s = 0.0 + 0.0j
            for k in range(n):
                s += a[i, k] * np.conj(b[j, k])
            out[i, j] = s


@njit(cache=True)
def _ptrace_into(m, d_s, d_a, out):
    for i in range(d_s):
        for j in range(d_s):
            s = 0.0 + 0.0j
            for k in range(d_a):
                s += m[i * d_a + k, j * d_a + k]
            out[i, j] = s


@njit(cache=True)
def _collision_into(u, eta, rho, d_s, d_a, joint, t1, t2, out):
    _kron_into(rho, eta, joint)
    _mm_into(u, joint, t1)
    _mm_hdag_into(t1, u, t2)
    _ptrace_into(t2, d_s, d_a, out)


@njit(cache=True)
def collision_apply(u, eta, rho, d_s, d_a):
    dj = d_s * d_a
    joint = np.empty((dj, dj), np.complex128)
    t1 = np.empty((dj, dj), np.complex128)
    t2 = np.empty((dj, dj), np.complex128)
    out = np.empty((d_s, d_s), np.complex128)
    _collision_into(u, eta, rho, d_s, d_a, joint, t1, t2, out)
    return out


@njit(cache=True)
def poisson_times(gamma, t_max, seed, stream_id):
    state = _stream_state(U64(seed), U64(stream_id))
    cap = 16
    arr = np.empty(cap, np.float64)
    n = 0
    t = 0.0
    while True:
        state, uni = _next_uniform(state)
        t = t + (-math.log(uni) / gamma)
        if t > t_max:
            break
        if n == cap:
            cap = cap * 2
            bigger = np.empty(cap, np.float64)
            bigger[:n] = arr[:n]
            arr = bigger
        arr[n] = t
        n += 1
    return arr[:n].copy()


@njit(cache=True)
def fixed_n_times(n, t_max, seed, stream_id):
    state = _stream_state(U64(seed), U64(stream_id))
    ts = np.empty(n, np.float64)
    for i in range(n):
        state, uni = _next_uniform(state)
        ts[i] = uni * t_max
    return np.sort(ts)


@njit(cache=True)
def _grid_walk_into(u, eta, rho0, d_s, d_a, coll_times, times, out):
    dj = d_s * d_a
    joint = np.empty((dj, dj), np.complex128)
    t1 = np.empty((dj, dj), np.complex128)
    t2 = np.empty((dj, dj), np.complex128)
    state = np.empty((d_s, d_s), np.complex128)
    tmp = np.empty((d_s, d_s), np.complex128)
    state[:, :] = rho0
    ci = 0
    nc = coll_times.shape[0]
    for k in range(times.shape[0]):
        # a collision exactly on a grid point counts as already applied
        while ci < nc and coll_times[ci] <= times[k]:
            _collision_into(u, eta, state, d_s, d_a, joint, t1, t2, tmp)
            state[:, :] = tmp
            ci += 1
        out[k] = state


@njit(cache=True)
def trajectory_grid_states(u, eta, rho0, d_s, d_a, coll_times, times):
    out = np.empty((times.shape[0], d_s, d_s), np.complex128)
    _grid_walk_into(u, eta, rho0, d_s, d_a, coll_times, times, out)
    return out


@njit(cache=True)
def _walk_poisson_accum(u, eta, rho0, d_s, d_a, gamma, times, seed, sid,
                        joint, t1, t2, st, tmp, out):
    # collision times generated on the fly: exponential waits, same stream
    # arithmetic as poisson_times
    state = _stream_state(seed, sid)
    st[:, :] = rho0
    state, uni = _next_uniform(state)
    t = 0.0
    t = t + (-math.log(uni) / gamma)
    for k in range(times.shape[0]):
        while t <= times[k]:
            _collision_into(u, eta, st, d_s, d_a, joint, t1, t2, tmp)
            st[:, :] = tmp
            state, uni = _next_uniform(state)
            t = t + (-math.log(uni) / gamma)
        for a in range(d_s):
            for b in range(d_s):
                out[k, a, b] += st[a, b]


@njit(cache=True)
def _walk_times_accum(u, eta, rho0, d_s, d_a, coll_times, times,
                      joint, t1, t2, st, tmp, out):
    st[:, :] = rho0
    ci = 0
    nc = coll_times.shape[0]
    for k in range(times.shape[0]):
        while ci < nc and coll_times[ci] <= times[k]:
            _collision_into(u, eta, st, d_s, d_a, joint, t1, t2, tmp)
            st[:, :] = tmp
            ci += 1
        for a in range(d_s):
            for b in range(d_s):
                out[k, a, b] += st[a, b]


@njit(cache=True, parallel=True)
def ensemble_sum(u, eta, rho0, d_s, d_a, gamma, times, t_max, n_traj, seed, fixed_n):
    n_t = times.shape[0]
    seed64 = U64(seed)
    n_blocks = (n_traj + _TRAJ_BLOCK - 1) // _TRAJ_BLOCK
    block_sums = np.zeros((n_blocks, n_t, d_s, d_s), np.complex128)
    for b in prange(n_blocks):
        dj = d_s * d_a
        joint = np.empty((dj, dj), np.complex128)
        t1 = np.empty((dj, dj), np.complex128)
        t2 = np.empty((dj, dj), np.complex128)
        st = np.empty((d_s, d_s), np.complex128)
        tmp = np.empty((d_s, d_s), np.complex128)
        bs = block_sums[b]
        i1 = min((b + 1) * _TRAJ_BLOCK, n_traj)
        for i in range(b * _TRAJ_BLOCK, i1):
            if fixed_n < 0:
                _walk_poisson_accum(u, eta, rho0, d_s, d_a, gamma, times,
                                    seed64, U64(i), joint, t1, t2, st, tmp, bs)
            else:
                ct = fixed_n_times(fixed_n, t_max, seed64, U64(i))
                _walk_times_accum(u, eta, rho0, d_s, d_a, ct, times,
                                  joint, t1, t2, st, tmp, bs)
    # fixed block partition + ascending reduction: results do not depend on
    # the number of threads
    acc = np.zeros((n_t, d_s, d_s), np.complex128)
    for b in range(n_blocks):
        acc += block_sums[b]
    return acc


@njit(cache=True)
def periodic_series(u_ext, eta_ext, rho0, d_s, d_a_ext, n_steps):
    dj = d_s * d_a_ext
    joint = np.empty((dj, dj), np.complex128)
    t1 = np.empty((dj, dj), np.complex128)
    t2 = np.empty((dj, dj), np.complex128)
    tmp = np.empty((d_s, d_s), np.complex128)
    out = np.empty((n_steps + 1, d_s, d_s), np.complex128)
    state = np.empty((d_s, d_s), np.complex128)
    state[:, :] = rho0
    out[0] = state
    for k in range(n_steps):
        _collision_into(u_ext, eta_ext, state, d_s, d_a_ext, joint, t1, t2, tmp)
        state[:, :] = tmp
        out[k + 1] = state
    return out


@njit(cache=True, parallel=True)
def correlated_sum(
    u_ext, eta_emb, rho0, d_s, d_a_ext, slots_flat, slots_off, weights, n_slots
):
    n_branches = weights.shape[0]
    n_blocks = (n_branches + _BRANCH_BLOCK - 1) // _BRANCH_BLOCK
    block_sums = np.zeros((n_blocks, n_slots + 1, d_s, d_s), np.complex128)
    for b in prange(n_blocks):
        dj = d_s * d_a_ext
        joint = np.empty((dj, dj), np.complex128)
        t1 = np.empty((dj, dj), np.complex128)
        t2 = np.empty((dj, dj), np.complex128)
        tmp = np.empty((d_s, d_s), np.complex128)
        state = np.empty((d_s, d_s), np.complex128)
        bs = block_sums[b]
        br1 = min((b + 1) * _BRANCH_BLOCK, n_branches)
        for br in range(b * _BRANCH_BLOCK, br1):
            w = weights[br]
            state[:, :] = rho0
            for x in range(d_s):
                for y in range(d_s):
                    bs[0, x, y] += w * state[x, y]
            pos = slots_off[br]
            end = slots_off[br + 1]
            for k in range(n_slots):
                if pos < end and slots_flat[pos] == k:
                    _collision_into(
                        u_ext, eta_emb, state, d_s, d_a_ext, joint, t1, t2, tmp
                    )
                    state[:, :] = tmp
                    pos += 1
                # inert-ancilla slots leave the system state exactly unchanged
                for x in range(d_s):
                    for y in range(d_s):
                        bs[k + 1, x, y] += w * state[x, y]
    acc = np.zeros((n_slots + 1, d_s, d_s), np.complex128)
    for b in range(n_blocks):
        acc += block_sums[b]
    return acc


@njit(cache=True)
def _rhs_map_into(u, eta, rho, d_s, d_a, gamma, joint, t1, t2, out):
    _collision_into(u, eta, rho, d_s, d_a, joint, t1, t2, out)
    for i in range(d_s):
        for j in range(d_s):
            out[i, j] = gamma * (out[i, j] - rho[i, j])


@njit(cache=True)
def _axpy_into(rho, c, k, out):
    n = rho.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = rho[i, j] + c * k[i, j]


@njit(cache=True)
def _rk4_combine(rho, h, k1, k2, k3, k4):
    n = rho.shape[0]
    c = h / 6.0
    for i in range(n):
        for j in range(n):
            rho[i, j] = rho[i, j] + c * (
                k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
            )


@njit(cache=True)
def rk4_evolve_map(u, eta, rho0, d_s, d_a, gamma, out_times, h):
    dj = d_s * d_a
    joint = np.empty((dj, dj), np.complex128)
    t1 = np.empty((dj, dj), np.complex128)
    t2 = np.empty((dj, dj), np.complex128)
    k1 = np.empty((d_s, d_s), np.complex128)
    k2 = np.empty((d_s, d_s), np.complex128)
    k3 = np.empty((d_s, d_s), np.complex128)
    k4 = np.empty((d_s, d_s), np.complex128)
    stage = np.empty((d_s, d_s), np.complex128)
    rho = np.empty((d_s, d_s), np.complex128)
    rho[:, :] = rho0
    n = out_times.shape[0]
    out = np.empty((n, d_s, d_s), np.complex128)
    t = 0.0
    for idx in range(n):
        remaining = out_times[idx] - t
        while remaining > h * (1.0 + 1e-12):
            _rhs_map_into(u, eta, rho, d_s, d_a, gamma, joint, t1, t2, k1)
            _axpy_into(rho, 0.5 * h, k1, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k2)
            _axpy_into(rho, 0.5 * h, k2, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k3)
            _axpy_into(rho, h, k3, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k4)
            _rk4_combine(rho, h, k1, k2, k3, k4)
            remaining -= h
        if remaining > h * 1e-9:
            hh = remaining
            _rhs_map_into(u, eta, rho, d_s, d_a, gamma, joint, t1, t2, k1)
            _axpy_into(rho, 0.5 * hh, k1, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k2)
            _axpy_into(rho, 0.5 * hh, k2, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k3)
            _axpy_into(rho, hh, k3, stage)
            _rhs_map_into(u, eta, stage, d_s, d_a, gamma, joint, t1, t2, k4)
            _rk4_combine(rho, hh, k1, k2, k3, k4)
        t = out_times[idx]
        out[idx] = rho
    return out


@njit(cache=True)
def _rhs_kraus_into(kraus, kdk_sum, rho, gamma, t1, t2, out):
    d = rho.shape[0]
    for i in range(d):
        for j in range(d):
            out[i, j] = 0.0 + 0.0j
    for nu in range(kraus.shape[0]):
        _mm_into(kraus[nu], rho, t1)
        _mm_hdag_into(t1, kraus[nu], t2)
        for i in range(d):
            for j in range(d):
                out[i, j] += t2[i, j]
    _mm_into(kdk_sum, rho, t1)
    _mm_into(rho, kdk_sum, t2)
    for i in range(d):
        for j in range(d):
            out[i, j] = gamma * (out[i, j] - 0.5 * (t1[i, j] + t2[i, j]))


@njit(cache=True)
def rk4_evolve_kraus(kraus, kdk_sum, rho0, gamma, out_times, h):
    d = rho0.shape[0]
    t1 = np.empty((d, d), np.complex128)
    t2 = np.empty((d, d), np.complex128)
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    stage = np.empty((d, d), np.complex128)
    rho = np.empty((d, d), np.complex128)
    rho[:, :] = rho0
    n = out_times.shape[0]
    out = np.empty((n, d, d), np.complex128)
    t = 0.0
    for idx in range(n):
        remaining = out_times[idx] - t
        while remaining > h * (1.0 + 1e-12):
            _rhs_kraus_into(kraus, kdk_sum, rho, gamma, t1, t2, k1)
            _axpy_into(rho, 0.5 * h, k1, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k2)
            _axpy_into(rho, 0.5 * h, k2, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k3)
            _axpy_into(rho, h, k3, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k4)
            _rk4_combine(rho, h, k1, k2, k3, k4)
            remaining -= h
        if remaining > h * 1e-9:
            hh = remaining
            _rhs_kraus_into(kraus, kdk_sum, rho, gamma, t1, t2, k1)
            _axpy_into(rho, 0.5 * hh, k1, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k2)
            _axpy_into(rho, 0.5 * hh, k2, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k3)
            _axpy_into(rho, hh, k3, stage)
            _rhs_kraus_into(kraus, kdk_sum, stage, gamma, t1, t2, k4)
            _rk4_combine(rho, hh, k1, k2, k3, k4)
        t = out_times[idx]
        out[idx] = rho
    return out
