import numpy as np
import pytest

import qcollide as qc
from qcollide import (
    CollisionSpec,
    CorrelatedBathSpec,
    UnitaryOp,
    averaged_step_map,
    basis_state,
    extend_unitary,
    extended_ancilla_state,
    integrate_me,
    partial_swap_unitary,
    periodic_step,
    run_correlated_bath,
    run_periodic,
    trace_distance,
    uniform_fixed_m_bath,
)

from helpers import max_abs, random_density, random_spec, random_unitary


def _full_swap_spec(gamma=1.0):
    return CollisionSpec(
        2, 2, partial_swap_unitary(np.pi / 2, 2), basis_state(2, 0), gamma
    )


def _sigma_x_spec(gamma=1.0):
    u = UnitaryOp(np.kron(qc.qmat.PAULI_X, np.eye(2)))
    return CollisionSpec(2, 2, u, basis_state(2, 0), gamma)


def test_extend_identity():
    ue = extend_unitary(UnitaryOp(np.eye(4)), 2, 2)
    assert max_abs(ue.mat, np.eye(6)) == 0.0


def test_extended_unitary_fixes_aux_sector():
    rng = np.random.default_rng(3)
    u = random_unitary(rng, 6)
    ue = extend_unitary(u, 2, 3)
    d_ext = 4
    for j in range(2):
        col = ue.mat[:, j * d_ext + 0]
        expected = np.zeros(2 * d_ext, dtype=complex)
        expected[j * d_ext + 0] = 1.0
        assert np.array_equal(col, expected)


def test_extended_unitary_embeds_block_exactly():
    # index bookkeeping: the old-level block must equal U entrywise
    u = partial_swap_unitary(np.pi / 2, 2)
    ue = extend_unitary(u, 2, 2).mat
    d_a, d_ext = 2, 3
    for i in range(2):
        for a in range(d_a):
            for j in range(2):
                for b in range(d_a):
                    assert (
                        ue[i * d_ext + 1 + a, j * d_ext + 1 + b]
                        == u.mat[i * d_a + a, j * d_a + b]
                    )
    # aux-to-old cross blocks vanish
    for i in range(2):
        for j in range(2):
            for b in range(d_a):
                assert ue[i * d_ext + 0, j * d_ext + 1 + b] == 0
                assert ue[j * d_ext + 1 + b, i * d_ext + 0] == 0


def test_extended_unitary_unitarity_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        d_s = int(rng.integers(2, 4))
        d_a = int(rng.integers(2, 4))
        ue = extend_unitary(random_unitary(rng, d_s * d_a), d_s, d_a)
        d = d_s * (d_a + 1)
        assert max_abs(ue.mat.conj().T @ ue.mat, np.eye(d)) <= 1e-12


def test_extended_ancilla_state_limits():
    eta = basis_state(2, 0)
    assert np.array_equal(
        extended_ancilla_state(eta, 0.0).mat, np.diag([1.0, 0.0, 0.0]).astype(complex)
    )
    full = extended_ancilla_state(eta, 1.0)
    assert np.array_equal(full.mat, np.diag([0.0, 1.0, 0.0]).astype(complex))
    mixed = extended_ancilla_state(eta, 0.1)
    assert max_abs(mixed.mat, np.diag([0.9, 0.1, 0.0])) <= 1e-15
    assert mixed.mat[0, 0] == 0.9  # aux population pinned exactly
    with pytest.raises(ValueError, match="delta_p"):
        extended_ancilla_state(eta, -0.1)


def test_extended_ancilla_dataclass():
    from qcollide import ExtendedAncilla

    ext = ExtendedAncilla.from_eta(basis_state(2, 1))
    assert ext.d_a_ext == 3
    assert ext.embedded_eta.mat[0, 0] == 0


def test_periodic_step_limits():
    spec = _full_swap_spec()
    rho = random_density(np.random.default_rng(7), 2)
    ue = extend_unitary(spec.u, 2, 2)
    inert = extended_ancilla_state(spec.eta, 0.0)
    assert max_abs(periodic_step(rho, ue, inert).mat, rho.mat) <= 1e-15
    colliding = extended_ancilla_state(spec.eta, 1.0)
    from qcollide import collision_map_apply

    assert (
        max_abs(periodic_step(rho, ue, colliding).mat, collision_map_apply(spec, rho).mat)
        <= 1e-14
    )


def test_periodic_step_equals_averaged_step():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d_s = int(rng.integers(2, 4))
        d_a = int(rng.integers(2, 4))
        spec = random_spec(rng, d_s, d_a)
        rho = random_density(rng, d_s)
        dp = float(rng.uniform())
        ue = extend_unitary(spec.u, d_s, d_a)
        ee = extended_ancilla_state(spec.eta, dp)
        a = periodic_step(rho, ue, ee).mat
        b = averaged_step_map(spec, rho, dp).mat
        assert max_abs(a, b) <= 1e-12


def test_run_periodic_identity_is_constant():
    spec = CollisionSpec(2, 2, UnitaryOp(np.eye(4)), basis_state(2, 0), 1.0)
    rho0 = random_density(np.random.default_rng(13), 2)
    series = run_periodic(spec, rho0, 0.01, 50)
    for s in series.states:
        assert max_abs(s.mat, rho0.mat) <= 1e-14


def test_run_periodic_discrete_decay_law():
    # scalar recursion: population picks up a factor (1 - gamma dt) per step
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    dt = 0.01
    series = run_periodic(spec, rho0, dt, 500)
    pops = np.array([s.mat[1, 1].real for s in series.states])
    expected = (1 - dt) ** np.arange(501)
    assert max_abs(pops, expected) <= 1e-12


def test_run_periodic_converges_to_exponential():
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    dt = 0.001
    series = run_periodic(spec, rho0, dt, 1000)
    assert abs(series.states[-1].mat[1, 1].real - np.exp(-1.0)) <= 1e-3


def test_run_periodic_rejects_invalid_probability():
    spec = _full_swap_spec(gamma=3.0)
    with pytest.raises(ValueError, match="probability"):
        run_periodic(spec, basis_state(2, 1), 0.5, 10)


def test_periodic_first_order_convergence_to_me():
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    errs = []
    for dt in (0.02, 0.01):
        n = int(round(5.0 / dt))
        per = run_periodic(spec, rho0, dt, n)
        me = integrate_me(spec, rho0, per.times)
        errs.append(max(trace_distance(a, b) for a, b in zip(per.states, me.states)))
    ratio = errs[0] / errs[1]
    assert 1.7 <= ratio <= 2.3


def test_bath_spec_validation():
    eta = basis_state(2, 0)
    with pytest.raises(ValueError, match="sum"):
        CorrelatedBathSpec(3, [(0.5, (0,)), (0.4, (1,))], eta)
    with pytest.raises(ValueError, match="slots"):
        CorrelatedBathSpec(3, [(1.0, (5,))], eta)
    with pytest.raises(ValueError, match="weight"):
        CorrelatedBathSpec(3, [(1.5, (0,)), (-0.5, (1,))], eta)


def test_uniform_fixed_m_bath_enumeration():
    eta = basis_state(2, 0)
    b0 = uniform_fixed_m_bath(4, 0, eta)
    assert b0.branches == [(1.0, ())]
    b = uniform_fixed_m_bath(3, 2, eta)
    assert sorted(s for _, s in b.branches) == [(0, 1), (0, 2), (1, 2)]
    assert all(abs(w - 1 / 3) <= 1e-15 for w, _ in b.branches)
    b10 = uniform_fixed_m_bath(5, 2, eta)
    assert len(b10.branches) == 10
    assert abs(sum(w for w, _ in b10.branches) - 1.0) <= 1e-12


def test_uniform_fixed_m_bath_guard():
    with pytest.raises(ValueError, match="guard"):
        uniform_fixed_m_bath(100, 50, basis_state(2, 0))


def test_correlated_bath_inert_branch_constant():
    spec = _full_swap_spec()
    rho0 = random_density(np.random.default_rng(17), 2)
    bath = CorrelatedBathSpec(5, [(1.0, ())], spec.eta)
    series = run_correlated_bath(spec, bath, rho0, 0.1)
    for s in series.states:
        assert np.array_equal(s.mat, rho0.mat)


def test_correlated_bath_three_ancilla_two_collisions():
    # equal-weight mixture over which two of three slots collide: any
    # full-swap collision resets the system, so every branch ends reset
    spec = _full_swap_spec()
    rho0 = basis_state(2, 1)
    bath = uniform_fixed_m_bath(3, 2, spec.eta)
    series = run_correlated_bath(spec, bath, rho0, 0.5)
    assert max_abs(series.states[-1].mat, basis_state(2, 0).mat) <= 1e-14
    # after slot 2 every branch has collided at least once
    assert max_abs(series.states[2].mat, basis_state(2, 0).mat) <= 1e-14


def test_correlated_bath_single_collision_linear_law():
    # count branches whose collision slot lies before each boundary
    spec = _sigma_x_spec()
    rho0 = basis_state(2, 1)
    n = 50
    bath = uniform_fixed_m_bath(n, 1, spec.eta)
    series = run_correlated_bath(spec, bath, rho0, 1.0 / n)
    flipped = basis_state(2, 0).mat
    for k, s in enumerate(series.states):
        expected = (1 - k / n) * rho0.mat + (k / n) * flipped
        assert max_abs(s.mat, expected) <= 1e-12


def test_correlated_bath_trace_preserved():
    rng = np.random.default_rng(19)
    spec = random_spec(rng, 2, 2)
    bath = uniform_fixed_m_bath(8, 3, spec.eta)
    series = run_correlated_bath(spec, bath, random_density(rng, 2), 0.1)
    for s in series.states:
        assert abs(s.mat.trace() - 1.0) <= 1e-12


def test_correlated_bath_m1_matches_analytic_trace_distance():
    # large-slot-count check against the closed-form revival profile
    spec = _sigma_x_spec()
    n = 2000
    bath = uniform_fixed_m_bath(n, 1, spec.eta)
    s0 = run_correlated_bath(spec, bath, basis_state(2, 0), 1.0 / n)
    s1 = run_correlated_bath(spec, bath, basis_state(2, 1), 1.0 / n)
    d = np.array([trace_distance(a, b) for a, b in zip(s0.states, s1.states)])
    t = s0.times
    assert max_abs(d, np.abs(1 - 2 * t)) <= 0.002
