"""Fixed-step collision engine with extended ancillas.

Each ancilla gains one auxiliary level, fixed at basis index 0 of the
extended space (the old ancilla levels shift to indices ``1..d_a``).  The
collision unitary extends to act as the identity on the auxiliary sector
and as the original ``U`` on the old sector:

    U_ext = I_S ⊗ |aux><aux| + U_embedded.

An ancilla sitting in the auxiliary level is invisible to the system, so
preparing each fresh ancilla in the mixture

    eta_ext = (1 - Δp) |aux><aux| + Δp * eta_embedded

makes one fixed-duration step reproduce the collision-averaged short-step
map ``(1 - Δp) rho + Δp L[rho]`` identically: the waiting-time randomness
of the stochastic engine becomes ancilla-state mixedness here.

Conditioning on a fixed total number of collisions cannot be expressed
with uncorrelated ancillas; it corresponds to a classically correlated
bath, a weighted mixture of product bath states where each branch fixes
which slots carry a colliding ancilla (pure embedded ``eta``) and which
carry the inert auxiliary state.  Branches are enumerated exactly and
averaged by weight; no joint bath state is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import backend
from .channels import CollisionSpec
from .qmat import DensityMatrix, StateSeries, UnitaryOp

#: Exact branch enumeration guard for fixed-collision-count baths.
MAX_BRANCHES = 10**6

AUX_INDEX = 0  # auxiliary level of the extended ancilla


@dataclass(frozen=True)
class ExtendedAncilla:
    """Extended ancilla bookkeeping: dimension, auxiliary index, embedded state.

    ``embedded_eta`` lives on the extended space with zero weight on the
    auxiliary level.
    """

    d_a_ext: int
    phi_index: int
    embedded_eta: DensityMatrix

    def __post_init__(self):
        if self.phi_index != AUX_INDEX:
            raise ValueError("the auxiliary level is fixed at basis index 0")
        if self.embedded_eta.dim != self.d_a_ext:
            raise ValueError("embedded state dimension mismatch")
        if self.embedded_eta.mat[AUX_INDEX, AUX_INDEX] != 0:
            raise ValueError("embedded state must have no auxiliary-level weight")

    @classmethod
    def from_eta(cls, eta: DensityMatrix) -> "ExtendedAncilla":
        return cls(eta.dim + 1, AUX_INDEX, extended_ancilla_state(eta, 1.0))


def _embed_eta(eta: np.ndarray) -> np.ndarray:
    d = eta.shape[0]
    out = np.zeros((d + 1, d + 1), dtype=np.complex128)
    out[1:, 1:] = eta
    return out


def extend_unitary(u: UnitaryOp, d_s: int, d_a: int) -> UnitaryOp:
    """Extend a collision unitary to an ancilla with one extra inert level.

    The result acts as the identity whenever the ancilla occupies the
    auxiliary level and as ``u`` on the old levels; the embedding copies
    entries exactly, so it is unitary to the same precision as ``u``.
    """
    if u.dim != d_s * d_a:
        raise ValueError(f"unitary dimension {u.dim} != d_s*d_a = {d_s * d_a}")
    d_ext = d_a + 1
    out = np.zeros((d_s * d_ext, d_s * d_ext), dtype=np.complex128)
    for i in range(d_s):
        out[i * d_ext + AUX_INDEX, i * d_ext + AUX_INDEX] = 1.0
    um = u.mat
    for i in range(d_s):
        for a in range(d_a):
            row_old = i * d_a + a
            row_new = i * d_ext + 1 + a
            for j in range(d_s):
                for b in range(d_a):
                    out[row_new, j * d_ext + 1 + b] = um[row_old, j * d_a + b]
    return UnitaryOp(out, tol=1e-12)


def extended_ancilla_state(eta: DensityMatrix, delta_p: float) -> DensityMatrix:
    """Mixed extended-ancilla state ``(1 - Δp)|aux><aux| + Δp eta_embedded``.

    The auxiliary-level population is exactly ``1 - Δp`` by construction.
    """
    if not 0.0 <= delta_p <= 1.0:
        raise ValueError(f"delta_p must lie in [0, 1], got {delta_p}")
    out = delta_p * _embed_eta(eta.mat)
    out[AUX_INDEX, AUX_INDEX] = 1.0 - delta_p
    return DensityMatrix(out)


def periodic_step(
    rho: DensityMatrix, u_ext: UnitaryOp, eta_ext: DensityMatrix
) -> DensityMatrix:
    """One fixed-duration step ``Tr_anc{U_ext (rho ⊗ eta_ext) U_ext†}``.

    With ``eta_ext`` built from ``(eta, Δp)`` this equals the
    collision-averaged step map to machine precision.
    """
    if u_ext.dim != rho.dim * eta_ext.dim:
        raise ValueError(
            f"unitary dimension {u_ext.dim} != {rho.dim} * {eta_ext.dim}"
        )
    from .qmat import kron, partial_trace_ancilla

    w = u_ext.mat @ kron(rho.mat, eta_ext.mat) @ u_ext.mat.conj().T
    return DensityMatrix(partial_trace_ancilla(w, rho.dim, eta_ext.dim))


def run_periodic(
    spec: CollisionSpec, rho0: DensityMatrix, delta_t: float, n_steps: int
) -> StateSeries:
    """Evolve by ``n_steps`` fixed steps of duration ``delta_t``.

    Each step uses a fresh extended ancilla in the mixed state with
    ``Δp = gamma * delta_t`` (must not exceed 1, or it is no longer a
    probability).  States are recorded on the step mesh including ``t = 0``.
    """
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    if not delta_t > 0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    delta_p = spec.gamma * delta_t
    if delta_p > 1.0:
        raise ValueError(
            f"gamma * delta_t = {delta_p} exceeds 1: not a valid collision probability"
        )
    u_ext = extend_unitary(spec.u, spec.d_s, spec.d_a)
    eta_ext = extended_ancilla_state(spec.eta, delta_p)
    series = backend.kernels().periodic_series(
        backend.kernel_array(u_ext.mat),
        backend.kernel_array(eta_ext.mat),
        backend.kernel_array(rho0.mat),
        spec.d_s,
        spec.d_a + 1,
        int(n_steps),
    )
    times = np.arange(n_steps + 1) * delta_t
    return StateSeries(times, [DensityMatrix(m) for m in series])


@dataclass(frozen=True)
class CorrelatedBathSpec:
    """Classically correlated bath over ``n_slots`` time slots.

    Each branch is a weight together with the set of slots whose ancilla
    actually collides; all remaining slots hold the inert auxiliary state.
    Weights must sum to 1.
    """

    n_slots: int
    branches: list[tuple[float, tuple[int, ...]]] = field(repr=False)
    eta: DensityMatrix

    def __post_init__(self):
        if self.n_slots < 1:
            raise ValueError("n_slots must be a positive integer")
        if not self.branches:
            raise ValueError("need at least one branch")
        norm = []
        total = 0.0
        for w, slots in self.branches:
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"branch weight {w} outside [0, 1]")
            slots = tuple(sorted(set(int(s) for s in slots)))
            if slots and (slots[0] < 0 or slots[-1] >= self.n_slots):
                raise ValueError(f"branch slots {slots} outside 0..{self.n_slots - 1}")
            norm.append((float(w), slots))
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {total}, not 1")
        object.__setattr__(self, "branches", norm)


def uniform_fixed_m_bath(n_slots: int, m: int, eta: DensityMatrix) -> CorrelatedBathSpec:
    """Uniform mixture over all ways to place exactly ``m`` collisions.

    Enumerates every ``m``-subset of the ``n_slots`` slots with equal
    weight.  Guarded: enumeration beyond ``MAX_BRANCHES`` branches raises
    (use the stochastic engine's fixed-count mode instead).
    """
    if n_slots < 1:
        raise ValueError("n_slots must be a positive integer")
    if not 0 <= m <= n_slots:
        raise ValueError(f"m must lie in 0..{n_slots}, got {m}")
    count = math.comb(n_slots, m)
    if count > MAX_BRANCHES:
        raise ValueError(
            f"{count} branches exceed the exact-enumeration guard of {MAX_BRANCHES}"
        )
    w = 1.0 / count
    branches = [(w, c) for c in combinations(range(n_slots), m)]
    return CorrelatedBathSpec(n_slots, branches, eta)


def run_correlated_bath(
    spec: CollisionSpec,
    bath: CorrelatedBathSpec,
    rho0: DensityMatrix,
    delta_t: float,
) -> StateSeries:
    """Evolve under a classically correlated bath, branch by branch.

    Collision slots use the pure embedded ancilla state (the branch
    structure itself carries the collide / don't-collide randomness);
    inert slots use the auxiliary projector.  Branch results are averaged
    by weight in branch order, recorded at every slot boundary including
    ``t = 0`` over the horizon ``n_slots * delta_t``.
    """
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    if bath.eta.dim != spec.d_a:
        raise ValueError(
            f"bath ancilla dimension {bath.eta.dim} != d_a = {spec.d_a}"
        )
    if not delta_t > 0:
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    u_ext = extend_unitary(spec.u, spec.d_s, spec.d_a)
    eta_emb = extended_ancilla_state(bath.eta, 1.0)
    weights = np.array([w for w, _ in bath.branches], dtype=np.float64)
    offsets = np.zeros(len(bath.branches) + 1, dtype=np.int64)
    for i, (_, slots) in enumerate(bath.branches):
        offsets[i + 1] = offsets[i] + len(slots)
    flat = np.empty(offsets[-1], dtype=np.int64)
    for i, (_, slots) in enumerate(bath.branches):
        flat[offsets[i] : offsets[i + 1]] = slots
    series = backend.kernels().correlated_sum(
        backend.kernel_array(u_ext.mat),
        backend.kernel_array(eta_emb.mat),
        backend.kernel_array(rho0.mat),
        spec.d_s,
        spec.d_a + 1,
        flat,
        offsets,
        weights,
        int(bath.n_slots),
    )
    times = np.arange(bath.n_slots + 1) * delta_t
    return StateSeries(times, [DensityMatrix(m) for m in series])
