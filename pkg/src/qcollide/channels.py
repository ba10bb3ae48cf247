"""Quantum-channel algebra for a single collision.

A collision is a bipartite unitary ``U`` hitting the system together with a
fresh ancilla prepared in ``eta``.  Its effect on the system alone is the
channel

    L[rho] = Tr_anc{ U (rho ⊗ eta) U† }

which is completely positive and trace preserving.  This module builds that
map from ``(U, eta)``, converts it to Kraus form through its Choi matrix,
and evaluates the master-equation right-hand side either directly as
``gamma * (L[rho] - rho)`` or in Lindblad form with the Kraus operators as
jump operators.  Both forms agree identically because
``sum_nu K_nu† K_nu = I`` turns ``rho`` into the anticommutator half.

Choi convention (locked by the identity-channel test): the unnormalized

    C = sum_ij |i><j| ⊗ L[|i><j|],      Tr C = d_s,

with the input copy as the slow index.  An eigenvector ``v`` of ``C`` with
eigenvalue ``λ > 0`` yields the Kraus operator ``K = sqrt(λ) * unvec(v)``
where ``unvec`` reshapes ``v[(i, a)]`` into ``K[a, i]``.  Kraus sets are
unique only up to unitary remixing, so channel equality is always checked
through the action on states, never entrywise on the operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import (
    DEFAULT_TOL,
    DensityMatrix,
    UnitaryOp,
    as_complex_matrix,
    kron,
    partial_trace_ancilla,
)

#: Relative eigenvalue cutoff separating Choi-rank noise from CP violation.
DEFAULT_RANK_TOL = 1e-12


@dataclass(frozen=True)
class CollisionSpec:
    """One collision model: dimensions, collision unitary, ancilla state, rate.

    ``gamma`` is the collision rate (events per unit time); it also equals
    the probability per infinitesimal time window of a collision occurring.
    """

    d_s: int
    d_a: int
    u: UnitaryOp
    eta: DensityMatrix
    gamma: float

    def __post_init__(self):
        if self.d_s < 1 or self.d_a < 1:
            raise ValueError("dimensions must be positive integers")
        if self.u.dim != self.d_s * self.d_a:
            raise ValueError(
                f"unitary dimension {self.u.dim} != d_s*d_a = {self.d_s * self.d_a}"
            )
        if self.eta.dim != self.d_a:
            raise ValueError(
                f"ancilla state dimension {self.eta.dim} != d_a = {self.d_a}"
            )
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


class KrausChannel:
    """Finite Kraus representation ``rho -> sum_nu K_nu rho K_nu†``.

    Completeness ``sum K†K = I`` is validated at construction.
    """

    __slots__ = ("d", "kraus")

    def __init__(self, kraus, tol: float = DEFAULT_TOL):
        ops = [as_complex_matrix(k, "Kraus operator").copy() for k in kraus]
        if not ops:
            raise ValueError("need at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise ValueError("all Kraus operators must share one square shape")
        comp = sum(k.conj().T @ k for k in ops)
        defect = np.max(np.abs(comp - np.eye(d)))
        if defect > tol:
            raise ValueError(
                f"Kraus completeness violated: max|ΣK†K - I| = {defect:.3e}"
            )
        for k in ops:
            k.setflags(write=False)
        self.d = d
        self.kraus = ops

    def __len__(self) -> int:
        return len(self.kraus)

    def apply(self, mat) -> np.ndarray:
        """Channel action ``sum_nu K mat K†`` on an arbitrary matrix."""
        m = as_complex_matrix(mat, "mat")
        out = np.zeros_like(m)
        for k in self.kraus:
            out += k @ m @ k.conj().T
        return out


def apply_map_matrix(spec: CollisionSpec, mat) -> np.ndarray:
    """Linear action of the collision map on an arbitrary matrix.

    No state validation; this is the raw map used by the Choi construction
    and the master-equation right-hand sides.
    """
    joint = kron(mat, spec.eta.mat)
    w = spec.u.mat @ joint @ spec.u.mat.conj().T
    return partial_trace_ancilla(w, spec.d_s, spec.d_a)


def collision_map_apply(spec: CollisionSpec, rho: DensityMatrix) -> DensityMatrix:
    """Post-collision system state ``Tr_anc{U (rho ⊗ eta) U†}``."""
    if rho.dim != spec.d_s:
        raise ValueError(f"state dimension {rho.dim} != d_s = {spec.d_s}")
    return DensityMatrix(apply_map_matrix(spec, rho.mat))


def averaged_step_map(
    spec: CollisionSpec, rho: DensityMatrix, delta_p: float
) -> DensityMatrix:
    """Collision-averaged short-step map ``(1 - Δp) rho + Δp L[rho]``.

    ``delta_p`` is the probability that a collision occurs within the step.
    """
    if rho.dim != spec.d_s:
        raise ValueError(f"state dimension {rho.dim} != d_s = {spec.d_s}")
    if not 0.0 <= delta_p <= 1.0:
        raise ValueError(f"delta_p must lie in [0, 1], got {delta_p}")
    out = (1.0 - delta_p) * rho.mat + delta_p * apply_map_matrix(spec, rho.mat)
    return DensityMatrix(out)


def choi_matrix(spec: CollisionSpec) -> np.ndarray:
    """Unnormalized Choi matrix ``C = sum_ij |i><j| ⊗ L[|i><j|]``.

    Size ``d_s² x d_s²`` with ``Tr C = d_s``; Hermitian and PSD because the
    collision map is completely positive.
    """
    d = spec.d_s
    choi = np.zeros((d * d, d * d), dtype=np.complex128)
    unit = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            unit[i, j] = 1.0
            block = apply_map_matrix(spec, unit)
            choi[i * d : (i + 1) * d, j * d : (j + 1) * d] = block
            unit[i, j] = 0.0
    return choi


def kraus_from_choi(choi, rank_tol: float = DEFAULT_RANK_TOL) -> KrausChannel:
    """Extract Kraus operators from a Choi matrix by eigendecomposition.

    ``rank_tol`` is relative to the largest eigenvalue: eigenvalues at or
    below ``rank_tol * λ_max`` are dropped as numerical noise, and anything
    below ``-rank_tol * λ_max`` means the map is not completely positive and
    raises.  The Choi rank bounds the operator count by ``d²``.
    """
    c = as_complex_matrix(choi, "choi")
    n = c.shape[0]
    d = math.isqrt(n)
    if d * d != n or c.shape != (n, n):
        raise ValueError(f"Choi matrix must be d²xd², got shape {c.shape}")
    herm_defect = np.max(np.abs(c - c.conj().T))
    if herm_defect > DEFAULT_TOL:
        raise ValueError(f"Choi matrix not Hermitian: defect {herm_defect:.3e}")
    vals, vecs = np.linalg.eigh(0.5 * (c + c.conj().T))
    cutoff = rank_tol * float(vals[-1])
    if float(vals[0]) < -cutoff:
        raise ValueError(
            f"Choi matrix has negative eigenvalue {vals[0]:.3e}: "
            "map is not completely positive"
        )
    kraus = []
    for lam, v in zip(vals[::-1], vecs.T[::-1]):
        if lam <= cutoff:
            break
        # v is indexed by (input i, output a); unvec to K[a, i]
        kraus.append(np.sqrt(lam) * v.reshape(d, d).T)
    return KrausChannel(kraus)


def kraus_channel(spec: CollisionSpec, rank_tol: float = DEFAULT_RANK_TOL) -> KrausChannel:
    """Kraus form of the collision map, via its Choi matrix."""
    return kraus_from_choi(choi_matrix(spec), rank_tol)


def lindblad_rhs_kraus(
    channel: KrausChannel, gamma: float, rho: DensityMatrix
) -> np.ndarray:
    """Lindblad dissipator with the channel's Kraus operators as jumps:

        gamma * sum_nu ( K rho K† - ½ [K†K, rho]_+ ).

    The output is traceless and Hermitian (within roundoff).
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if rho.dim != channel.d:
        raise ValueError(f"state dimension {rho.dim} != channel dimension {channel.d}")
    r = rho.mat
    out = np.zeros_like(r)
    for k in channel.kraus:
        kdk = k.conj().T @ k
        out += k @ r @ k.conj().T - 0.5 * (kdk @ r + r @ kdk)
    return gamma * out


def lindblad_rhs_map(spec: CollisionSpec, rho: DensityMatrix) -> np.ndarray:
    """Master-equation right-hand side ``gamma * (L[rho] - rho)``."""
    if rho.dim != spec.d_s:
        raise ValueError(f"state dimension {rho.dim} != d_s = {spec.d_s}")
    return spec.gamma * (apply_map_matrix(spec, rho.mat) - rho.mat)
