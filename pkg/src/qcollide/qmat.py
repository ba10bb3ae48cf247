"""Dense complex-matrix foundation for the collision-model simulator.

Provides tensor products, the partial trace over the ancilla factor,
Hermitian spectral decomposition, the trace distance, the partial-swap
unitary family, and validated wrappers for quantum states and unitaries.

Conventions used throughout the package:

* Tensor ordering is system-major: the joint operator of a system factor
  ``A`` (dimension ``d_s``) and an ancilla factor ``B`` (dimension ``d_a``)
  is ``kron(A, B)``, so joint basis index ``i * d_a + k`` means system
  level ``i`` and ancilla level ``k``.  The system index varies slowest.
* Validation never silently repairs.  States or unitaries violating their
  invariants beyond tolerance raise ``ValueError``; small negative
  eigenvalues within tolerance are accepted as-is, not clipped.
* All matrices are dense ``complex128``.  Hilbert spaces here are
  desk-scale (joint dimensions of a few dozen at most), so sparse or GPU
  structures would only add overhead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Default tolerance for Hermiticity, unit trace, positivity and unitarity.
DEFAULT_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a 2-D complex128 array and reject non-finite entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product with the first factor as the slow (system) index.

    Block ``(i, j)`` of the result equals ``a[i, j] * b``.
    """
    return np.kron(as_complex_matrix(a, "a"), as_complex_matrix(b, "b"))


def partial_trace_ancilla(m, d_s: int, d_a: int) -> np.ndarray:
    """Trace out the ancilla factor of a joint operator.

    ``m`` must be ``(d_s * d_a) x (d_s * d_a)`` with system-major ordering
    (i.e. built like ``kron(system, ancilla)``).  Returns the ``d_s x d_s``
    matrix ``R[i, j] = sum_k m[i * d_a + k, j * d_a + k]``; the total trace
    is preserved.
    """
    a = as_complex_matrix(m, "m")
    d = d_s * d_a
    if a.shape != (d, d):
        raise ValueError(
            f"expected a {d}x{d} matrix for d_s={d_s}, d_a={d_a}, got {a.shape}"
        )
    return np.einsum("ikjk->ij", a.reshape(d_s, d_a, d_s, d_a))


def hermitian_eig(m, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending.

    The input is checked Hermitian within ``tol`` and symmetrized as
    ``(M + M†)/2`` before decomposing, which suppresses accumulated
    floating-point asymmetry below the tolerance.

    Returns ``(eigenvalues, eigenvectors)`` with real eigenvalues sorted in
    descending order and the matching eigenvectors as columns, so that
    ``m ≈ V @ diag(vals) @ V†``.
    """
    a = as_complex_matrix(m, "m")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    herm_defect = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if herm_defect > tol:
        raise ValueError(
            f"matrix is not Hermitian: max|M - M†| = {herm_defect:.3e} > {tol:.1e}"
        )
    sym = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(sym)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def partial_swap_unitary(theta: float, d: int) -> "UnitaryOp":
    """Partial-swap collision unitary ``cos(θ) I + i sin(θ) SWAP`` on two
    ``d``-dimensional factors.

    SWAP is Hermitian and involutive, so the combination is unitary for any
    real ``θ``.  ``θ = 0`` is the identity; ``θ = π/2`` is a full (phased)
    swap.
    """
    if d < 2:
        raise ValueError(f"factor dimension must be at least 2, got {d}")
    swap = np.zeros((d * d, d * d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            swap[a * d + b, b * d + a] = 1.0
    mat = np.cos(theta) * np.eye(d * d, dtype=np.complex128) + 1j * np.sin(theta) * swap
    return UnitaryOp(mat)


def basis_state(dim: int, index: int) -> "DensityMatrix":
    """Projector ``|index><index|`` as a validated density matrix."""
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dimension {dim}")
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[index, index] = 1.0
    return DensityMatrix(m)


class DensityMatrix:
    """Validated quantum state: Hermitian, unit-trace, positive semidefinite.

    Validation is strict: a matrix failing any invariant beyond tolerance is
    rejected with ``ValueError``.  Eigenvalues in ``[-psd_tol, 0)`` are
    accepted without clipping.  The stored matrix is an immutable copy.
    """

    __slots__ = ("mat", "dim")

    def __init__(self, mat, tol: float = DEFAULT_TOL, psd_tol: float | None = None):
        a = as_complex_matrix(mat, "density matrix").copy()
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"density matrix must be square, got {a.shape}")
        herm_defect = np.max(np.abs(a - a.conj().T))
        if herm_defect > tol:
            raise ValueError(
                f"density matrix not Hermitian: max|M - M†| = {herm_defect:.3e}"
            )
        trace_defect = abs(a.trace() - 1.0)
        if trace_defect > tol:
            raise ValueError(
                f"density matrix trace deviates from 1 by {trace_defect:.3e}"
            )
        min_eig = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])
        if min_eig < -(psd_tol if psd_tol is not None else tol):
            raise ValueError(
                f"density matrix not positive semidefinite: min eigenvalue {min_eig:.3e}"
            )
        a.setflags(write=False)
        self.mat = a
        self.dim = a.shape[0]

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(dim={self.dim})"


class UnitaryOp:
    """Validated unitary operator: ``max|U†U - I| <= tol``.

    The stored matrix is an immutable copy.
    """

    __slots__ = ("mat", "dim")

    def __init__(self, mat, tol: float = DEFAULT_TOL):
        a = as_complex_matrix(mat, "unitary").copy()
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"unitary must be square, got {a.shape}")
        defect = np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0])))
        if defect > tol:
            raise ValueError(f"not unitary: max|U†U - I| = {defect:.3e} > {tol:.1e}")
        a.setflags(write=False)
        self.mat = a
        self.dim = a.shape[0]

    def __repr__(self) -> str:  # pragma: no cover
        return f"UnitaryOp(dim={self.dim})"


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Trace distance ``D = ½ Σ|λ_i|`` over eigenvalues of ``a - b``.

    Symmetric, zero iff the states coincide, and contractive under
    completely positive trace-preserving maps, which makes its revivals the
    standard memory witness for the engines in this package.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.mat - b.mat
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


@dataclass(frozen=True)
class StateSeries:
    """Time grid plus one density matrix per grid point.

    The universal output record of every evolution engine.
    """

    times: np.ndarray
    states: list[DensityMatrix] = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if len(self.states) != t.size:
            raise ValueError(
                f"got {len(self.states)} states for {t.size} time points"
            )
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.states)

    def state_mats(self) -> np.ndarray:
        """All states stacked into an ``(n_times, d, d)`` array."""
        return np.stack([s.mat for s in self.states])
