"""Shared helpers: random model instances and independent test oracles."""

import numpy as np

from qcollide import CollisionSpec, DensityMatrix, UnitaryOp


def random_density(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityMatrix(m / m.trace())


def random_unitary(rng, d):
    # QR of a complex Gaussian matrix
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(g)
    return UnitaryOp(q)


def random_spec(rng, d_s, d_a, gamma=1.0):
    return CollisionSpec(
        d_s, d_a, random_unitary(rng, d_s * d_a), random_density(rng, d_a), gamma
    )


def ptrace_oracle(m, d_s, d_a):
    """Index-loop partial trace, independent of the package implementation."""
    out = np.zeros((d_s, d_s), dtype=np.complex128)
    for i in range(d_s):
        for j in range(d_s):
            for k in range(d_a):
                out[i, j] += m[i * d_a + k, j * d_a + k]
    return out


def max_abs(a, b=None):
    if b is None:
        return float(np.max(np.abs(a)))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
