"""Deterministic master-equation integration.

The continuum limit of either collision engine is the master equation

    rho' = gamma * (L[rho] - rho)

equivalently written in Lindblad form with the collision map's Kraus
operators as jump operators.  Both right-hand-side forms are offered; they
agree identically and the choice only exercises different code paths.

Integration is classic fixed-step fourth-order Runge-Kutta: at desk-scale
dimensions with a smooth linear generator, a fixed step is accurate,
cheap, and trivially bit-deterministic.  Output times are hit exactly by
shortening the final sub-step into each output point - never by
interpolation - so engine comparisons happen at identical times.  States
are re-validated after stepping rather than repaired; a validation failure
means the step is too large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .channels import CollisionSpec, kraus_channel, lindblad_rhs_kraus, lindblad_rhs_map
from .qmat import DensityMatrix, StateSeries

#: Validation tolerances for integrated states (looser than construction
#: tolerances: RK4 drift is bounded but nonzero).
_STEP_TOL = 1e-9
_STEP_PSD_TOL = 1e-8

_RHS_FORMS = ("map", "kraus")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings: internal step and right-hand-side form."""

    step: float = 1e-3
    rhs_form: str = "map"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.rhs_form not in _RHS_FORMS:
            raise ValueError(
                f"rhs_form must be one of {_RHS_FORMS}, got {self.rhs_form!r}"
            )


def rk4_step(
    spec: CollisionSpec, rho: DensityMatrix, h: float, rhs_form: str = "map"
) -> DensityMatrix:
    """One fourth-order Runge-Kutta step of size ``h``.

    The output is validated as a density matrix (Hermiticity and trace
    within 1e-9, positivity within 1e-8); failure indicates the step is
    too large for the model's collision rate.
    """
    if rho.dim != spec.d_s:
        raise ValueError(f"state dimension {rho.dim} != d_s = {spec.d_s}")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if rhs_form not in _RHS_FORMS:
        raise ValueError(f"rhs_form must be one of {_RHS_FORMS}, got {rhs_form!r}")
    if rhs_form == "map":
        from .channels import apply_map_matrix

        def rhs(m):
            return spec.gamma * (apply_map_matrix(spec, m) - m)

    else:
        channel = kraus_channel(spec)
        kdk = sum(k.conj().T @ k for k in channel.kraus)

        def rhs(m):
            return spec.gamma * (channel.apply(m) - 0.5 * (kdk @ m + m @ kdk))

    r = rho.mat
    k1 = rhs(r)
    k2 = rhs(r + (0.5 * h) * k1)
    k3 = rhs(r + (0.5 * h) * k2)
    k4 = rhs(r + h * k3)
    out = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    try:
        return DensityMatrix(out, tol=_STEP_TOL, psd_tol=_STEP_PSD_TOL)
    except ValueError as exc:
        raise ValueError(f"RK4 step h={h} too large: {exc}") from exc


def integrate_me(
    spec: CollisionSpec,
    rho0: DensityMatrix,
    output_times,
    config: IntegratorConfig | None = None,
) -> StateSeries:
    """Integrate the master equation from ``t = 0`` through ``output_times``.

    Every output time is hit exactly (the final sub-step into each point is
    shortened).  With ``rhs_form="kraus"`` the Kraus channel is extracted
    once, up front.
    """
    if config is None:
        config = IntegratorConfig()
    if rho0.dim != spec.d_s:
        raise ValueError(f"state dimension {rho0.dim} != d_s = {spec.d_s}")
    times = np.asarray(output_times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("output_times must be a non-empty 1-D array")
    if times[0] < 0:
        raise ValueError("output_times must start at or after t = 0")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("output_times must be strictly increasing")
    k = backend.kernels()
    if config.rhs_form == "map":
        series = k.rk4_evolve_map(
            backend.kernel_array(spec.u.mat),
            backend.kernel_array(spec.eta.mat),
            backend.kernel_array(rho0.mat),
            spec.d_s,
            spec.d_a,
            float(spec.gamma),
            times,
            float(config.step),
        )
    else:
        channel = kraus_channel(spec)
        kraus = np.stack(channel.kraus)
        kdk = np.zeros((channel.d, channel.d), dtype=np.complex128)
        for op in channel.kraus:
            kdk += op.conj().T @ op
        series = k.rk4_evolve_kraus(
            kraus,
            kdk,
            backend.kernel_array(rho0.mat),
            float(spec.gamma),
            times,
            float(config.step),
        )
    try:
        states = [DensityMatrix(m, tol=_STEP_TOL, psd_tol=_STEP_PSD_TOL) for m in series]
    except ValueError as exc:
        raise ValueError(
            f"integration step {config.step} too large: {exc}"
        ) from exc
    return StateSeries(times, states)


__all__ = [
    "IntegratorConfig",
    "rk4_step",
    "integrate_me",
    "lindblad_rhs_kraus",
    "lindblad_rhs_map",
]
