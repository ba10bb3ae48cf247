"""qcollide: collision-model simulation for open quantum systems.

Three exactly-related pictures of the same open dynamics:

* ``stochastic``  - Monte Carlo over random-waiting-time strong collisions,
* ``periodic``    - fixed-step collisions with extended mixed-state ancillas,
* ``integrator``  - the Lindblad master equation both engines converge to,

built on dense complex linear algebra (``qmat``) and channel algebra
(``channels``), with a CLI layer (``cli``) for scenario runs.  Hot loops
are numba-compiled with a pure-numpy fallback; see ``backend``.
"""

from . import backend
from .channels import (
    CollisionSpec,
    KrausChannel,
    averaged_step_map,
    choi_matrix,
    collision_map_apply,
    kraus_channel,
    kraus_from_choi,
    lindblad_rhs_kraus,
    lindblad_rhs_map,
)
from .cli import (
    ConfigError,
    ScenarioConfig,
    WitnessReport,
    blp_witness,
    bloch_vector,
    demo_config,
    load_config,
    run_scenario,
)
from .integrator import IntegratorConfig, integrate_me, rk4_step
from .periodic import (
    CorrelatedBathSpec,
    ExtendedAncilla,
    extend_unitary,
    extended_ancilla_state,
    periodic_step,
    run_correlated_bath,
    run_periodic,
    uniform_fixed_m_bath,
)
from .qmat import (
    DensityMatrix,
    StateSeries,
    UnitaryOp,
    basis_state,
    hermitian_eig,
    kron,
    partial_swap_unitary,
    partial_trace_ancilla,
    trace_distance,
)
from .stochastic import (
    RngStream,
    TrajectoryRecord,
    ensemble_average,
    run_fixed_n_trajectory,
    run_trajectory,
    sample_waiting_time,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "CollisionSpec",
    "KrausChannel",
    "averaged_step_map",
    "choi_matrix",
    "collision_map_apply",
    "kraus_channel",
    "kraus_from_choi",
    "lindblad_rhs_kraus",
    "lindblad_rhs_map",
    "ConfigError",
    "ScenarioConfig",
    "WitnessReport",
    "blp_witness",
    "bloch_vector",
    "demo_config",
    "load_config",
    "run_scenario",
    "IntegratorConfig",
    "integrate_me",
    "rk4_step",
    "CorrelatedBathSpec",
    "ExtendedAncilla",
    "extend_unitary",
    "extended_ancilla_state",
    "periodic_step",
    "run_correlated_bath",
    "run_periodic",
    "uniform_fixed_m_bath",
    "DensityMatrix",
    "StateSeries",
    "UnitaryOp",
    "basis_state",
    "hermitian_eig",
    "kron",
    "partial_swap_unitary",
    "partial_trace_ancilla",
    "trace_distance",
    "RngStream",
    "TrajectoryRecord",
    "ensemble_average",
    "run_fixed_n_trajectory",
    "run_trajectory",
    "sample_waiting_time",
    "__version__",
]
