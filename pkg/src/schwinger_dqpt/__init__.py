"""Noisy-circuit simulation of a two-site Z2-Schwinger mass quench.

The package walks the full pipeline at desk scale: exact diagonalization
of the gauge-invariant subspace (schwinger), ground-state-prep and
Cartan-decomposed Trotter circuits (circuits), Kraus flip channels with
exact and sampled noisy execution plus Pauli tomography (noise),
trace-distance fitting of noise parameters on grids (fit), and a CLI
that emits CSV/JSON series, surfaces and QASM files (cli). Dense n-qubit
primitives live in qcore.
"""

from .qcore import (
    DensityMatrix,
    Gate,
    KrausChannel,
    PauliString,
    StateVector,
    apply_channel,
    apply_gate,
    fidelity,
    pauli_expectation,
    trace_distance,
)
from .schwinger import (
    PHYSICAL_BASIS,
    LoschmidtSeries,
    ModelParams,
    NoExactDqptError,
    PhaseField,
    Spectrum,
    UndefinedPhaseError,
    WindingLoop,
    analytic_loschmidt,
    analytic_phase_field,
    build_physical_hamiltonian,
    diagonalize,
    dqpt_times,
    gauss_check,
    loschmidt_oracle,
    quenched_block_hamiltonian,
    rate_function,
    spin_hamiltonian,
    winding_number,
)
from .circuits import (
    Circuit,
    CouplingMap,
    build_ground_prep,
    build_quench_program,
    build_trotter_step,
    circuit_unitary,
    export_qasm,
    moments,
    parse_qasm,
    run_statevector,
    validate_layout,
)
from .noise import (
    CountsTable,
    NoiseModelSpec,
    TomographySetting,
    Trajectory,
    build_noise_model,
    exact_readout,
    make_flip_channel,
    make_two_qubit_channel,
    reconstruct_state,
    run_density_matrix,
    sample_trajectories,
    simulate_readout,
    tomography_settings,
)
from .fit import (
    DistanceSurface,
    FitResult,
    GridSpec,
    averaged_trace_distance,
    grid_sweep,
    load_trajectory,
    locate_minimum,
    save_surface,
    save_trajectory,
)

__version__ = "0.1.0"
