"""Remote one- and two-qubit state creation through homogeneous dipolar spin chains."""

from .dynamics import (
    ChainSectors,
    SectorState,
    TransitionMatrix,
    chain_sectors,
    evolve,
    evolve_state,
    receiver_projection,
    transition_matrices,
    transition_matrix,
    two_qubit_density,
)
from .harness import ResultStore, SweepConfig, export_plotdata, export_table, load_config, run_sweep
from .lattice import (
    ChainSpec,
    EigenSystem,
    ExcitationBlock,
    build_couplings,
    eigendecompose,
    one_excitation_block,
    two_excitation_block,
)
from .protocol import (
    CriticalLengthRecord,
    ProtocolResult,
    ScanConfig,
    ScanExhausted,
    SvdTriple,
    critical_length,
    maximize_w1,
    optimal_unitaries,
    run_protocol,
    svd,
)
from .spectral import SpectralProfile, phase_window, significant_harmonics, spectral_profile
from .twoqubit import (
    VERTICES,
    CreationRecord,
    EigenTriple,
    TwoQubitScan,
    averaged_kappa,
    characteristic_coefficients,
    eigenvalue_critical_length,
    kappa,
    lattice_scan,
    minimize_discrepancy,
    registration_time,
    target_coefficients,
)

__version__ = "0.1.0"
