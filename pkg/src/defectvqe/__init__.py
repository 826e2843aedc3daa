"""Noisy VQE and QSE for small spin-defect active-space Hamiltonians.

The package maps second-quantized Hamiltonians to qubits, compiles UCCSD
circuits, simulates them on a noisy density-matrix backend and applies
post-selection, zero-noise extrapolation and readout correction.  An exact
FCI solver serves as the reference throughout.
"""

from __future__ import annotations

from .ansatz import build_uccsd, compile_ansatz
from .circuit import Circuit, DensityState, Gate, NoiseModel, run
from .estimation import EnergyEstimate, estimate_energy, scan_theta
from .fci import Determinant, solve_fci
from .fcidump import read_fcidump, write_fcidump
from .fermion import ActiveSpace, FermionHamiltonian, FermionOperator
from .fixtures import build_fixture
from .mapping import MappingSpec, map_operator, qubit_hamiltonian
from .mitigation import ConfusionMatrix, fit_exponential, fit_polynomial, run_zne, unfold
from .noise import load_calibration, noise_from_calibration
from .pauli import PauliString, PauliSum, group_commuting
from .qse import build_qse, solve_generalized
from .solvers import EnergyObjective, OptimizerConfig, run_vqe

__version__ = "0.1.0"

__all__ = [
    "ActiveSpace",
    "Circuit",
    "ConfusionMatrix",
    "DensityState",
    "Determinant",
    "EnergyEstimate",
    "EnergyObjective",
    "FermionHamiltonian",
    "FermionOperator",
    "Gate",
    "MappingSpec",
    "NoiseModel",
    "OptimizerConfig",
    "PauliString",
    "PauliSum",
    "build_fixture",
    "build_qse",
    "build_uccsd",
    "compile_ansatz",
    "estimate_energy",
    "fit_exponential",
    "fit_polynomial",
    "group_commuting",
    "load_calibration",
    "map_operator",
    "noise_from_calibration",
    "qubit_hamiltonian",
    "read_fcidump",
    "run",
    "run_vqe",
    "run_zne",
    "scan_theta",
    "solve_fci",
    "solve_generalized",
    "unfold",
    "write_fcidump",
]
