"""Exact-diagonalization toolkit for ground-state entanglement of spin-1/2 lattices."""

from .eigensolver import SpectrumResult, ground_spectrum
from .errors import *  # noqa: F401,F403
from .ggm import Bipartition, GgmResult, PartitionPolicy, default_policy, ggm
from .hilbert import (StateVector, apply_hamiltonian, max_schmidt_sq, read_state,
                      reduced_density_matrix, write_state)
from .lattice import ModelSpec, PauliTerm, build_model
from .measures import (concurrence, logarithmic_negativity, mutual_information,
                       quantum_discord, shared_purity, von_neumann_entropy)
from .sweep import SweepConfig, SweepRecord, detect_transitions, run_sweep
from .xy_analytic import correlators, ggm_xy

__version__ = "0.1.0"
