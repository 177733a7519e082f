"""Propagation of Gelfand-Shilov wave front sets under quadratic Schroedinger-type semigroups."""

from .subspaces import ConeSet, SubspaceBasis, principal_angles
from .symplectic import (
    HamiltonMap,
    InvalidHamiltonian,
    PropagatorMatrix,
    QuadraticHamiltonian,
    check_positive_symplectic,
    compose_relation,
    hamilton_map,
    kernel_imag,
    predict_wf_propagated,
    propagator_matrix,
    singular_space,
    twisted_graph,
)
from .states import Chirp, Delta, GaussianChirpState, GaussianTerm, PlaneWave

__version__ = "0.1.0"
