"""Exact finite-N spectral statistics of noncommutative polynomials in
classical random matrix ensembles, with Monte Carlo cross-checks."""

__version__ = "0.1.0"

from ._backend import USE_NUMBA, backend_name
from .errors import (
    DimensionMismatchError,
    DomainError,
    EvaluationError,
    IncompleteBasisError,
    InconsistencyError,
    NotSelfAdjointError,
    PoleRegionError,
    ReconstructionError,
    SizeCapError,
    StrongConvError,
)
from .poly import ChebSeries, Poly, TestFunction, build_test_function, cheb_expand, sup_norm
from .ncpoly import CMat, FreeModel, NCPoly, free_matrix_moment, free_norm_estimate, make_word
from .genus import Ensemble, gse_expectation, spectral_statistic_poly, word_polynomial
from .weingarten import (
    RationalFn,
    orthogonal_word_moment,
    reconstruct_psi,
    reconstruct_psi_orthogonal,
    symplectic_expectation,
    unitary_word_moment,
    wg_orthogonal,
    wg_unitary,
)
from .interp import inverse_integer_ratio, optimality_example
from .expansion import mu_coeffs, nu_coeffs, nu_smooth, support_test, theorem_bound
from .sampler import SampleEnsemble, SampleSpec, sample_norms
