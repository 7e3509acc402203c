"""Herglotz wave fields on a ball: magnitude data, extraction, phase retrieval."""

from .specfun import (
    SeriesBudget,
    ConvergenceError,
    bessel_j,
    bessel_bound,
    gegenbauer,
    bessel_product_series,
    bessel_product_integral,
)
from .poly import Polynomial
from .harmonics import (
    BasisSpec,
    SphereGrid,
    basis_eval,
    default_poles,
    degree_multi_indices,
    fourier2d_basis,
    gram_rank,
    harmonic_dim,
    laplacian,
    p_alpha,
    sphere_grid,
    surface_measure,
    zonal_eval,
)
from .field import (
    HerglotzField,
    MagnitudeData,
    MagnitudeGrid,
    TrivialEquivalence,
    add_fields,
    conjugate_field,
    degree_power,
    equal_magnitude,
    eval_field,
    eval_field_grid,
    magnitude_coeffs,
    magnitude_sq,
    mean_coefficient,
    random_field,
    sample_magnitude,
    trivially_equivalent,
)
from .extract import (
    ExtractionRankError,
    RadialProfile,
    UnmixReport,
    angular_decompose,
    extract_magnitude_data,
    radial_grid,
    radial_unmix,
)
from .retrieve import (
    BranchNotApplicableError,
    InconsistentDataError,
    ModeType,
    PairSolution,
    RetrievalResult,
    canonicalize,
    classify_modes,
    retrieve_2d,
    retrieve_3d_mean,
    retrieve_3d_real,
    retrieve_3d_sparse,
    retrieve_real_data,
    solve_pair,
    solve_real_from_data,
)

__version__ = "0.1.0"
