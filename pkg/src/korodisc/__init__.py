"""Korobov and Fibonacci lattice point sets, smooth fixed-volume
discrepancy estimation, and exact dispersion."""

__version__ = "0.1.0"

from .errors import (
    GeneratorNotFoundError,
    InconsistencyError,
    PreconditionError,
    ResourceLimitError,
)
from .point_sets import (
    Generator,
    PointSet,
    SourceTag,
    cubature,
    fibonacci_generator,
    fibonacci_number,
    fibonacci_pointset,
    korobov_pointset,
    read_pointset_csv,
    write_pointset_csv,
)
from .lattice import (
    MaxExactness,
    SearchResult,
    dual_in_block,
    exponential_sum,
    exponential_sum_direct,
    hyperbolic_cross,
    hyperbolic_cross_size,
    hyperbolic_product,
    is_exact,
    is_prime,
    max_exactness,
    max_feasible_level,
    search_generator,
)
from .smooth_kernels import (
    SmoothBox,
    H_bound,
    box_eval,
    box_integral,
    hat_eval,
    hat_fourier,
    hat_integral,
    periodized_box_eval,
    periodized_hat_eval,
    sigma,
)
from .discrepancy import (
    DiscrepancyEstimate,
    FourierError,
    SearchConfig,
    block_projection_norms,
    error_direct,
    error_fourier,
    nonperiodic_discrepancy,
    periodic_discrepancy,
)
from .dispersion import (
    AxisBox,
    DispersionResult,
    IntervalSystem,
    box_is_empty,
    dispersion,
    dispersion_bruteforce,
    solve_congruence_system,
    system_box_hit,
)
