"""Seed-reproducible Monte Carlo laboratory for processes carried by zero sets.

Generate Brownian and derived paths on uniform grids, decompose their
zero sets into excursions, flip excursion signs, estimate local times,
and verify the compensator identities, closed-form exceedance laws and
last-passage representations that govern such processes.
"""

from .calculus import (
    check_balayage,
    check_tanaka,
    cross_variation,
    downcrossing_local_time,
    ito_integral,
    LocalTimePath,
    occupation_local_time,
    quadratic_variation,
    tanaka_local_time,
)
from .estimates import (
    arcsine_cdf,
    azema_submartingale,
    EstimateReport,
    exceedance_probability,
    honest_time_law,
    inverse_local_time,
    PhiSpec,
    product_martingale_check,
    representation_check,
    StreamConfig,
    t_phi_stopping,
    threshold_stopping_law,
)
from .excursions import (
    apply_signs,
    decompose_excursions,
    ExcursionSet,
    flip_signs,
    last_zero_times,
    right_sign_process,
    SignProcess,
    zero_set,
)
from .functionals import constant, FunctionSpec, of_local_time, PredictableFunctional, tapered_amplitude
from .grids import DecomposedPath, Path, SeedSpec, TimeGrid
from .pathgen import (
    brownian_path,
    drawdown_decomposition,
    generate_ensemble,
    reflected_decomposition,
)
from .reporting import content_hash, IdentityReport
from .sigma import (
    check_absolute_martingale,
    check_compensator,
    check_sigma,
    check_zero_set_coincidence,
    f_transform,
    martingale_test,
    multiplicative_representation,
    z_transform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
