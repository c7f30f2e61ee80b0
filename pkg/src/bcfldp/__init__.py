"""Exact digit statistics and large-deviation brackets for the Renyi map.

The Renyi map T(x) = 1/(1-x) mod 1 generates backward continued fraction
digits. This package computes exact cylinder geometry, Birkhoff means of
arithmetic functions of the digits, Lebesgue measures of deviation sets,
pressure and rate-function brackets on digit-capped subsystems, and
statistics of finitely described invariant measures.
"""

__version__ = "0.1.0"

from .errors import BudgetExceededError
from .interval import Interval, parse_interval, parse_number
from .exact import (
    CylinderInterval,
    DigitWord,
    ExactRational,
    MoebiusMap,
    cylinder,
    cylinder_length,
    derivative,
    digit_at,
    digits,
    distortion_budget,
    inverse_branch,
    renyi_apply,
    thaler_c,
    thaler_sequence,
    word_map,
)
from .digitstats import (
    IDENTITY,
    LOGARITHM,
    PRIME_TIMES_N,
    RECIPROCAL,
    ArithmeticFunction,
    birkhoff_mean,
    digit_frequency,
    get_psi,
    three_means,
)
from .measures import (
    DigitMarkovMeasure,
    FixedPointAtom,
    MeasureStats,
    MixtureMeasure,
    entropy,
    lyapunov_bracket,
    stats,
    theorem_c_sequence,
)
from .thermo import (
    PressureBracket,
    lambda_curve,
    lyapunov_spectrum,
    minimizer_scan,
    pressure_bracket,
    rate_from_legendre,
)
from .deviation import (
    DeviationEstimate,
    DeviationQuery,
    bn_measure,
    exact_measure,
    mc_measure,
    rate_fit,
)
