"""Exact computational algebra for chromatic coefficient rings and their
Tate-construction quotients: p-typical formal group laws, p-series,
graded Laurent series with Weierstrass division, height-dropping
substitution, ideal-adic towers, and the degree calculus on the kp-line.
"""

from .coeffring import (
    GeneratorSpec,
    GradedPolynomial,
    Ideal,
    TheoryPresentation,
    ideal_In,
    is_unit,
    make_theory,
    poly_add,
    poly_mul,
    reduce_mod_ideal,
)
from .errors import (
    ChromaticError,
    Inconclusive,
    NotDistinguished,
    PrimeError,
    TermBudgetError,
    TheoryError,
    WindowError,
)
from .fgl import (
    LogSeries,
    PSeries,
    fgl_sum,
    hazewinkel_log,
    m_series,
    p_series,
    p_series_by_composition,
    reduce_p_series_mod,
    series_inverse,
)
from .grading import (
    RODegree,
    TheoryParams,
    hat_shift,
    lambda_of,
    regular_degree,
    splitting_degrees,
)
from .series import (
    TruncatedLaurent,
    WeierstrassFactorization,
    divide_mod,
    laurent_add,
    laurent_inverse,
    laurent_mul,
    localize_colimit,
    power_series_quotient,
    weierstrass_factor,
)

__version__ = "0.1.0"
