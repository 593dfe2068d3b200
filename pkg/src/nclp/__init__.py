"""Noncommutative L^p isometries at finite dimension."""

__version__ = "0.1.0"

from .algebra import Algebra, Element, SubalgebraBasis
from .cfm import BlochCFM, cfm_check_axioms, cfm_eval, cfm_from_functional, fit_linear, nonlinearity_witness
from .errors import *  # noqa: F401,F403
from .isometry import (
    LinearMap,
    TypicalTriple,
    YeadonTriple,
    construct_typical,
    construct_yeadon,
    decompose_isometry,
    decompose_l1,
    typical_to_yeadon,
    verify_isometry,
    yeadon_to_typical,
)
from .jordan import ANTI, MULT, JordanMono, Slot, example_m2_m4, verify_jordan_mono
from .lp import LpElement, StateDensity, clarkson_equal, schatten_norm
from .modular import ModularContext, check_hs_conditions, phi_transform
from .projections import (
    ConditionalExpectation,
    PositiveProjection,
    Symmetrizer,
    build_positive_projection,
    factor_projection,
    state_ce,
    trace_ce,
)
from .superop import Superoperator
