"""Spectral toolkit for 1-D Schrodinger operators with measure potentials.

The potential is the distributional derivative of a bounded-variation
function: a step density plus weighted point atoms.  The package provides
exact window/Stieltjes arithmetic on such measures, the windowed
lower-bound constant with its guaranteed -2C^2 form bound, moving-window
discreteness diagnostics, a quasi-derivative phase-plane eigensolver on
Dirichlet truncations, energy-form evaluation, and a property-check engine
for the interval inequalities that back all of the guarantees.
"""

__version__ = "0.1.0"

from .criteria import (
    BrinckReport,
    DiscretenessCall,
    MolchanovProfile,
    brinck_constant,
    classify_discreteness,
    lower_bound_estimate,
    molchanov_profile,
)
from .forms import (
    FormDivergenceError,
    FormMargins,
    FormReport,
    form_bilinear,
    form_lower_bound_check,
    potential_energy,
    rayleigh_check,
)
from .inequalities import (
    CheckOutcome,
    SuiteReport,
    check_corollary1,
    check_embedding,
    check_ganelius,
    check_lemma3,
    check_proposition_upper,
    run_suite,
)
from .measure import (
    BVPotential,
    GridFunction,
    Interval,
    PotentialSpecError,
    build_potential,
    load_potential,
    measure_of,
    q_eval,
    shift_measure,
    stieltjes_integral,
    total_variation,
)
from .prufer import PropagationError, PrueferState, propagate, solution_at
from .spectral import (
    BracketError,
    MatchingError,
    SpectrumReport,
    count_below,
    eigenfunction,
    eigenvalue,
    spectrum_scan,
)

__all__ = [
    "__version__",
    "BVPotential",
    "GridFunction",
    "Interval",
    "PotentialSpecError",
    "build_potential",
    "load_potential",
    "q_eval",
    "measure_of",
    "stieltjes_integral",
    "total_variation",
    "shift_measure",
    "BrinckReport",
    "MolchanovProfile",
    "DiscretenessCall",
    "brinck_constant",
    "lower_bound_estimate",
    "molchanov_profile",
    "classify_discreteness",
    "PrueferState",
    "PropagationError",
    "propagate",
    "solution_at",
    "BracketError",
    "MatchingError",
    "SpectrumReport",
    "count_below",
    "eigenvalue",
    "eigenfunction",
    "spectrum_scan",
    "FormReport",
    "FormMargins",
    "FormDivergenceError",
    "potential_energy",
    "form_bilinear",
    "rayleigh_check",
    "form_lower_bound_check",
    "CheckOutcome",
    "SuiteReport",
    "check_ganelius",
    "check_embedding",
    "check_lemma3",
    "check_corollary1",
    "check_proposition_upper",
    "run_suite",
]
