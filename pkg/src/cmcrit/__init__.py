"""High-order derivative towers of H(x; a) = e^a - (1 + a/x)^x, their
monotonicity transition points, and extrapolation of the critical parameter."""

__version__ = "0.1.0"

from .precision import PrecisionContext, recommended_digits  # noqa: E402
from .tower import TowerRequest, DerivativeTower, compute_tower, f_eval, g_eval, g_a_eval, tower  # noqa: E402
from .solver import NewtonConfig, TransitionPoint, initial_guess, solve_transition, sweep  # noqa: E402
from .extrapolate import CriticalEstimate, fit_inverse_poly, stability_report  # noqa: E402

__all__ = [
    "PrecisionContext", "recommended_digits",
    "TowerRequest", "DerivativeTower", "compute_tower", "f_eval", "g_eval", "g_a_eval", "tower",
    "NewtonConfig", "TransitionPoint", "initial_guess", "solve_transition", "sweep",
    "CriticalEstimate", "fit_inverse_poly", "stability_report",
]
