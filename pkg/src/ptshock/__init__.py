"""Shock and peak formation in Burgers-type equations and their PT-symmetric deformations.

The undeformed equation ``w_t + f(w) w_x = 0`` and the deformed equation
``u_t - i f(u) (i u_x)^eps = 0`` are linked by an explicit map.  The
package predicts shock (undeformed) and peak (deformed) times, evolves
solutions along characteristics, carries them across the map in both
directions and monitors conserved charges.
"""

__version__ = "0.1.0"

from .model import (BranchSet, ChargeReport, ChargeSpec, DeformedSystem, FSpec, GridSpec,  # noqa: E402
                    ShockEvent, reality_phase)
from .profile_dsl import ProfileSyntaxError, EvaluationError, parse, eval_dual  # noqa: E402

__all__ = [
    "__version__",
    "BranchSet",
    "ChargeReport",
    "ChargeSpec",
    "DeformedSystem",
    "FSpec",
    "GridSpec",
    "ShockEvent",
    "reality_phase",
    "parse",
    "eval_dual",
    "ProfileSyntaxError",
    "EvaluationError",
]
