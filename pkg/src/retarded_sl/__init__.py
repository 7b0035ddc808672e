"""Spectrum of a discontinuous Sturm-Liouville problem with retarded argument.

Shooting solver with transmission jump, characteristic-function root search,
an integral-equation cross-check, and the closed-form large-lambda asymptotics.
"""

from .problem import ProblemSpec, ValidatedProblem, load, validate
from .ode import solve
from .charfn import find_roots, xi

__all__ = ["ProblemSpec", "ValidatedProblem", "load", "validate", "solve", "find_roots", "xi"]
__version__ = "0.1.0"
