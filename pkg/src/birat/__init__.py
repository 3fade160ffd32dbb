"""Numerical and exact tools for the dynamics of birational maps of projective space.

Modules: ``projalg`` (exact homogeneous polynomials), ``ratmap`` (rational maps,
iteration, degrees), ``indeterminacy`` (indeterminacy loci and regularity checks),
``green`` (Green functions and currents), ``currents`` (equilibrium measure on a
grid), ``dynamics`` (Monte Carlo degrees, invariance, mixing) and ``cli``.
"""

from .errors import BiratError
from .projalg import HomoPoly
from .ratmap import BirationalPair, RationalMap, degree_sequence, iterate, verify_birational
from .zoo import zoo

__version__ = "0.1.0"

__all__ = ["BiratError", "HomoPoly", "RationalMap", "BirationalPair", "degree_sequence",
           "iterate", "verify_birational", "zoo", "__version__"]
