"""qpcalc: graded symplectic calculus on QP manifolds.

Symbolic kernel for graded Poisson brackets, classical master equations,
canonical transformations exp(delta_alpha), Lagrangian restriction, and the
derived-bracket constructions (Poisson, Courant, higher Dorfman, Nambu,
strong Courant algebroids).
"""

from .expr import (
    CoordinateFamily,
    Expression,
    TensorSymbol,
    IBASE,
    IFIBER,
    IALG,
    coord,
    tensor,
    normalize,
    restrict,
    substitute,
    SubstRule,
    left_derivative,
    right_derivative,
    scalar,
    ZERO,
    ONE,
)

__version__ = "0.1.0"
