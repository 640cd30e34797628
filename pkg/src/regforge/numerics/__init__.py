"""Dense matrix kernels and matrix-equation solvers.

- ``linalg``: validated LU solves, eigenvalues, matrix exponential
- ``matrix_equations``: Lyapunov, Sylvester and Riccati (Newton–Kleinman)
"""

from __future__ import annotations

from regforge.numerics.linalg import (
    eigenvalues,
    factorize,
    matrix_exponential,
    solve_linear,
    spectral_abscissa,
)
from regforge.numerics.matrix_equations import (
    prestabilizing_gain,
    solve_care,
    solve_lyapunov,
    solve_sylvester,
)

__all__ = [
    "eigenvalues",
    "factorize",
    "matrix_exponential",
    "prestabilizing_gain",
    "solve_care",
    "solve_linear",
    "solve_lyapunov",
    "solve_sylvester",
    "spectral_abscissa",
]
