"""Dense LU solve of the assembled system with residual and conditioning checks."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .formulation import AssembledSystem

logger = logging.getLogger(__name__)

RESIDUAL_WARN = 1e-8
RESIDUAL_FAIL = 1e-4
# pivots below this fraction of the largest |entry| are treated as exact zeros
PIVOT_TOL = 1e-13


class SingularSystemError(ArithmeticError):
    """Zero pivot during factorisation; usually a missing constraint."""


class NumericalError(ArithmeticError):
    """Relative residual above the failure threshold."""


class ResidualWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Solution:
    ndgphi: np.ndarray  # V/m per triangle
    v_r: np.ndarray  # V
    phi_a: np.ndarray  # V per object
    j_t: np.ndarray  # A/m^2 per terminal (outward normal component)
    residual_norm: float
    x_scaled: np.ndarray


class Factorization:
    """LU factors of one system matrix, reusable for several right-hand sides."""

    def __init__(self, matrix: np.ndarray):
        A = np.asarray(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"system matrix must be square, got {A.shape}")
        self.matrix = A
        self.anorm1 = float(np.abs(A).sum(axis=0).max()) if A.size else 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu, self.piv = sla.lu_factor(A, check_finite=True)
        diag = np.abs(np.diag(self.lu))
        scale = np.abs(A).max() if A.size else 1.0
        bad = np.nonzero(diag <= PIVOT_TOL * scale)[0]
        if len(bad):
            raise SingularSystemError(
                f"singular pivot at position {int(bad[0])} of {A.shape[0]} "
                f"(|u_kk| = {diag[bad[0]]:.3e}); an object is probably missing a charge or potential constraint"
            )

    def solve(self, b: np.ndarray) -> np.ndarray:
        return sla.lu_solve((self.lu, self.piv), b, check_finite=False)

    def residual(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Relative residual ``||Ax - b|| / ||b||`` per right-hand side column."""
        r = self.matrix @ x - b
        nb = np.linalg.norm(b, axis=0)
        nr = np.linalg.norm(r, axis=0)
        return np.where(nb > 0, nr / np.where(nb > 0, nb, 1.0), nr)

    def condition(self) -> float:
        """1-norm condition estimate from the LU factors (LAPACK gecon)."""
        rcond, info = lapack.dgecon(self.lu, self.anorm1, norm="1")
        if info != 0:
            raise ValueError(f"dgecon failed with info={info}")
        return np.inf if rcond == 0 else 1.0 / rcond


def check_residual(res: float) -> None:
    if not np.isfinite(res) or res > RESIDUAL_FAIL:
        raise NumericalError(f"relative residual {res:.3e} exceeds {RESIDUAL_FAIL:g}")
    if res > RESIDUAL_WARN:
        warnings.warn(f"relative residual {res:.3e} exceeds {RESIDUAL_WARN:g}", ResidualWarning, stacklevel=3)
        logger.warning("relative residual %.3e", res)


def solution_from_vector(system: AssembledSystem, x: np.ndarray, residual: float) -> Solution:
    parts = system.unscale(x)
    return Solution(residual_norm=float(residual), x_scaled=x, **parts)


def solve(system: AssembledSystem, factorization: Factorization | None = None) -> Solution:
    """LU with partial pivoting; residual checked against the warn/fail thresholds."""
    fac = factorization or Factorization(system.matrix)
    x = fac.solve(system.rhs)
    res = float(fac.residual(x, system.rhs))
    check_residual(res)
    return solution_from_vector(system, x, res)


def solve_many(system: AssembledSystem, rhs: np.ndarray, factorization: Factorization | None = None):
    """Solve for several right-hand side columns (scaled units) with one factorisation."""
    fac = factorization or Factorization(system.matrix)
    X = fac.solve(rhs)
    res = np.atleast_1d(fac.residual(X, rhs))
    for r in res:
        check_residual(float(r))
    if X.ndim == 1:
        return [solution_from_vector(system, X, res[0])]
    return [solution_from_vector(system, X[:, k], res[k]) for k in range(X.shape[1])]


def condition_estimate(system) -> float:
    """1-norm condition estimate; accepts an AssembledSystem or a bare matrix."""
    matrix = system.matrix if isinstance(system, AssembledSystem) else np.asarray(system, dtype=float)
    return Factorization(matrix).condition()
