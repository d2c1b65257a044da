"""Shift selection and the shifted-solve kernels feeding both doubling
iterations.

Everything revolves around A_a = A - a I for a positive shift a: one LU of
A_a is reused for every block solve with A_a and A_a', and the inverses of
the two Schur-complement-like matrices

    U_a = A_a' + Q A_a^{-1} G,        V_a = A_a + G A_a^{-T} Q,

are applied through the Woodbury identity with m x m / p x p cores, so the
large-scale path never forms an n x n inverse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problems import CareProblem, DENSE_CAP, SizeCapError


class ShiftSingularError(RuntimeError):
    """A - a I is singular; retry with a different shift."""


@dataclass(frozen=True)
class ShiftedFactorization:
    """Reusable solve handles for the shifted matrix A_a = A - a I.

    solve applies A_a^{-1} and solve_t applies A_a^{-T}, both accepting
    n x t blocks; a single factorization backs the pair.
    """

    alpha: float
    n: int
    solve: Callable[[np.ndarray], np.ndarray]
    solve_t: Callable[[np.ndarray], np.ndarray]


def choose_alpha(problem: CareProblem) -> float:
    """Default shift sqrt(||A||_1 * ||A||_inf): scale-aware, cheap, and
    positive for any nonzero A."""
    A = problem.A
    if sp.issparse(A):
        absA = abs(A)
        n1 = float(np.asarray(absA.sum(axis=0)).max())
        ninf = float(np.asarray(absA.sum(axis=1)).max())
    else:
        absA = np.abs(np.asarray(A, dtype=float))
        n1 = float(absA.sum(axis=0).max())
        ninf = float(absA.sum(axis=1).max())
    alpha = float(np.sqrt(n1 * ninf))
    if alpha <= 0.0:
        raise ValueError("A = 0 admits no positive default shift")
    return alpha


def build_shifted(problem: CareProblem, alpha: float) -> ShiftedFactorization:
    """Factor A - alpha I once and wrap the forward/transposed solves.

    Sparse A goes through SuperLU (one factorization serves both
    orientations); dense A through an LAPACK LU.  An exactly singular
    shifted matrix raises ShiftSingularError.
    """
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise ValueError(f"shift must be positive and finite, got {alpha}")
    n = problem.n
    if sp.issparse(problem.A):
        Aa = (problem.A - alpha * sp.identity(n, format="csr")).tocsc()
        try:
            lu = spla.splu(Aa)
        except RuntimeError as exc:
            raise ShiftSingularError(
                f"A - {alpha} I is singular; pick a different shift") from exc

        def solve(Z, _lu=lu):
            return _lu.solve(np.asarray(Z, dtype=float))

        def solve_t(Z, _lu=lu):
            return _lu.solve(np.asarray(Z, dtype=float), trans="T")
    else:
        Aa = problem.a_dense() - alpha * np.eye(n)
        with warnings.catch_warnings():
            # exact singularity is reported as an exception below, not a warning
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(Aa, check_finite=True)
        if np.abs(np.diag(lu)).min() == 0.0:
            raise ShiftSingularError(
                f"A - {alpha} I is singular; pick a different shift")

        def solve(Z, _lu=lu, _piv=piv):
            return sla.lu_solve((_lu, _piv), np.asarray(Z, dtype=float))

        def solve_t(Z, _lu=lu, _piv=piv):
            return sla.lu_solve((_lu, _piv), np.asarray(Z, dtype=float),
                                trans=1)

    return ShiftedFactorization(alpha=float(alpha), n=n,
                                solve=solve, solve_t=solve_t)


class BaseDoublingOperator:
    """Matrix-free form of I + 2a V_a^{-1}, the depth-0 doubling operator.

    V_a^{-1} = A_a^{-1} - A_a^{-1} B (I + B' A_a^{-T} Q A_a^{-1} B)^{-1}
               B' A_a^{-T} Q A_a^{-1}
    by the Woodbury identity, and with D0 = A_a^{-T} C', P0 = A_a^{-1} B,
    W0 = D0'B the m x m core collapses to I + W0'W0 (SPD, one Cholesky).
    apply costs one shifted solve plus thin corrections; apply_t is the
    transposed action from the same data.
    """

    def __init__(self, problem: CareProblem, shifted: ShiftedFactorization,
                 D0: np.ndarray, P0: np.ndarray, W0: np.ndarray):
        self._C = problem.C
        self._B = problem.B
        self._shifted = shifted
        self._two_alpha = 2.0 * shifted.alpha
        self._P0 = P0
        self._W0 = W0
        self._E0 = D0 @ W0
        m = problem.m
        self._chol = sla.cho_factor(np.eye(m) + W0.T @ W0)

    @property
    def n(self) -> int:
        return self._shifted.n

    def apply(self, Z: np.ndarray) -> np.ndarray:
        u = self._shifted.solve(Z)
        h = sla.cho_solve(self._chol, self._W0.T @ (self._C @ u))
        return Z + self._two_alpha * (u - self._P0 @ h)

    def apply_t(self, Z: np.ndarray) -> np.ndarray:
        v = self._shifted.solve_t(Z)
        h = sla.cho_solve(self._chol, self._B.T @ v)
        return Z + self._two_alpha * (v - self._E0 @ h)


@dataclass(frozen=True)
class InitialData:
    """Depth-0 data of the factored iteration: X0 = D0 Sigma0 D0',
    Y0 = P0 Gamma0 P0', and the matrix-free starting operator."""

    D0: np.ndarray
    Sigma0: np.ndarray
    P0: np.ndarray
    Gamma0: np.ndarray
    ahat0: BaseDoublingOperator


def init_lowrank(problem: CareProblem,
                 shifted: ShiftedFactorization) -> InitialData:
    """Build the factored starting iterates without any n x n algebra.

    D0 = A_a^{-T} C' and P0 = A_a^{-1} B carry the column spaces; the
    p x p / m x m cores are the resolvents

        Sigma0 = 2a (I + W0 W0')^{-1},     W0 = D0' B,
        Gamma0 = 2a (I + V0' V0)^{-1},     V0 = C P0,

    where W0 and V0 are the same p x m matrix computed along two routes
    (both equal C A_a^{-1} B); keeping them separate preserves a cheap
    consistency check.
    """
    D0 = shifted.solve_t(np.asarray(problem.C.T, dtype=float))
    P0 = shifted.solve(np.asarray(problem.B, dtype=float))
    if not (np.all(np.isfinite(D0)) and np.all(np.isfinite(P0))):
        raise ValueError("shifted solves produced non-finite values; "
                         "the shift is numerically unusable")
    W0 = D0.T @ problem.B
    V0 = problem.C @ P0
    two_a = 2.0 * shifted.alpha
    p, m = problem.p, problem.m
    Sigma0 = two_a * np.linalg.inv(np.eye(p) + W0 @ W0.T)
    Gamma0 = two_a * np.linalg.inv(np.eye(m) + V0.T @ V0)
    Sigma0 = (Sigma0 + Sigma0.T) / 2.0
    Gamma0 = (Gamma0 + Gamma0.T) / 2.0
    ahat0 = BaseDoublingOperator(problem, shifted, D0, P0, W0)
    return InitialData(D0=D0, Sigma0=Sigma0, P0=P0, Gamma0=Gamma0,
                       ahat0=ahat0)


def init_dense(problem: CareProblem, shifted: ShiftedFactorization,
               cap: int = DENSE_CAP):
    """Dense starting triple (Ahat0, X0, Y0) for the reference iteration:

        Ahat0 = I + 2a V_a^{-1},
        X0    = 2a U_a^{-1} Q A_a^{-1},
        Y0    = 2a A_a^{-1} G U_a^{-1},

    with X0, Y0 symmetrized.  Desk-scale only (n <= cap).
    """
    n = problem.n
    if n > cap:
        raise SizeCapError(f"n={n} exceeds the dense cap {cap}")
    alpha = shifted.alpha
    A = problem.a_dense()
    G = problem.B @ problem.B.T
    Q = problem.C.T @ problem.C
    Aa = A - alpha * np.eye(n)
    Aa_inv = np.linalg.inv(Aa)
    Ua = Aa.T + Q @ Aa_inv @ G
    Va = Aa + G @ Aa_inv.T @ Q
    Ahat0 = np.eye(n) + 2.0 * alpha * np.linalg.inv(Va)
    X0 = 2.0 * alpha * np.linalg.solve(Ua, Q @ Aa_inv)
    Y0 = 2.0 * alpha * (Aa_inv @ np.linalg.solve(Ua.T, G).T)
    X0 = (X0 + X0.T) / 2.0
    Y0 = (Y0 + Y0.T) / 2.0
    return Ahat0, X0, Y0
