"""The low-rank doubling engine.

The doubling operator is never formed: it lives as a base operator (one
shifted solve plus thin corrections) and a chain of rank-p_j updates, one
per completed step.  The solution iterates live as factor pairs
X_k = D_k Sigma_k D_k', Y_k = P_k Gamma_k P_k' whose factors double in
width per step while every core update happens at (p_k + m_k)-scale.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from time import perf_counter

import numpy as np
import scipy.linalg as sla

from .cayley import BaseDoublingOperator, build_shifted, choose_alpha, \
    init_lowrank
from .problems import CareProblem, LowRankSymmetric, SolveReport, \
    qnorm as _qnorm_of, spectral_norm_sym


class BreakdownError(RuntimeError):
    """A small-core solve failed during a factored step.

    Carries the iteration index k; when raised out of radda_solve the
    partial report accumulated so far is attached as .report.
    """

    def __init__(self, message: str, k: int, report: SolveReport | None = None):
        super().__init__(message)
        self.k = k
        self.report = report


@dataclass(frozen=True)
class ImplicitAhat:
    """The depth-k doubling operator in square-plus-thin-update form.

    Level j acts as the square of level j-1 plus a thin correction
    U_j V_j', so corrections[j-1] = (U_j, V_j) with n x p_{j-1} blocks.
    States are immutable; a step extends the chain via extended().
    """

    base: BaseDoublingOperator
    corrections: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.corrections)

    def extended(self, U: np.ndarray, V: np.ndarray) -> "ImplicitAhat":
        return ImplicitAhat(self.base, self.corrections + ((U, V),))


def apply_ahat(ahat: ImplicitAhat, Z: np.ndarray,
               transposed: bool = False) -> np.ndarray:
    """Apply the depth-k operator (or its transpose) to an n x t block.

    The recursion  A_j Z = A_{j-1}(A_{j-1} Z) + U_j (V_j' Z)  costs 2^k
    base applies, which stays cheap for the small iteration counts the
    quadratic convergence produces.
    """
    Z = np.asarray(Z, dtype=float)
    squeeze = Z.ndim == 1
    if squeeze:
        Z = Z[:, None]
    out = _apply_level(ahat, ahat.depth, Z, transposed)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("operator apply produced non-finite values")
    return out[:, 0] if squeeze else out


def _apply_level(ahat: ImplicitAhat, j: int, Z: np.ndarray,
                 transposed: bool) -> np.ndarray:
    if j == 0:
        return ahat.base.apply_t(Z) if transposed else ahat.base.apply(Z)
    U, V = ahat.corrections[j - 1]
    inner = _apply_level(ahat, j - 1, _apply_level(ahat, j - 1, Z, transposed),
                         transposed)
    if transposed:
        return inner + V @ (U.T @ Z)
    return inner + U @ (V.T @ Z)


@dataclass(frozen=True)
class RaddaState:
    """One factored iterate: X_k = D Sigma D', Y_k = P Gamma P', the implicit
    doubling operator, and the cached cross-Gram matrix D'P."""

    k: int
    D: np.ndarray
    Sigma: np.ndarray
    P: np.ndarray
    Gamma: np.ndarray
    ahat: ImplicitAhat
    cross: np.ndarray

    @property
    def rank_x(self) -> int:
        return self.D.shape[1]

    @property
    def rank_y(self) -> int:
        return self.P.shape[1]


def _lu_small(M: np.ndarray, k: int, what: str):
    """LU of a small core with explicit breakdown detection."""
    if not np.all(np.isfinite(M)):
        raise BreakdownError(f"{what} has non-finite entries at iteration {k}",
                             k=k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M)
    if np.abs(np.diag(lu)).min() == 0.0:
        raise BreakdownError(f"{what} is singular at iteration {k}", k=k)
    return lu, piv


def radda_step(state: RaddaState) -> RaddaState:
    """Advance the factored iterate one doubling step.

    With the cross-Gram W = D'P cached, the projected Gram matrices
    D'Y D = W Gamma W' and P'X P = W' Sigma W never touch n-scale data.
    The new diagonal core blocks are the resolvents

        Sigma~ = (I + Sigma (D'Y D))^{-1} Sigma,
        Gamma~ = (I + Gamma (P'X P))^{-1} Gamma,

    the factors double by one operator apply each (D gains ahat'D, P gains
    ahat P), and the operator itself gains the thin correction
    -[ahat (P Gamma W' Sigma (I + (D'Y D) Sigma)^{-1})] (ahat'D)', whose
    right half is shared with the new D columns.  One LU of
    I + Sigma (D'Y D) serves both core solves on the Sigma side, since
    (I + (D'Y D) Sigma)' is the same matrix.
    """
    D, Sigma, P, Gamma = state.D, state.Sigma, state.P, state.Gamma
    W = state.cross
    gram_y = W @ Gamma @ W.T          # D' Y D   (p_k x p_k)
    gram_x = W.T @ Sigma @ W          # P' X P   (m_k x m_k)
    p_k = D.shape[1]
    m_k = P.shape[1]

    lu_s = _lu_small(np.eye(p_k) + Sigma @ gram_y, state.k, "I + Sigma (D'YD)")
    lu_g = _lu_small(np.eye(m_k) + Gamma @ gram_x, state.k, "I + Gamma (P'XP)")
    sigma_new = sla.lu_solve(lu_s, Sigma)
    gamma_new = sla.lu_solve(lu_g, Gamma)
    sigma_new = (sigma_new + sigma_new.T) / 2.0
    gamma_new = (gamma_new + gamma_new.T) / 2.0
    # m_k x p_k core of the operator correction; the right-solve against
    # I + (D'YD) Sigma transposes into the factor already at hand
    small = sla.lu_solve(lu_s, (Gamma @ W.T @ Sigma).T).T

    D_new = apply_ahat(state.ahat, D, transposed=True)
    P_new = apply_ahat(state.ahat, P)
    U = -apply_ahat(state.ahat, P @ small)
    ahat_next = state.ahat.extended(U, D_new)

    cross_next = np.block([[W, D.T @ P_new],
                           [D_new.T @ P, D_new.T @ P_new]])
    return RaddaState(
        k=state.k + 1,
        D=np.hstack([D, D_new]),
        Sigma=sla.block_diag(Sigma, sigma_new),
        P=np.hstack([P, P_new]),
        Gamma=sla.block_diag(Gamma, gamma_new),
        ahat=ahat_next,
        cross=cross_next,
    )


def residual_lowrank(problem: CareProblem, D: np.ndarray, Sigma: np.ndarray,
                     qnorm: float | None = None) -> float:
    """Relative residual of X = D Sigma D' without forming n x n data.

    The residual A'X + XA - X G X + Q has column space inside
    F = [C' | D | A'D], so a thin QR of F reduces the spectral norm to a
    (p + 2r) x (p + 2r) symmetric eigenproblem with the indefinite core

        [[ I,  0,          0     ],
         [ 0, -S W W' S,   S     ],      W = D'B,  S = Sigma,
         [ 0,  S,          0     ]].

    The identity needs no rank assumptions on F.  A zero ||Q||_2 triggers
    the same absolute-residual fallback as the dense path.
    """
    D = np.asarray(D, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    p = problem.p
    r = D.shape[1]
    if qnorm is None:
        qnorm = _qnorm_of(problem)
    F = np.hstack([np.asarray(problem.C.T, dtype=float), D,
                   np.asarray(problem.A.T @ D, dtype=float)])
    W = D.T @ problem.B
    SW = Sigma @ W
    S = np.zeros((p + 2 * r, p + 2 * r))
    S[:p, :p] = np.eye(p)
    S[p:p + r, p:p + r] = -SW @ SW.T
    S[p:p + r, p + r:] = Sigma
    S[p + r:, p:p + r] = Sigma
    R = sla.qr(F, mode="economic")[1]
    core = R @ S @ R.T
    num = spectral_norm_sym((core + core.T) / 2.0)
    if qnorm == 0.0:
        warnings.warn("C = 0 makes ||Q||_2 = 0; reporting the absolute "
                      "residual instead of a relative one", RuntimeWarning)
        return num
    return num / qnorm


def truncate_factors(D: np.ndarray, Sigma: np.ndarray, tol: float):
    """Rank-revealing recompression of a factor pair (D, Sigma).

    Thin QR of D, symmetric eigendecomposition of the projected core,
    drop eigenvalues with |lambda| <= tol * |lambda|_max; the represented
    matrix moves by at most tol * ||D Sigma D'||_2 in spectral norm.
    tol = 0 passes the factors through untouched (exact-zero eigenvalues
    included), and an empty factor is returned as-is.
    """
    if tol < 0.0:
        raise ValueError(f"truncation tolerance must be >= 0, got {tol}")
    if tol == 0.0 or D.shape[1] == 0:
        return D, Sigma
    Q, R = sla.qr(D, mode="economic")
    core = R @ Sigma @ R.T
    lam, V = sla.eigh((core + core.T) / 2.0)
    amax = np.abs(lam).max()
    if amax == 0.0:
        return D[:, :0], Sigma[:0, :0]
    keep = np.abs(lam) > tol * amax
    return Q @ V[:, keep], np.diag(lam[keep])


def radda_solve(problem: CareProblem, *, alpha: float | None = None,
                tol: float = 1e-12, maxit: int = 30,
                truncate_tol: float = 0.0, check_every: int = 1):
    """Solve the Riccati equation in factored form by doubling.

    Parameters
    ----------
    problem : CareProblem
        Coefficient data; A may be sparse (preferred at scale) or dense.
    alpha : float, optional
        Positive shift.  Default: sqrt(||A||_1 ||A||_inf).
    tol : float
        Stop once the relative residual drops to tol or below.
    maxit : int
        Iteration budget; exceeding it returns with termination
        "max-iterations" rather than raising.
    truncate_tol : float
        Relative eigenvalue cutoff for per-step factor recompression.
        0 (default) disables truncation and the factor widths double
        exactly each step.
    check_every : int
        Evaluate the residual every this many steps (the final step is
        always checked).  Values above 1 trade stopping granularity for
        fewer residual evaluations.

    Returns
    -------
    (LowRankSymmetric, SolveReport)
        The factored solution X = F S F' and the run bookkeeping.

    Raises
    ------
    ShiftSingularError
        if A - alpha I is singular.
    BreakdownError
        if a small-core solve fails mid-run; the exception carries the
        partial report in .report.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if maxit < 1:
        raise ValueError(f"maxit must be at least 1, got {maxit}")
    if check_every < 1:
        raise ValueError(f"check_every must be at least 1, got {check_every}")
    if truncate_tol < 0.0:
        raise ValueError(
            f"truncation tolerance must be >= 0, got {truncate_tol}")

    report = SolveReport()
    t0 = perf_counter()
    a = choose_alpha(problem) if alpha is None else float(alpha)
    shifted = build_shifted(problem, a)
    init = init_lowrank(problem, shifted)
    state = RaddaState(k=0, D=init.D0, Sigma=init.Sigma0, P=init.P0,
                       Gamma=init.Gamma0,
                       ahat=ImplicitAhat(base=init.ahat0),
                       cross=init.D0.T @ init.P0)
    qn = _qnorm_of(problem)
    res = residual_lowrank(problem, state.D, state.Sigma, qn)
    report.residual_history.append((0, res))
    report.wall_times.append(perf_counter() - t0)
    report.rank_history.append((0, state.rank_x, state.rank_y))
    if res <= tol:
        report.termination = "converged"
        return LowRankSymmetric(state.D, state.Sigma), report

    for k in range(1, maxit + 1):
        t1 = perf_counter()
        try:
            state = radda_step(state)
        except BreakdownError as exc:
            report.iterations = k - 1
            report.termination = "breakdown"
            exc.report = report
            raise
        if truncate_tol > 0.0:
            D, Sigma = truncate_factors(state.D, state.Sigma, truncate_tol)
            P, Gamma = truncate_factors(state.P, state.Gamma, truncate_tol)
            state = replace(state, D=D, Sigma=Sigma, P=P, Gamma=Gamma,
                            cross=D.T @ P)
        checked = (k % check_every == 0) or k == maxit
        if checked:
            res = residual_lowrank(problem, state.D, state.Sigma, qn)
            report.residual_history.append((k, res))
        report.wall_times.append(perf_counter() - t1)
        report.rank_history.append((k, state.rank_x, state.rank_y))
        if checked and res <= tol:
            report.termination = "converged"
            break
    else:
        report.termination = "max-iterations"
    report.iterations = state.k
    return LowRankSymmetric(state.D, state.Sigma), report
