"""
Non-homogeneous waterfilling.

Solves the log-trace subproblem that every filter update of max-DLT reduces
to::

    minimize    f(X) = tr(X^H Q X) - log_b |I + X^H R X|
    subject to  ||X||_F^2 = zeta,        X in C^{n x r}

with ``Q`` Hermitian positive definite and ``R`` Hermitian PSD.

Two solvers are provided.

``method="closed-form"``
    Whiten with the Cholesky factor ``Q = C C^H``, take the ``r`` dominant
    eigenpairs ``(alpha_i, psi_i)`` of ``C^{-1} R C^{-H}``, price each stream
    by ``beta_i = ||C^{-H} psi_i||^2`` and set::

        X = C^{-H} Psi diag(sigma),  sigma_i^2 = (1/(1 + mu beta_i) - 1/alpha_i)^+

    with the water level ``mu`` from :func:`solve_mu`. The whitening is frozen
    at ``mu = 0`` and only the diagonal of the shift ``mu (C^H C)^{-1}`` in the
    ``Psi`` basis is kept, so the result is optimal exactly when ``Psi``
    diagonalizes ``(C^H C)^{-1}`` (for instance ``Q`` proportional to the
    identity) and an approximation otherwise.

``method="exact"`` (default)
    For a multiplier ``mu > -lambda_min(Q)`` the Lagrangian
    ``tr(X^H (Q + mu I) X) - log|I + X^H R X|`` is minimized globally by
    ordinary waterfilling on the whitened matrix of ``(R, Q + mu I)``:
    ``sigma_i^2 = (1 - 1/alpha_i(mu))^+``. The squared norm of that minimizer
    decreases monotonically in ``mu``; the water level is the root that meets
    the power budget, and the minimizer there is the global optimum of the
    constrained problem. It coincides with the closed form whenever the
    latter is exact.

Both return zero power on streams whose quasi-SINR vanishes (stream control).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .errors import ConfigurationError, InfeasibleRootError, NumericalError

__all__ = [
    "WaterfillProblem",
    "WaterfillSolution",
    "whiten",
    "solve_mu",
    "mu_residual",
    "nonhomogeneous_waterfill",
    "waterfill_objective",
    "METHODS",
]

METHODS = ("exact", "closed-form")

_ALPHA_TOL = 1e-12


def _herm(A):
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True, eq=False)
class WaterfillProblem:
    """
    One log-trace subproblem.

    Parameters
    ----------
    Q : (n, n) array
        Hermitian positive definite.
    R : (n, n) array
        Hermitian positive semi-definite.
    rank : int
        Number of columns ``r`` of the unknown, ``1 <= r <= n``.
    zeta : float
        Power budget ``||X||_F^2``.
    log_base : float
        Base of the logarithm in the objective. The filter updates use 2;
        the default ``e`` is the natural scale of the water level.
    """

    Q: np.ndarray
    R: np.ndarray
    rank: int
    zeta: float
    log_base: float = np.e

    def __post_init__(self):
        Q, R = _herm(self.Q), _herm(self.R)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or R.shape != Q.shape:
            raise ConfigurationError(f"Q and R must be square and of equal size, got {Q.shape}, {R.shape}")
        n = Q.shape[0]
        if not 1 <= int(self.rank) <= n:
            raise ConfigurationError(f"rank must satisfy 1 <= r <= n={n}, got {self.rank}")
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise ConfigurationError(f"zeta must be finite and > 0, got {self.zeta}")
        if not self.log_base > 1:
            raise ConfigurationError(f"log_base must be > 1, got {self.log_base}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "zeta", float(self.zeta))

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def log_scale(self):
        """``ln(b)``: the problem in base ``b`` is the natural-log problem for ``ln(b) Q``."""
        return float(np.log(self.log_base))


@dataclass(frozen=True, eq=False)
class WaterfillSolution:
    """
    Optimal filter and the water-filling quantities behind it.

    Attributes
    ----------
    X_star : (n, r) array
        The optimal filter, ``||X_star||_F^2 = zeta``.
    Sigma_star : (r,) array
        Per-stream amplitudes in whitened coordinates (zero for streams that
        are switched off).
    mu_star : float
        Water level (Lagrange multiplier of the power constraint), in the
        natural-log scale of the problem.
    alpha : (r,) array
        Quasi-SINRs, descending. For the closed form these are the dominant
        eigenvalues of ``Q^{-1} R``; for the exact solver those of
        ``(Q + mu_star I)^{-1} R``.
    beta : (r,) array
        Power price of a unit of whitened power in each stream.
    Psi : (n, r) array
        Orthonormal dominant eigenvectors of the whitened matrix.
    objective : float
        ``f(X_star)`` in the problem's log base.
    residual : float
        Power-equation residual at ``mu_star``.
    method : str
        ``"exact"``, ``"closed-form"`` or ``"degenerate"`` (no stream has a
        positive quasi-SINR).
    """

    X_star: np.ndarray
    Sigma_star: np.ndarray
    mu_star: float
    alpha: np.ndarray
    beta: np.ndarray
    Psi: np.ndarray
    objective: float
    residual: float
    method: str

    @property
    def powers(self):
        return self.Sigma_star ** 2

    @property
    def active(self):
        return self.Sigma_star > 0


def waterfill_objective(X, Q, R, log_base=np.e):
    """``tr(X^H Q X) - log_b |I + X^H R X|`` for one or a stack of candidate filters."""
    X = np.asarray(X, dtype=complex)
    XH = np.swapaxes(X, -1, -2).conj()
    trace = np.real(np.einsum("...ij,jk,...ki->...", XH, Q, X))
    inner = XH @ R @ X
    inner = 0.5 * (inner + np.swapaxes(inner, -1, -2).conj())
    _, logdet = np.linalg.slogdet(np.eye(X.shape[-1]) + inner)
    return trace - logdet / np.log(log_base)


def whiten(problem):
    """
    Whiten ``R`` by the Cholesky factor of ``Q``.

    Returns
    -------
    M_w : (n, n) array
        ``C^{-1} R C^{-H}`` with ``Q = C C^H`` (``Q`` scaled by ``ln b``).
    Psi : (n, r) array
        Its ``r`` dominant orthonormal eigenvectors.
    alpha : (r,) array
        The matching eigenvalues, descending and clipped at zero. They are
        also the eigenvalues of ``Q^{-1} R``.
    beta : (r,) array
        ``psi_i^H (C^H C)^{-1} psi_i``.
    """
    Q = problem.log_scale * problem.Q
    try:
        C = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise NumericalError("Q is not positive definite") from None
    Cinv_R = sla.solve_triangular(C, problem.R, lower=True)
    M_w = _herm(sla.solve_triangular(C, Cinv_R.conj().T, lower=True))
    w, vecs = np.linalg.eigh(M_w)
    order = np.argsort(w)[::-1][: problem.rank]
    alpha = np.maximum(w[order], 0.0)
    Psi = vecs[:, order]
    # beta_i = ||C^{-H} psi_i||^2
    beta = np.sum(np.abs(sla.solve_triangular(C, Psi, lower=True, trans="C")) ** 2, axis=0)
    return M_w, Psi, alpha, beta


def _active_mask(alpha):
    top = float(np.max(alpha, initial=0.0))
    return alpha > _ALPHA_TOL * top if top > 0 else np.zeros(alpha.shape, dtype=bool)


def mu_residual(mu, alpha, beta, zeta):
    """``g(mu) = sum_i beta_i (1/(1 + mu beta_i) - 1/alpha_i)^+ - zeta``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    act = _active_mask(alpha)
    a, b = alpha[act], beta[act]
    return float(np.sum(b * np.maximum(1.0 / (1.0 + mu * b) - 1.0 / a, 0.0)) - zeta)


def solve_mu(alpha, beta, zeta, tol=1e-10, max_iter=200):
    """
    Water level of the closed-form allocation.

    Streams with zero quasi-SINR never carry power and are left out. On the
    remaining ones ``g`` is strictly decreasing on ``(-1/max(beta), inf)``, so
    the root is bracketed from below just above the pole and from above by
    doubling, then refined by bisection until ``|g| <= tol * zeta`` or
    ``max_iter`` halvings.

    Raises
    ------
    InfeasibleRootError
        If no quasi-SINR is positive (``g`` is identically ``-zeta``).
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not np.any(_active_mask(alpha)):
        raise InfeasibleRootError("all quasi-SINRs are zero; the water level has no root")
    if zeta <= 0:
        raise ConfigurationError(f"zeta must be > 0, got {zeta}")
    bmax = float(np.max(beta[_active_mask(alpha)]))
    lo = -1.0 / bmax + 1e-12 / bmax
    if mu_residual(lo, alpha, beta, zeta) <= 0:
        # quasi-SINRs so small that the root is within the bracket offset of
        # the pole: return the closest admissible level
        return lo
    hi = 1.0
    while mu_residual(hi, alpha, beta, zeta) >= 0:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # bracket down to adjacent floats
        g = mu_residual(mid, alpha, beta, zeta)
        if abs(g) <= tol * zeta:
            return mid
        if g > 0:
            lo = mid
        else:
            hi = mid
    return min((lo, hi), key=lambda m: abs(mu_residual(m, alpha, beta, zeta)))


def _degenerate(problem, Qs):
    # Every quasi-SINR is zero: the log term is constant and the best
    # feasible point puts all power on the weakest eigendirection of Q.
    lam, E = np.linalg.eigh(Qs)
    n, r = problem.n, problem.rank
    X = np.zeros((n, r), dtype=complex)
    X[:, 0] = E[:, 0] * np.sqrt(problem.zeta)
    return WaterfillSolution(
        X_star=X, Sigma_star=np.zeros(r), mu_star=-float(lam[0]), alpha=np.zeros(r),
        beta=np.zeros(r), Psi=E[:, :r], residual=0.0, method="degenerate",
        objective=float(waterfill_objective(X, problem.Q, problem.R, problem.log_base)))


def _closed_form(problem):
    M_w, Psi, alpha, beta = whiten(problem)
    Qs = problem.log_scale * problem.Q
    act = _active_mask(alpha)
    if not act.any():
        return _degenerate(problem, Qs)
    mu = solve_mu(alpha, beta, problem.zeta)
    inv_alpha = np.where(act, 1.0 / np.where(act, alpha, 1.0), np.inf)
    sigma = np.sqrt(np.maximum(1.0 / (1.0 + mu * beta) - inv_alpha, 0.0))
    C = np.linalg.cholesky(Qs)
    X = sla.solve_triangular(C, Psi * sigma, lower=True, trans="C")
    return WaterfillSolution(
        X_star=X, Sigma_star=sigma, mu_star=float(mu), alpha=alpha, beta=beta, Psi=Psi,
        residual=mu_residual(mu, alpha, beta, problem.zeta), method="closed-form",
        objective=float(waterfill_objective(X, problem.Q, problem.R, problem.log_base)))


class _ShiftedWaterfill:
    """Lagrangian minimizer for a given water level, in the eigenbasis of ``Q``."""

    def __init__(self, Qs, R, rank):
        self.lam, self.E = np.linalg.eigh(Qs)
        self.Rt = _herm(self.E.conj().T @ R @ self.E)
        self.rank = rank

    def streams(self, mu, lam=None, Rt=None):
        lam = self.lam if lam is None else lam
        Rt = self.Rt if Rt is None else Rt
        s = 1.0 / np.sqrt(lam + mu)
        w, P = np.linalg.eigh(s[:, None] * Rt * s[None, :])
        alpha = np.maximum(w[::-1][: self.rank], 0.0)
        P = P[:, ::-1][:, : self.rank]
        power = np.where(alpha > 1.0, 1.0 - 1.0 / np.where(alpha > 1.0, alpha, 1.0), 0.0)
        D = s[:, None] * P  # columns: (Q + mu I)^{-1/2} psi_i, eigenbasis coordinates
        beta = np.sum(np.abs(D) ** 2, axis=0)
        return alpha, beta, power, P, D

    def residual(self, mu, zeta):
        _, beta, power, _, _ = self.streams(mu)
        return float(beta @ power) - zeta


def _exact(problem, xtol=1e-15, max_iter=200):
    Qs = problem.log_scale * problem.Q
    sw = _ShiftedWaterfill(Qs, problem.R, problem.rank)
    lam, Rt, zeta, n, r = sw.lam, sw.Rt, problem.zeta, problem.n, problem.rank
    rnorm = float(np.linalg.norm(Rt))
    if rnorm == 0.0:
        return _degenerate(problem, Qs)

    lam1 = float(lam[0])
    if lam1 <= 0:
        raise NumericalError("Q is not positive definite")
    bottom = lam <= lam1 * (1.0 + 1e-10)
    if np.linalg.norm(Rt[bottom]) <= 1e-12 * rnorm:
        # R does not reach the weakest eigenspace of Q: the root may sit at the
        # pole mu = -lambda_min with the leftover power parked in that eigenspace.
        keep = ~bottom
        alpha, beta, power, P, D = sw.streams(-lam1, lam[keep] if keep.any() else lam[:0],
                                              Rt[np.ix_(keep, keep)])
        used = float(beta @ power) if keep.any() else 0.0
        if used <= zeta:
            k = min(r, int(keep.sum()))
            Y = np.zeros((n, r), dtype=complex)
            Y[np.ix_(keep, np.arange(k))] = D[:, :k] * np.sqrt(power[:k])
            spare = np.flatnonzero(np.concatenate([power[:k] <= 0, np.ones(r - k, bool)]))
            col = int(spare[0]) if spare.size else r - 1
            Y[np.flatnonzero(bottom)[0], col] += np.sqrt(zeta - used)
            X = sw.E @ Y
            sigma = np.zeros(r)
            sigma[:k] = np.sqrt(power[:k])
            a = np.zeros(r)
            a[:k] = alpha[:k]
            b = np.zeros(r)
            b[:k] = beta[:k]
            return WaterfillSolution(
                X_star=X, Sigma_star=sigma, mu_star=-lam1, alpha=a, beta=b,
                Psi=sw.E[:, keep][:, :k] @ P[:, :k] if k else sw.E[:, :0], residual=0.0,
                method="exact",
                objective=float(waterfill_objective(X, problem.Q, problem.R, problem.log_base)))

    lo = -lam1 + 1e-12 * lam1
    hi = max(float(np.linalg.eigvalsh(problem.R)[-1]), lam1)
    while sw.residual(hi, zeta) >= 0:
        hi *= 2.0
    if sw.residual(lo, zeta) <= 0:
        mu = lo
    else:
        mu = optimize.brentq(sw.residual, lo, hi, args=(zeta,), xtol=xtol * max(abs(lo), abs(hi), 1.0),
                             rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    alpha, beta, power, P, D = sw.streams(mu)
    residual = float(beta @ power) - zeta
    sigma = np.sqrt(power)
    X = sw.E @ (D * sigma)
    # remove the last few ulps of the root-finder from the power constraint
    X *= np.sqrt(zeta / float(np.sum(np.abs(X) ** 2)))
    return WaterfillSolution(
        X_star=X, Sigma_star=sigma, mu_star=float(mu), alpha=alpha, beta=beta, Psi=sw.E @ P,
        residual=residual, method="exact",
        objective=float(waterfill_objective(X, problem.Q, problem.R, problem.log_base)))


def nonhomogeneous_waterfill(problem, method="exact"):
    """
    Solve one log-trace subproblem.

    Parameters
    ----------
    problem : WaterfillProblem
    method : {"exact", "closed-form"}

    Returns
    -------
    WaterfillSolution
        ``method`` is ``"degenerate"`` when ``R`` carries no signal; the
        filter then puts all its power on the weakest eigenvector of ``Q``.
    """
    if method == "exact":
        return _exact(problem)
    if method == "closed-form":
        return _closed_form(problem)
    raise ConfigurationError(f"unknown waterfilling method {method!r}; expected one of {METHODS}")
