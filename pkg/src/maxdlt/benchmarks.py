"""
Benchmark coordination schemes, run in the same forward-backward harness.

* uncoordinated eigen-beamforming (no iterations),
* max-SINR: per-stream SINR-maximizing filters,
* MMSE: linear MMSE filters rescaled to the power budgets,
* WMMSE (optional): weighted-MMSE with per-user power budgets.

Every update returns filters that meet the equality power constraints.
"""

from functools import partial

import numpy as np

from .dlt import run_forward_backward, run_max_dlt
from .network import FilterBank, backward_covariance_stack, forward_covariance_stack
from .overhead import AlgorithmId
from .trace import RunTrace

__all__ = [
    "AlgorithmId",
    "eigen_beamforming",
    "max_sinr_step",
    "mmse_step",
    "mmse_receiver",
    "wmmse_step",
    "run_benchmark",
]


def eigen_beamforming(channels, config):
    """
    Uncoordinated filters: the ``d`` dominant right (transmit) and left
    (receive) singular vectors of each user's own channel, scaled to the
    power budgets.
    """
    channels.check(config)
    L, K, d = config.num_cells, config.users_per_cell, config.streams
    V = np.empty((L, K, config.tx_antennas, d), dtype=complex)
    U = np.empty((L, K, config.rx_antennas, d), dtype=complex)
    for l, j in config.users():
        u, _, vh = np.linalg.svd(channels.H[l, l, j])
        V[l, j] = vh.conj().T[:, :d] * np.sqrt(config.tx_power / d)
        U[l, j] = u[:, :d] * np.sqrt(config.rx_power / d)
    return FilterBank(V, U)


def _own_links(channels, config):
    idx = np.arange(config.num_cells)
    return channels.H[idx, idx]  # (L, K, N, M)


def _effective(channels, filters, config, direction):
    """Per-user ``(total covariance, own effective channel, current filter, budget)``."""
    Hown = _own_links(channels, config)
    if direction == "forward":
        R, Q = forward_covariance_stack(channels, filters, config)
        G = Hown @ filters.V
        return R + Q, G, filters.U, config.rx_power
    if direction == "backward":
        R, Q = backward_covariance_stack(channels, filters, config)
        G = np.swapaxes(Hown, -1, -2).conj() @ filters.U
        return R + Q, G, filters.V, config.tx_power
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def _rescale(X, budget, fallback):
    p = float(np.sum(np.abs(X) ** 2))
    if p == 0.0:
        X, p = fallback, float(np.sum(np.abs(fallback) ** 2))
    return X * np.sqrt(budget / p)


def _replace(filters, direction, X):
    return filters.with_rx(X) if direction == "forward" else filters.with_tx(X)


def max_sinr_step(channels, filters, config, direction="forward"):
    """
    max-SINR update of the receive (forward) or transmit (backward) filters.

    Column ``m`` of user ``l_j`` becomes ``B_m^{-1} g_m`` with ``g_m`` the
    effective channel of stream ``m`` and ``B_m`` the covariance of everything
    else received, the user's other streams included. Columns are normalized
    to unit norm and the filter is then scaled to its power budget.
    """
    total, G, X_old, budget = _effective(channels, filters, config, direction)
    X = np.empty_like(X_old)
    for l, j in config.users():
        for m in range(config.streams):
            g = G[l, j][:, m]
            if not np.any(g):
                col = X_old[l, j][:, m]
            else:
                B = total[l, j] - np.outer(g, g.conj())
                col = np.linalg.solve(B, g)
            X[l, j][:, m] = col / max(np.linalg.norm(col), np.finfo(float).tiny)
        X[l, j] = _rescale(X[l, j], budget, X_old[l, j])
    return _replace(filters, direction, X)


def mmse_receiver(total, G):
    """Unnormalized linear MMSE filter ``(Q + R)^{-1} G``."""
    return np.linalg.solve(total, G)


def mmse_step(channels, filters, config, direction="forward"):
    """MMSE update ``(Q + R)^{-1} H V`` (or its reciprocal), rescaled to the power budget."""
    total, G, X_old, budget = _effective(channels, filters, config, direction)
    X = mmse_receiver(total, G)
    for l, j in config.users():
        X[l, j] = _rescale(X[l, j], budget, X_old[l, j])
    return _replace(filters, direction, X)


def _power_limited(A, b, budget):
    """``(A + lam I)^{-1} b`` with the smallest ``lam >= 0`` keeping ``||.||^2 <= budget``."""
    w, E = np.linalg.eigh(A)
    c = np.sum(np.abs(E.conj().T @ b) ** 2, axis=1)
    w = np.maximum(w, 0.0)

    def power(lam):
        with np.errstate(divide="ignore"):
            return float(np.sum(np.where(c > 0, c / (w + lam) ** 2, 0.0)))

    if power(0.0) <= budget:
        lam = 0.0
    else:
        lo, hi = 0.0, max(float(np.sqrt(c.sum() / budget)), 1e-300)
        while power(hi) > budget:
            hi *= 2.0
        for _ in range(200):
            lam = 0.5 * (lo + hi)
            if power(lam) > budget:
                lo = lam
            else:
                hi = lam
            if hi - lo <= 1e-15 * hi:
                break
        lam = hi
    return E @ ((E.conj().T @ b) / (w + lam)[:, None]) if lam > 0 else np.linalg.lstsq(A, b, rcond=None)[0]


def wmmse_step(channels, filters, config, direction="forward"):
    """
    Weighted-MMSE update with per-user power budgets.

    The forward half-step sets the receive filters to the (normalized) MMSE
    receivers. The backward half-step recomputes the MMSE receivers ``U`` and
    weights ``W = E^{-1}`` (``E`` the MSE matrix) from the current transmit
    filters and solves, for every user ``i_k``::

        V = (sum_{l,j} H^H U W U^H H + lam I)^{-1} H_own^H U_own W_own

    with ``lam >= 0`` meeting ``||V||^2 <= P_t``; the result is then scaled
    to ``||V||^2 = P_t``.
    """
    if direction == "forward":
        return mmse_step(channels, filters, config, "forward")
    if direction != "backward":
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    total, G, _, _ = _effective(channels, filters, config, "forward")
    U = mmse_receiver(total, G)
    d = config.streams
    E = np.eye(d) - np.swapaxes(U, -1, -2).conj() @ G
    E = 0.5 * (E + np.swapaxes(E, -1, -2).conj())
    W = np.linalg.inv(E)
    W = 0.5 * (W + np.swapaxes(W, -1, -2).conj())
    H = channels.H
    UWU = U @ W @ np.swapaxes(U, -1, -2).conj()  # (L, K, N, N)
    P = UWU.sum(axis=1)  # sum over users of each base station
    A = np.einsum("likab,lac,likcd->ikbd", H.conj(), P, H)
    Hown = _own_links(channels, config)
    b = np.swapaxes(Hown, -1, -2).conj() @ U @ W
    V = np.empty_like(filters.V)
    for i, k in config.users():
        V[i, k] = _rescale(_power_limited(A[i, k], b[i, k], config.tx_power),
                           config.tx_power, filters.V[i, k])
    return filters.with_tx(V)


_STEPS = {
    AlgorithmId.MAX_SINR: max_sinr_step,
    AlgorithmId.MMSE: mmse_step,
    AlgorithmId.WMMSE: wmmse_step,
}


def run_benchmark(algorithm, channels, config, init=None, iterations=None, trial=0,
                  method="exact"):
    """
    Run one algorithm for ``T`` forward-backward iterations.

    ``algorithm`` is an :class:`AlgorithmId` or its name. Uncoordinated
    eigen-beamforming ignores ``T`` and yields a single record. ``method``
    selects the waterfilling solver of max-DLT.
    """
    algorithm = AlgorithmId.parse(algorithm)
    if init is None:
        init = eigen_beamforming(channels, config)
    if algorithm is AlgorithmId.MAX_DLT:
        return run_max_dlt(channels, config, init, method=method, iterations=iterations, trial=trial)
    if algorithm is AlgorithmId.UNCOORDINATED:
        trace = run_forward_backward(channels, config, eigen_beamforming(channels, config),
                                     None, None, algorithm, iterations=0, trial=trial)
        return RunTrace(algorithm=trace.algorithm, trial=trial, initial=trace.initial,
                        records=(trace.initial,), filters=trace.filters)
    step = _STEPS[algorithm]
    return run_forward_backward(channels, config, init,
                                partial(step, direction="forward"),
                                partial(step, direction="backward"),
                                algorithm, iterations=iterations, trial=trial)
