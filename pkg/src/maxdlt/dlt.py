"""
The DLT (difference of log and trace) sum-rate lower bound and max-DLT.

For a receive filter ``U`` with covariances ``(R, Q)`` the per-user bound is::

    r_LB = log2 |I + U^H R U| - tr(U^H Q U)

It lower-bounds the rate when the eigenvalues of ``U^H Q U`` are large
(interference-limited regime). Summed over users it can be written with the
receive filters decoupled (forward form) or with the transmit filters
decoupled (backward form); under the power constraints the forward total
minus the backward total is the constant ``K L (sb2 P_t - s2 P_r)``.

max-DLT maximizes the bound by block coordinate ascent: every
forward-backward iteration solves all receive subproblems, then all transmit
subproblems, each globally by non-homogeneous waterfilling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (backward_covariance_stack, forward_covariance_stack,
                      network_sum_rate, user_rate)
from .overhead import AlgorithmId, overhead_for
from .trace import IterationRecord, RunTrace
from .waterfill import WaterfillProblem, nonhomogeneous_waterfill

__all__ = [
    "DltValue",
    "dlt_user_bound",
    "dlt_network_bound",
    "dlt_form_offset",
    "dlt_gap_estimate",
    "update_receive_filters",
    "update_transmit_filters",
    "run_forward_backward",
    "run_max_dlt",
]

_LOG2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class DltValue:
    per_user: np.ndarray  # (L, K)
    total: float


def dlt_user_bound(cov, X):
    """``log2 |I + X^H R X| - tr(X^H Q X)``; may be negative."""
    X = np.asarray(X, dtype=complex)
    if X.shape[0] != cov.R.shape[0]:
        raise ValueError(f"filter has {X.shape[0]} rows, covariances are {cov.R.shape}")
    return float(_dlt_stack(cov.R, cov.Q, X))


def _dlt_stack(R, Q, X):
    XH = np.swapaxes(X, -1, -2).conj()
    inner = XH @ R @ X
    inner = 0.5 * (inner + np.swapaxes(inner, -1, -2).conj())
    _, logdet = np.linalg.slogdet(np.eye(X.shape[-1]) + inner)
    trace = np.real(np.trace(XH @ Q @ X, axis1=-2, axis2=-1))
    return logdet / _LOG2 - trace


def dlt_network_bound(channels, filters, config, direction="forward"):
    """
    DLT bound of every user and its network total.

    ``direction="forward"`` evaluates the bound with the receive filters and
    base-station covariances, ``"backward"`` with the transmit filters and the
    reciprocal-network covariances.
    """
    if direction == "forward":
        R, Q = forward_covariance_stack(channels, filters, config)
        X = filters.U
    elif direction == "backward":
        R, Q = backward_covariance_stack(channels, filters, config)
        X = filters.V
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    per_user = _dlt_stack(R, Q, X)
    return DltValue(per_user=per_user, total=float(np.sum(per_user)))


def dlt_form_offset(config):
    """Forward-form total minus backward-form total for filters on their power budgets."""
    return config.num_users * (config.backward_noise_power * config.tx_power
                               - config.noise_power * config.rx_power)


def dlt_gap_estimate(cov, U):
    """
    Gap between the rate and its DLT bound.

    Returns
    -------
    exact_gap : float
        ``user_rate - dlt_user_bound``.
    leading_term : float
        ``tr(U^H Q U) - log2 |U^H Q U|``, the part of the gap that does not
        vanish in the interference-limited regime.
    """
    U = np.asarray(U, dtype=complex)
    exact_gap = user_rate(cov, U) - dlt_user_bound(cov, U)
    A = U.conj().T @ cov.Q @ U
    A = 0.5 * (A + A.conj().T)
    _, logdet = np.linalg.slogdet(A)
    leading_term = float(np.real(np.trace(A))) - logdet / _LOG2
    return exact_gap, leading_term


def _solve_all(R, Q, rank, zeta, method):
    out = np.empty(R.shape[:2] + (R.shape[-1], rank), dtype=complex)
    for l in range(R.shape[0]):
        for j in range(R.shape[1]):
            problem = WaterfillProblem(Q[l, j], R[l, j], rank, zeta, log_base=2.0)
            out[l, j] = nonhomogeneous_waterfill(problem, method).X_star
    return out


def update_receive_filters(channels, filters, config, method="exact"):
    """
    Receive half-step: every ``U[l, j]`` solves its own subproblem
    ``min tr(U^H Q U) - log2|I + U^H R U|`` s.t. ``||U||^2 = P_r`` with the
    transmit filters held fixed.
    """
    R, Q = forward_covariance_stack(channels, filters, config)
    return filters.with_rx(_solve_all(R, Q, config.streams, config.rx_power, method))


def update_transmit_filters(channels, filters, config, method="exact"):
    """Transmit half-step: the mirror of :func:`update_receive_filters` in the reciprocal network."""
    R, Q = backward_covariance_stack(channels, filters, config)
    return filters.with_tx(_solve_all(R, Q, config.streams, config.tx_power, method))


def _record(iteration, channels, filters, config, algorithm, dlt_rx=None, dlt_tx=None):
    if dlt_rx is None:
        dlt_rx = dlt_network_bound(channels, filters, config, "forward").total
    if dlt_tx is None:
        dlt_tx = dlt_network_bound(channels, filters, config, "backward").total
    return IterationRecord(
        iteration=iteration,
        sum_rate_bits=network_sum_rate(channels, filters, config),
        dlt_rx=dlt_rx,
        dlt_tx=dlt_tx,
        overhead_cu=overhead_for(algorithm, iteration, config),
        active_streams=filters.active_streams(),
    )


def run_forward_backward(channels, config, init, rx_update, tx_update, algorithm,
                         iterations=None, trial=0):
    """
    Generic forward-backward loop.

    Each of the ``iterations`` rounds (default ``config.fb_iterations``) applies
    ``rx_update`` then ``tx_update``, both called as ``f(channels, filters,
    config)``; the DLT bound is recorded after each half-step and the sum-rate
    after each round.
    """
    channels.check(config)
    T = config.fb_iterations if iterations is None else int(iterations)
    if T < 0:
        raise ValueError(f"number of iterations must be >= 0, got {T}")
    algorithm = AlgorithmId.parse(algorithm)
    filters = init
    initial = _record(0, channels, filters, config, algorithm)
    records = []
    for t in range(1, T + 1):
        filters = rx_update(channels, filters, config)
        dlt_rx = dlt_network_bound(channels, filters, config, "forward").total
        filters = tx_update(channels, filters, config)
        records.append(_record(t, channels, filters, config, algorithm, dlt_rx=dlt_rx))
    return RunTrace(algorithm=algorithm.value, trial=trial, initial=initial,
                    records=tuple(records), filters=filters)


def run_max_dlt(channels, config, init=None, method="exact", iterations=None, trial=0):
    """
    max-DLT: ``T`` forward-backward iterations of waterfilling updates.

    Parameters
    ----------
    channels : ChannelSet
    config : NetworkConfig
    init : FilterBank, optional
        Starting filters; defaults to uncoordinated eigen-beamforming.
    method : {"exact", "closed-form"}
        Subproblem solver, see :mod:`maxdlt.waterfill`.
    iterations : int, optional
        Overrides ``config.fb_iterations``.

    Returns
    -------
    RunTrace
    """
    if init is None:
        from .benchmarks import eigen_beamforming
        init = eigen_beamforming(channels, config)

    def rx(ch, f, cfg):
        return update_receive_filters(ch, f, cfg, method)

    def tx(ch, f, cfg):
        return update_transmit_filters(ch, f, cfg, method)

    return run_forward_backward(channels, config, init, rx, tx, AlgorithmId.MAX_DLT,
                                iterations=iterations, trial=trial)
