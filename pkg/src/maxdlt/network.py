"""
Multi-cell MIMO uplink (interfering multiple-access channel) data model.

There are ``L`` cells with ``K`` users each. User ``k`` of cell ``i`` (written
``i_k``) transmits ``d`` streams through an ``M x d`` filter ``V[i, k]``; base
station ``l`` separates the streams of its own user ``l_j`` with an ``N x d``
receive filter ``U[l, j]``. The channel from user ``i_k`` to base station
``l`` is ``H[l, i, k]`` (``N x M``).

Everything an algorithm needs is expressed through covariance matrices:

* forward (uplink) network, seen by receiver ``l_j``::

      R[l, j] = H[l,l,j] V[l,j] V[l,j]^H H[l,l,j]^H
      Q[l, j] = sum_{i,k} H[l,i,k] V[i,k] V[i,k]^H H[l,i,k]^H + s2 I_N - R[l, j]

* backward (reciprocal downlink) network, seen by transmitter ``i_k``::

      Rb[i, k] = H[i,i,k]^H U[i,k] U[i,k]^H H[i,i,k]
      Qb[i, k] = sum_{l,j} H[l,i,k]^H U[l,j] U[l,j]^H H[l,i,k] + sb2 I_M - Rb[i, k]

No symbol-level simulation is done; rates follow in closed form from the
covariances.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError, NumericalError, SingularMatrixError

__all__ = [
    "NetworkConfig",
    "ChannelSet",
    "FilterBank",
    "CovariancePair",
    "generate_channels",
    "random_filters",
    "forward_covariances",
    "backward_covariances",
    "forward_covariance_stack",
    "backward_covariance_stack",
    "user_rate",
    "user_rates",
    "network_sum_rate",
    "active_columns",
    "column_basis",
    "calibrate_noise",
]

User = Tuple[int, int]


def _positive_int(name, value, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigurationError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")


def _positive_real(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class NetworkConfig:
    """
    Dimensions, power budgets and noise levels of the network.

    Parameters
    ----------
    num_cells, users_per_cell : int
        ``L`` base stations serving ``K`` users each.
    tx_antennas, rx_antennas : int
        ``M`` antennas per user (transmitter) and ``N`` per base station.
    streams : int
        ``d`` data streams per user, ``d <= min(M, N)``.
    tx_power : float
        Squared Frobenius norm ``P_t`` of every transmit filter (the cell power
        is split equally among its users, so this is already per user).
    rx_power : float, optional
        Squared Frobenius norm ``P_r`` of every receive filter. Defaults to
        ``d``. Rates do not depend on it, but the DLT objective is not
        scale-invariant: ``P_r`` sets the balance between its log and trace
        terms and therefore changes the filters max-DLT converges to.
    noise_power : float
        Noise variance ``s2`` at every base station.
    backward_noise_power : float, optional
        Noise variance at the users in the reciprocal network. Defaults to
        ``noise_power``.
    fb_iterations : int
        Number ``T`` of forward-backward iterations.
    rng_seed : int
        Default seed for channel generation.
    cross_gain : float
        Mean power gain ``E|h|^2`` of every inter-cell link. Links between a
        user and its own base station have unit gain.
    """

    num_cells: int
    users_per_cell: int
    tx_antennas: int
    rx_antennas: int
    streams: int
    tx_power: float = 1.0
    rx_power: Optional[float] = None
    noise_power: float = 1.0
    backward_noise_power: Optional[float] = None
    fb_iterations: int = 4
    rng_seed: int = 0
    cross_gain: float = 1.0
    _derived: frozenset = dataclasses.field(default=frozenset(), init=False, repr=False,
                                            compare=False)

    def __post_init__(self):
        for name in ("num_cells", "users_per_cell", "tx_antennas", "rx_antennas", "streams"):
            _positive_int(name, getattr(self, name))
        _positive_int("fb_iterations", self.fb_iterations, allow_zero=True)
        _positive_int("rng_seed", self.rng_seed, allow_zero=True)
        if self.streams > min(self.tx_antennas, self.rx_antennas):
            raise ConfigurationError(
                f"streams d={self.streams} exceeds min(M, N)="
                f"{min(self.tx_antennas, self.rx_antennas)}; each user can carry at most "
                "min(M, N) streams")
        derived = set()
        if self.rx_power is None:
            object.__setattr__(self, "rx_power", float(self.streams))
            derived.add("rx_power")
        if self.backward_noise_power is None:
            object.__setattr__(self, "backward_noise_power", self.noise_power)
            derived.add("backward_noise_power")
        object.__setattr__(self, "_derived", frozenset(derived))
        for name in ("tx_power", "rx_power", "noise_power", "backward_noise_power", "cross_gain"):
            _positive_real(name, getattr(self, name))
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def num_users(self):
        return self.num_cells * self.users_per_cell

    def replace(self, **changes):
        """
        Return a copy with some fields changed (validated again).

        Fields that were left at their default (``rx_power``,
        ``backward_noise_power``) are derived again from the new values.
        """
        for name in self._derived:
            changes.setdefault(name, None)
        return dataclasses.replace(self, **changes)

    def users(self):
        """Iterate over all ``(cell, user)`` index pairs in a fixed order."""
        for l in range(self.num_cells):
            for j in range(self.users_per_cell):
                yield l, j

    def link_gains(self):
        """``L x L`` matrix of mean link power gains (receiving BS, transmitting cell)."""
        g = np.full((self.num_cells, self.num_cells), self.cross_gain)
        np.fill_diagonal(g, 1.0)
        return g


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """All ``L*L*K`` channel matrices, ``H[l, i, k]`` of shape ``(N, M)``."""

    H: np.ndarray

    def __post_init__(self):
        H = _frozen(self.H)
        if H.ndim != 5 or H.shape[0] != H.shape[1]:
            raise ConfigurationError(f"channel array must have shape (L, L, K, N, M), got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ConfigurationError("channel matrices must have finite entries")
        object.__setattr__(self, "H", H)

    @property
    def shape(self):
        L, _, K, N, M = self.H.shape
        return L, K, N, M

    def link(self, l, i, k):
        """Channel from user ``i_k`` to base station ``l``."""
        return self.H[l, i, k]

    def check(self, config):
        L, K, N, M = self.shape
        expected = (config.num_cells, config.users_per_cell, config.rx_antennas, config.tx_antennas)
        if (L, K, N, M) != expected:
            raise ConfigurationError(f"channel dimensions (L, K, N, M)={(L, K, N, M)} "
                                     f"do not match the configuration {expected}")


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Transmit filters ``V[i, k]`` (``M x d``) and receive filters ``U[l, j]`` (``N x d``)."""

    V: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        V, U = _frozen(self.V), _frozen(self.U)
        if V.ndim != 4 or U.ndim != 4 or V.shape[:2] != U.shape[:2] or V.shape[3] != U.shape[3]:
            raise ConfigurationError(f"incompatible filter shapes V{V.shape}, U{U.shape}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "U", U)

    def with_rx(self, U):
        return FilterBank(self.V, U)

    def with_tx(self, V):
        return FilterBank(V, self.U)

    def power_errors(self, config):
        """Largest relative deviation from the power budgets, ``(tx, rx)``."""
        pv = np.sum(np.abs(self.V) ** 2, axis=(2, 3))
        pu = np.sum(np.abs(self.U) ** 2, axis=(2, 3))
        return (float(np.max(np.abs(pv - config.tx_power))) / config.tx_power,
                float(np.max(np.abs(pu - config.rx_power))) / config.rx_power)

    def active_streams(self, tol=1e-9):
        """Number of transmit streams with non-zero power."""
        norms = np.linalg.norm(self.V, axis=2)
        scale = max(float(norms.max(initial=0.0)), np.finfo(float).tiny)
        return int(np.count_nonzero(norms > tol * scale))

    def same_as(self, other):
        return np.array_equal(self.V, other.V) and np.array_equal(self.U, other.U)


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """Desired-signal covariance ``R`` and interference-plus-noise covariance ``Q = C C^H``."""

    R: np.ndarray
    Q: np.ndarray
    cholesky_factor: np.ndarray

    @classmethod
    def from_matrices(cls, R, Q):
        R = _hermitize(R)
        Q = _hermitize(Q)
        try:
            C = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "interference-plus-noise covariance is not positive definite; "
                "check that the noise power is > 0") from None
        return cls(_frozen(R), _frozen(Q), _frozen(C))


def _hermitize(A):
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + np.swapaxes(A, -1, -2).conj())


def _hconj(A):
    return np.swapaxes(A, -1, -2).conj()


def generate_channels(config, seed=None):
    """
    Draw one block-fading realization of every channel matrix.

    Entries are i.i.d. circularly-symmetric complex Gaussian with
    ``E|h|^2`` equal to the link gain (unit for own-cell links,
    ``config.cross_gain`` otherwise).

    Parameters
    ----------
    config : NetworkConfig
    seed : int, optional
        Defaults to ``config.rng_seed``. Equal seeds give bit-identical output.

    Returns
    -------
    ChannelSet
    """
    if seed is None:
        seed = config.rng_seed
    L, K = config.num_cells, config.users_per_cell
    N, M = config.rx_antennas, config.tx_antennas
    rng = np.random.default_rng(seed)
    shape = (L, L, K, N, M)
    H = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    gain = config.link_gains()[:, :, None, None, None]
    return ChannelSet(np.sqrt(gain / 2.0) * H)


def _semi_unitary(rng, rows, cols):
    A = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, _ = np.linalg.qr(A)
    return q[:, :cols]


def random_filters(config, seed):
    """Seeded random semi-unitary filters scaled to the power budgets."""
    rng = np.random.default_rng(seed)
    L, K, d = config.num_cells, config.users_per_cell, config.streams
    V = np.empty((L, K, config.tx_antennas, d), dtype=complex)
    U = np.empty((L, K, config.rx_antennas, d), dtype=complex)
    for l, j in config.users():
        V[l, j] = _semi_unitary(rng, config.tx_antennas, d) * np.sqrt(config.tx_power / d)
        U[l, j] = _semi_unitary(rng, config.rx_antennas, d) * np.sqrt(config.rx_power / d)
    return FilterBank(V, U)


def forward_covariance_stack(channels, filters, config):
    """
    ``R`` and ``Q`` of every receiver at once, arrays of shape ``(L, K, N, N)``.
    """
    H, V = channels.H, filters.V
    L = config.num_cells
    N = config.rx_antennas
    G = np.einsum("likab,ikbd->likad", H, V)  # H[l,i,k] V[i,k]
    total = np.einsum("likad,likbd->lab", G, G.conj())
    own = G[np.arange(L), np.arange(L)]  # (L, K, N, d)
    R = own @ _hconj(own)
    Q = total[:, None] + config.noise_power * np.eye(N) - R
    return _hermitize(R), _hermitize(Q)


def backward_covariance_stack(channels, filters, config):
    """
    ``Rb`` and ``Qb`` of every transmitter at once, arrays of shape ``(L, K, M, M)``.
    """
    H, U = channels.H, filters.U
    L = config.num_cells
    M = config.tx_antennas
    P = np.einsum("ljad,ljbd->lab", U, U.conj())  # sum_j U[l,j] U[l,j]^H
    total = np.einsum("likab,lac,likcd->ikbd", H.conj(), P, H)
    own = _hconj(H[np.arange(L), np.arange(L)]) @ U  # H[i,i,k]^H U[i,k]
    R = own @ _hconj(own)
    Q = total + config.backward_noise_power * np.eye(M) - R
    return _hermitize(R), _hermitize(Q)


def forward_covariances(channels, filters, config, user):
    """
    Covariances seen by the receive filter of ``user = (l, j)``.

    Raises
    ------
    NumericalError
        If ``Q`` is not positive definite.
    """
    l, j = user
    H, V = channels.H, filters.V
    G = np.einsum("ikab,ikbd->ikad", H[l], V)
    S = np.einsum("ikad,ikbd->ab", G, G.conj())
    R = G[l, j] @ G[l, j].conj().T
    Q = S + config.noise_power * np.eye(config.rx_antennas) - R
    return CovariancePair.from_matrices(R, Q)


def backward_covariances(channels, filters, config, user):
    """Covariances seen by the transmit filter of ``user = (i, k)`` in the reciprocal network."""
    i, k = user
    H, U = channels.H, filters.U
    Hik = H[:, i, k]  # (L, N, M)
    G = np.einsum("lab,ljad->ljbd", Hik.conj(), U)  # H[l,i,k]^H U[l,j]
    S = np.einsum("ljad,ljbd->ab", G, G.conj())
    R = G[i, k] @ G[i, k].conj().T
    Q = S + config.backward_noise_power * np.eye(config.tx_antennas) - R
    return CovariancePair.from_matrices(R, Q)


def _rate(R, Q, U):
    A = _hermitize(U.conj().T @ Q @ U)
    B = _hermitize(U.conj().T @ R @ U)
    w = np.linalg.eigvalsh(A)
    if w.size == 0 or w[0] <= 1e-12 * max(w[-1], np.finfo(float).tiny):
        raise SingularMatrixError("U^H Q U is singular; the receive filter must have full column rank")
    _, logdet_total = np.linalg.slogdet(A + B)
    _, logdet_in = np.linalg.slogdet(A)
    return max(0.0, float(logdet_total - logdet_in) / np.log(2.0))


def user_rate(cov, U):
    """
    Achievable rate ``log2 |I + (U^H R U)(U^H Q U)^{-1}|`` in bits per channel use.

    Raises
    ------
    SingularMatrixError
        If ``U^H Q U`` is singular, i.e. ``U`` is rank deficient.
    """
    return _rate(cov.R, cov.Q, np.asarray(U, dtype=complex))


def active_columns(X, tol=1e-10):
    """Drop the all-zero columns (streams switched off by stream control)."""
    X = np.asarray(X)
    norms = np.linalg.norm(X, axis=0)
    top = float(norms.max(initial=0.0))
    if top == 0.0:
        return X[:, :0]
    return X[:, norms > tol * top]


def column_basis(X, tol=1e-10):
    """
    Orthonormal basis of the numerical column span of ``X``.

    Singular values below ``tol`` times the largest are treated as zero, so
    switched-off streams and linearly dependent columns are dropped.
    """
    X = np.asarray(X)
    if X.size == 0 or not np.any(X):
        return X[:, :0].astype(complex)
    u, s, _ = np.linalg.svd(X, full_matrices=False)
    return u[:, s > tol * s[0]]


def user_rates(channels, filters, config):
    """
    Rate of every user, shape ``(L, K)``.

    The rate only depends on the column span of the receive filter, so each
    user is evaluated on an orthonormal basis of that span. Streams switched
    off by stream control (zero columns) and collapsed streams (dependent
    columns, which WMMSE can produce) are thereby dropped.
    """
    R, Q = forward_covariance_stack(channels, filters, config)
    rates = np.empty((config.num_cells, config.users_per_cell))
    for l, j in config.users():
        U = column_basis(filters.U[l, j])
        rates[l, j] = _rate(R[l, j], Q[l, j], U) if U.shape[1] else 0.0
    return rates


def network_sum_rate(channels, filters, config):
    """Sum of the per-user rates over all ``K*L`` users."""
    return float(np.sum(user_rates(channels, filters, config)))


def calibrate_noise(config, target_avg_snr_db):
    """
    Noise power giving a target average per-user SNR.

    The SNR of a user is ``P_t * g / s2`` with ``g = E||H_direct||_F^2 / N =
    M`` for unit-gain own-cell links, so ``s2 = P_t * M / 10**(snr_db/10)``.
    """
    target = float(target_avg_snr_db)
    if not np.isfinite(target):
        raise ConfigurationError(f"target SNR must be finite, got {target_avg_snr_db!r}")
    g_desired = float(config.tx_antennas)  # unit own-cell gain
    return config.tx_power * g_desired / 10.0 ** (target / 10.0)
