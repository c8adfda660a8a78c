"""
Pilot-overhead accounting and complexity bookkeeping.

Overhead is counted in channel uses (c.u.) of orthogonal pilots: each
forward-backward iteration sends ``d`` pilots per user and direction, i.e.
``K*L*d`` per phase. Synchronization and calibration costs are ignored.
All formulas are exact integer arithmetic.
"""

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigurationError

__all__ = [
    "AlgorithmId",
    "OverheadReport",
    "overhead_prop",
    "overhead_wmmse",
    "overhead_ccp_wmmse",
    "overhead_for",
    "overhead_report",
    "flop_estimate",
]


class AlgorithmId(str, Enum):
    MAX_DLT = "max-dlt"
    MAX_SINR = "max-sinr"
    MMSE = "mmse"
    WMMSE = "wmmse"
    UNCOORDINATED = "uncoordinated"

    @classmethod
    def parse(cls, value):
        """Accept ``"max-dlt"``, ``"MaxDLT"``, ``"max_dlt"``... or an ``AlgorithmId``."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.replace("-", "") == key:
                return member
        raise ConfigurationError(f"unknown algorithm {value!r}; expected one of "
                                 f"{[m.value for m in cls]}")

    def __str__(self):
        return self.value


def _check(**values):
    for name, v in values.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ConfigurationError(f"{name} must be a non-negative integer, got {v!r}")


def overhead_prop(T, K, L, d):
    """``2 T K L d``: uplink plus downlink pilots. Also valid for max-SINR and MMSE."""
    _check(T=T, K=K, L=L, d=d)
    return T * (K * L * d + K * L * d)


def overhead_wmmse(T, K, L, M, d):
    """``T (KLd + KLM + KLd)``: WMMSE additionally feeds back the weight matrices."""
    _check(T=T, K=K, L=L, M=M, d=d)
    return T * (K * L * d + K * L * M + K * L * d)


def overhead_ccp_wmmse(T, K, L, M, N, I):
    """``T [KLM (L-1) + I KLN]``: CSI sharing plus ``I`` over-the-air turbo iterations."""
    _check(T=T, K=K, L=L, M=M, N=N, I=I)
    return T * (K * L * M * (L - 1) + I * (K * L * N))


def overhead_for(algorithm, T, config):
    """Overhead of ``T`` iterations of an implemented algorithm on ``config``."""
    algorithm = AlgorithmId.parse(algorithm)
    K, L, d = config.users_per_cell, config.num_cells, config.streams
    if algorithm is AlgorithmId.UNCOORDINATED:
        return 0
    if algorithm is AlgorithmId.WMMSE:
        return overhead_wmmse(T, K, L, config.tx_antennas, d)
    return overhead_prop(T, K, L, d)


@dataclass(frozen=True)
class OverheadReport:
    algorithm: str
    fb_iterations: int
    turbo_iterations: int
    channel_uses: int


def overhead_report(algorithm, T, config, turbo_iterations=0):
    """
    Overhead of ``algorithm`` after ``T`` iterations.

    ``algorithm`` is an :class:`AlgorithmId` or ``"ccp-wmmse"``, which is
    not implemented as an algorithm but whose overhead is reported for
    comparison.
    """
    if str(algorithm).lower() == "ccp-wmmse":
        cu = overhead_ccp_wmmse(T, config.users_per_cell, config.num_cells, config.tx_antennas,
                                config.rx_antennas, turbo_iterations)
        return OverheadReport("ccp-wmmse", T, turbo_iterations, cu)
    algorithm = AlgorithmId.parse(algorithm)
    return OverheadReport(algorithm.value, T, 0, overhead_for(algorithm, T, config))


def flop_estimate(M, N):
    """Relative per-update cost ``(M + N)^3`` (Cholesky of ``Q`` plus an eigendecomposition)."""
    _check(M=M, N=N)
    return (M + N) ** 3
