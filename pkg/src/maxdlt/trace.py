"""Per-iteration records of one algorithm run."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .network import FilterBank

__all__ = ["IterationRecord", "RunTrace"]


@dataclass(frozen=True)
class IterationRecord:
    """
    Metrics after one forward-backward iteration (``iteration == 0`` is the initial point).

    ``dlt_rx`` is the forward-form DLT bound right after the receive update,
    ``dlt_tx`` the backward-form bound right after the transmit update.
    """

    iteration: int
    sum_rate_bits: float
    dlt_rx: float
    dlt_tx: float
    overhead_cu: int
    active_streams: int

    @property
    def dlt_bound(self):
        return self.dlt_tx


@dataclass(frozen=True, eq=False)
class RunTrace:
    """
    One algorithm run on one channel realization.

    ``records`` holds one entry per forward-backward iteration (a single
    entry for the uncoordinated scheme); ``snr_db`` is set by SNR sweeps.
    """

    algorithm: str
    trial: int
    initial: IterationRecord
    records: Tuple[IterationRecord, ...]
    filters: FilterBank
    snr_db: Optional[float] = None

    @property
    def final(self):
        return self.records[-1] if self.records else self.initial

    @property
    def active_streams(self):
        return self.filters.active_streams()

    def record_at(self, iteration):
        """Record after ``iteration`` iterations; runs that stopped earlier hold their last value."""
        if iteration < 0:
            raise ValueError(f"iteration must be >= 0, got {iteration}")
        if iteration == 0 and (not self.records or self.records[0].iteration != 0):
            return self.initial
        candidates = [r for r in self.records if r.iteration <= iteration]
        return candidates[-1] if candidates else self.initial

    def sum_rates(self):
        return np.array([r.sum_rate_bits for r in self.records])
