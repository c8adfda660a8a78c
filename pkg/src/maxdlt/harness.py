"""
Monte-Carlo experiment driver.

An experiment is described by a flat YAML file (or a bundled preset name)::

    num_cells: 3
    users_per_cell: 1
    tx_antennas: 4
    rx_antennas: 4
    streams: 2
    noise_power: 1.0e-3     # or snr_db: 30 (average per-user SNR, see calibrate_noise)
    fb_iterations: 4
    algorithms: [max-dlt, max-sinr, mmse, uncoordinated]
    trials: 200
    base_seed: 0

Every trial draws one channel realization and runs all algorithms on it
from the same initial filters. Results are averaged over trials per
algorithm and per value of the sweep axis: the iteration count ``T`` (the
default) or the SNR in dB.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Tuple

import numpy as np
import yaml

from .benchmarks import eigen_beamforming, run_benchmark
from .errors import ConfigurationError, TrialError
from .network import NetworkConfig, calibrate_noise, generate_channels, random_filters
from .overhead import AlgorithmId, overhead_for
from .waterfill import METHODS

__all__ = [
    "Sweep",
    "ExperimentSpec",
    "ResultRow",
    "CSV_HEADER",
    "preset_names",
    "load_spec",
    "parse_spec",
    "trial_seed",
    "run_trial",
    "run_experiment",
    "aggregate",
    "format_results",
    "emit_results",
    "read_results",
    "read_matrix",
]

CSV_HEADER = ("algorithm", "axis", "axis_value", "mean_sum_rate_bits", "stderr", "overhead_cu")
AXES = ("T", "snr")
NOISE_NORMALIZED = "noise-normalized"

_NETWORK_KEYS = ("num_cells", "users_per_cell", "tx_antennas", "rx_antennas", "streams",
                 "tx_power", "backward_noise_power", "fb_iterations", "cross_gain")
_KEYS = frozenset(_NETWORK_KEYS + (
    "rx_power", "noise_power", "snr_db", "direction", "algorithms", "trials", "base_seed",
    "sweep_axis", "sweep_values", "output_path", "init", "waterfill_method", "description"))
_DEFAULT_ALGORITHMS = ("max-dlt", "max-sinr", "mmse", "uncoordinated")


@dataclass(frozen=True)
class Sweep:
    """Sweep axis ``"T"`` (iteration counts) or ``"snr"`` (average SNR in dB)."""

    axis: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigurationError(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigurationError("sweep values must not be empty")
        if self.axis == "T":
            vals = []
            for v in self.values:
                if isinstance(v, bool) or float(v) != int(v) or int(v) < 0:
                    raise ConfigurationError(f"T sweep values must be non-negative integers, got {v!r}")
                vals.append(int(v))
        else:
            vals = [float(v) for v in self.values]
            if not all(math.isfinite(v) for v in vals):
                raise ConfigurationError(f"SNR sweep values must be finite, got {self.values!r}")
        object.__setattr__(self, "values", tuple(sorted(set(vals))))


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A validated experiment.

    Parameters
    ----------
    network : NetworkConfig
        The simulated (uplink) network. For ``direction="downlink"`` this is
        already the reciprocal network, with the antenna counts swapped.
    algorithms : tuple of AlgorithmId
    trials : int
        Number of channel realizations.
    sweep : Sweep, optional
        Defaults to ``Sweep("T", 0..fb_iterations)``.
    base_seed : int
    output_path : str
    init : {"eigen", "random"}
        Initial filters shared by all algorithms of a trial.
    waterfill_method : {"exact", "closed-form"}
        Subproblem solver of max-DLT.
    rx_power_rule : {"fixed", "noise-normalized"}
        ``"noise-normalized"`` sets ``P_r = d / s2`` at every SNR point.
    direction : {"uplink", "downlink"}
        Only a label: downlink experiments run on the reciprocal uplink.
    """

    network: NetworkConfig
    algorithms: Tuple[AlgorithmId, ...] = tuple(AlgorithmId.parse(a) for a in _DEFAULT_ALGORITHMS)
    trials: int = 200
    sweep: Optional[Sweep] = None
    base_seed: int = 0
    output_path: str = "results.csv"
    init: str = "eigen"
    waterfill_method: str = "exact"
    rx_power_rule: str = "fixed"
    direction: str = "uplink"

    def __post_init__(self):
        algs = tuple(AlgorithmId.parse(a) for a in self.algorithms)
        if not algs:
            raise ConfigurationError("algorithms must list at least one algorithm")
        if len(set(algs)) != len(algs):
            raise ConfigurationError(f"duplicate algorithms in {[a.value for a in algs]}")
        object.__setattr__(self, "algorithms", algs)
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigurationError(f"trials must be an integer >= 1, got {self.trials!r}")
        if isinstance(self.base_seed, bool) or not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ConfigurationError(f"base_seed must be a non-negative integer, got {self.base_seed!r}")
        if self.init not in ("eigen", "random"):
            raise ConfigurationError(f"init must be 'eigen' or 'random', got {self.init!r}")
        if self.waterfill_method not in METHODS:
            raise ConfigurationError(f"waterfill_method must be one of {METHODS}, "
                                     f"got {self.waterfill_method!r}")
        if self.rx_power_rule not in ("fixed", NOISE_NORMALIZED):
            raise ConfigurationError(f"rx_power_rule must be 'fixed' or {NOISE_NORMALIZED!r}, "
                                     f"got {self.rx_power_rule!r}")
        if self.direction not in ("uplink", "downlink"):
            raise ConfigurationError(f"direction must be 'uplink' or 'downlink', got {self.direction!r}")
        if self.sweep is None:
            object.__setattr__(self, "sweep",
                               Sweep("T", tuple(range(self.network.fb_iterations + 1))))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def network_at(self, snr_db=None):
        """Network used at one point of an SNR sweep (``None``: the base network)."""
        net = self.network
        if snr_db is not None:
            net = net.replace(noise_power=_noise_for(self, snr_db))
        if self.rx_power_rule == NOISE_NORMALIZED:
            net = net.replace(rx_power=net.streams / net.noise_power)
        return net

    @property
    def max_iterations(self):
        return max(self.sweep.values) if self.sweep.axis == "T" else self.network.fb_iterations


def _physical(net, direction):
    """Undo the antenna swap of downlink specs, for SNR calibration."""
    if direction == "downlink":
        return net.replace(tx_antennas=net.rx_antennas, rx_antennas=net.tx_antennas)
    return net


def _noise_for(spec, snr_db):
    return calibrate_noise(_physical(spec.network, spec.direction), snr_db)


# --------------------------------------------------------------------------- config files

def preset_names():
    """Names of the bundled experiment presets."""
    files = resources.files("maxdlt.presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def _preset_text(name):
    return resources.files("maxdlt.presets").joinpath(f"{name}.yaml").read_text()


def load_spec(path_or_preset):
    """
    Read an experiment file, or a bundled preset when given a preset name.

    Raises
    ------
    ConfigurationError
        On YAML syntax errors (with line and column), unknown keys or invalid
        values.
    OSError
        When the file cannot be read.
    """
    source = str(path_or_preset)
    if not os.path.exists(source) and source in preset_names():
        return parse_spec(_preset_text(source), source=f"preset {source}")
    with open(source, encoding="utf-8") as fh:
        text = fh.read()
    return parse_spec(text, source=source)


def parse_spec(text, source="<string>"):
    """Parse the YAML text of an experiment; see :func:`load_spec`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigurationError(f"{where}: invalid YAML: {problem}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: expected a mapping of keys to values")
    unknown = sorted(set(map(str, data)) - _KEYS)
    if unknown:
        raise ConfigurationError(f"{source}: unknown key(s) {unknown}; allowed keys are "
                                 f"{sorted(_KEYS)}")
    try:
        return _build_spec(dict(data))
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc


def _build_spec(d):
    direction = d.pop("direction", "uplink")
    for key in ("num_cells", "users_per_cell", "tx_antennas", "rx_antennas", "streams"):
        if key not in d:
            raise ConfigurationError(f"missing required key {key!r}")
    net_kwargs = {k: d.pop(k) for k in _NETWORK_KEYS if k in d}
    rx_power = d.pop("rx_power", None)
    rx_rule = "fixed"
    if rx_power == NOISE_NORMALIZED:
        rx_rule, rx_power = NOISE_NORMALIZED, None
    elif isinstance(rx_power, str):
        raise ConfigurationError(f"rx_power must be a number or {NOISE_NORMALIZED!r}, got {rx_power!r}")
    if direction == "downlink":
        net_kwargs["tx_antennas"], net_kwargs["rx_antennas"] = (net_kwargs["rx_antennas"],
                                                                 net_kwargs["tx_antennas"])
    if "noise_power" in d and "snr_db" in d:
        raise ConfigurationError("give either noise_power or snr_db, not both")
    snr_db = d.pop("snr_db", None)
    network = NetworkConfig(noise_power=d.pop("noise_power", 1.0), rx_power=rx_power, **net_kwargs)

    sweep = None
    axis, values = d.pop("sweep_axis", None), d.pop("sweep_values", None)
    if (axis is None) != (values is None):
        raise ConfigurationError("sweep_axis and sweep_values must be given together")
    if axis is not None:
        if not isinstance(values, (list, tuple)):
            raise ConfigurationError(f"sweep_values must be a list, got {values!r}")
        sweep = Sweep(str(axis), tuple(values))

    algorithms = d.pop("algorithms", list(_DEFAULT_ALGORITHMS))
    if not isinstance(algorithms, (list, tuple)):
        raise ConfigurationError(f"algorithms must be a list, got {algorithms!r}")
    d.pop("description", None)
    spec = ExperimentSpec(network=network, algorithms=tuple(algorithms), sweep=sweep,
                          rx_power_rule=rx_rule, direction=direction, **d)
    if snr_db is not None:
        spec = spec.replace(network=network.replace(noise_power=_noise_for(spec, snr_db)))
    return spec


# --------------------------------------------------------------------------- running

def trial_seed(base_seed, trial):
    """Seed sequence of one trial, independent of execution order."""
    return np.random.SeedSequence([int(base_seed), int(trial)])


def run_trial(spec, trial):
    """
    All algorithms of ``spec`` on the channel realization of one trial.

    Returns a list of :class:`RunTrace`, ordered by SNR point then algorithm.
    """
    channel_seed, init_seed = trial_seed(spec.base_seed, trial).spawn(2)
    channels = generate_channels(spec.network, channel_seed)
    snr_points = spec.sweep.values if spec.sweep.axis == "snr" else (None,)
    traces = []
    for snr in snr_points:
        net = spec.network_at(snr)
        if spec.init == "random":
            init = random_filters(net, init_seed)
        else:
            init = eigen_beamforming(channels, net)
        for alg in spec.algorithms:
            trace = run_benchmark(alg, channels, net, init=init, iterations=spec.max_iterations,
                                  trial=trial, method=spec.waterfill_method)
            if snr is not None:
                trace = dataclasses.replace(trace, snr_db=float(snr))
            traces.append(trace)
    return traces


def _run_trial_checked(spec, trial):
    try:
        return run_trial(spec, trial)
    except Exception as exc:
        raise TrialError(trial, f"{type(exc).__name__}: {exc}") from exc


def run_experiment(spec, workers=None):
    """
    Run every trial of ``spec``.

    Parameters
    ----------
    spec : ExperimentSpec
    workers : int, optional
        Number of worker processes; ``None`` or 1 runs serially. Results do
        not depend on it.

    Returns
    -------
    list of RunTrace
        Ordered by trial, then SNR point, then algorithm.

    Raises
    ------
    TrialError
        When any trial fails; the first failure aborts the run.
    """
    trials = range(spec.trials)
    if workers is None or workers <= 1:
        per_trial = [_run_trial_checked(spec, t) for t in trials]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trial_checked, spec, t) for t in trials]
            try:
                per_trial = [f.result() for f in futures]
            except BaseException:
                for f in futures:
                    f.cancel()
                raise
    return [trace for traces in per_trial for trace in traces]


# --------------------------------------------------------------------------- results

@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    axis: str
    axis_value: float
    mean_sum_rate_bits: float
    stderr: float
    overhead_cu: int

    def key(self):
        return (self.algorithm, self.axis_value)


def _mean_stderr(x):
    x = np.asarray(x, dtype=float)
    mean = float(np.mean(x))
    stderr = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else math.nan
    return mean, stderr


def aggregate(traces, spec):
    """
    Ergodic sum-rate per algorithm and axis value.

    The standard error uses the unbiased sample deviation and is NaN for a
    single trial. The overhead column is the closed-form pilot count for the
    algorithm and the number of iterations.

    Returns
    -------
    list of ResultRow
        Sorted by algorithm name, then axis value.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to aggregate")
    axis = spec.sweep.axis
    samples = {}
    for tr in traces:
        if axis == "T":
            for t in spec.sweep.values:
                samples.setdefault((tr.algorithm, t), []).append(tr.record_at(t).sum_rate_bits)
        else:
            if tr.snr_db is None:
                raise ValueError("SNR sweep traces must carry snr_db")
            samples.setdefault((tr.algorithm, tr.snr_db), []).append(tr.final.sum_rate_bits)
    rows = []
    for (alg, value), x in samples.items():
        T = int(value) if axis == "T" else spec.max_iterations
        mean, stderr = _mean_stderr(x)
        rows.append(ResultRow(alg, axis, value, mean, stderr, overhead_for(alg, T, spec.network)))
    rows.sort(key=ResultRow.key)
    return rows


def _fmt(value, axis=None):
    if axis == "T":
        return str(int(value))
    return repr(float(value))


def format_results(rows):
    """CSV text of a result table (header line first, newline-terminated)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(rows, key=ResultRow.key):
        writer.writerow([r.algorithm, r.axis, _fmt(r.axis_value, r.axis),
                         _fmt(r.mean_sum_rate_bits), _fmt(r.stderr), str(int(r.overhead_cu))])
    return buf.getvalue()


def emit_results(rows, path):
    """Write a result table as CSV; I/O errors name the path."""
    text = format_results(rows)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc


def read_results(path):
    """Parse a CSV written by :func:`emit_results` back into rows."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for line in reader:
            alg, axis, value, mean, stderr, overhead = line
            value = int(value) if axis == "T" else float(value)
            rows.append(ResultRow(alg, axis, value, float(mean), float(stderr), int(overhead)))
    return rows


def read_matrix(path):
    """
    Read a complex matrix from text: one row per line, whitespace-separated
    entries such as ``1``, ``-2.5``, ``1+2i``, ``3-0.5i`` or ``2i``.
    Blank lines and lines starting with ``#`` are skipped.
    """
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([complex(tok.replace("i", "j")) for tok in line.split()])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: cannot parse complex entries: {line!r}") from exc
    if not rows:
        raise ConfigurationError(f"{path}: no matrix entries")
    if len({len(r) for r in rows}) != 1:
        raise ConfigurationError(f"{path}: rows have different lengths")
    return np.array(rows, dtype=complex)
