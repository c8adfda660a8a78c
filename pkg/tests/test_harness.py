import math

import numpy as np
import pytest

from maxdlt.cli import main
from maxdlt.errors import ConfigurationError, TrialError
from maxdlt.harness import (CSV_HEADER, ExperimentSpec, ResultRow, Sweep, aggregate,
                            emit_results, format_results, load_spec, parse_spec, preset_names,
                            read_matrix, read_results, run_experiment, run_trial, trial_seed)
from maxdlt.network import NetworkConfig, calibrate_noise
from maxdlt.overhead import AlgorithmId
from maxdlt.trace import IterationRecord, RunTrace

TINY = """
num_cells: 2
users_per_cell: 1
tx_antennas: 2
rx_antennas: 2
streams: 1
noise_power: 0.1
fb_iterations: 2
algorithms: [max-dlt, max-sinr, uncoordinated]
trials: 3
"""


def tiny(**changes):
    return parse_spec(TINY).replace(**changes)


# --------------------------------------------------------------------------- config files

def test_presets_listed():
    assert preset_names() == ["dense_dl", "dense_ul", "three_cell", "two_cell"]


def test_three_cell_preset_values():
    spec = load_spec("three_cell")
    net = spec.network
    assert (net.num_cells, net.users_per_cell, net.tx_antennas, net.rx_antennas, net.streams) == (3, 1, 4, 4, 2)
    assert net.noise_power == 1e-3 and net.rx_power == 2.0
    assert spec.max_iterations == 4 and spec.trials == 200
    assert spec.sweep == Sweep("T", (0, 1, 2, 3, 4))
    assert AlgorithmId.MAX_DLT in spec.algorithms


def test_dense_presets_calibrated():
    ul = load_spec("dense_ul")
    assert ul.network.noise_power == pytest.approx(calibrate_noise(NetworkConfig(9, 8, 4, 8, 2), 19.0))
    dl = load_spec("dense_dl")
    # simulated on the reciprocal uplink: users transmit with 4 antennas, the BS receives with 16
    assert (dl.network.tx_antennas, dl.network.rx_antennas) == (4, 16)
    assert dl.network.noise_power == pytest.approx(16 / 10 ** 2.1)


def test_spec_from_file(tmp_path):
    p = tmp_path / "exp.yaml"
    p.write_text(TINY)
    assert load_spec(p) == parse_spec(TINY)


def test_missing_file():
    with pytest.raises(OSError):
        load_spec("/nonexistent/experiment.yaml")


def test_unknown_key():
    with pytest.raises(ConfigurationError, match="unknown key.*'num_cell'"):
        parse_spec(TINY.replace("num_cells", "num_cell"))


def test_yaml_error_reports_position():
    with pytest.raises(ConfigurationError, match=r"exp.yaml:3:10: invalid YAML"):
        parse_spec("num_cells: 2\nstreams: 1\ntrials: 3: 4\n", source="exp.yaml")


@pytest.mark.parametrize("edit,match", [
    (("algorithms: [max-dlt, max-sinr, uncoordinated]", "algorithms: []"), "at least one"),
    (("streams: 1", "streams: 3"), "min"),
    (("noise_power: 0.1", "noise_power: 0.1\nsnr_db: 10"), "either"),
    (("trials: 3", "trials: 0"), "trials"),
    (("trials: 3", "trials: 3\nsweep_axis: T"), "together"),
    (("trials: 3", "trials: 3\nrx_power: big"), "rx_power"),
    (("trials: 3", "trials: 3\nwaterfill_method: newton"), "waterfill_method"),
])
def test_invalid_specs(edit, match):
    with pytest.raises(ConfigurationError, match=match):
        parse_spec(TINY.replace(*edit))


def test_noise_normalized_rx_power():
    spec = parse_spec(TINY + "rx_power: noise-normalized\n")
    assert spec.network_at().rx_power == pytest.approx(1 / 0.1)
    assert spec.network_at(20.0).rx_power == pytest.approx(1 / calibrate_noise(spec.network, 20.0))


def test_sweep_validation():
    assert Sweep("T", (3, 1, 1.0)).values == (1, 3)
    with pytest.raises(ConfigurationError):
        Sweep("T", (1.5,))
    with pytest.raises(ConfigurationError):
        Sweep("time", (1,))
    with pytest.raises(ConfigurationError):
        Sweep("snr", (math.inf,))


# --------------------------------------------------------------------------- running

def test_trial_seeds_independent_of_order():
    a = trial_seed(7, 3).generate_state(4)
    assert np.array_equal(a, trial_seed(7, 3).generate_state(4))
    assert not np.array_equal(a, trial_seed(7, 4).generate_state(4))
    assert not np.array_equal(a, trial_seed(3, 7).generate_state(4))


def test_run_experiment_shape():
    spec = tiny()
    traces = run_experiment(spec)
    assert len(traces) == 3 * 3
    assert [t.trial for t in traces] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert [t.algorithm for t in traces[:3]] == ["max-dlt", "max-sinr", "uncoordinated"]


def test_trial_shares_initial_point():
    traces = run_trial(tiny(), 1)
    # all algorithms start from the same eigen-beamformers
    assert len({t.initial.sum_rate_bits for t in traces}) == 1


def test_workers_match_serial():
    spec = tiny(trials=4)
    a = format_results(aggregate(run_experiment(spec), spec))
    b = format_results(aggregate(run_experiment(spec, workers=2), spec))
    assert a == b


def test_byte_identical_csv(tmp_path):
    spec = tiny()
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        emit_results(aggregate(run_experiment(spec), spec), p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    other = aggregate(run_experiment(spec.replace(base_seed=1)), spec)
    assert format_results(other) != paths[0].read_text()


def test_trial_error_carries_index(monkeypatch):
    import maxdlt.harness as harness

    def broken(spec, trial):
        if trial == 2:
            raise FloatingPointError("boom")
        return []

    monkeypatch.setattr(harness, "run_trial", broken)
    with pytest.raises(TrialError, match="trial 2") as info:
        run_experiment(tiny(trials=4))
    assert info.value.trial == 2


def test_snr_sweep():
    spec = tiny(sweep=Sweep("snr", (0.0, 20.0)), algorithms=("max-dlt", "uncoordinated"))
    traces = run_experiment(spec)
    assert [t.snr_db for t in traces[:4]] == [0.0, 0.0, 20.0, 20.0]
    rows = aggregate(traces, spec)
    assert [(r.algorithm, r.axis_value) for r in rows] == [
        ("max-dlt", 0.0), ("max-dlt", 20.0), ("uncoordinated", 0.0), ("uncoordinated", 20.0)]
    # more SNR, more rate
    assert rows[1].mean_sum_rate_bits > rows[0].mean_sum_rate_bits
    assert rows[0].overhead_cu == 2 * 2 * 1 * 2 and rows[2].overhead_cu == 0


# --------------------------------------------------------------------------- aggregation

def _trace(alg, trial, rates):
    recs = [IterationRecord(i, r, 0.0, 0.0, 0, 1) for i, r in enumerate(rates)]
    return RunTrace(alg, trial, recs[0], tuple(recs[1:]), None)


def test_aggregate_matches_streaming_oracle():
    rng = np.random.default_rng(0)
    spec = tiny(trials=50, algorithms=("max-dlt",))
    data = rng.normal(10.0, 2.0, size=(50, 3))
    rows = aggregate([_trace("max-dlt", i, data[i]) for i in range(50)], spec)
    for t, row in enumerate(rows):
        # Welford's running mean and variance
        n, mean, m2 = 0, 0.0, 0.0
        for x in data[:, t]:
            n += 1
            delta = x - mean
            mean += delta / n
            m2 += delta * (x - mean)
        assert row.axis_value == t
        assert row.mean_sum_rate_bits == pytest.approx(mean, rel=1e-12)
        assert row.stderr == pytest.approx(math.sqrt(m2 / (n - 1) / n), rel=1e-10)
        assert row.overhead_cu == 2 * t * 2


def test_aggregate_constant_and_single_trial():
    spec = tiny(algorithms=("max-dlt",))
    rows = aggregate([_trace("max-dlt", i, [1.0, 2.0, 3.0]) for i in range(3)], spec)
    assert [r.mean_sum_rate_bits for r in rows] == [1.0, 2.0, 3.0]
    assert all(r.stderr == 0.0 for r in rows)
    single = aggregate([_trace("max-dlt", 0, [1.0, 2.0, 3.0])], spec)
    assert all(math.isnan(r.stderr) for r in single)


def test_aggregate_holds_last_value_after_early_stop():
    spec = tiny(algorithms=("uncoordinated",))
    rows = aggregate([_trace("uncoordinated", 0, [4.0, 4.0])], spec)
    assert [r.mean_sum_rate_bits for r in rows] == [4.0, 4.0, 4.0]


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([], tiny())


def test_empty_table_is_header_only(tmp_path):
    p = tmp_path / "empty.csv"
    emit_results([], p)
    assert p.read_text() == ",".join(CSV_HEADER) + "\n"
    assert read_results(p) == []


def test_csv_round_trip(tmp_path):
    rows = [ResultRow("max-dlt", "T", 2, 1 / 3, 0.1, 24), ResultRow("mmse", "T", 0, 12.5, math.nan, 0)]
    p = tmp_path / "r.csv"
    emit_results(rows, p)
    back = read_results(p)
    assert back[0] == rows[0]
    assert back[1].algorithm == "mmse" and math.isnan(back[1].stderr)


def test_emit_to_bad_path():
    with pytest.raises(OSError, match="cannot write"):
        emit_results([], "/nonexistent/dir/out.csv")


def test_golden_csv_layout():
    spec = tiny(trials=2)
    text = format_results(aggregate(run_experiment(spec), spec))
    lines = text.splitlines()
    assert lines[0] == "algorithm,axis,axis_value,mean_sum_rate_bits,stderr,overhead_cu"
    assert len(lines) == 1 + 3 * 3
    assert lines[1].startswith("max-dlt,T,0,")
    assert lines[-1].startswith("uncoordinated,T,2,") and lines[-1].endswith(",0")


# --------------------------------------------------------------------------- matrices and CLI

def test_read_matrix(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text("# Q\n2 1+2i\n\n1-2i 3.5\n")
    assert np.array_equal(read_matrix(p), np.array([[2, 1 + 2j], [1 - 2j, 3.5]]))
    p.write_text("1 2\n3\n")
    with pytest.raises(ConfigurationError, match="lengths"):
        read_matrix(p)
    p.write_text("1 x\n")
    with pytest.raises(ConfigurationError, match=":1:"):
        read_matrix(p)


def test_cli_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    assert capsys.readouterr().out.split() == preset_names()


def test_cli_run_and_sweep(tmp_path, capsys):
    spec = tmp_path / "exp.yaml"
    spec.write_text(TINY)
    out = tmp_path / "out.csv"
    assert main(["run", "--spec", str(spec), "--out", str(out), "--trials", "2"]) == 0
    assert len(read_results(out)) == 9
    assert main(["sweep", "--spec", str(spec), "--axis", "snr", "--values", "0,10",
                 "--out", "-", "--trials", "1", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 1 + 3 * 2


def test_cli_waterfill(tmp_path, capsys):
    (tmp_path / "q").write_text("2\n")
    (tmp_path / "r").write_text("3\n")
    assert main(["waterfill", "--q", str(tmp_path / "q"), "--r", str(tmp_path / "r"),
                 "--zeta", "1"]) == 0
    out = capsys.readouterr().out
    fields = dict(line.split(None, 1) for line in out.splitlines() if " " in line.strip())
    assert float(fields["mu_star"]) == pytest.approx(-1.25, abs=1e-9)
    assert float(fields["norm2"]) == pytest.approx(1.0, abs=1e-9)


def test_cli_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(TINY + "colour: blue\n")
    assert main(["run", "--spec", str(bad), "--out", "-"]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["run", "--spec", str(tmp_path / "missing.yaml")]) == 2


def test_experiment_spec_defaults():
    spec = ExperimentSpec(NetworkConfig(2, 1, 2, 2, 1, fb_iterations=3))
    assert spec.sweep.values == (0, 1, 2, 3)
    assert spec.waterfill_method == "exact" and spec.init == "eigen"
    with pytest.raises(ConfigurationError, match="duplicate"):
        spec.replace(algorithms=("mmse", "MMSE"))
