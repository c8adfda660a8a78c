"""
End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line and then
asserts the criterion at its stated tolerance; nothing is loosened to make
a check pass. Run ``python tests/test_acceptance.py`` for the lines alone.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_filter, random_pd, random_psd  # noqa: E402
from oracles import projected_gradient  # noqa: E402
from maxdlt.benchmarks import eigen_beamforming  # noqa: E402
from maxdlt.dlt import (dlt_form_offset, dlt_network_bound, dlt_user_bound,  # noqa: E402
                        update_receive_filters, update_transmit_filters)
from maxdlt.harness import (Sweep, aggregate, emit_results, load_spec, preset_names,  # noqa: E402
                            run_experiment)
from maxdlt.network import CovariancePair, NetworkConfig, generate_channels, user_rate  # noqa: E402
from maxdlt.overhead import overhead_ccp_wmmse, overhead_prop, overhead_wmmse  # noqa: E402
from maxdlt.waterfill import WaterfillProblem, nonhomogeneous_waterfill  # noqa: E402

pytestmark = pytest.mark.slow


def report(capsys, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def mean_rates(spec, workers=None):
    """``{(algorithm, T): mean sum-rate}`` of an experiment."""
    rows = aggregate(run_experiment(spec, workers=workers), spec)
    return {(r.algorithm, r.axis_value): r.mean_sum_rate_bits for r in rows}


# --------------------------------------------------------------------------- 1, 2: waterfilling

def check_waterfill_optimality(capsys=None):
    worst_gap = worst_power = worst_res = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        p = WaterfillProblem(random_pd(rng, 3), random_psd(rng, 3), 2, 1.0)
        sol = nonhomogeneous_waterfill(p)
        f_oracle, _ = projected_gradient(p.Q, p.R, 2, 1.0, starts=200, seed=seed)
        worst_gap = max(worst_gap, sol.objective - f_oracle)
        worst_power = max(worst_power, abs(np.sum(np.abs(sol.X_star) ** 2) - 1.0))
        worst_res = max(worst_res, abs(sol.residual))
    ok = worst_gap <= 1e-4 and worst_power <= 1e-8 and worst_res <= 1e-10
    return report(capsys, 1, ok, f"max f(X*) - f_oracle = {worst_gap:.2e}, "
                                 f"max power error = {worst_power:.1e}, max |g(mu*)| = {worst_res:.1e}")


def check_scalar(capsys=None):
    sol = nonhomogeneous_waterfill(WaterfillProblem(np.array([[2.0]]), np.array([[3.0]]), 1, 1.0))
    x = float(abs(sol.X_star[0, 0]))
    ok = abs(x - 1.0) <= 1e-9 and abs(sol.mu_star + 1.25) <= 1e-9
    return report(capsys, 2, ok, f"|X*| = {x!r}, mu* = {float(sol.mu_star)!r}")


def test_criterion_1_waterfill_optimality(capsys):
    assert check_waterfill_optimality(capsys)


def test_criterion_2_scalar_case(capsys):
    assert check_scalar(capsys)


# --------------------------------------------------------------------------- 3: monotonicity

def check_bcd_monotone(capsys=None, runs=100, max_iterations=5000):
    cfg = load_spec("three_cell").network
    offset = dlt_form_offset(cfg)
    start = time.perf_counter()
    worst, iterations, unconverged = 0.0, [], 0
    for seed in range(runs):
        ch = generate_channels(cfg, seed)
        f = eigen_beamforming(ch, cfg)
        prev = dlt_network_bound(ch, f, cfg, "backward").total + offset
        for it in range(1, max_iterations + 1):
            f = update_receive_filters(ch, f, cfg)
            a = dlt_network_bound(ch, f, cfg, "forward").total
            f = update_transmit_filters(ch, f, cfg)
            b = dlt_network_bound(ch, f, cfg, "backward").total + offset
            worst = min(worst, a - prev, b - a)
            stationary = abs(a - prev) < 1e-7 and abs(b - a) < 1e-7
            prev = b
            if stationary:
                break
        else:
            unconverged += 1
        iterations.append(it)
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and unconverged == 0 and elapsed < 60.0
    return report(capsys, 3, ok, f"worst half-step change {worst:.1e}, stationary after "
                                 f"{int(np.median(iterations))} (median) / {max(iterations)} (max) "
                                 f"iterations, {unconverged} unconverged, {elapsed:.1f} s")


def test_criterion_3_bcd_monotone(capsys):
    assert check_bcd_monotone(capsys)


# --------------------------------------------------------------------------- 4: bound validity

def check_bound_validity(capsys=None, count=1000):
    rng = np.random.default_rng(2024)
    holds, smallest = 0, np.inf
    for _ in range(count):
        n, d = int(rng.integers(2, 7)), None
        d = int(rng.integers(1, n + 1))
        U = random_filter(rng, n, d, power=rng.uniform(0.1, 10.0))
        Q = random_pd(rng, n)
        floor = np.linalg.eigvalsh(U.conj().T @ Q @ U)[0]
        Q *= 10.0 / floor * rng.uniform(1.0, 10.0)
        R = random_psd(rng, n, rank=int(rng.integers(1, n + 1))) * 10 ** rng.uniform(-1, 3)
        cov = CovariancePair.from_matrices(R, Q)
        gap = user_rate(cov, U) - dlt_user_bound(cov, U)
        holds += gap >= 0
        smallest = min(smallest, gap)
    ok = holds == count
    return report(capsys, 4, ok, f"rate >= bound in {holds}/{count} instances, "
                                 f"smallest gap {smallest:.3g} bit")


def test_criterion_4_bound_validity(capsys):
    assert check_bound_validity(capsys)


# --------------------------------------------------------------------------- 5, 6, 7: curves

def check_fast_convergence(capsys=None, workers=None):
    spec = load_spec("two_cell").replace(algorithms=("max-dlt",), sweep=Sweep("T", (2, 20)))
    m = mean_rates(spec, workers)
    ratio = m["max-dlt", 2] / m["max-dlt", 20]
    cf = mean_rates(spec.replace(waterfill_method="closed-form"), workers)
    cf_ratio = cf["max-dlt", 2] / cf["max-dlt", 20]
    return report(capsys, 5, ratio >= 0.9,
                  f"T=2 / T=20 = {m['max-dlt', 2]:.2f} / {m['max-dlt', 20]:.2f} = {ratio:.3f} "
                  f"(need >= 0.9); closed-form solver: {cf_ratio:.3f}")


def check_benchmark_ordering(capsys=None, workers=None):
    spec = load_spec("three_cell").replace(sweep=Sweep("T", (4,)))
    m = {a: v for (a, _), v in mean_rates(spec, workers).items()}
    others = {a: v for a, v in m.items() if a != "max-dlt"}
    ok = all(m["max-dlt"] > v for v in others.values())
    cf = mean_rates(spec.replace(algorithms=("max-dlt",), waterfill_method="closed-form"), workers)
    nn_spec = spec.replace(algorithms=("max-dlt",), rx_power_rule="noise-normalized")
    nn = mean_rates(nn_spec, workers)
    listing = ", ".join(f"{a} {v:.2f}" for a, v in sorted(others.items()))
    return report(capsys, 6, ok,
                  f"max-dlt {m['max-dlt']:.2f} vs {listing}; diagnostics: closed-form solver "
                  f"{cf['max-dlt', 4]:.2f}, P_r = d/s2 {nn['max-dlt', 4]:.2f}")


def check_coordination_gain(capsys=None, workers=None):
    spec = load_spec("dense_ul").replace(algorithms=("max-dlt", "max-sinr", "uncoordinated"),
                                         sweep=Sweep("T", (3,)))
    m = {a: v for (a, _), v in mean_rates(spec, workers).items()}
    gain = m["max-dlt"] / m["uncoordinated"]
    cf = mean_rates(spec.replace(algorithms=("max-dlt",), waterfill_method="closed-form"), workers)
    return report(capsys, 7, gain >= 2.0,
                  f"max-dlt {m['max-dlt']:.2f} / uncoordinated {m['uncoordinated']:.2f} = "
                  f"{gain:.2f}x over {spec.trials} trials (need >= 2); diagnostics: max-sinr "
                  f"{m['max-sinr']:.2f}, closed-form max-dlt {cf['max-dlt', 3]:.2f}")


def test_criterion_5_fast_convergence(capsys):
    assert check_fast_convergence(capsys)


def test_criterion_6_benchmark_ordering(capsys):
    assert check_benchmark_ordering(capsys)


def test_criterion_7_coordination_gain(capsys):
    assert check_coordination_gain(capsys)


# --------------------------------------------------------------------------- 8: overhead

def check_overhead(capsys=None):
    values = (overhead_prop(4, 1, 3, 2), overhead_wmmse(4, 1, 3, 4, 2),
              overhead_ccp_wmmse(5, 2, 2, 4, 4, 2), overhead_prop(5, 2, 2, 2))
    ok = values == (48, 96, 240, 80) and values[2] == 3 * values[3]
    return report(capsys, 8, ok, "prop {}, wmmse {}, ccp-wmmse {} = 3 x {}".format(*values))


def test_criterion_8_overhead(capsys):
    assert check_overhead(capsys)


# --------------------------------------------------------------------------- 9: complexity

def update_time(n, budget=0.5):
    """Best wall time of one receive plus one transmit update, ``M = N = n``."""
    cfg = NetworkConfig(2, 1, n, n, 2, noise_power=0.1)
    ch = generate_channels(cfg, n)
    f = eigen_beamforming(ch, cfg)
    best, spent = np.inf, 0.0
    while spent < budget or best == np.inf:
        t0 = time.perf_counter()
        update_transmit_filters(ch, update_receive_filters(ch, f, cfg), cfg)
        dt = time.perf_counter() - t0
        best, spent = min(best, dt), spent + dt
    return best


def check_complexity(capsys=None):
    sizes = np.array([4, 8, 16, 32])
    times = np.array([update_time(int(n)) for n in sizes])
    # fit a + b (M+N)^3 on the smaller sizes, then predict the largest
    x = (2.0 * sizes) ** 3
    A = np.column_stack([np.ones(3), x[:3]])
    (a, b), *_ = np.linalg.lstsq(A, times[:3], rcond=None)
    predicted = a + b * x[-1]
    ratio = times[-1] / predicted
    ok = 0.5 <= ratio <= 2.0
    timing = ", ".join(f"{n}: {1e3 * t:.2f} ms" for n, t in zip(sizes, times))
    return report(capsys, 9, ok, f"update time {timing}; measured/predicted at M=N=32 = "
                                 f"{ratio:.2f} (need 0.5..2)")


def test_criterion_9_complexity(capsys):
    assert check_complexity(capsys)


# --------------------------------------------------------------------------- 10: determinism

def check_determinism(tmp_path, capsys=None, trials=4):
    differing = []
    for name in preset_names():
        spec = load_spec(name).replace(trials=trials)
        blobs = []
        for k in range(2):
            path = Path(tmp_path) / f"{name}-{k}.csv"
            emit_results(aggregate(run_experiment(spec), spec), path)
            blobs.append(path.read_bytes())
        if blobs[0] != blobs[1]:
            differing.append(name)
    ok = not differing
    return report(capsys, 10, ok, f"presets {preset_names()} run twice with {trials} trials each, "
                                  f"differing: {differing or 'none'}")


def test_criterion_10_determinism(tmp_path, capsys):
    assert check_determinism(tmp_path, capsys)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        results = [check_waterfill_optimality(), check_scalar(), check_bcd_monotone(),
                   check_bound_validity(), check_fast_convergence(), check_benchmark_ordering(),
                   check_coordination_gain(), check_overhead(), check_complexity(),
                   check_determinism(tmp)]
    print(f"{sum(results)}/{len(results)} criteria pass")
