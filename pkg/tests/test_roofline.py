import math

import numpy as np
import pytest

from rooftune import roofline as rl
from rooftune.archive import builtin_hardware, load_hardware
from rooftune.kernels.dgemm import DgemmConfig, dgemm_flop_count, dgemm_traffic_bytes
from rooftune.report import (
    ValidationError,
    compare_modes,
    format_comparison,
    measured_ceilings,
    theoretical_ceilings,
    utilization_lines,
)

# name -> (sockets used, expected GFLOP/s, expected GB/s)
PEAKS = {
    "xeon-e5-2650v4": (2, 422.4, 2 * 76.8),
    "xeon-e5-2695v4": (2, 604.8, 2 * 76.8),
    "xeon-gold-6132": (1, 1164.8, 127.968),
    "xeon-gold-6148": (1, 1536.0, 127.968),
}


def test_builtin_specs_present():
    assert set(PEAKS) <= set(builtin_hardware())


@pytest.mark.parametrize("name", sorted(PEAKS))
def test_theoretical_peaks(name):
    sockets, flops, bw = PEAKS[name]
    spec = load_hardware(name)
    assert rl.theoretical_flops(spec, sockets) == pytest.approx(flops, abs=0.05)
    assert rl.theoretical_bandwidth(spec, sockets) == pytest.approx(bw, abs=0.01)


def test_single_socket_bandwidths():
    assert rl.theoretical_bandwidth(load_hardware("xeon-e5-2650v4"), 1) == pytest.approx(76.8)
    assert rl.theoretical_bandwidth(load_hardware("xeon-gold-6148"), 1) == pytest.approx(127.968)
    assert rl.theoretical_flops(load_hardware("xeon-gold-6132"), 2) == pytest.approx(2329.6)


def test_socket_count_validated():
    spec = load_hardware("xeon-gold-6132")
    for bad in (0, 3):
        with pytest.raises(ValueError):
            rl.theoretical_flops(spec, bad)


def test_avx_ops_per_cycle():
    assert rl.avx_ops_per_cycle_dp(256) == 8
    assert rl.avx_ops_per_cycle_dp(512) == 16
    with pytest.raises(ValueError):
        rl.avx_ops_per_cycle_dp(384)


def test_hardware_spec_validation():
    good = load_hardware("xeon-gold-6148").to_dict()
    assert rl.HardwareSpec.from_dict(good).name == good["name"]
    with pytest.raises(ValueError):
        rl.HardwareSpec.from_dict({**good, "cores": 0})
    with pytest.raises(ValueError):
        rl.HardwareSpec.from_dict({**good, "turbo": True})


# measured value, theoretical denominator, expected percent (two decimals)
UTILIZATION = [
    (408.71, 422.4, 96.76), (593.06, 604.8, 98.06), (1015.68, 1164.8, 87.20), (1422.24, 1536.0, 92.59),
    (773.51, 844.8, 91.56), (1112.08, 1209.6, 91.94), (1750.24, 2329.6, 75.13), (2407.33, 3072.0, 78.36),
]


@pytest.mark.parametrize("measured,peak,percent", UTILIZATION)
def test_utilization_percentages(measured, peak, percent):
    assert round(rl.utilization(measured, peak), 2) == pytest.approx(percent, abs=0.01)


def test_roofline_value_and_intensity():
    assert rl.roofline_value(1.0, 76.8, 422.4) == 76.8
    assert rl.roofline_value(100.0, 76.8, 422.4) == 422.4
    np.testing.assert_allclose(rl.roofline_value(np.array([1.0, 10.0]), 10.0, 50.0), [10.0, 50.0])
    assert rl.operational_intensity(2.0, 24.0) == pytest.approx(1 / 12)
    with pytest.raises(ZeroDivisionError):
        rl.operational_intensity(1.0, 0.0)


def test_dgemm_intensity_grows_with_size():
    small = DgemmConfig(64, 64, 64)
    big = DgemmConfig(4000, 4096, 1024)
    i_small = rl.operational_intensity(dgemm_flop_count(small), dgemm_traffic_bytes(small))
    i_big = rl.operational_intensity(dgemm_flop_count(big), dgemm_traffic_bytes(big))
    assert 0 < i_small < i_big


def test_build_model_and_ridges():
    model = rl.build_model([("F1", 422.4), ("F2", 211.2)], [("B1", 76.8), ("B2", 153.6)])
    assert [c for c, _ in model.compute_ceilings] == ["F1", "F2"]
    ridges = dict(model.ridge_points)
    assert ridges[("F1", "B2")] == pytest.approx(2.75)
    assert ridges[("F2", "B1")] == pytest.approx(2.75)
    assert ridges[("F1", "B1")] == pytest.approx(5.5)
    with pytest.raises(ValueError):
        rl.build_model([], [("B", 1.0)])
    with pytest.raises(ValueError):
        rl.build_model([("F", -1.0)], [("B", 1.0)])


def test_roofline_csv_is_min_of_ceilings():
    model = rl.build_model([("F", 100.0)], [("B", 10.0)])
    text = rl.emit_roofline_data(model, samples_per_decade=5, i_min=0.1, i_max=1000.0)
    lines = text.strip().splitlines()
    assert lines[0] == "intensity_flop_per_byte,B|F"
    rows = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
    assert rows[0][0] == 0.1 and rows[-1][0] == 1000.0
    assert len(rows) == 21
    for x, y in rows:
        assert y == pytest.approx(min(10.0 * x, 100.0), rel=1e-15)
    xs = [r[0] for r in rows]
    assert xs == sorted(xs)


def test_csv_stable_across_calls():
    model = rl.build_model([("F", 422.4)], [("B", 76.8)])
    assert rl.emit_roofline_data(model) == rl.emit_roofline_data(model)


def test_intensity_grid_validation():
    with pytest.raises(ValueError):
        rl.intensity_grid(10, 1.0, 1.0)
    with pytest.raises(ValueError):
        rl.intensity_grid(0, 0.1, 1.0)


def test_classify_working_set():
    l3 = 30e6
    assert rl.classify_working_set(3 * 1024, l3) == "L3"
    assert rl.classify_working_set(15e6, l3) == "L3"
    assert rl.classify_working_set(60e6, l3) is None
    assert rl.classify_working_set(120e6, l3) == "DRAM"


def test_svg_contains_every_ceiling():
    model = rl.build_model([("F_t S1", 422.4), ("DGEMM S1", 408.7)], [("DRAM S1", 76.8)])
    svg = rl.render_svg(model, points=[("DGEMM S1 best", 20.0, 408.7)])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2
    assert "DRAM S1" in svg and "DGEMM S1 best" in svg


def archive(kernel, mode, value, obs_time, sockets=1, seed=0, hardware=None, best_config=None, results=()):
    return {
        "manifest": {"kernel": kernel, "seed": seed, "sockets": sockets, "hardware": hardware},
        "summary": {"mode": mode, "best_value": value, "best_config": best_config,
                    "total_observation_time": obs_time, "total_wall_time": obs_time / 10},
        "results": list(results),
    }


def test_compare_modes_speedup_and_table():
    rows = compare_modes([archive("dgemm", "Default", 400.0, 100.0), archive("dgemm", "C+I+O", 399.0, 10.0),
                          archive("dgemm", "Default", 800.0, 120.0, sockets=2)])
    by_mode = {r[0]: r for r in rows}
    assert by_mode["C+I+O"][4] == pytest.approx(22.0)
    assert by_mode["Default"][1] == {"S1": 400.0, "S2": 800.0}
    text, csv = format_comparison(rows)
    assert "F_S1 Perf" in text and "22.00x" in text
    assert csv.splitlines()[0] == "technique,perf_s1,perf_s2,observation_time_s,wall_time_s,speedup"


def test_compare_modes_rejects_mixed_kernels_and_warns_on_seeds():
    with pytest.raises(ValidationError):
        compare_modes([archive("dgemm", "Default", 1.0, 1.0), archive("triad", "C", 1.0, 1.0)])
    warnings = []
    compare_modes([archive("dgemm", "Default", 1.0, 1.0), archive("dgemm", "C", 1.0, 1.0, seed=2)],
                  warn=warnings.append)
    assert warnings and "seed" in warnings[0]


def test_measured_ceilings_from_archives():
    spec = load_hardware("xeon-e5-2650v4")
    dg = archive("dgemm", "C", 408.71, 1.0, sockets=2, hardware=spec.name,
                 best_config={"n": 4000, "m": 2048, "k": 128})
    l3 = spec.l3_size * 2
    triad_results = [
        {"config": {"length": 128, "working_set": 3072}, "score": 300.0, "failed": False},
        {"config": {"length": int(8 * l3) // 24, "working_set": int(8 * l3)}, "score": 60.0, "failed": False},
        {"config": {"length": int(16 * l3) // 24, "working_set": int(16 * l3)}, "score": 58.0, "failed": False},
        {"config": {"length": int(l3) // 24, "working_set": int(l3)}, "score": 900.0, "failed": False},
    ]
    tr = archive("triad", "C", 300.0, 1.0, sockets=2, hardware=spec.name, results=triad_results)
    compute, bandwidth, points, util = measured_ceilings(spec, [dg, tr])
    assert compute == [("DGEMM S2", 408.71)]
    assert ("DRAM S2 (measured)", 60.0) in bandwidth and ("L3 S2 (measured)", 300.0) in bandwidth
    lines = utilization_lines(util)
    assert lines[0] == "DGEMM S2: 408.71 / 422.4 GFLOP/s = 96.76%"
    assert any(ln.startswith("TRIAD DRAM S2: 60.00 / 153.6 GB/s") for ln in lines)
    assert any(p[1] == pytest.approx(1 / 12) for p in points)


def test_measured_ceilings_checks_hardware():
    spec = load_hardware("xeon-gold-6148")
    with pytest.raises(ValidationError):
        measured_ceilings(spec, [archive("dgemm", "C", 1.0, 1.0, hardware="Other CPU")])
    with pytest.raises(ValidationError):
        measured_ceilings(spec, [archive("synthetic", "C", 1.0, 1.0)])


def test_theoretical_ceilings_per_socket():
    compute, bandwidth = theoretical_ceilings(load_hardware("xeon-e5-2650v4"))
    assert [round(v, 1) for _, v in compute] == [211.2, 422.4]
    assert [round(v, 1) for _, v in bandwidth] == [76.8, 153.6]
    assert all(math.isfinite(v) for _, v in compute + bandwidth)
