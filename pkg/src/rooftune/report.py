"""Mode-comparison tables and roofline assembly from results archives."""

from __future__ import annotations

import io
import math
from collections import OrderedDict

from rooftune import roofline as rl
from rooftune.kernels.dgemm import DgemmConfig, dgemm_flop_count, dgemm_traffic_bytes


class ValidationError(ValueError):
    pass


def _socket_label(archive):
    return f"S{int(archive['manifest'].get('sockets', 1))}"


def compare_modes(archives, baseline=None, warn=None):
    """Rows ``(technique, {socket: best_value}, time, wall, speedup)``.

    ``time`` is summed observation time, the quantity speedups are based on.
    ``baseline`` is an archive; defaults to the Default-mode archive if one
    is present, else the first archive.
    """
    if not archives:
        raise ValidationError("no archives given")
    kernels = {a["manifest"]["kernel"] for a in archives}
    if len(kernels) > 1:
        raise ValidationError(f"archives mix kernels: {sorted(kernels)}")
    seeds = {a["manifest"]["seed"] for a in archives}
    if len(seeds) > 1 and warn is not None:
        warn(f"archives come from different seeds {sorted(seeds)}; comparison is not paired")

    groups = OrderedDict()
    for a in archives:
        g = groups.setdefault(a["summary"]["mode"], {"values": {}, "time": 0.0, "wall": 0.0})
        sock = _socket_label(a)
        value = a["summary"]["best_value"]
        value = -math.inf if value is None else value
        g["values"][sock] = max(g["values"].get(sock, -math.inf), value)
        g["time"] += a["summary"]["total_observation_time"]
        g["wall"] += a["summary"]["total_wall_time"]

    if baseline is None:
        base_mode = "Default" if "Default" in groups else next(iter(groups))
    else:
        base_mode = baseline["summary"]["mode"]
        if base_mode not in groups:
            groups[base_mode] = {"values": {_socket_label(baseline): baseline["summary"]["best_value"]},
                                 "time": baseline["summary"]["total_observation_time"],
                                 "wall": baseline["summary"]["total_wall_time"]}
    base_time = groups[base_mode]["time"]
    rows = []
    for mode, g in groups.items():
        speedup = base_time / g["time"] if g["time"] > 0 else math.inf
        rows.append((mode, g["values"], g["time"], g["wall"], speedup))
    return rows


def format_comparison(rows):
    """Return ``(aligned_text, csv_text)``."""
    sockets = sorted({s for _, vals, *_ in rows for s in vals})
    header = ["Technique", *[f"F_{s} Perf" for s in sockets], "Time", "Wall", "Speedup"]
    table = []
    for mode, vals, t, wall, speedup in rows:
        cells = [mode]
        for s in sockets:
            v = vals.get(s)
            cells.append("-" if v is None or not math.isfinite(v) else f"{v:.2f}")
        cells += [f"{t:.2f}s", f"{wall:.3f}s", f"{speedup:.2f}x"]
        table.append(cells)
    widths = [max(len(r[i]) for r in [header, *table]) for i in range(len(header))]
    text = io.StringIO()
    for r in [header, *table]:
        text.write("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
                   .rstrip() + "\n")
    csv = io.StringIO()
    csv.write(",".join(["technique", *[f"perf_{s.lower()}" for s in sockets],
                        "observation_time_s", "wall_time_s", "speedup"]) + "\n")
    for mode, vals, t, wall, speedup in rows:
        cells = [mode] + [f"{vals[s]:.17g}" if s in vals and math.isfinite(vals[s]) else "" for s in sockets]
        cells += [f"{t:.17g}", f"{wall:.17g}", f"{speedup:.17g}"]
        csv.write(",".join(cells) + "\n")
    return text.getvalue(), csv.getvalue()


def theoretical_ceilings(spec: rl.HardwareSpec):
    compute, bandwidth = [], []
    for s in range(1, spec.sockets + 1):
        compute.append((f"F_t S{s}", rl.theoretical_flops(spec, s)))
        bandwidth.append((f"DRAM B_t S{s}", rl.theoretical_bandwidth(spec, s)))
    return compute, bandwidth


def measured_ceilings(spec: rl.HardwareSpec, archives):
    """Measured compute/bandwidth ceilings and plot points from DGEMM/TRIAD archives."""
    compute, bandwidth, points, util = [], [], [], []
    for a in archives:
        m = a["manifest"]
        hw = m.get("hardware")
        if hw is not None and hw != spec.name:
            raise ValidationError(f"archive was recorded for hardware {hw!r}, spec is {spec.name!r}")
        sockets = int(m.get("sockets", 1))
        if sockets > spec.sockets:
            raise ValidationError(f"archive uses {sockets} sockets, spec has {spec.sockets}")
        kernel = m["kernel"]
        if kernel == "dgemm":
            best = a["summary"]["best_config"]
            if best is None:
                continue
            value = a["summary"]["best_value"]
            label = f"DGEMM S{sockets}"
            compute.append((label, value))
            cfg = DgemmConfig(int(best["n"]), int(best["m"]), int(best["k"]))
            points.append((f"{label} {best['n']},{best['m']},{best['k']}",
                           rl.operational_intensity(dgemm_flop_count(cfg), dgemm_traffic_bytes(cfg)), value))
            util.append((label, value, rl.theoretical_flops(spec, sockets), "GFLOP/s"))
        elif kernel == "triad":
            l3_total = spec.l3_size * sockets
            best = {}
            for r in a["results"]:
                if r["failed"] or r["score"] is None:
                    continue
                ws = r["config"].get("working_set", 24 * int(r["config"]["length"]))
                level = rl.classify_working_set(ws, l3_total)
                if level is not None and r["score"] > best.get(level, (-math.inf,))[0]:
                    best[level] = (r["score"], ws)
            for level in ("DRAM", "L3"):
                if level in best:
                    gbs, ws = best[level]
                    label = f"{level} S{sockets}"
                    bandwidth.append((label + " (measured)", gbs))
                    points.append((f"TRIAD {label} {int(ws)}B", rl.TRIAD_INTENSITY, gbs / 12.0))
                    if level == "DRAM":
                        util.append((f"TRIAD {label}", gbs, rl.theoretical_bandwidth(spec, sockets), "GB/s"))
        else:
            raise ValidationError(f"roofline needs DGEMM or TRIAD archives, got kernel {kernel!r}")
    return compute, bandwidth, points, util


def utilization_lines(util):
    lines = []
    for label, measured, theoretical, unit in util:
        lines.append(f"{label}: {measured:.2f} / {theoretical:.6g} {unit} = {rl.utilization(measured, theoretical):.2f}%")
    return lines
