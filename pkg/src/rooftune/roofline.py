"""Theoretical peaks, roofline ceilings and plot-ready output."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

TRIAD_INTENSITY = 1.0 / 12.0


@dataclass(frozen=True)
class HardwareSpec:
    """Vendor parameters of one node. Frequencies in GHz (CPU) and MHz (DRAM transfers)."""

    name: str
    cpu_freq: float
    cores: int
    avx_vector_bits: int
    avx_units: int
    sockets: int
    dram_freq: float
    channels: int
    l3_size: float
    avx_ops_per_cycle: int = 2
    bytes_per_transfer: int = 8

    def __post_init__(self):
        for f in fields(self):
            if f.name == "name":
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"hardware field {f.name} must be positive, got {v!r}")
        if self.avx_vector_bits % 64:
            raise ValueError("avx_vector_bits must be a multiple of 64")

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown hardware fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def operational_intensity(work: float, traffic: float) -> float:
    """FLOP per byte."""
    if traffic == 0:
        raise ZeroDivisionError("traffic must be non-zero")
    return work / traffic


def roofline_value(intensity, bandwidth: float, peak: float):
    """Attainable GFLOP/s, ``min(bandwidth * intensity, peak)``. Works elementwise on arrays."""
    if np.ndim(intensity):
        return np.minimum(bandwidth * np.asarray(intensity, dtype=float), peak)
    return min(bandwidth * intensity, peak)


def avx_ops_per_cycle_dp(vector_bits: int, ops_per_cycle: int = 2) -> float:
    if vector_bits not in (128, 256, 512):
        raise ValueError(f"unsupported vector width {vector_bits!r}")
    return (vector_bits / 8) * ops_per_cycle / 8


def _check_sockets(spec, socket_count):
    if not 1 <= socket_count <= spec.sockets:
        raise ValueError(f"socket_count must be in [1, {spec.sockets}], got {socket_count!r}")


def theoretical_flops(spec: HardwareSpec, socket_count: int) -> float:
    """Peak double-precision GFLOP/s."""
    _check_sockets(spec, socket_count)
    return (spec.cpu_freq * spec.cores * avx_ops_per_cycle_dp(spec.avx_vector_bits, spec.avx_ops_per_cycle)
            * spec.avx_units * socket_count)


def theoretical_bandwidth(spec: HardwareSpec, socket_count: int) -> float:
    """Peak DRAM GB/s (decimal units)."""
    _check_sockets(spec, socket_count)
    return spec.dram_freq * spec.channels * spec.bytes_per_transfer * socket_count / 1000.0


def utilization(measured: float, theoretical: float) -> float:
    """Measured / theoretical, in percent."""
    return 100.0 * measured / theoretical


def classify_working_set(working_set: float, l3_total: float) -> Optional[str]:
    """``"L3"`` or ``"DRAM"`` for TRIAD sizes clearly inside either level, None in between."""
    if working_set <= 0.5 * l3_total:
        return "L3"
    if working_set >= 4.0 * l3_total:
        return "DRAM"
    return None


@dataclass
class RooflineModel:
    compute_ceilings: list
    bandwidth_ceilings: list
    ridge_points: list = field(default_factory=list)

    @property
    def labels(self):
        return [lbl for lbl, _ in self.bandwidth_ceilings] + [lbl for lbl, _ in self.compute_ceilings]


def build_model(compute_peaks, bandwidth_peaks) -> RooflineModel:
    """Model from (label, GFLOP/s) and (label, GB/s) ceilings, with every pairwise ridge point."""
    compute = sorted(((str(l), float(v)) for l, v in compute_peaks), key=lambda c: -c[1])
    bandwidth = sorted(((str(l), float(v)) for l, v in bandwidth_peaks), key=lambda c: -c[1])
    if not compute or not bandwidth:
        raise ValueError("a roofline needs at least one compute and one bandwidth ceiling")
    for lbl, v in compute + bandwidth:
        if not v > 0:
            raise ValueError(f"ceiling {lbl!r} must be positive, got {v!r}")
    ridges = [((cl, bl), cv / bv) for cl, cv in compute for bl, bv in bandwidth]
    return RooflineModel(compute, bandwidth, ridges)


def intensity_grid(samples_per_decade: int, i_min: float, i_max: float) -> np.ndarray:
    if not (0 < i_min < i_max) or samples_per_decade < 1:
        raise ValueError(f"invalid intensity range [{i_min}, {i_max}]")
    decades = math.log10(i_max) - math.log10(i_min)
    n = max(2, int(math.ceil(decades * samples_per_decade)) + 1)
    grid = np.logspace(math.log10(i_min), math.log10(i_max), n)
    grid[0], grid[-1] = i_min, i_max
    return grid


def ceiling_columns(model: RooflineModel, grid):
    """Column label -> attainable GFLOP/s over ``grid``; one column per (bandwidth, compute) pair."""
    cols = {}
    for bl, bv in model.bandwidth_ceilings:
        for cl, cv in model.compute_ceilings:
            cols[f"{bl}|{cl}"] = roofline_value(grid, bv, cv)
    return cols


def emit_roofline_data(model: RooflineModel, samples_per_decade: int = 20,
                       i_min: float = 1.0 / 64, i_max: float = 1024.0) -> str:
    """CSV text: ``intensity_flop_per_byte,<ceiling>...``, 17 significant digits."""
    grid = intensity_grid(samples_per_decade, i_min, i_max)
    cols = ceiling_columns(model, grid)
    out = io.StringIO()
    out.write(",".join(["intensity_flop_per_byte", *cols]) + "\n")
    for r, x in enumerate(grid):
        out.write(",".join([f"{x:.17g}", *(f"{cols[c][r]:.17g}" for c in cols)]) + "\n")
    return out.getvalue()


def emit_points_csv(points) -> str:
    out = io.StringIO()
    out.write("label,intensity,gflops\n")
    for label, intensity, gflops in points:
        out.write(f"{label},{intensity:.17g},{gflops:.17g}\n")
    return out.getvalue()


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def render_svg(model: RooflineModel, points=(), i_min: float = 1.0 / 64, i_max: float = 1024.0,
               width: int = 720, height: int = 480, title: str = "Roofline") -> str:
    """Self-contained log-log SVG with every ceiling, ridge markers and measured points."""
    left, right, top, bottom = 70, 200, 40, 60
    pw, ph = width - left - right, height - top - bottom
    peaks = [v for _, v in model.compute_ceilings] + [g for _, _, g in points if g > 0]
    y_max = 10 ** math.ceil(math.log10(max(peaks) * 1.5))
    y_min = 10 ** math.floor(math.log10(min(bv * i_min for _, bv in model.bandwidth_ceilings)))
    lx0, lx1, ly0, ly1 = math.log10(i_min), math.log10(i_max), math.log10(y_min), math.log10(y_max)

    def sx(x):
        return left + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def sy(y):
        return top + ph - (math.log10(max(y, y_min)) - ly0) / (ly1 - ly0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for e in range(math.floor(lx0), math.ceil(lx1) + 1):
        x = 10.0 ** e
        if i_min <= x <= i_max:
            parts.append(f'<line x1="{sx(x):.1f}" y1="{top}" x2="{sx(x):.1f}" y2="{top + ph}" stroke="#ddd"/>')
            parts.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
    for e in range(int(ly0), int(ly1) + 1):
        y = 10.0 ** e
        parts.append(f'<line x1="{left}" y1="{sy(y):.1f}" x2="{left + pw}" y2="{sy(y):.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{sy(y) + 4:.1f}" text-anchor="end">{y:g}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 18}" text-anchor="middle">'
                 'Operational intensity (FLOP/byte)</text>')
    parts.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {top + ph / 2:.1f})">Performance (GFLOP/s)</text>')

    legend_y = top + 10
    for idx, (bl, bv) in enumerate(model.bandwidth_ceilings):
        color = _PALETTE[idx % len(_PALETTE)]
        for cl, cv in model.compute_ceilings:
            ridge = cv / bv
            xs = [i_min, min(max(ridge, i_min), i_max), i_max]
            pts = " ".join(f"{sx(x):.2f},{sy(roofline_value(x, bv, cv)):.2f}" for x in xs)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            if i_min <= ridge <= i_max:
                parts.append(f'<circle cx="{sx(ridge):.2f}" cy="{sy(cv):.2f}" r="3" fill="{color}">'
                             f'<title>ridge {bl} / {cl}: {ridge:.4g} FLOP/byte</title></circle>')
        parts.append(f'<line x1="{left + pw + 12}" y1="{legend_y}" x2="{left + pw + 32}" y2="{legend_y}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 36}" y="{legend_y + 4}">{bl} ({bv:.4g} GB/s)</text>')
        legend_y += 16
    for cl, cv in model.compute_ceilings:
        parts.append(f'<text x="{left + pw - 4}" y="{sy(cv) - 4:.1f}" text-anchor="end" fill="#444">'
                     f'{cl} ({cv:.5g} GFLOP/s)</text>')
    for label, intensity, gflops in points:
        if i_min <= intensity <= i_max and gflops > 0:
            parts.append(f'<rect x="{sx(intensity) - 4:.2f}" y="{sy(gflops) - 4:.2f}" width="8" height="8" '
                         f'fill="black"><title>{label}: {gflops:.5g} GFLOP/s</title></rect>')
            parts.append(f'<text x="{left + pw + 12}" y="{legend_y + 4}">&#9632; {label}</text>')
            legend_y += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
