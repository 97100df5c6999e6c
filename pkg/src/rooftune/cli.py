"""Command line: ``rooftune {tune,worker,roofline,report}``.

Exit codes: 0 ok, 2 usage/validation, 3 environment, 4 kernel failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from rooftune import __version__
from rooftune import report as rp
from rooftune import roofline as rl
from rooftune.archive import (
    ManifestError,
    build_archive,
    detect_hardware_template,
    load_archive,
    load_hardware,
    load_manifest,
    manifest_budget,
    manifest_mode,
    now_iso,
    save_archive,
)
from rooftune.budget import Budget, EvalOutcome, StopReason
from rooftune.kernels.affinity import AffinityPolicy
from rooftune.search import (
    KernelConfig,
    SubprocessRunner,
    build_space,
    exhaustive_search,
    make_runner,
)
from rooftune.stats import OnlineStats
from rooftune.wire import encode_outcome, parse_param

EXIT_OK, EXIT_USAGE, EXIT_ENV, EXIT_KERNEL = 0, 2, 3, 4

log = logging.getLogger("rooftune")

MODES = ["default", "single", "hand-time", "hand-acc", "c", "ci", "co", "cio", "cr", "cir", "cor", "cior"]


def _budget_flags(p):
    # no argparse defaults: unset flags must not override the manifest
    p.add_argument("-t", "--max-time", type=float, help="per-invocation time budget in seconds (default 10)")
    p.add_argument("--max-count", "--iterations", dest="max_count", type=int,
                   help="iteration cap per invocation (default 200)")
    p.add_argument("--min-count", type=int, help="observations required before pruning (default 2)")
    p.add_argument("--ci-level", type=float, help="confidence level (default 0.99)")
    p.add_argument("--ci-tol", type=float, help="relative CI half-width for convergence (default 0.01)")
    p.add_argument("--no-ci-stop", action="store_true", default=None, help="disable the confidence stop")
    p.add_argument("--no-prune", action="store_true", default=None, help="disable pruning against the incumbent")


def _kernel_flags(p):
    p.add_argument("--kernel", choices=["dgemm", "triad", "synthetic"])
    p.add_argument("--backend", choices=["blas", "portable"], help="DGEMM backend")
    p.add_argument("--affinity", choices=["close", "spread"])
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="rooftune", description="Autotune DGEMM and TRIAD and build Roofline models.")
    parser.add_argument("--version", action="version", version=f"rooftune {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    tune = sub.add_parser("tune", help="autotune a kernel over a search space")
    tune.add_argument("--manifest", help="YAML run manifest; flags override it")
    _kernel_flags(tune)
    tune.add_argument("--space", help="initial|reduced (dgemm), triad, demo5|demo96 (synthetic)")
    tune.add_argument("--mode", choices=MODES)
    tune.add_argument("--reverse", action="store_true", default=None)
    tune.add_argument("--invocations", type=int)
    _budget_flags(tune)
    tune.add_argument("--isolation", choices=["in_process", "subprocess"])
    tune.add_argument("--score", choices=["best", "mean"])
    tune.add_argument("--sockets", type=int, help="socket setting recorded for reports")
    tune.add_argument("--hardware", help="hardware spec file or built-in name")
    tune.add_argument("--out", help="output directory or .json archive path")
    tune.add_argument("--dry-run", action="store_true", help="list configurations and exit")

    worker = sub.add_parser("worker", help="run one invocation and print one result line")
    _kernel_flags(worker)
    worker.add_argument("--param", action="append", default=[], help="config field name=value")
    worker.add_argument("--invocation", type=int, default=0)
    worker.add_argument("--best", type=float)
    _budget_flags(worker)

    roof = sub.add_parser("roofline", help="build a roofline model from specs and archives")
    roof.add_argument("--hardware", help="hardware spec file or built-in name")
    roof.add_argument("--archive", action="append", default=[], help="DGEMM/TRIAD results archive")
    roof.add_argument("--theoretical-only", action="store_true")
    roof.add_argument("--samples-per-decade", type=int, default=20)
    roof.add_argument("--i-min", type=float, default=1.0 / 64)
    roof.add_argument("--i-max", type=float, default=1024.0)
    roof.add_argument("--out", help="directory for roofline.csv, points.csv, roofline.svg, utilization.txt")
    roof.add_argument("--detect-template", action="store_true",
                      help="print a hardware spec pre-filled from the OS topology and exit")

    rep = sub.add_parser("report", help="compare optimisation modes across archives")
    rep.add_argument("archives", nargs="+")
    rep.add_argument("--baseline", help="archive used as the 1x reference")
    rep.add_argument("--out", help="directory for report.txt and report.csv")
    return parser


def _tune_overrides(args):
    o = {"tuner": {}, "kernel_options": {}}
    for key in ("kernel", "space", "mode", "reverse", "seed", "out", "isolation", "score", "sockets", "hardware"):
        v = getattr(args, key)
        if v is not None:
            o[key] = v
    t = {"invocations": args.invocations, "iterations": args.max_count, "timeout": args.max_time,
         "ci_level": args.ci_level, "ci_tol": args.ci_tol, "min_count": args.min_count}
    o["tuner"] = {k: v for k, v in t.items() if v is not None}
    if args.no_ci_stop:
        o["tuner"]["ci_stop"] = False
    if args.no_prune:
        o["tuner"]["prune"] = False
    ko = {"backend": args.backend, "affinity": args.affinity, "threads": args.threads}
    o["kernel_options"] = {k: v for k, v in ko.items() if v is not None}
    return o


def _archive_path(manifest, mode_label):
    out = Path(str(manifest["out"]))
    if out.suffix == ".json":
        return out
    slug = mode_label.lower().replace("+", "").replace(" ", "-")
    return out / f"{manifest['kernel']}-{manifest['space']}-{slug}-seed{manifest['seed']}.json"


def cmd_tune(args) -> int:
    try:
        manifest = load_manifest(args.manifest, _tune_overrides(args))
        budget = manifest_budget(manifest)
        mode = manifest_mode(manifest)
        space = build_space(manifest["kernel"], manifest["space"], int(manifest["seed"]))
        if manifest["hardware"] is not None:
            manifest["hardware"] = load_hardware(manifest["hardware"]).name
        ko = manifest["kernel_options"]
        affinity = AffinityPolicy(str(ko["affinity"]), int(ko["threads"]))
    except (ManifestError, ValueError) as exc:
        print(f"rooftune: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    configs = (space.reversed() if mode.reverse else space).configs()
    if args.dry_run:
        print(f"{len(configs)} configurations ({manifest['kernel']}/{manifest['space']}, mode {mode.label})")
        for c in configs:
            print(c.label)
        return EXIT_OK

    seed = int(manifest["seed"])
    try:
        if manifest["isolation"] == "subprocess":
            extra = ["--backend", str(ko["backend"]), "--affinity", affinity.kind, "--threads", str(affinity.thread_count)]
            runner = SubprocessRunner(manifest["kernel"], extra, seed=seed)
        else:
            runner = make_runner(manifest["kernel"], seed, str(ko["backend"]), affinity)
    except (ImportError, OSError) as exc:
        print(f"rooftune: kernel unavailable: {exc}", file=sys.stderr)
        return EXIT_ENV

    def progress(cr):
        log.info("%-24s score=%.6g obs=%d%s", cr.config.label, cr.score, cr.observations,
                 " (failed)" if cr.failed else "")

    started = now_iso()
    result = exhaustive_search(space, mode, budget, runner, invocations=int(manifest["tuner"]["invocations"]),
                               score=str(manifest["score"]), progress=progress)
    archive = build_archive(manifest, result, started, now_iso())
    path = save_archive(archive, _archive_path(manifest, mode.label))

    if result.best_config is None:
        print("no configuration completed successfully", file=sys.stderr)
        print(f"archive: {path}")
        return EXIT_KERNEL
    unit = {"triad": "GB/s", "dgemm": "GFLOP/s"}.get(manifest["kernel"], "units")
    print(f"mode:           {result.mode}")
    print(f"best config:    {result.best_config.label}")
    print(f"best value:     {result.best_value:.6g} {unit}")
    print(f"observations:   {result.total_observations}")
    print(f"kernel time:    {result.total_observation_time:.3f} s")
    print(f"wall time:      {result.total_wall_time:.3f} s")
    print(f"archive:        {path}")
    return EXIT_OK


def cmd_worker(args) -> int:
    try:
        params = dict(parse_param(p) for p in args.param)
        if args.kernel is None:
            raise ValueError("--kernel is required")
        budget = Budget(
            max_time=args.max_time if args.max_time is not None else 10.0,
            max_count=args.max_count if args.max_count is not None else 200,
            ci_level=args.ci_level if args.ci_level is not None else 0.99,
            ci_rel_tol=args.ci_tol if args.ci_tol is not None else 0.01,
            min_count=args.min_count if args.min_count is not None else 2,
            enable_ci_stop=not args.no_ci_stop,
            enable_prune_stop=not args.no_prune,
        )
        config = KernelConfig.make(args.kernel, **params)
        affinity = AffinityPolicy(args.affinity or "close", args.threads or 1)
        runner = make_runner(args.kernel, args.seed or 0, args.backend or "blas", affinity)
        if args.kernel == "synthetic":
            config.synthetic()
        elif args.kernel == "dgemm":
            config.dgemm()
        else:
            config.triad()
    except (ValueError, KeyError) as exc:
        print(f"rooftune worker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        outcome = runner.run(config, budget, args.best, args.invocation)
    except Exception as exc:  # noqa: BLE001 - reported on the wire
        failed = EvalOutcome(OnlineStats(), StopReason.EXTERNALLY_ABORTED, 0.0, error=f"{type(exc).__name__}: {exc}")
        print(encode_outcome(args.kernel, params, failed), flush=True)
        return EXIT_KERNEL
    print(encode_outcome(args.kernel, params, outcome), flush=True)
    return EXIT_OK


def cmd_roofline(args) -> int:
    if args.detect_template:
        print(yaml.safe_dump(detect_hardware_template(), sort_keys=False), end="")
        return EXIT_OK
    if args.hardware is None:
        print("rooftune roofline: error: --hardware is required", file=sys.stderr)
        return EXIT_USAGE
    if not args.archive and not args.theoretical_only:
        print("rooftune roofline: error: give --archive files or --theoretical-only", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = load_hardware(args.hardware)
        archives = [] if args.theoretical_only else [load_archive(p) for p in args.archive]
        compute, bandwidth = rp.theoretical_ceilings(spec)
        m_compute, m_bandwidth, points, util = rp.measured_ceilings(spec, archives)
        model = rl.build_model(compute + m_compute, bandwidth + m_bandwidth)
        csv_text = rl.emit_roofline_data(model, args.samples_per_decade, args.i_min, args.i_max)
    except (ManifestError, rp.ValidationError, ValueError) as exc:
        print(f"rooftune roofline: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    lines = [f"hardware: {spec.name}"]
    lines += [f"compute   {lbl}: {v:.6g} GFLOP/s" for lbl, v in model.compute_ceilings]
    lines += [f"bandwidth {lbl}: {v:.6g} GB/s" for lbl, v in model.bandwidth_ceilings]
    lines += [f"ridge     {c} / {b}: {i:.6g} FLOP/byte" for (c, b), i in model.ridge_points]
    lines += ["utilization " + u for u in rp.utilization_lines(util)]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "roofline.csv").write_text(csv_text)
        (out / "points.csv").write_text(rl.emit_points_csv(points))
        (out / "roofline.svg").write_text(rl.render_svg(model, points, args.i_min, args.i_max,
                                                        title=f"Roofline: {spec.name}"))
        (out / "utilization.txt").write_text(text)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        archives = [load_archive(p) for p in args.archives]
        baseline = load_archive(args.baseline) if args.baseline else None
        rows = rp.compare_modes(archives, baseline, warn=lambda m: print(f"warning: {m}", file=sys.stderr))
    except (ManifestError, rp.ValidationError) as exc:
        print(f"rooftune report: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text, csv_text = rp.format_comparison(rows)
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        (out / "report.csv").write_text(csv_text)
    return EXIT_OK


COMMANDS = {"tune": cmd_tune, "worker": cmd_worker, "roofline": cmd_roofline, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
