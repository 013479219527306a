"""Command-line entry point: run missions, comparison presets, validation.

Exit codes: 0 success, 1 configuration error, 2 mission runtime error,
3 crash event on a run where the filter was enabled. Ablation runs with the
filter disabled return 0 when they crash, since the crash is the expected
outcome there.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from eclares.config import (
    ConfigError,
    build_preset,
    comparison_presets,
    parse_config,
    preset_names,
    serialize_config,
)
from eclares.mission import (
    MissionConfig,
    run_mission,
    write_audit_csv,
    write_metrics_csv,
    write_replans_json,
)
from eclares import report

__all__ = ["main", "run_experiment"]


def _apply_overrides(cfg: MissionConfig, args) -> MissionConfig:
    cfg = dataclasses.replace(cfg)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "duration", None) is not None:
        cfg.duration = args.duration
    return cfg


def _write_run_outputs(cfg: MissionConfig, log, out_dir: str, label: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_metrics_csv(log, os.path.join(out_dir, "metrics.csv"))
    write_replans_json(log, os.path.join(out_dir, "replans.json"))
    write_audit_csv(log, os.path.join(out_dir, "eware_audit.csv"))
    centers = cfg.domain.cell_centers()
    for t, deficit in log.snapshots:
        with open(os.path.join(out_dir, f"deficit_map_t{t:g}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_index", "x_center", "y_center", "deficit"])
            for c in range(deficit.shape[0]):
                writer.writerow([
                    c, f"{centers[c, 0]:.6f}", f"{centers[c, 1]:.6f}",
                    f"{deficit[c]:.9f}",
                ])
    report.render_deficit_maps(log, cfg.domain, out_dir, label)


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(parse_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        log = run_mission(cfg)
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 2
        print(f"mission error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out_dir or "eclares_out"
    _write_run_outputs(cfg, log, out_dir, cfg.method)
    report.render_qd_comparison({cfg.method: log}, os.path.join(out_dir, "qd.png"))
    report.render_soc_vs_dist({cfg.method: log}, os.path.join(out_dir, "soc_vs_dist.png"))
    print(f"wrote {out_dir} (final q_d = {log.q_d[-1]:.4f}, crashed = {log.crashed})")
    if log.crashed and cfg.eware_enabled:
        return 3
    return 0


def run_experiment(preset_name: str, out_dir: str, seed=None, duration=None) -> dict:
    """Run every variant of a comparison preset and write combined outputs."""
    presets = comparison_presets()
    if preset_name not in presets:
        raise ConfigError(
            f"unknown comparison preset {preset_name!r}; "
            f"available: {', '.join(sorted(presets))}")
    preset = presets[preset_name]
    os.makedirs(out_dir, exist_ok=True)

    logs = {}
    for label, overrides in preset.variants:
        cfg = build_preset(preset.base)
        for attr, value in overrides.items():
            setattr(cfg, attr, value)
        if seed is not None:
            cfg.seed = seed
        if duration is not None:
            cfg.duration = duration
        log = run_mission(cfg)
        logs[label] = (cfg, log)
        _write_run_outputs(cfg, log, os.path.join(out_dir, label), label)

    # combined clarity-deficit comparison, aligned on the shared clock
    labels = list(logs)
    max_len = max(len(logs[lb][1].times) for lb in labels)
    base_log = max((logs[lb][1] for lb in labels), key=lambda lg: len(lg.times))
    with open(os.path.join(out_dir, "comparison.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"q_d_{lb}" for lb in labels])
        for k in range(max_len):
            row = [f"{base_log.times[k]:.6f}"]
            for lb in labels:
                series = logs[lb][1].q_d
                row.append(f"{series[k]:.9f}" if k < len(series) else "")
            writer.writerow(row)

    with open(os.path.join(out_dir, "soc_vs_dist.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t"]
        for lb in labels:
            header += [f"dist_{lb}", f"soc_{lb}"]
        writer.writerow(header)
        for k in range(max_len):
            row = [f"{base_log.times[k]:.6f}"]
            for lb in labels:
                lg = logs[lb][1]
                if k < len(lg.times):
                    row += [f"{lg.dist_to_charger[k]:.9f}", f"{lg.soc[k]:.9f}"]
                else:
                    row += ["", ""]
            writer.writerow(row)

    plain = {lb: lg for lb, (_, lg) in logs.items()}
    report.render_qd_comparison(plain, os.path.join(out_dir, "qd_comparison.png"))
    report.render_soc_vs_dist(plain, os.path.join(out_dir, "soc_vs_dist.png"))
    return plain


def cmd_compare(args) -> int:
    try:
        run_experiment(args.preset, args.out_dir or f"eclares_{args.preset}",
                       seed=args.seed, duration=args.duration)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"mission error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out_dir or 'eclares_' + args.preset}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = parse_config(args.config)
        # dry-build the environment so target attainability is checked per cell
        from eclares.grid import generate_environment

        env = cfg.environment
        generate_environment(
            cfg.domain, np.random.default_rng(cfg.seed),
            background_noise=env.background_noise, patch_noise=env.patch_noise,
            patch_count=env.patch_count, patch_radius=env.patch_radius,
            measurement_noise=env.measurement_noise,
            initial_clarity=env.initial_clarity, target_ratio=env.target_ratio,
            target_absolute=env.target_absolute, value_scale=env.value_scale)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.config}: ok")
    return 0


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(name)
        for name in sorted(comparison_presets()):
            print(f"{name} (comparison)")
        return 0
    if args.action == "show":
        if not args.name:
            print("presets show requires a preset name", file=sys.stderr)
            return 1
        try:
            print(serialize_config(build_preset(args.name)), end="")
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        return 0
    print(f"unknown presets action {args.action!r}", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eclares",
        description="Clarity-driven ergodic coverage with an energy-aware return filter")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one mission from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--duration", type=float)
    p_run.add_argument("--out-dir")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run a comparison preset")
    p_cmp.add_argument("preset")
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--duration", type=float)
    p_cmp.add_argument("--out-dir")
    p_cmp.set_defaults(func=cmd_compare)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_pre = sub.add_parser("presets", help="list or show built-in presets")
    p_pre.add_argument("action", choices=["list", "show"])
    p_pre.add_argument("name", nargs="?")
    p_pre.set_defaults(func=cmd_presets)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
