"""Command-line front end: scenario orchestration and CSV/JSON emission.

Subcommands
-----------
sweep-distance   goodput vs distance-to-BS bins (analytic and empirical)
sweep-d2d        total cell goodput vs number of D2D links per cell
validate         run the property suites, write a report, exit nonzero on failure
moments          dump the per-cell moment set for a target position

Every run writes a JSON manifest next to its outputs with the full
configuration snapshot, seed, and file list, sufficient to reproduce the
run bit-exactly.  Exit codes: 0 success, 2 configuration error,
3 numerical error, 4 validation failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, MimoD2dError, NumericalError
from .geometry import build_layout, sample_uniform_hexagon
from .goodput import empirical_goodput, exp_quantile, q_inverse
from .montecarlo import ScenarioConfig, compare, moment_provider, run_batch
from .validation import run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4
EXIT_IO = 5

DISTANCE_CSV_HEADER = "entity_type,bin_center_m,analytic_goodput_bits,empirical_goodput_bits,n_samples,rel_gap"
D2D_CSV_HEADER = "d2d_per_cell,overall_goodput_bits,downlink_sum_bits,d2d_sum_bits,source"

_LOCATION_TAG = 0x4C4F43


def _fmt(x: float) -> str:
    """Shortest round-trip decimal representation, '.' as separator."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def write_manifest(
    out_dir: Path,
    config: ScenarioConfig,
    outputs: list[str],
    command: str,
    diagnostics: list[str] | None = None,
) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "master_seed": config.master_seed,
        "config": config.to_dict(),
        "outputs": outputs,
        "diagnostics": diagnostics or [],
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# sweep-distance

def sweep_distance(config: ScenarioConfig, out_dir: Path) -> Path:
    """Run the configured batch and write the per-bin goodput CSV."""
    out_dir.mkdir(parents=True, exist_ok=True)
    batch = run_batch(config)
    provider = moment_provider(config)
    table = compare(batch, provider)
    csv_path = out_dir / "goodput_vs_distance.csv"
    try:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(DISTANCE_CSV_HEADER + "\n")
            for row in table.rows:
                fh.write(
                    ",".join(
                        [
                            row.entity,
                            _fmt(row.bin_center_m),
                            _fmt(row.analytic_goodput_bits),
                            _fmt(row.empirical_goodput_bits),
                            str(row.n_samples),
                            _fmt(row.rel_gap),
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise IOError(f"cannot write {csv_path}: {exc}") from exc
    write_manifest(out_dir, config, [csv_path.name], "sweep-distance", diagnostics=table.diagnostics)
    return csv_path


# ---------------------------------------------------------------------------
# sweep-d2d

def _location_samples(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Target-cell location samples for location-averaged goodput: user
    positions and D2D receiver positions under the drop law."""
    layout = build_layout(config.cells, config.radius_m)
    rng = np.random.default_rng(
        np.random.SeedSequence([config.master_seed, _LOCATION_TAG])
    )
    n = config.n_location_samples
    users = sample_uniform_hexagon(np.zeros(2), config.radius_m, rng, size=n)
    txs = sample_uniform_hexagon(np.zeros(2), config.radius_m, rng, size=n)
    for pts in (users, txs):
        while True:
            bad = np.hypot(pts[:, 0], pts[:, 1]) < config.min_bs_distance_m
            if not bad.any():
                break
            pts[bad] = sample_uniform_hexagon(np.zeros(2), config.radius_m, rng, size=int(bad.sum()))
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    rx = txs + config.d2d_link_distance_m * np.column_stack([np.cos(angles), np.sin(angles)])
    return users, rx


def analytic_d2d_sweep(config: ScenarioConfig, d_values) -> list[dict]:
    """Location-averaged analytic goodput sums for each D2D count.

    The positional moment pieces are computed once and reused across the
    swept counts (the aggregates are affine in D).
    """
    provider = moment_provider(config)
    users, rx = _location_samples(config)
    k = config.users_per_cell
    eps = config.epsilon
    symbols = config.symbols_per_frame
    rho_sig = config.d2d_signal_gain
    w = config.pd_over_pb

    bs_sums = provider.bs_sums(users)
    u_mean_c, u_sq_c = provider.d2d_positional_moments(users)
    d2d_bs = provider.bs_to_d2d_sums(rx)
    g_mean_c, _ = provider.d2d_positional_moments(rx)

    q_eps = q_inverse(eps)
    f_eps = exp_quantile(eps, rho_sig)
    rows = []
    for d in d_values:
        if d < 1:
            raise ConfigurationError(f"swept D2D counts must be >= 1, got {d}")
        mean = (k - 1) * bs_sums["beam_mean"] + bs_sums["pilot_mean"] if k >= 1 else 0.0
        var = (k - 1) * bs_sums["beam_var"] + bs_sums["pilot_var"] if k >= 1 else 0.0
        mean = mean + d * w * u_mean_c.sum(axis=1)
        var = var + d * (2.0 * w**2 * u_sq_c - (w * u_mean_c) ** 2).sum(axis=1)
        t_user = 1.0 / (q_eps * np.sqrt(var) + mean)
        g_user = (1.0 - eps) * symbols * np.log2(1.0 + t_user)

        counts = np.full(provider.layout.num_cells, float(d))
        counts[0] = d - 1
        mu_d2d = k * d2d_bs + (g_mean_c * counts).sum(axis=1)
        t_d2d = f_eps / mu_d2d
        g_d2d = (1.0 - eps) * symbols * np.log2(1.0 + t_d2d)

        downlink_sum = k * float(np.mean(g_user))
        d2d_sum = d * float(np.mean(g_d2d))
        rows.append(
            {
                "d2d_per_cell": int(d),
                "overall_goodput_bits": downlink_sum + d2d_sum,
                "downlink_sum_bits": downlink_sum,
                "d2d_sum_bits": d2d_sum,
                "source": "analytic",
            }
        )
    return rows


def empirical_d2d_sweep(config: ScenarioConfig, d_values) -> list[dict]:
    """Batch-based goodput sums per swept D2D count (binned location
    average of pooled empirical thresholds)."""
    rows = []
    for d in d_values:
        cfg_d = config.replace(d2d_per_cell=int(d))
        batch = run_batch(cfg_d)
        provider = moment_provider(cfg_d)
        table = compare(batch, provider)
        sums = {"downlink": 0.0, "d2d": 0.0}
        weights = {"downlink": 0, "d2d": 0}
        for row in table.rows:
            sums[row.entity] += row.empirical_goodput_bits * row.n_samples
            weights[row.entity] += row.n_samples
        if not weights["downlink"] or (d and not weights["d2d"]):
            continue
        downlink_sum = cfg_d.users_per_cell * sums["downlink"] / weights["downlink"]
        d2d_sum = d * sums["d2d"] / weights["d2d"]
        rows.append(
            {
                "d2d_per_cell": int(d),
                "overall_goodput_bits": downlink_sum + d2d_sum,
                "downlink_sum_bits": downlink_sum,
                "d2d_sum_bits": d2d_sum,
                "source": "empirical",
            }
        )
    return rows


def sweep_d2d(config: ScenarioConfig, d_values, out_dir: Path) -> Path:
    """Write the goodput-vs-D2D-count CSV (analytic rows always; empirical
    rows when the configured batch is nonempty)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = analytic_d2d_sweep(config, d_values)
    if config.n_drops > 0:
        rows += empirical_d2d_sweep(config, d_values)
    csv_path = out_dir / "goodput_vs_d2d_count.csv"
    try:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(D2D_CSV_HEADER + "\n")
            for row in rows:
                fh.write(
                    ",".join(
                        [
                            str(row["d2d_per_cell"]),
                            _fmt(row["overall_goodput_bits"]),
                            _fmt(row["downlink_sum_bits"]),
                            _fmt(row["d2d_sum_bits"]),
                            row["source"],
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise IOError(f"cannot write {csv_path}: {exc}") from exc
    write_manifest(out_dir, config, [csv_path.name], "sweep-d2d")
    return csv_path


# ---------------------------------------------------------------------------
# validate / moments

def run_validate(config: ScenarioConfig, out_dir: Path, **sizes) -> tuple[Path, bool]:
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_validation(config, **sizes)
    path = out_dir / "validation_report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    for result in report.results:
        print(result.line())
    write_manifest(out_dir, config, [path.name], "validate")
    return path, report.all_passed


def dump_moments(config: ScenarioConfig, target, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    provider = moment_provider(config)
    ms = provider.moment_set(np.asarray(target, dtype=float), config.users_per_cell, config.d2d_per_cell)
    payload = {
        "target_position": list(map(float, ms.target_position)),
        "bs_beam_mean": ms.bs_beam_mean.tolist(),
        "bs_beam_var": ms.bs_beam_var.tolist(),
        "bs_pilot_mean": ms.bs_pilot_mean.tolist(),
        "bs_pilot_var": ms.bs_pilot_var.tolist(),
        "d2d_term_mean": ms.d2d_term_mean.tolist(),
        "d2d_term_var": ms.d2d_term_var.tolist(),
        "bs_to_d2d_mean": ms.bs_to_d2d_mean.tolist(),
        "inv_sir_mean": ms.inv_sir_mean,
        "inv_sir_std": ms.inv_sir_std,
        "d2d_denominator_mean": ms.d2d_denominator_mean,
    }
    path = out_dir / "moments.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    write_manifest(out_dir, config, [path.name], "moments")
    return path


# ---------------------------------------------------------------------------
# argument handling

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-d2d",
        description="Downlink goodput simulation and analysis for massive-MIMO cells with D2D links",
    )
    parser.add_argument("--config", type=str, default=None, help="JSON scenario configuration")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-distance", help="goodput vs distance bins")
    p_d2d = sub.add_parser("sweep-d2d", help="total goodput vs D2D count")
    p_d2d.add_argument(
        "--d-values",
        type=str,
        default="2,4,6,8,10,12,14,16,18,20",
        help="comma-separated D2D counts per cell",
    )
    sub.add_parser("validate", help="run the property suites")
    p_mom = sub.add_parser("moments", help="dump the moment set for a target position")
    p_mom.add_argument("--target", type=str, default="150,0", help="target position 'x,y' in meters")
    return parser


def _load_config(args) -> ScenarioConfig:
    if args.config is None:
        config = ScenarioConfig()
    else:
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        config = ScenarioConfig.from_json_file(path)
    if args.seed is not None:
        config = config.replace(master_seed=args.seed)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        out_dir = Path(args.out)
        if args.command == "sweep-distance":
            path = sweep_distance(config, out_dir)
            print(f"wrote {path}")
        elif args.command == "sweep-d2d":
            d_values = [int(v) for v in args.d_values.split(",") if v.strip()]
            path = sweep_d2d(config, d_values, out_dir)
            print(f"wrote {path}")
        elif args.command == "validate":
            path, ok = run_validate(config, out_dir)
            print(f"wrote {path}")
            if not ok:
                return EXIT_VALIDATION
        elif args.command == "moments":
            target = [float(v) for v in args.target.split(",")]
            if len(target) != 2:
                raise ConfigurationError(f"--target must be 'x,y', got {args.target!r}")
            path = dump_moments(config, target, out_dir)
            print(f"wrote {path}")
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MimoD2dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
