"""
Command-line front end: ``fock-filter <subcommand>``.

Every subcommand writes JSON or CSV data to ``--output`` (stdout when
omitted) and records a manifest of its inputs, seed and parameters in that
output. Human-readable summaries go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .errors import DipFitError, ReconstructionError, UnboundedRatioError, ZeroHeraldError
from .experiment import (
    CircuitConfig,
    build_and_run,
    generate_counts,
    output_state,
    probability_table,
)
from .filter_model import filter_curves, reflectivity_grid
from .interference import (
    DipFit,
    DipScanConfig,
    fit_dip,
    read_scan_csv,
    simulate_scan,
    write_scan_csv,
)
from .metrics import population_ratio, state_metrics
from .qubits import TARGETS, DensityMatrix, TomographyCounts
from .tomography import (
    FIXTURES,
    bootstrap_metrics,
    linear_estimate,
    load_fixture,
    mle_fit,
    trace_distance,
)
from .types import CircularConvention

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

console = Console(stderr=True)


class RunManifest(BaseModel):
    """Provenance record embedded in every output."""

    schema_version: int = SCHEMA_VERSION
    command: str
    seed: int | None = None
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    parameters: dict[str, Any] = Field(default_factory=dict)


def _configure_logging(args: argparse.Namespace) -> None:
    if args.log_level:
        level = getattr(logging, args.log_level)
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _require_json(args: argparse.Namespace) -> None:
    if args.format == "csv":
        raise ValueError(f"{args.command} writes JSON only; drop --format csv")


def _dump_json(payload: dict[str, Any], manifest: RunManifest, path: str | None) -> None:
    document = {"manifest": manifest.model_dump(mode="json"), **payload}
    _emit(json.dumps(document, indent=2) + "\n", path)


def _dump_csv(
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    manifest: RunManifest,
    path: str | None,
) -> None:
    buffer = io.StringIO()
    buffer.write(f"# manifest: {manifest.model_dump_json()}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _emit(buffer.getvalue(), path)


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _outputs(args: argparse.Namespace, **extra: str | None) -> dict[str, str]:
    outputs = {"output": args.output or "-"}
    outputs.update({k: v for k, v in extra.items() if v})
    return outputs


def _load_config(model: type[BaseModel], path: str | None, overrides: dict[str, Any]) -> Any:
    base = model.model_validate_json(Path(path).read_text()) if path else model()
    update = {k: v for k, v in overrides.items() if v is not None}
    # Re-validate so flag values obey the same field constraints as the file.
    return model.model_validate({**base.model_dump(), **update})


def cmd_filter_curves(args: argparse.Namespace) -> int:
    rows = filter_curves(args.n, reflectivity_grid(args.points))
    manifest = RunManifest(
        command="filter-curves",
        seed=args.seed,
        outputs=_outputs(args),
        parameters={"n": list(args.n), "points": args.points},
    )
    if (args.format or "csv") == "csv":
        _dump_csv(
            ["n", "R", "A", "P", "Q", "visibility"],
            [[_cell(v) for v in row] for row in rows],
            manifest,
            args.output,
        )
    else:
        _dump_json({"rows": [row._asdict() for row in rows]}, manifest, args.output)
    console.print(f"[bold]filter-curves[/bold]: {len(rows)} rows")
    return EXIT_OK


def _fit_report(fit: DipFit, background: float) -> dict[str, Any]:
    report = fit.to_dict()
    report["raw_visibility"] = fit.visibility
    report["raw_visibility_error"] = fit.visibility_error
    if background > 0.0:
        try:
            report["corrected_visibility"] = fit.corrected(background)
        except ValueError as exc:
            report["corrected_visibility"] = None
            report["correction_error"] = str(exc)
    return report


def cmd_dip_scan(args: argparse.Namespace) -> int:
    config = _load_config(
        DipScanConfig,
        args.config,
        {
            "points": args.points,
            "integration_s": args.integration,
            "twofold_overlap": args.twofold_overlap,
            "fourfold_overlap": args.fourfold_overlap,
            "twofold_background_hz": args.background,
        },
    )
    if args.input:
        scans = {"measured": (read_scan_csv(args.input), args.order, args.background or 0.0)}
    else:
        rng = np.random.default_rng(args.seed)
        positions = config.positions()
        scans = {
            "twofold": (
                simulate_scan(
                    config.twofold_model(),
                    positions,
                    config.integration_s,
                    rng,
                    background_rate=config.twofold_background_hz,
                    label="twofold",
                ),
                1,
                config.twofold_background_hz,
            ),
            "fourfold": (
                simulate_scan(
                    config.fourfold_model(),
                    positions,
                    config.integration_s,
                    rng,
                    background_rate=config.fourfold_background_hz,
                    label="fourfold",
                ),
                2,
                config.fourfold_background_hz,
            ),
        }

    scan_files: dict[str, str | None] = {}
    results: dict[str, Any] = {}
    failed = False
    for name, (scan, order, background) in scans.items():
        if args.csv_prefix and not args.input:
            path = f"{args.csv_prefix}{name}.csv"
            write_scan_csv(scan, path, header=f"{name} scan, seed {args.seed}")
            scan_files[f"{name}_csv"] = path
        try:
            results[name] = _fit_report(fit_dip(scan, order=order), background)
        except DipFitError as exc:
            logger.error("%s fit failed: %s", name, exc)
            results[name] = {"error": str(exc)}
            failed = True

    manifest = RunManifest(
        command="dip-scan",
        seed=args.seed,
        inputs={k: v for k, v in {"config": args.config, "scan": args.input}.items() if v},
        outputs=_outputs(args, **scan_files),
        parameters=config.model_dump(),
    )
    _dump_json({"fits": results}, manifest, args.output)

    table = Table(title="Dip fits")
    for column in ("scan", "V raw", "error", "V corrected"):
        table.add_column(column)
    for name, report in results.items():
        if "error" in report:
            table.add_row(name, "failed", report["error"], "")
            continue
        corrected = report.get("corrected_visibility")
        table.add_row(
            name,
            f"{report['raw_visibility']:.4f}",
            f"{report['raw_visibility_error']:.4f}",
            "" if corrected is None else f"{corrected:.4f}",
        )
    console.print(table)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(
        CircuitConfig,
        args.config,
        {
            "theta": args.theta,
            "gamma": args.gamma,
            "R_filter": args.R,
            "fourfold_rate_scale": args.rate_scale,
            "background_per_setting": args.background,
            "convention": args.convention,
        },
    )
    state = output_state(config)
    counts = generate_counts(config, exposure=args.exposure, seed=args.seed, label="simulated")
    manifest = RunManifest(
        command="simulate",
        seed=args.seed,
        inputs={"config": args.config} if args.config else {},
        outputs=_outputs(args, state_output=args.state_output),
        parameters={**config.model_dump(mode="json"), "exposure": args.exposure},
    )

    if (args.format or "json") == "csv":
        scale = config.fourfold_rate_scale * args.exposure
        table = probability_table(state.density, convention=config.convention)
        rows = [
            [label, repr(p), repr(scale * (p + config.background_per_setting)), n]
            for (label, p), n in zip(table, counts.counts)
        ]
        _dump_csv(["setting", "probability", "expected", "count"], rows, manifest, args.output)
    else:
        _dump_json(counts.model_dump(mode="json"), manifest, args.output)

    if args.state_output:
        heralded = build_and_run(config)
        payload: dict[str, Any] = {
            **state.density.to_dict(),
            "herald_probability": state.herald_probability,
            "split_probability": state.split_probability,
        }
        if heralded.is_pure:
            payload["fock_state"] = {
                "modes": list(heralded.state.modes.labels),
                "terms": heralded.state.to_records(),
            }
        _dump_json(payload, manifest, args.state_output)

    console.print(
        f"[bold]simulate[/bold]: herald probability {state.herald_probability:.6g}, "
        f"{counts.total} counts"
    )
    return EXIT_OK


def cmd_tomography(args: argparse.Namespace) -> int:
    _require_json(args)
    if args.fixture:
        data = load_fixture(args.fixture)
        source = {"fixture": args.fixture}
    else:
        data = TomographyCounts.from_file(args.counts)
        source = {"counts": args.counts}

    convention = CircularConvention(args.convention)
    fit = mle_fit(data, convention)
    rho = fit.density
    linear = linear_estimate(data, convention)

    metrics: dict[str, Any] = {}
    for name, target in TARGETS.items():
        metrics[f"fidelity_{name}"] = state_metrics(rho, target).fidelity
    summary = state_metrics(rho, TARGETS["DD"])
    metrics.update(
        tangle=summary.tangle, linear_entropy=summary.linear_entropy, purity=summary.purity
    )
    try:
        metrics["population_ratio"] = population_ratio(data)
    except UnboundedRatioError:
        metrics["population_ratio"] = None

    payload: dict[str, Any] = {
        "label": data.label,
        **rho.to_dict(),
        "metrics": metrics,
        "mle": {
            "loss": fit.loss,
            "iterations": fit.iterations,
            "pairs": fit.normalization,
            "message": fit.message,
        },
        "linear": {
            "physical": linear.physical,
            "min_eigenvalue": linear.min_eigenvalue,
            "trace_distance_to_mle": trace_distance(linear, rho),
        },
    }
    if args.trials:
        payload["bootstrap"] = bootstrap_metrics(
            data, args.trials, args.seed, convention=convention, workers=args.workers
        ).to_dict()

    manifest = RunManifest(
        command="tomography",
        seed=args.seed,
        inputs=source,
        outputs=_outputs(args),
        parameters={"trials": args.trials, "convention": convention.value},
    )
    _dump_json(payload, manifest, args.output)

    table = Table(title=f"Tomography: {data.label or 'counts'}")
    table.add_column("metric")
    table.add_column("value")
    table.add_column("bootstrap std")
    spread = payload.get("bootstrap", {}).get("metrics", {})
    for name, value in metrics.items():
        std = spread.get(name, {}).get("std")
        table.add_row(
            name,
            "n/a" if value is None else f"{value:.4f}",
            "" if std is None else f"{std:.4f}",
        )
    console.print(table)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    _require_json(args)
    rho = DensityMatrix.from_file(args.density)
    targets = {args.target: TARGETS[args.target]} if args.target else TARGETS
    results = {
        name: state_metrics(rho, target).model_dump() for name, target in targets.items()
    }
    manifest = RunManifest(
        command="metrics",
        seed=args.seed,
        inputs={"density": args.density},
        outputs=_outputs(args),
        parameters={"targets": list(targets)},
    )
    _dump_json({"metrics": results}, manifest, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fock-filter",
        description="Simulate and analyse a heralded Fock-state filter.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument(
        "--format",
        choices=("json", "csv"),
        help="output format (tomography and metrics write json only)",
    )
    common.add_argument(
        "--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="logging level"
    )
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")

    sub = parser.add_subparsers(dest="command", required=True)

    curves = sub.add_parser("filter-curves", parents=[common], help="tabulate A, P, Q and V over R")
    curves.add_argument("--n", type=int, nargs="+", default=[1, 2, 3], help="photon numbers")
    curves.add_argument("--points", type=int, default=101, help="reflectivity grid size")
    curves.set_defaults(handler=cmd_filter_curves)

    dip = sub.add_parser("dip-scan", parents=[common], help="simulate and fit delay scans")
    dip.add_argument("--config", help="DipScanConfig JSON file")
    dip.add_argument("--input", help="fit a measured scan CSV instead of simulating")
    dip.add_argument("--order", type=int, choices=(1, 2), default=1, help="photon number of --input")
    dip.add_argument("--points", type=int, help="scan positions")
    dip.add_argument("--integration", type=float, help="integration time per point, s")
    dip.add_argument("--twofold-overlap", type=float, help="mode overlap of the two-fold scan")
    dip.add_argument("--fourfold-overlap", type=float, help="mode overlap of the four-fold scan")
    dip.add_argument("--background", type=float, help="two-fold background rate, Hz")
    dip.add_argument("--csv-prefix", help="write simulated scans to PREFIX{twofold,fourfold}.csv")
    dip.set_defaults(handler=cmd_dip_scan)

    sim = sub.add_parser("simulate", parents=[common], help="simulate the circuit and its counts")
    sim.add_argument("--config", help="CircuitConfig JSON file")
    sim.add_argument("--theta", type=float, help="input polarization angle, rad (default pi/4)")
    sim.add_argument("--gamma", type=float, help="ancilla mode overlap")
    sim.add_argument("--R", type=float, help="filter reflectivity")
    sim.add_argument("--rate-scale", type=float, help="counts per unit exposure at probability 1")
    sim.add_argument("--background", type=float, help="flat background per setting")
    sim.add_argument("--exposure", type=float, default=1.0, help="exposure time")
    sim.add_argument("--convention", choices=[c.value for c in CircularConvention])
    sim.add_argument("--state-output", help="write the heralded state JSON here")
    sim.set_defaults(handler=cmd_simulate)

    tomo = sub.add_parser("tomography", parents=[common], help="reconstruct a density matrix")
    source = tomo.add_mutually_exclusive_group(required=True)
    source.add_argument("--counts", help="counts JSON file")
    source.add_argument("--fixture", choices=FIXTURES, help="packaged count set")
    tomo.add_argument("--trials", type=int, default=1000, help="bootstrap trials (0 to skip)")
    tomo.add_argument("--workers", type=int, help="bootstrap worker threads")
    tomo.add_argument(
        "--convention",
        choices=[c.value for c in CircularConvention],
        default=CircularConvention.MINUS.value,
    )
    tomo.set_defaults(handler=cmd_tomography)

    met = sub.add_parser("metrics", parents=[common], help="metrics of a stored density matrix")
    met.add_argument("--density", required=True, help="JSON file with rho_re and rho_im")
    met.add_argument("--target", choices=list(TARGETS), help="target state (default all)")
    met.set_defaults(handler=cmd_metrics)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        return args.handler(args)
    except ValidationError as exc:
        console.print(f"[red]invalid input[/red]: {exc}")
        return EXIT_INVALID
    except (DipFitError, ReconstructionError, ZeroHeraldError, UnboundedRatioError) as exc:
        console.print(f"[red]numerical failure[/red]: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        console.print(f"[red]error[/red]: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
