"""Command line entry point: ``dpsim {ingest,run,sweep,scenario,plotdata}``.

Exit codes: 0 success, 1 usage or config error, 2 data error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .dataset import SynthKind, SynthSpec, clean, load_readings, series_digest, slice_series, synth, write_series_csv
from .dps import run_dps, trace_metrics, write_trace_csv
from .harness import (
    ConfigError,
    DataError,
    PlotKind,
    Scenario,
    SweepConfig,
    emit_plot_data,
    format_csv,
    load_config,
    load_series,
    read_csv,
    run_sweep,
    scenario_paper,
)
from .harness.scenarios import PINNED_SLICE
from .predictors import InvalidSpecError, PredictorSpec

EXIT_USAGE = 1
EXIT_DATA = 2

_PLOT_KINDS = {"reduction": PlotKind.REDUCTION, "mse": PlotKind.MSE,
               PlotKind.REDUCTION.value: PlotKind.REDUCTION, PlotKind.MSE.value: PlotKind.MSE}


def _with_overrides(cfg: SweepConfig, readings, locations, seed) -> SweepConfig:
    ds_update = {}
    if readings is not None:
        ds_update = {"readings": str(readings), "synthetic": None}
    if locations is not None:
        ds_update["locations"] = str(locations)
    if ds_update:
        cfg = cfg.model_copy(update={"dataset": cfg.dataset.model_copy(update=ds_update)})
    if seed is not None and cfg.topology.kmeans is not None:
        km = cfg.topology.kmeans.model_copy(update={"seed": seed})
        cfg = cfg.model_copy(update={"topology": cfg.topology.model_copy(update={"kmeans": km})})
    return cfg


def _write_text(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)


def _summarize(result) -> None:
    click.echo(f"{len(result.rows)} rows over {len(result.units)} unit(s): {' '.join(result.units)}", err=True)


readings_opt = click.option("--readings", type=click.Path(path_type=Path), help="Intel Lab readings file (plain or .gz).")
locations_opt = click.option("--locations", type=click.Path(path_type=Path), help="Mote locations file: 'node_id x y'.")
out_opt = click.option("--out", type=click.Path(path_type=Path), help="Output file (default: stdout).")
jobs_opt = click.option("--jobs", type=click.IntRange(min=1), default=None, help="Worker processes.")
seed_opt = click.option("--seed", type=int, default=None, help="Seed for synthetic series / k-means.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Dual prediction scheme simulator."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@readings_opt
@out_opt
@click.option("--t-min", type=float, default=-10.0, show_default=True)
@click.option("--t-max", type=float, default=50.0, show_default=True)
def ingest(readings: Path | None, out: Path | None, t_min: float, t_max: float) -> None:
    """Parse and clean a readings file; report drops and the pinned-slice digest."""
    if readings is None:
        raise click.UsageError("--readings is required")
    if not readings.is_file():
        raise DataError(f"readings file not found: {readings}")
    parsed = load_readings(readings)
    cleaned = clean(parsed.readings, (t_min, t_max))
    pinned = {n: slice_series(s, *PINNED_SLICE) for n, s in cleaned.series.items()}
    report = {
        "lines": parsed.lines,
        "accepted": len(parsed.readings),
        "rejected": len(parsed.rejects),
        "nodes": {
            str(n): {
                "readings": len(s),
                "duplicates": cleaned.duplicates.get(n, 0),
                "out_of_bounds": cleaned.out_of_bounds.get(n, 0),
            }
            for n, s in cleaned.series.items()
        },
        "pinned_slice": list(PINNED_SLICE),
        "pinned_slice_sha256": series_digest(pinned),
    }
    if out is not None:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            write_series_csv(cleaned.series, fh)
    click.echo(json.dumps(report, indent=2))


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path))
@readings_opt
@click.option("--node", type=int, default=None, help="Node id (default: first available).")
@click.option("--predictor", default=None, help="Predictor label, e.g. MA(2), ARMA(2,2), LMS-VSS.")
@click.option("--emax", type=float, default=None, help="Error margin in degrees C (default 0.5).")
@click.option("--synth", "synth_kind", type=click.Choice([k.value for k in SynthKind]), default=None)
@click.option("--length", type=click.IntRange(min=1), default=1000, show_default=True)
@seed_opt
@out_opt
def run(config_path, readings, node, predictor, emax, synth_kind, length, seed, out) -> None:
    """Run a single DPS cell and print its metrics as JSON.

    --out writes the per-epoch trace CSV.
    """
    cfg = load_config(config_path) if config_path else None
    if synth_kind is not None:
        series = list(synth(SynthSpec(kind=synth_kind, length=length, seed=seed or 0)).temperatures)
        node = node if node is not None else 1
    else:
        if cfg is None and readings is None:
            raise click.UsageError("give --config, --readings, or --synth")
        if cfg is None:
            cfg = SweepConfig.model_validate({"dataset": {"readings": str(readings)}})
        cfg = _with_overrides(cfg, readings, None, seed)
        data = load_series(cfg)
        node = node if node is not None else min(data)
        if node not in data:
            raise DataError(f"no data for node {node}")
        series = data[node]
    if predictor is not None:
        spec = PredictorSpec.parse(predictor)
    elif cfg is not None:
        spec = cfg.predictor_specs()[0]
    else:
        spec = PredictorSpec.parse("MA(2)")
    if emax is None:
        emax = cfg.grid.margins()[0] if cfg is not None and cfg.grid.values else 0.5
    trace = run_dps(series, spec, emax, node_id=node)
    metrics = trace_metrics(trace)
    if out is not None:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            write_trace_csv(trace, fh)
    click.echo(json.dumps({"node": node, "predictor": spec.label, "e_max": emax, **metrics.to_dict()}, indent=2))


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@readings_opt
@locations_opt
@out_opt
@jobs_opt
@seed_opt
def sweep(config_path, readings, locations, out, jobs, seed) -> None:
    """Run the full unit x predictor x margin grid and write the result CSV."""
    cfg = _with_overrides(load_config(config_path), readings, locations, seed)
    result = run_sweep(cfg, jobs=jobs)
    _summarize(result)
    _write_text(format_csv(result.rows), out)


@cli.command()
@click.argument("name", type=click.Choice([s.value for s in Scenario]))
@readings_opt
@locations_opt
@out_opt
@jobs_opt
def scenario(name, readings, locations, out, jobs) -> None:
    """Reproduce one of the published experiments on the Intel Lab trace."""
    if readings is None:
        raise click.UsageError("--readings is required for the canned scenarios")
    cfg = scenario_paper(name, str(readings), str(locations) if locations else None)
    result = run_sweep(cfg, jobs=jobs)
    _summarize(result)
    _write_text(format_csv(result.rows), out)


@cli.command()
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), help="Sweep CSV to plot.")
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="Run this sweep config first.")
@click.option("--kind", type=click.Choice(sorted(_PLOT_KINDS)), default="reduction", show_default=True)
@readings_opt
@locations_opt
@jobs_opt
@click.option("--out", type=click.Path(path_type=Path), required=True)
def plotdata(csv_path, config_path, kind, readings, locations, jobs, out) -> None:
    """Emit per-predictor (e_max, metric) series for plotting."""
    if (csv_path is None) == (config_path is None):
        raise click.UsageError("give exactly one of --csv or --config")
    if csv_path is not None:
        if not csv_path.is_file():
            raise DataError(f"CSV not found: {csv_path}")
        try:
            result = read_csv(csv_path)
        except ValueError as exc:
            raise DataError(f"{csv_path}: {exc}") from None
    else:
        cfg = _with_overrides(load_config(config_path), readings, locations, None)
        result = run_sweep(cfg, jobs=jobs)
    if not result.rows:
        raise DataError("no rows to plot")
    emit_plot_data(result, _PLOT_KINDS[kind], out)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="dpsim", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (ConfigError, InvalidSpecError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
