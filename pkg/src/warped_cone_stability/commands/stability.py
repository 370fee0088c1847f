"""verdict and sweep commands."""

from __future__ import annotations

import asyncio
import sys
from typing import TYPE_CHECKING, Any

from ..errors import ConfigurationError
from ..hypersurface_spectra import parse_surface_spec
from ..reports import (
    emit_plot_data,
    stability_csv,
    stability_json,
    stability_plain,
    sweep_json,
    sweep_plain,
    write_output,
)
from ..stability_analyzer import SURFACE_FAMILIES, SolverOptions, run_sweep, verdict
from ..warped_model import resolve_model

if TYPE_CHECKING:
    from ..cli import RunConfig


def add_parsers(subparsers: Any, common: Any) -> None:
    single = subparsers.add_parser(
        "verdict", parents=[common], help="Decide lambda1 + delta1 < 0 for one truncated cone"
    )
    single.add_argument("--model", help="Builtin name or JSON model file")
    single.add_argument("--surface", help="Catalog surface, e.g. clifford:1,1")
    single.add_argument("--n", type=int, help="Dimension when the surface name omits it")
    single.add_argument("--eps", type=float, help="Truncation depth")
    single.add_argument(
        "--lambda1-mode", choices=("exact", "bound"), help="Catalog value or the bound -n"
    )
    single.set_defaults(handler=run_verdict, default_format="plain")

    grid = subparsers.add_parser(
        "sweep", parents=[common], help="Evaluate the criterion over a grid of n and eps"
    )
    grid.add_argument("--model", help="Builtin name or JSON model file")
    grid.add_argument(
        "--family", choices=sorted(SURFACE_FAMILIES), help="Surface family (default clifford)"
    )
    grid.add_argument("--n-min", type=int, help="Smallest n (default 2)")
    grid.add_argument("--n-max", type=int, help="Largest n (default 14)")
    grid.add_argument("--n-values", help="Comma-separated n values, overrides --n-min/--n-max")
    grid.add_argument("--eps", type=float, help="Single truncation depth")
    grid.add_argument("--eps-values", help="Comma-separated truncation depths")
    grid.add_argument(
        "--lambda1-mode", choices=("exact", "bound"), help="Catalog value or the bound -n"
    )
    grid.add_argument("--plot-data", help="Write n,eps,lambda1,delta1,sum,verdict CSV here")
    grid.set_defaults(handler=run_sweep_command, default_format="plain")


def _parse_list(text: Any, kind: type, flag: str) -> list:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [item for item in str(text).split(",") if item.strip()]
    try:
        values = [kind(item) for item in items]
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid value in {flag}: {text!r}") from e
    if not values:
        raise ConfigurationError(f"{flag} is empty")
    return values


def _options(rc: RunConfig) -> SolverOptions:
    return SolverOptions(config=rc.solver, lambda1_mode=rc.option("lambda1_mode", "exact"))


def run_verdict(rc: RunConfig) -> int:
    surface = parse_surface_spec(rc.require("surface"), rc.n)
    model = resolve_model(rc.require("model"), surface.n)
    report = verdict(model, surface, rc.require("eps"), _options(rc))

    if rc.format == "json":
        text = stability_json([report])
    elif rc.format == "csv":
        text = stability_csv([report])
    else:
        text = stability_plain(report)
    write_output(text, rc.output)
    return 0


def _n_values(rc: RunConfig) -> list[int]:
    listed = rc.option("n_values")
    if listed is not None:
        values = _parse_list(listed, int, "--n-values")
    else:
        lo = rc.option("n_min", 2)
        hi = rc.option("n_max", 14)
        if hi < lo:
            raise ConfigurationError(f"--n-max {hi} is below --n-min {lo}")
        values = list(range(lo, hi + 1))
    if min(values) < 2:
        raise ConfigurationError(f"Sweep dimensions must be >= 2, got {min(values)}")
    return values


def _eps_values(rc: RunConfig) -> list[float]:
    listed = rc.option("eps_values")
    if listed is not None:
        values = _parse_list(listed, float, "--eps-values")
    else:
        values = [rc.require("eps")]
    if min(values) <= 0.0:
        raise ConfigurationError(f"Truncation depths must be positive, got {min(values)}")
    return values


def run_sweep_command(rc: RunConfig) -> int:
    spec = rc.require("model")
    family = rc.option("family", "clifford")
    n_values = _n_values(rc)
    eps_values = _eps_values(rc)
    sys.stderr.write(
        f"Sweeping {spec}/{family}: {len(n_values)} dimensions x {len(eps_values)} depths "
        f"on {rc.solver.jobs} workers\n"
    )

    result = asyncio.run(
        run_sweep(
            lambda n: resolve_model(spec, n),
            family,
            n_values,
            eps_values,
            _options(rc),
            jobs=rc.solver.jobs,
        )
    )

    if rc.format == "json":
        write_output(sweep_json(result), rc.output)
    elif rc.format == "csv":
        write_output(stability_csv(result.reports), rc.output)
        # Keep stdout parseable as CSV
        stream = sys.stderr if rc.output is None else sys.stdout
        stream.write(result.summary() + "\n")
    else:
        write_output(sweep_plain(result), rc.output)
        if rc.output is not None:
            sys.stdout.write(result.summary() + "\n")

    plot_path = rc.option("plot_data")
    if plot_path is not None:
        target = emit_plot_data(result, plot_path)
        sys.stderr.write(f"Wrote {target}\n")
    return 0
