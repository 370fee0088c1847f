"""Command-line front end: ``wcs <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure,
3 a verification check failed.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

from . import __version__
from .commands import catalog, spectra, stability, verify
from .config import SolverConfig, apply_overrides, config_field_names, load_config, load_run_file
from .errors import ConfigurationError, SolverDisagreementError, WarpedConeError
from .reports import round_floats

FORMATS = ("plain", "json", "csv")

# Flags that map onto SolverConfig fields
SOLVER_FLAGS = (
    "grid_size",
    "richardson",
    "method",
    "jobs",
    "shooting_tol",
    "tol_model",
    "eps_clamp",
)


class _ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors become ConfigurationError (exit 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


@dataclass
class RunConfig:
    """Everything one command invocation needs, after precedence is applied.

    Precedence: defaults < WCS_* environment < --config file < flags.
    """

    command: str
    model: str | None = None
    surface: str | None = None
    n: int | None = None
    eps: float | None = None
    format: str = "plain"
    output: str | None = None
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    options: dict[str, Any] = field(default_factory=dict)

    def require(self, name: str) -> Any:
        value = getattr(self, name, None)
        if value is None:
            value = self.options.get(name)
        if value is None:
            flag = name.replace("_", "-")
            raise ConfigurationError(f"--{flag} is required for {self.command}")
        return value

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value


def _common_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, help="Output format")
    common.add_argument("--output", help="Write the report to this file instead of stdout")
    common.add_argument("--config", help="JSON run configuration file")
    common.add_argument("--grid-size", type=int, help="FD interior points (WCS_DEFAULT_GRID)")
    common.add_argument(
        "--no-richardson",
        dest="richardson",
        action="store_const",
        const=False,
        help="Skip the Richardson extrapolation step",
    )
    common.add_argument(
        "--method", choices=("fd", "shooting", "both"), help="Solver for delta (default both)"
    )
    common.add_argument("--jobs", type=int, help="Worker pool size for sweep")
    common.add_argument("--shooting-tol", type=float, help="Shooting bisection tolerance")
    common.add_argument("--tol-model", type=float, help="Model validation tolerance")
    common.add_argument("--eps-clamp", type=float, help="Distance kept from eps_max")
    common.add_argument("--seed", type=int, help="Seed for randomized checks")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="wcs",
        description="Stability of minimal truncated cones in warped products",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    common = _common_parser()
    for module in (catalog, spectra, stability, verify):
        module.add_parsers(subparsers, common)
    return parser


def _apply_file(args: argparse.Namespace, values: dict[str, Any]) -> dict[str, Any]:
    """Fill flags left unset from the config file; return the solver keys.

    Solver keys are applied before the flags, so a flag still wins.
    """
    solver_keys = config_field_names()
    solver_values: dict[str, Any] = {}
    for raw_key, value in values.items():
        key = raw_key.replace("-", "_")
        if key in solver_keys:
            solver_values[key] = value
        elif hasattr(args, key) and key not in ("command", "handler", "config"):
            if getattr(args, key) is None:
                setattr(args, key, value)
        else:
            raise ConfigurationError(f"Unknown key {raw_key!r} in config file")
    return solver_values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    solver = load_config()
    if args.config:
        solver = apply_overrides(solver, _apply_file(args, load_run_file(args.config)))
    flags = {key: getattr(args, key, None) for key in SOLVER_FLAGS}
    solver = apply_overrides(solver, flags)

    handled = {"command", "handler", "config", "default_format", *SOLVER_FLAGS}
    known = {"model", "surface", "n", "eps", "format", "output", "seed"}
    options = {k: v for k, v in vars(args).items() if k not in handled | known}

    seed = args.seed if args.seed is not None else 0
    if seed < 0:
        raise ConfigurationError(f"--seed must be non-negative, got {seed}")
    n = getattr(args, "n", None)
    if n is not None and n < 2:
        raise ConfigurationError(f"--n must be >= 2, got {n}")
    eps = getattr(args, "eps", None)
    if eps is not None and eps <= 0:
        raise ConfigurationError(f"--eps must be positive, got {eps}")
    return RunConfig(
        command=args.command,
        model=getattr(args, "model", None),
        surface=getattr(args, "surface", None),
        n=n,
        eps=eps,
        format=args.format or getattr(args, "default_format", "plain"),
        output=args.output,
        seed=seed,
        solver=solver,
        options=options,
    )


def run(argv: list[str] | None = None) -> int:
    """Parse argv, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version exit 0
        return 0 if e.code in (0, None) else 1
    except ConfigurationError as e:
        sys.stderr.write(f"Error: {e}\n")
        return e.exit_code

    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    handler: Callable[[RunConfig], int] = args.handler
    try:
        return handler(build_run_config(args))
    except WarpedConeError as e:
        sys.stderr.write(f"Error: {e}\n")
        if isinstance(e, SolverDisagreementError) and e.diagnostics:
            sys.stderr.write(json.dumps(round_floats(e.diagnostics)) + "\n")
        return e.exit_code
    except OSError as e:
        sys.stderr.write(f"Error: {e}\n")
        return 2


def main() -> None:
    """Entry point for the ``wcs`` console script."""
    sys.exit(run())


if __name__ == "__main__":
    main()
