"""delta1 and lambda1 commands."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import TYPE_CHECKING, Any

from ..errors import VerificationError
from ..hypersurface_spectra import lambda1, parse_surface_spec, simons_lambda1_bound
from ..reports import (
    _csv,
    eigenfunctions_csv,
    format_float,
    spectral_csv,
    spectral_json,
    spectral_plain,
    to_json,
    write_output,
)
from ..sturm_liouville import problem_for, random_test_functions, rayleigh_quotient_axial, solve
from ..warped_model import resolve_model

if TYPE_CHECKING:
    from ..cli import RunConfig

RAYLEIGH_TOLERANCE = 1e-8


def add_parsers(subparsers: Any, common: Any) -> None:
    delta1 = subparsers.add_parser(
        "delta1", parents=[common], help="Lowest eigenvalues of the axial operator L2"
    )
    delta1.add_argument("--model", help="Builtin name or JSON model file")
    delta1.add_argument("--n", type=int, help="Hypersurface dimension (>= 2)")
    delta1.add_argument("--eps", type=float, help="Truncation depth")
    delta1.add_argument("--num-eigen", type=int, help="Number of eigenvalues (default 3)")
    delta1.add_argument("--eigenfunctions", help="Write sampled eigenfunctions to this CSV")
    delta1.add_argument(
        "--rayleigh-samples",
        type=int,
        help="Check delta1 against the Rayleigh quotients of this many random test functions",
    )
    delta1.set_defaults(handler=run_delta1, default_format="plain")

    lam = subparsers.add_parser(
        "lambda1", parents=[common], help="First eigenvalue of L1 on a catalog surface"
    )
    lam.add_argument("--surface", help="e.g. clifford:1,1")
    lam.add_argument("--n", type=int, help="Dimension when the surface name omits it")
    lam.add_argument("--mode", choices=("exact", "bound"), help="exact (default) or bound")
    lam.add_argument("--tau", type=float, help="Also report the Simons bound at this tau")
    lam.set_defaults(handler=run_lambda1, default_format="plain")


def _rayleigh_check(problem, delta1: float, samples: int, seed: int, rc: RunConfig) -> float:
    quotients = [
        rayleigh_quotient_axial(problem, g, rc.solver.quad_epsabs, rc.solver.quad_epsrel)
        for g in random_test_functions(problem, count=samples, seed=seed)
    ]
    lowest = min(quotients)
    sys.stderr.write(
        f"Rayleigh check: min quotient {format_float(lowest)} over {samples} functions "
        f"(delta1 {format_float(delta1)})\n"
    )
    return lowest


def run_delta1(rc: RunConfig) -> int:
    model = resolve_model(rc.require("model"), rc.require("n"))
    problem = problem_for(
        model, rc.require("eps"), num_eigen=rc.option("num_eigen", 3), clamp=rc.solver.eps_clamp
    )
    result = solve(problem, rc.solver)

    if rc.format == "json":
        text = spectral_json(result)
    elif rc.format == "csv":
        text = spectral_csv(result)
    else:
        text = spectral_plain(result)
    write_output(text, rc.output)

    path = rc.option("eigenfunctions")
    if path is not None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(eigenfunctions_csv(result))
        sys.stderr.write(f"Wrote {target}\n")

    samples = rc.option("rayleigh_samples")
    if samples:
        lowest = _rayleigh_check(problem, result.delta1, samples, rc.seed, rc)
        if lowest < result.delta1 - RAYLEIGH_TOLERANCE * max(1.0, abs(result.delta1)):
            raise VerificationError(
                f"Rayleigh quotient {lowest:.12g} is below delta1 {result.delta1:.12g}"
            )
    return 0


def run_lambda1(rc: RunConfig) -> int:
    surface = parse_surface_spec(rc.require("surface"), rc.n)
    value, source = lambda1(surface, rc.option("mode", "exact"))
    tau = rc.option("tau")
    simons = None if tau is None else simons_lambda1_bound(surface, tau)

    if rc.format == "json":
        payload: dict[str, Any] = {
            "surface": surface.to_dict(),
            "lambda1": {"value": value, "source": source},
        }
        if simons is not None:
            payload["simons_bound"] = {"tau": tau, "value": simons, "source": "bound"}
        text = to_json(payload)
    elif rc.format == "csv":
        rows = [[surface.name, str(surface.n), format_float(value), source]]
        if simons is not None:
            rows.append([surface.name, str(surface.n), format_float(simons), f"bound(tau={tau:g})"])
        text = _csv(["surface", "n", "lambda1", "source"], rows)
    else:
        text = f"lambda1: {format_float(value)} [{source}]\n"
        if simons is not None:
            text += f"simons_bound(tau={tau:g}): {format_float(simons)} [bound]\n"
    write_output(text, rc.output)
    return 0
