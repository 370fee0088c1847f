"""models and surfaces commands - list and validate the catalogs."""

from __future__ import annotations

import math
import sys
from typing import TYPE_CHECKING, Any

from ..errors import VerificationError
from ..hypersurface_spectra import l1_spectrum, list_catalog, parse_surface_spec
from ..reports import _csv, format_float, spectra_json, to_json, write_output
from ..warped_model import builtin_names, resolve_model, validate_model

if TYPE_CHECKING:
    from ..cli import RunConfig


def add_parsers(subparsers: Any, common: Any) -> None:
    models = subparsers.add_parser(
        "models", parents=[common], help="List builtin warped models and validate them"
    )
    models.add_argument("--model", help="Builtin name or JSON model file (default: all builtins)")
    models.add_argument("--n", type=int, help="Dimension used for validation (default 2)")
    models.set_defaults(handler=run_models, default_format="plain")

    surfaces = subparsers.add_parser(
        "surfaces", parents=[common], help="List catalog surfaces or print an L1 spectrum"
    )
    surfaces.add_argument("action", nargs="?", choices=["list"], default="list")
    surfaces.add_argument("--surface", help="e.g. clifford:1,1, equator:5, flat_subtorus:3")
    surfaces.add_argument("--n", type=int, help="Dimension when the surface name omits it")
    surfaces.add_argument("--count", type=int, help="Number of L1 eigenvalues (default 10)")
    surfaces.set_defaults(handler=run_surfaces, default_format="plain")


def _interval_text(bounds: tuple[float, float]) -> str:
    lo, hi = (format_float(b) if math.isfinite(b) else ("-inf" if b < 0 else "inf") for b in bounds)
    return f"({lo}, {hi})"


def run_models(rc: RunConfig) -> int:
    """Validate each model's curvature identities on the configured grid."""
    n = rc.n or 2
    names = [rc.model] if rc.model else builtin_names()
    entries = []
    for name in names:
        model = resolve_model(name, n)
        report = validate_model(
            model,
            grid_size=rc.solver.validation_grid,
            tol_model=rc.solver.tol_model,
            span=rc.solver.validation_span,
        )
        entries.append((model, report))
        sys.stderr.write(f"Validated {model.name}: {'pass' if report.passed else 'FAIL'}\n")

    if rc.format == "json":
        text = to_json(
            [{"model": m.to_dict(), "validation": r.to_dict()} for m, r in entries]
        )
    elif rc.format == "csv":
        rows = (
            [
                m.name,
                format_float(m.c),
                format_float(m.k),
                str(m.f),
                _interval_text(m.interval),
                format_float(m.eps_max),
                format_float(r.curvature_residual),
                format_float(r.fiber_residual),
                "pass" if r.passed else "fail",
            ]
            for m, r in entries
        )
        header = ["model", "c", "k", "f", "interval", "eps_max", "curvature_residual",
                  "fiber_residual", "validation"]
        text = _csv(header, rows)
    else:
        lines = []
        for m, r in entries:
            lines.append(
                f"{m.name:<16} f={str(m.f):<8} c={format_float(m.c):<3} k={format_float(m.k):<3} "
                f"I={_interval_text(m.interval)} eps_max={format_float(m.eps_max)} "
                f"residuals={format_float(r.curvature_residual)},"
                f"{format_float(r.fiber_residual)} {'PASS' if r.passed else 'FAIL'}"
            )
        text = "\n".join(lines) + "\n"
    write_output(text, rc.output)

    failed = [m.name for m, r in entries if not r.passed]
    if failed:
        raise VerificationError(f"Model validation failed: {', '.join(failed)}")
    return 0


def run_surfaces(rc: RunConfig) -> int:
    """Print the catalog, or the L1 spectrum of one surface."""
    if rc.surface is None:
        catalog = list_catalog()
        if rc.format == "json":
            text = to_json(catalog)
        elif rc.format == "csv":
            text = _csv(["name", "description"], ([e["name"], e["description"]] for e in catalog))
        else:
            text = "".join(f"{e['name']:<14} {e['description']}\n" for e in catalog)
        write_output(text, rc.output)
        return 0

    surface = parse_surface_spec(rc.surface, rc.n)
    spectrum = l1_spectrum(surface, rc.option("count", 10))
    if rc.format == "json":
        text = spectra_json(spectrum)
    elif rc.format == "csv":
        rows = ([str(i + 1), format_float(v)] for i, v in enumerate(spectrum.eigenvalues))
        text = _csv(["i", "lambda"], rows)
    else:
        values = ", ".join(format_float(v) for v in spectrum.eigenvalues)
        text = (
            f"{surface.name} (n={surface.n}, |A|^2={format_float(surface.norm_a2)}, "
            f"fiber_k={format_float(surface.fiber_k)})\n"
            f"L1 eigenvalues [{spectrum.source}]: {values}\n"
        )
    write_output(text, rc.output)
    return 0
