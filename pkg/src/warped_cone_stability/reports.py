"""Serialization of reports: CSV, JSON and plain text with 12 significant digits."""

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .hypersurface_spectra import HypersurfaceSpectrum
from .stability_analyzer import StabilityReport, SweepResult
from .sturm_liouville import SpectralResult

REPORT_COLUMNS = [
    "model",
    "surface",
    "n",
    "eps",
    "lambda1",
    "lambda1_source",
    "delta1",
    "sum",
    "verdict",
    "paper_bound",
]
PLOT_COLUMNS = ["n", "eps", "lambda1", "delta1", "sum", "verdict"]


def format_float(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.12g}"


def round_floats(obj: Any) -> Any:
    """Round every float in a JSON-like structure to 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [round_floats(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return str(obj)


def to_json(obj: Any) -> str:
    return json.dumps(round_floats(obj), indent=2) + "\n"


def _csv(header: list[str], rows: Iterable[list[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def report_row(report: StabilityReport) -> list[str]:
    return [
        report.model,
        report.surface,
        str(report.n),
        format_float(report.eps),
        format_float(report.lambda1),
        report.lambda1_source,
        format_float(report.delta1),
        format_float(report.sum),
        report.verdict,
        format_float(report.paper_bound),
    ]


def stability_csv(reports: Iterable[StabilityReport]) -> str:
    return _csv(REPORT_COLUMNS, (report_row(r) for r in reports))


def stability_json(reports: Iterable[StabilityReport], summary: str | None = None) -> str:
    payload: dict[str, Any] = {"reports": [r.to_dict() for r in reports]}
    if summary is not None:
        payload["summary"] = summary
    return to_json(payload)


def stability_plain(report: StabilityReport) -> str:
    lines = [
        report.describe(),
        f"model: {report.model}",
        f"surface: {report.surface}",
        f"n: {report.n}",
        f"eps: {format_float(report.eps)}",
        f"lambda1: {format_float(report.lambda1)} [{report.lambda1_source}]",
        f"delta1: {format_float(report.delta1)} [{report.delta1_source}]",
        f"sum: {format_float(report.sum)}",
        f"verdict: {report.verdict}",
    ]
    if report.paper_bound is not None:
        lines.append(f"paper_bound: {format_float(report.paper_bound)} [analytic]")
    if report.note:
        lines.append(f"note: {report.note}")
    return "\n".join(lines) + "\n"


def sweep_json(result: SweepResult) -> str:
    return to_json(
        {
            "model": result.model,
            "family": result.family,
            "reports": [r.to_dict() for r in result.reports],
            "failures": [f.to_dict() for f in result.failures],
            "thresholds": {str(n): eps for n, eps in result.thresholds().items()},
            "summary": result.summary(),
        }
    )


def sweep_plain(result: SweepResult) -> str:
    width = max((len(r.surface) for r in result.reports), default=7)
    lines = [f"{'n':>3}  {'eps':>14}  {'surface':<{width}}  {'sum':>14}  verdict"]
    for r in result.reports:
        lines.append(
            f"{r.n:>3}  {format_float(r.eps):>14}  {r.surface:<{width}}  "
            f"{format_float(r.sum):>14}  {r.verdict}"
        )
    lines.append(result.summary())
    return "\n".join(lines) + "\n"


def plot_data(result: SweepResult) -> str:
    """Rows grouped by n, eps increasing within each group."""
    ordered = sorted(result.reports, key=lambda r: (r.n, r.eps))
    rows = (
        [
            str(r.n),
            format_float(r.eps),
            format_float(r.lambda1),
            format_float(r.delta1),
            format_float(r.sum),
            r.verdict,
        ]
        for r in ordered
    )
    return _csv(PLOT_COLUMNS, rows)


def emit_plot_data(result: SweepResult, path: str | Path) -> Path:
    """Write the plot CSV for a completed sweep."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plot_data(result))
    return path


def spectral_json(result: SpectralResult) -> str:
    payload = result.to_dict()
    payload["source"] = "fd" if result.method == "finite_difference" else "shooting"
    if "cross_check" in result.diagnostics:
        payload["cross_check"] = {
            "method": result.diagnostics["cross_check"],
            "eigenvalues": result.diagnostics.get("shooting_eigenvalues"),
            "max_discrepancy": result.diagnostics.get("max_discrepancy"),
        }
    return to_json(payload)


def spectral_csv(result: SpectralResult) -> str:
    source = "fd" if result.method == "finite_difference" else "shooting"
    rows = (
        [str(j + 1), format_float(v), source, format_float(r)]
        for j, (v, r) in enumerate(zip(result.eigenvalues, result.residuals))
    )
    return _csv(["j", "delta", "source", "residual"], rows)


def spectral_plain(result: SpectralResult) -> str:
    source = "fd" if result.method == "finite_difference" else "shooting"
    lines = [
        f"delta{j + 1}: {format_float(v)} [{source}]" for j, v in enumerate(result.eigenvalues)
    ]
    return "\n".join(lines) + "\n"


def eigenfunctions_csv(result: SpectralResult) -> str:
    k = result.eigenfunctions.shape[0]
    header = ["t"] + [f"g{j + 1}" for j in range(k)]
    rows = (
        [format_float(t)] + [format_float(result.eigenfunctions[j, i]) for j in range(k)]
        for i, t in enumerate(result.t)
    )
    return _csv(header, rows)


def spectra_json(spectrum: HypersurfaceSpectrum) -> str:
    return to_json(spectrum.to_dict())


def write_output(text: str, path: str | Path | None = None) -> None:
    """Write text to path, or to standard output."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    sys.stderr.write(f"Wrote {target}\n")
