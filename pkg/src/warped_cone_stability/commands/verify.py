"""verify-geometry and verify-limits commands.

Both print their report first and then fail with exit code 3 if a check did not hold.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any

from ..cone_geometry import product_torus, verify_geometry
from ..errors import ConfigurationError, VerificationError
from ..hypersurface_spectra import parse_surface_spec
from ..reports import _csv, format_float, to_json, write_output
from ..stability_analyzer import (
    paper_bound_exact,
    paper_integral_limits,
    paper_integrals,
)

if TYPE_CHECKING:
    from ..cli import RunConfig

LIMIT_RTOL = 1e-8


def add_parsers(subparsers: Any, common: Any) -> None:
    geometry = subparsers.add_parser(
        "verify-geometry",
        parents=[common],
        help="Finite-difference checks of the cone over a spherical surface",
    )
    geometry.add_argument("--surface", help="Spherical catalog surface (default clifford:1,1)")
    geometry.add_argument("--n", type=int, help="Dimension when the surface name omits it")
    geometry.add_argument(
        "--torus-radius", type=float, help="Use the product torus S1(r) x S1(sqrt(1-r^2))"
    )
    geometry.add_argument("--t", type=float, help="Axial coordinate in (-pi/2, pi/2)")
    geometry.add_argument("--h", type=float, help="Difference step (default WCS_FD_STEP)")
    geometry.add_argument("--u", help="Comma-separated chart point")
    geometry.set_defaults(handler=run_verify_geometry, default_format="json")

    limits = subparsers.add_parser(
        "verify-limits",
        parents=[common],
        help="Quadrature of the spherical test-function integrals against their limits",
    )
    limits.add_argument("--n", type=int, help="Single dimension")
    limits.add_argument("--n-min", type=int, help="Smallest n (default 2)")
    limits.add_argument("--n-max", type=int, help="Largest n (default 14)")
    limits.add_argument("--eps", type=float, help="Truncation depth (default pi/2)")
    limits.set_defaults(handler=run_verify_limits, default_format="plain")


def _chart_point(text: Any) -> list[float] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise ConfigurationError(f"Invalid chart point --u {text!r}") from e


def run_verify_geometry(rc: RunConfig) -> int:
    radius = rc.option("torus_radius")
    if radius is not None:
        surface = product_torus(radius)
    else:
        surface = parse_surface_spec(rc.surface or "clifford:1,1", rc.n)
    t = rc.option("t", -0.6)
    if not abs(t) < math.pi / 2:
        raise ConfigurationError(f"--t must lie in (-pi/2, pi/2), got {t}")
    h = rc.option("h", rc.solver.fd_step)
    report = verify_geometry(surface, t, _chart_point(rc.option("u")), h)

    if rc.format == "json":
        text = to_json(report.to_dict())
    elif rc.format == "csv":
        text = _csv(["check", "passed"], ([k, str(v).lower()] for k, v in report.checks.items()))
    else:
        lines = [
            f"surface: {report.surface} (n={report.n}) t={format_float(report.t)} "
            f"h={format_float(report.h)}",
            f"|A|*cos(t): {format_float(report.scaled_norm)} "
            f"(expected {format_float(report.expected_scaled_norm)})",
            f"mean curvature: {format_float(report.shape.mean_curvature)} "
            f"(expected |H| {format_float(report.expected_mean_curvature)})",
            f"volume density: {format_float(report.volume_density)} "
            f"(expected {format_float(report.expected_volume_density)})",
        ]
        lines += [f"{name}: {'PASS' if ok else 'FAIL'}" for name, ok in report.checks.items()]
        text = "\n".join(lines) + "\n"
    write_output(text, rc.output)

    if not report.passed:
        failed = [name for name, ok in report.checks.items() if not ok]
        raise VerificationError(f"Geometry checks failed: {', '.join(failed)}")
    return 0


def _limit_dimensions(rc: RunConfig) -> list[int]:
    if rc.n is not None:
        return [rc.n]
    lo = rc.option("n_min", 2)
    hi = rc.option("n_max", 14)
    if lo < 2 or hi < lo:
        raise ConfigurationError(f"Invalid dimension range {lo}..{hi}")
    return list(range(lo, hi + 1))


def _close(value: float, target: float) -> bool:
    return abs(value - target) <= LIMIT_RTOL * max(1.0, abs(target))


def run_verify_limits(rc: RunConfig) -> int:
    """At eps = pi/2 the integrals and the bound must match their closed forms."""
    eps = rc.eps if rc.eps is not None else math.pi / 2
    at_limit = math.isclose(eps, math.pi / 2, rel_tol=0.0, abs_tol=1e-15)
    rows = []
    ok = True
    for n in _limit_dimensions(rc):
        found = paper_integrals(eps, n, rc.solver.quad_epsabs, rc.solver.quad_epsrel)
        limits = paper_integral_limits(n)
        exact = paper_bound_exact(n)
        bound = found.bound(n)
        checks = []
        if at_limit:
            checks = [_close(a, b) for a, b in zip(found.as_tuple(), limits.as_tuple())]
            checks.append(_close(bound, float(exact)))
        passed = all(checks)
        ok = ok and passed
        rows.append((n, found, limits, bound, exact, passed))

    if rc.format == "json":
        text = to_json(
            {
                "eps": eps,
                "compared_to_limits": at_limit,
                "results": [
                    {
                        "n": n,
                        "I1": {"value": f.i1, "limit": lim.i1, "source": "quadrature"},
                        "I2": {"value": f.i2, "limit": lim.i2, "source": "quadrature"},
                        "I3": {"value": f.i3, "limit": lim.i3, "source": "quadrature"},
                        "bound": {"value": b, "exact": str(x), "source": "analytic"},
                        "passed": p,
                    }
                    for n, f, lim, b, x, p in rows
                ],
                "passed": ok,
            }
        )
    elif rc.format == "csv":
        text = _csv(
            ["n", "eps", "I1", "I1_limit", "I2", "I2_limit", "I3", "I3_limit", "bound",
             "bound_exact", "passed"],
            (
                [str(n), format_float(eps), format_float(f.i1), format_float(lim.i1),
                 format_float(f.i2), format_float(lim.i2), format_float(f.i3),
                 format_float(lim.i3), format_float(b), str(x), str(p).lower()]
                for n, f, lim, b, x, p in rows
            ),
        )
    else:
        lines = []
        for n, f, lim, b, x, _ in rows:
            lines += [
                f"n={n} eps={format_float(eps)}",
                f"  I1: {format_float(f.i1)} (limit {format_float(lim.i1)})",
                f"  I2: {format_float(f.i2)} (limit {format_float(lim.i2)})",
                f"  I3: {format_float(f.i3)} (limit {format_float(lim.i3)})",
                f"  bound: {format_float(b)} (exact {x})",
            ]
        lines.append("PASS" if ok else "FAIL")
        text = "\n".join(lines) + "\n"
    write_output(text, rc.output)

    if not ok:
        raise VerificationError("Quadrature does not match the closed-form limits")
    return 0
