"""Constant-curvature warped products I x_f F^{n+1} and their cone density."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigurationError, ModelError
from .expressions import Expression, parse_expression

# Builtin catalog: f, f', f'', c, k, interval
BUILTIN_MODELS: dict[str, dict[str, Any]] = {
    "sphere": {
        "f": "cos(t)",
        "f_prime": "-sin(t)",
        "f_second": "-cos(t)",
        "c": 1.0,
        "k": 1.0,
        "interval": (-math.pi / 2, math.pi / 2),
    },
    "euclidean": {
        "f": "1 + t",
        "f_prime": "1",
        "f_second": "0",
        "c": 0.0,
        "k": 1.0,
        "interval": (-1.0, math.inf),
    },
    "hyperbolic_cosh": {
        "f": "cosh(t)",
        "f_prime": "sinh(t)",
        "f_second": "cosh(t)",
        "c": -1.0,
        "k": -1.0,
        "interval": (-math.inf, math.inf),
    },
    "hyperbolic_exp": {
        "f": "exp(t)",
        "f_prime": "exp(t)",
        "f_second": "exp(t)",
        "c": -1.0,
        "k": 0.0,
        "interval": (-math.inf, math.inf),
    },
    "flat": {
        "f": "1",
        "f_prime": "0",
        "f_second": "0",
        "c": 0.0,
        "k": 0.0,
        "interval": (-math.inf, math.inf),
    },
}

DEFAULT_EPS_CLAMP = 1e-6


@dataclass(frozen=True)
class WarpedModel:
    """Ambient space I x_f F^{n+1} with sectional curvature c and fiber curvature k.

    The warping function and its first two derivatives are supplied as closed-form
    expressions; nothing is differentiated symbolically.
    """

    name: str
    n: int
    c: float
    k: float
    f: Expression
    f_prime: Expression
    f_second: Expression
    interval: tuple[float, float]
    eps_max: float = field(default=math.nan)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 2:
            raise ModelError(f"Dimension n must be an integer >= 2, got {self.n!r}")
        lo, hi = self.interval
        if not (lo < 0.0 < hi):
            raise ModelError(f"Interval ({lo}, {hi}) of model {self.name!r} must contain 0")
        if math.isnan(self.eps_max):
            object.__setattr__(self, "eps_max", -float(lo))
        if not self.eps_max > 0.0:
            raise ModelError(f"Model {self.name!r} has degenerate eps_max={self.eps_max}")
        if self.eps_max > -lo:
            raise ModelError(
                f"eps_max={self.eps_max} of model {self.name!r} leaves the interval ({lo}, {hi})"
            )
        f0 = self.f(0.0)
        if not math.isfinite(f0) or abs(f0 - 1.0) > 1e-12:
            raise ModelError(f"Model {self.name!r} must satisfy f(0) = 1, got f(0) = {f0}")

    def max_eps(self, clamp: float = DEFAULT_EPS_CLAMP) -> float:
        """Largest truncation depth accepted downstream."""
        return self.eps_max - clamp

    def check_eps(self, eps: float, clamp: float = DEFAULT_EPS_CLAMP) -> float:
        """Return eps if 0 < eps <= eps_max - clamp, else raise."""
        if not (eps > 0.0 and math.isfinite(eps)):
            raise ConfigurationError(f"Truncation depth must be positive, got eps={eps}")
        if eps > self.max_eps(clamp):
            raise ConfigurationError(
                f"eps={eps} exceeds eps_max - clamp = {self.max_eps(clamp):.12g} "
                f"for model {self.name!r}"
            )
        return float(eps)

    def with_dimension(self, n: int) -> "WarpedModel":
        """Same ambient family with another hypersurface dimension."""
        return WarpedModel(
            name=self.name,
            n=n,
            c=self.c,
            k=self.k,
            f=self.f,
            f_prime=self.f_prime,
            f_second=self.f_second,
            interval=self.interval,
            eps_max=self.eps_max,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "c": self.c,
            "k": self.k,
            "f": str(self.f),
            "f_prime": str(self.f_prime),
            "f_second": str(self.f_second),
            "interval": [_encode_bound(b) for b in self.interval],
            "eps_max": _encode_bound(self.eps_max),
        }


@dataclass(frozen=True)
class ConeDensity:
    """Density lambda(t) = f(t) of a truncated cone in a warped model."""

    model: WarpedModel

    def lam(self, t: Any) -> Any:
        return self.model.f(t)

    def dlam(self, t: Any) -> Any:
        return self.model.f_prime(t)

    def d2lam(self, t: Any) -> Any:
        return self.model.f_second(t)

    def log_derivative(self, t: Any) -> Any:
        """lambda'/lambda."""
        return self.dlam(t) / self.lam(t)


@dataclass(frozen=True)
class ValidationReport:
    """Result of checking the warping function on a uniform grid."""

    model: str
    grid_size: int
    tol_model: float
    t_min: float
    f0_residual: float
    min_f: float
    curvature_residual: float
    fiber_residual: float

    @property
    def passed(self) -> bool:
        return (
            self.min_f > 0.0
            and self.f0_residual <= self.tol_model
            and self.curvature_residual <= self.tol_model
            and self.fiber_residual <= self.tol_model
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "grid_size": self.grid_size,
            "tol_model": self.tol_model,
            "grid": [self.t_min, 0.0],
            "f0_residual": self.f0_residual,
            "min_f": self.min_f,
            "curvature_residual": self.curvature_residual,
            "fiber_residual": self.fiber_residual,
            "passed": self.passed,
        }


def _encode_bound(value: float) -> float | str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _decode_bound(value: Any, key: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError as e:
            raise ModelError(f"Model field {key!r} has invalid bound {value!r}") from e
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ModelError(f"Model field {key!r} has invalid bound {value!r}")


def builtin_names() -> list[str]:
    return list(BUILTIN_MODELS)


def builtin_model(name: str, n: int) -> WarpedModel:
    """Return a catalog model for hypersurface dimension n.

    Raises:
        ModelError: Unknown name or n < 2.
    """
    entry = BUILTIN_MODELS.get(name)
    if entry is None:
        raise ModelError(
            f"Unknown model {name!r}; available models: {', '.join(BUILTIN_MODELS)}"
        )
    return WarpedModel(
        name=name,
        n=n,
        c=entry["c"],
        k=entry["k"],
        f=parse_expression(entry["f"]),
        f_prime=parse_expression(entry["f_prime"]),
        f_second=parse_expression(entry["f_second"]),
        interval=entry["interval"],
    )


def custom_model(
    name: str,
    n: int,
    c: float,
    k: float,
    f: str,
    f_prime: str,
    f_second: str,
    interval: tuple[float, float],
    eps_max: float | None = None,
) -> WarpedModel:
    """Build a model from expression strings."""
    return WarpedModel(
        name=name,
        n=n,
        c=float(c),
        k=float(k),
        f=parse_expression(f),
        f_prime=parse_expression(f_prime),
        f_second=parse_expression(f_second),
        interval=(float(interval[0]), float(interval[1])),
        eps_max=math.nan if eps_max is None else float(eps_max),
    )


def load_model_file(path: str | Path, n: int | None = None) -> WarpedModel:
    """Load a custom model from a JSON document.

    Args:
        path: File with keys name, n, c, k, f, f_prime, f_second, interval and
            optionally eps_max.
        n: Overrides the dimension stored in the file.
    """
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as e:
        raise ModelError(f"Model file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ModelError(f"Model file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ModelError(f"Model file {path} must contain a JSON object")

    required = ["name", "c", "k", "f", "f_prime", "f_second", "interval"]
    missing = [key for key in required if key not in data]
    if n is None and "n" not in data:
        missing.append("n")
    if missing:
        raise ModelError(f"Model file {path} is missing fields: {', '.join(missing)}")

    interval = data["interval"]
    if not isinstance(interval, (list, tuple)) or len(interval) != 2:
        raise ModelError(f"Model file {path}: interval must be a two-element list")
    bounds = (_decode_bound(interval[0], "interval"), _decode_bound(interval[1], "interval"))
    eps_max = data.get("eps_max")
    dimension = n if n is not None else data["n"]
    if not isinstance(dimension, int):
        raise ModelError(f"Model file {path}: n must be an integer, got {dimension!r}")

    return custom_model(
        name=str(data["name"]),
        n=dimension,
        c=_decode_bound(data["c"], "c"),
        k=_decode_bound(data["k"], "k"),
        f=str(data["f"]),
        f_prime=str(data["f_prime"]),
        f_second=str(data["f_second"]),
        interval=bounds,
        eps_max=None if eps_max is None else _decode_bound(eps_max, "eps_max"),
    )


def resolve_model(spec: str, n: int) -> WarpedModel:
    """Builtin name, or path to a JSON model file."""
    if spec in BUILTIN_MODELS:
        return builtin_model(spec, n)
    if spec.endswith(".json") or Path(spec).is_file():
        return load_model_file(spec, n=n)
    return builtin_model(spec, n)


def validation_grid(m: WarpedModel, grid_size: int, span: float = 3.0) -> np.ndarray:
    """Uniform grid on [-min(0.9 * eps_max, span), 0]."""
    depth = min(0.9 * m.eps_max, span) if math.isfinite(m.eps_max) else span
    return np.linspace(-depth, 0.0, grid_size)


def validate_model(
    m: WarpedModel,
    grid_size: int = 201,
    tol_model: float = 1e-8,
    span: float = 3.0,
) -> ValidationReport:
    """Check positivity, f(0) = 1 and the curvature identities on a grid.

    The identities are f''/f = -c and ((f')^2 - k)/f^2 = -c.

    Raises:
        ModelError: f is non-positive or non-finite somewhere on the grid.
    """
    if grid_size < 3:
        raise ConfigurationError(f"Validation grid needs at least 3 points, got {grid_size}")
    t = validation_grid(m, grid_size, span)
    f = m.f(t)
    fp = m.f_prime(t)
    fpp = m.f_second(t)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fp)) and np.all(np.isfinite(fpp))):
        raise ModelError(f"Model {m.name!r} has non-finite values on [{t[0]:.6g}, 0]")
    min_f = float(np.min(f))
    if min_f <= 0.0:
        bad = float(t[int(np.argmin(f))])
        raise ModelError(f"Model {m.name!r} has f <= 0 at t = {bad:.6g}")

    curvature = np.abs(fpp / f + m.c)
    fiber = np.abs((fp**2 - m.k) / f**2 + m.c)
    return ValidationReport(
        model=m.name,
        grid_size=grid_size,
        tol_model=tol_model,
        t_min=float(t[0]),
        f0_residual=abs(m.f(0.0) - 1.0),
        min_f=min_f,
        curvature_residual=float(np.max(curvature)),
        fiber_residual=float(np.max(fiber)),
    )


def density(m: WarpedModel) -> ConeDensity:
    """Cone density lambda = f of a validated model."""
    cone = ConeDensity(model=m)
    if abs(cone.lam(0.0) - 1.0) > 1e-12:
        raise ModelError(f"Cone density of {m.name!r} must equal 1 at t = 0")
    return cone
