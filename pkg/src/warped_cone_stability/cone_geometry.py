"""Finite-difference checks of the cone identities in the spherical ambient.

The cone over x: U -> S^(n+1) is Phi(t, u) = cos(t) (x(u), 0) + sin(t) e_(n+3), an
n+1 dimensional submanifold of S^(n+2) in R^(n+3). Everything here is computed
from Phi alone by central differences; the catalog values are only used as the
targets the differences are compared against.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from .errors import ChartError, ConfigurationError, SolverError
from .hypersurface_spectra import MinimalHypersurface, catalog_surface
from .sturm_liouville import AxialFunction
from .warped_model import WarpedModel

MAX_FRAME_CONDITION = 1e8
# Residuals below this are treated as converged when checking halving ratios
NOISE_FLOOR = 1e-9
MIN_CONVERGENCE_RATIO = 3.5
JACOBIAN_STEP = 1e-4
LAPLACIAN_STEP = 2e-3


def _sphere_point(angles: np.ndarray) -> np.ndarray:
    """Spherical coordinates on S^p for p = len(angles)."""
    p = angles.size
    out = np.empty(p + 1)
    prefix = 1.0
    for i in range(p - 1):
        out[i] = prefix * math.cos(angles[i])
        prefix *= math.sin(angles[i])
    out[p - 1] = prefix * math.cos(angles[p - 1])
    out[p] = prefix * math.sin(angles[p - 1])
    return out


def _sphere_bounds(p: int) -> tuple[list[float], list[float]]:
    return [0.0] * (p - 1) + [-math.pi], [math.pi] * (p - 1) + [math.pi]


def _sphere_default(p: int) -> list[float]:
    return [math.pi / 2 - 0.2] * (p - 1) + [0.4]


@dataclass(frozen=True)
class ParametrizedSurface:
    """Hypersurface of S^(n+1) given by a chart u -> x(u) in R^(n+2)."""

    name: str
    n: int
    embedding: Callable[[np.ndarray], np.ndarray]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    default_point: tuple[float, ...]
    norm_a2: float
    mean_curvature: float = 0.0

    @property
    def minimal(self) -> bool:
        return self.mean_curvature == 0.0


def surface_chart(s: MinimalHypersurface) -> ParametrizedSurface:
    """Explicit chart of a spherical catalog surface.

    Raises:
        ChartError: The surface does not live in a round sphere.
    """
    if s.kind == "equator":
        n = s.n
        lo, hi = _sphere_bounds(n)
        return ParametrizedSurface(
            name=s.name,
            n=n,
            embedding=lambda u: np.append(_sphere_point(u), 0.0),
            lower=tuple(lo),
            upper=tuple(hi),
            default_point=tuple(_sphere_default(n)),
            norm_a2=0.0,
        )
    if s.kind == "clifford":
        p, q = s.params
        r1, r2 = s.radii
        lo1, hi1 = _sphere_bounds(p)
        lo2, hi2 = _sphere_bounds(q)

        def embedding(u: np.ndarray) -> np.ndarray:
            return np.concatenate((r1 * _sphere_point(u[:p]), r2 * _sphere_point(u[p:])))

        return ParametrizedSurface(
            name=s.name,
            n=s.n,
            embedding=embedding,
            lower=tuple(lo1 + lo2),
            upper=tuple(hi1 + hi2),
            default_point=tuple(_sphere_default(p) + _sphere_default(q)),
            norm_a2=s.norm_a2,
        )
    raise ChartError(f"Surface {s.name} has no chart in a round sphere")


def product_torus(r: float) -> ParametrizedSurface:
    """S^1(r) x S^1(sqrt(1 - r^2)) in S^3; minimal only for r = 1/sqrt(2)."""
    if not 0.0 < r < 1.0:
        raise ConfigurationError(f"Torus radius must lie in (0, 1), got {r}")
    s = math.sqrt(1.0 - r * r)

    def embedding(u: np.ndarray) -> np.ndarray:
        return np.array(
            [r * math.cos(u[0]), r * math.sin(u[0]), s * math.cos(u[1]), s * math.sin(u[1])]
        )

    return ParametrizedSurface(
        name=f"torus:{r:g}",
        n=2,
        embedding=embedding,
        lower=(-math.pi, -math.pi),
        upper=(math.pi, math.pi),
        default_point=(0.4, 0.4),
        norm_a2=(s / r) ** 2 + (r / s) ** 2,
        mean_curvature=abs(s / r - r / s),
    )


@dataclass(frozen=True)
class ConeImmersion:
    """Phi(t, u) = cos(t) (x(u), 0) + sin(t) N with N the pole e_(n+3)."""

    surface: ParametrizedSurface

    @property
    def n(self) -> int:
        return self.surface.n

    @property
    def ambient_dim(self) -> int:
        return self.n + 3

    def phi(self, xi: np.ndarray) -> np.ndarray:
        t, u = xi[0], xi[1:]
        base = np.append(self.surface.embedding(u), 0.0)
        pole = np.zeros(self.ambient_dim)
        pole[-1] = 1.0
        return math.cos(t) * base + math.sin(t) * pole

    def check_stencil(self, xi: np.ndarray, reach: float) -> None:
        t, u = xi[0], xi[1:]
        if not (-math.pi / 2 < t - reach and t + reach < math.pi / 2):
            raise ChartError(f"Stencil around t={t:.6g} leaves (-pi/2, pi/2)")
        lower = np.asarray(self.surface.lower)
        upper = np.asarray(self.surface.upper)
        if np.any(u - reach <= lower) or np.any(u + reach >= upper):
            raise ChartError(f"Stencil around u={list(u)} leaves the chart of {self.surface.name}")

    def tangents(self, xi: np.ndarray, step: float) -> np.ndarray:
        """Rows d Phi / d xi_a by central differences."""
        dim = xi.size
        rows = np.empty((dim, self.ambient_dim))
        for a in range(dim):
            e = np.zeros(dim)
            e[a] = step
            rows[a] = (self.phi(xi + e) - self.phi(xi - e)) / (2 * step)
        return rows

    def normal(self, xi: np.ndarray, step: float, reference: np.ndarray | None = None):
        """Unit normal inside S^(n+2): orthogonal to Phi and to every tangent."""
        frame = self.tangents(xi, step)
        singular = np.linalg.svd(frame, compute_uv=False)
        if singular[-1] <= 0.0 or singular[0] / singular[-1] > MAX_FRAME_CONDITION:
            raise SolverError(f"Degenerate tangent frame at {list(xi)}")
        basis = np.column_stack([self.phi(xi), frame.T])
        q, _ = np.linalg.qr(basis, mode="complete")
        normal = q[:, -1]
        if reference is not None and float(normal @ reference) < 0.0:
            normal = -normal
        return normal


def cone_over(surface: MinimalHypersurface | ParametrizedSurface) -> ConeImmersion:
    if isinstance(surface, MinimalHypersurface):
        surface = surface_chart(surface)
    return ConeImmersion(surface=surface)


@dataclass(frozen=True)
class FDShapeOperator:
    """Shape operator of the cone at one point, in an orthonormal frame."""

    point: tuple[float, ...]
    step: float
    matrix: np.ndarray
    norm: float
    mean_curvature: float
    principal_curvatures: np.ndarray
    asymmetry: float
    axial_image: float
    metric_cross_term: float
    metric: np.ndarray = field(repr=False)


def _point(cone: ConeImmersion, t: float, u: Any | None) -> np.ndarray:
    coords = cone.surface.default_point if u is None else tuple(np.atleast_1d(u))
    if len(coords) != cone.n:
        raise ConfigurationError(f"Chart point needs {cone.n} coordinates, got {len(coords)}")
    return np.array((float(t),) + tuple(float(c) for c in coords))


def fd_shape_operator(
    cone: ConeImmersion,
    t: float,
    u: Any | None = None,
    h: float = 1e-3,
    frame_step: float | None = None,
) -> FDShapeOperator:
    """Central-difference Weingarten map at (t, u).

    Tangents use ``frame_step`` (default h/10); the derivative of the normal uses h.
    The normal is oriented along the normal at t = 0 over the same u.
    """
    fs = h / 10.0 if frame_step is None else frame_step
    xi = _point(cone, t, u)
    cone.check_stencil(xi, h + fs)
    dim = xi.size

    base = xi.copy()
    base[0] = 0.0
    reference = cone.normal(base, fs)

    frame = cone.tangents(xi, fs)
    d_normal = np.empty_like(frame)
    for a in range(dim):
        e = np.zeros(dim)
        e[a] = h
        plus = cone.normal(xi + e, fs, reference)
        minus = cone.normal(xi - e, fs, reference)
        d_normal[a] = (plus - minus) / (2 * h)

    metric = frame @ frame.T
    second = -d_normal @ frame.T
    asymmetry = float(np.max(np.abs(second - second.T)))
    second = 0.5 * (second + second.T)

    vals, vecs = np.linalg.eigh(metric)
    if np.min(vals) <= 0.0:
        raise SolverError(f"Induced metric is not positive definite at t={t}")
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.T
    matrix = inv_sqrt @ second @ inv_sqrt
    matrix = 0.5 * (matrix + matrix.T)

    # A(d_t) = G^-1 B e_t, measured in the induced metric
    axial = np.linalg.solve(metric, second[:, 0])
    axial_image = float(math.sqrt(max(axial @ metric @ axial, 0.0)))

    return FDShapeOperator(
        point=tuple(float(v) for v in xi),
        step=h,
        matrix=matrix,
        norm=float(np.linalg.norm(matrix)),
        mean_curvature=float(np.trace(matrix)),
        principal_curvatures=np.linalg.eigvalsh(matrix),
        asymmetry=asymmetry,
        axial_image=axial_image,
        metric_cross_term=float(np.max(np.abs(metric[0, 1:]))),
        metric=metric,
    )


def fd_mean_curvature(
    cone: ConeImmersion, t: float, u: Any | None = None, h: float = 1e-3
) -> float:
    """Trace of the shape operator; vanishes for cones over minimal surfaces."""
    return fd_shape_operator(cone, t, u, h).mean_curvature


def fd_volume_density(
    cone: ConeImmersion, t: float, u: Any | None = None, h: float = 1e-3
) -> float:
    """sqrt(det G(t, u)) / sqrt(det G(0, u)) of the induced metric; equals cos(t)^n."""
    xi = _point(cone, t, u)
    cone.check_stencil(xi, h)
    base = xi.copy()
    base[0] = 0.0
    frame_t = cone.tangents(xi, h)
    frame_0 = cone.tangents(base, h)
    det_t = np.linalg.det(frame_t @ frame_t.T)
    det_0 = np.linalg.det(frame_0 @ frame_0.T)
    if det_0 <= 0.0:
        raise SolverError(f"Degenerate induced metric at t=0, u={list(base[1:])}")
    return float(math.sqrt(max(det_t, 0.0) / det_0))


@dataclass(frozen=True)
class ConvergenceCheck:
    """Residual at h and h/2 and their ratio."""

    coarse: float
    fine: float

    @property
    def ratio(self) -> float:
        return math.inf if self.fine == 0.0 else self.coarse / self.fine

    @property
    def passed(self) -> bool:
        return self.fine <= NOISE_FLOOR or self.ratio >= MIN_CONVERGENCE_RATIO

    def to_dict(self) -> dict[str, Any]:
        return {
            "coarse": self.coarse,
            "fine": self.fine,
            "ratio": None if math.isinf(self.ratio) else self.ratio,
            "passed": self.passed,
        }


def halving_check(residual_at: Callable[[float], float], h: float) -> ConvergenceCheck:
    return ConvergenceCheck(coarse=abs(residual_at(h)), fine=abs(residual_at(h / 2)))


def _metric_at(chart: ParametrizedSurface, f: Callable[[Any], Any], y: np.ndarray) -> np.ndarray:
    """dt^2 + f(t)^2 g_M at y = (t, u), with g_M = J^T J from central differences."""
    u = y[1:]
    jacobian = np.empty((chart.embedding(u).size, u.size))
    for b in range(u.size):
        du = np.zeros(u.size)
        du[b] = JACOBIAN_STEP
        jacobian[:, b] = (chart.embedding(u + du) - chart.embedding(u - du)) / (2 * JACOBIAN_STEP)
    metric = np.zeros((u.size + 1, u.size + 1))
    metric[0, 0] = 1.0
    metric[1:, 1:] = f(y[0]) ** 2 * (jacobian.T @ jacobian)
    return metric


def _laplace_beltrami(
    field_at: Callable[[np.ndarray], float],
    metric_at: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    step: float,
) -> float:
    """(1/sqrt|G|) sum_a d_a (sqrt|G| G^ab d_b L) by nested central differences."""
    dim = y.size
    basis = np.eye(dim) * (step / 2)

    def flux(z: np.ndarray, a: int) -> float:
        metric = metric_at(z)
        grad = np.array([(field_at(z + e) - field_at(z - e)) / step for e in basis])
        return math.sqrt(np.linalg.det(metric)) * np.linalg.solve(metric, grad)[a]

    divergence = sum(
        (flux(y + basis[a], a) - flux(y - basis[a], a)) / step for a in range(dim)
    )
    return divergence / math.sqrt(np.linalg.det(metric_at(y)))


def laplacian_splitting_check(
    model: WarpedModel,
    mu: float,
    h_func: AxialFunction,
    eps: float = 1.0,
    grid_size: int = 512,
    surface: MinimalHypersurface | ParametrizedSurface | None = None,
    u: Any | None = None,
    base: Literal["coordinate", "constant"] | None = None,
    step: float = LAPLACIAN_STEP,
) -> float:
    """Max over a t-grid of |Delta L - phi (-mu h / f^2 + n (f'/f) h' + h'')| / |phi|.

    L = phi(u) h(t) lives on I x_f M for the chart of surface (the equator of the
    model's dimension by default) at the chart point u. Delta L is the
    Laplace-Beltrami operator of dt^2 + f^2 g_M applied by finite differences,
    Richardson-extrapolated from steps H and H/2. phi is the constant function
    (eigenvalue 0) or the ambient coordinate largest at u, whose eigenvalue on a
    minimal hypersurface of the unit sphere is n. base=None picks the constant
    exactly when mu is 0. A mu other than the eigenvalue of phi leaves a residual
    of order |mu - mu_phi| |h| / f^2.
    """
    if grid_size < 3:
        raise ConfigurationError(f"grid_size must be at least 3, got {grid_size}")
    eps = model.check_eps(eps)
    if surface is None:
        surface = catalog_surface("equator", n=model.n)
    chart = surface if isinstance(surface, ParametrizedSurface) else surface_chart(surface)
    if chart.n != model.n:
        raise ConfigurationError(
            f"Surface {chart.name} has dimension {chart.n}, model {model.name} has n={model.n}"
        )
    if not chart.minimal:
        raise ConfigurationError(
            f"Surface {chart.name} is not minimal; its coordinates are not eigenfunctions"
        )
    point = np.asarray(chart.default_point if u is None else u, dtype=float)
    if point.size != chart.n:
        raise ConfigurationError(f"Chart point needs {chart.n} coordinates, got {point.size}")

    if base is None:
        base = "constant" if mu == 0.0 else "coordinate"
    if base == "constant":

        def phi(v: np.ndarray) -> float:
            return 1.0

    else:
        index = int(np.argmax(np.abs(chart.embedding(point))))

        def phi(v: np.ndarray) -> float:
            return float(chart.embedding(v)[index])

    f, fp = model.f, model.f_prime
    n = model.n

    def field_at(y: np.ndarray) -> float:
        return phi(y[1:]) * float(h_func(y[0]))

    def metric_at(y: np.ndarray) -> np.ndarray:
        return _metric_at(chart, f, y)

    phi0 = phi(point)
    worst = 0.0
    for t in np.linspace(-eps, 0.0, grid_size + 1)[1:-1]:
        y = np.concatenate(([t], point))
        coarse = _laplace_beltrami(field_at, metric_at, y, step)
        fine = _laplace_beltrami(field_at, metric_at, y, step / 2)
        left = (4 * fine - coarse) / 3
        ft = f(t)
        right = phi0 * (
            -mu * h_func(t) / ft**2
            + n * fp(t) / ft * h_func.derivative(t)
            + h_func.second_derivative(t)
        )
        worst = max(worst, abs(left - right) / abs(phi0))
    return float(worst)


@dataclass(frozen=True)
class GeometryReport:
    """All finite-difference checks at one cone point."""

    surface: str
    n: int
    t: float
    u: tuple[float, ...]
    h: float
    shape: FDShapeOperator
    expected_scaled_norm: float
    scaled_norm: float
    expected_mean_curvature: float
    volume_density: float
    expected_volume_density: float
    norm_convergence: ConvergenceCheck
    volume_convergence: ConvergenceCheck
    tol_shape: float = 1e-4
    tol_volume: float = 1e-5
    tol_cross: float = 1e-10

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "shape_operator_scaling": abs(self.scaled_norm - self.expected_scaled_norm)
            <= self.tol_shape,
            "mean_curvature": abs(abs(self.shape.mean_curvature) - self.expected_mean_curvature)
            <= self.tol_shape,
            "axial_direction": self.shape.axial_image <= self.tol_shape,
            "metric_block": self.shape.metric_cross_term <= self.tol_cross,
            "volume_density": abs(self.volume_density - self.expected_volume_density)
            <= self.tol_volume,
            "norm_convergence": self.norm_convergence.passed,
            "volume_convergence": self.volume_convergence.passed,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "surface": self.surface,
            "n": self.n,
            "t": self.t,
            "u": list(self.u),
            "h": self.h,
            "normA": self.shape.norm,
            "normA_times_cos_t": self.scaled_norm,
            "expected_normA_times_cos_t": self.expected_scaled_norm,
            "mean_curvature": self.shape.mean_curvature,
            "expected_abs_mean_curvature": self.expected_mean_curvature,
            "principal_curvatures": [float(k) for k in self.shape.principal_curvatures],
            "axial_image": self.shape.axial_image,
            "metric_cross_term": self.shape.metric_cross_term,
            "second_form_asymmetry": self.shape.asymmetry,
            "volume_density": self.volume_density,
            "expected_volume_density": self.expected_volume_density,
            "norm_convergence": self.norm_convergence.to_dict(),
            "volume_convergence": self.volume_convergence.to_dict(),
            "checks": self.checks,
            "passed": self.passed,
        }


def verify_geometry(
    surface: MinimalHypersurface | ParametrizedSurface,
    t: float,
    u: Any | None = None,
    h: float = 1e-3,
) -> GeometryReport:
    """Run the shape-operator, mean-curvature, axial, metric and volume checks."""
    cone = cone_over(surface)
    xi = _point(cone, t, u)
    base_norm = math.sqrt(cone.surface.norm_a2)
    cos_t = math.cos(t)

    shape = fd_shape_operator(cone, t, xi[1:], h)
    volume = fd_volume_density(cone, t, xi[1:], h)
    expected_volume = cos_t**cone.n

    def norm_residual(step: float) -> float:
        return fd_shape_operator(cone, t, xi[1:], step).norm * cos_t - base_norm

    def volume_residual(step: float) -> float:
        return fd_volume_density(cone, t, xi[1:], step) / expected_volume - 1.0

    return GeometryReport(
        surface=cone.surface.name,
        n=cone.n,
        t=float(t),
        u=tuple(float(v) for v in xi[1:]),
        h=h,
        shape=shape,
        expected_scaled_norm=base_norm,
        scaled_norm=shape.norm * cos_t,
        expected_mean_curvature=cone.surface.mean_curvature / cos_t,
        volume_density=volume,
        expected_volume_density=expected_volume,
        norm_convergence=halving_check(norm_residual, h),
        volume_convergence=halving_check(volume_residual, h),
    )
