"""Axial Sturm-Liouville problem (lambda^n g')' + c(n+1) lambda^n g + delta lambda^(n-2) g = 0.

Dirichlet conditions at t = -eps and t = 0. Two independent solvers are provided:
a conservative finite-difference discretization solved as a symmetric tridiagonal
eigenproblem, and a shooting method on the modified Pruefer angle that counts
interior zeros to bracket each eigenvalue.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Literal

import numpy as np
from scipy.integrate import quad, solve_ivp, trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .config import SolverConfig, SolverMethod
from .errors import (
    ConfigurationError,
    QuadratureError,
    SolverDisagreementError,
    SolverError,
)
from .warped_model import DEFAULT_EPS_CLAMP, ConeDensity, WarpedModel, density

SolverName = Literal["finite_difference", "shooting"]

MIN_GRID_SIZE = 16
DEFAULT_FD_STEP = 1e-3
# Grid doublings tried before FD and shooting are declared in disagreement
MAX_FD_REFINEMENTS = 3


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
    limit: int = 200,
) -> float:
    """Adaptive Gauss-Kronrod quadrature that fails loudly.

    Raises:
        QuadratureError: quad reported a problem and its error estimate is not
            within a few orders of the requested tolerance.
    """
    result = quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, abserr = result[0], result[1]
    if not math.isfinite(value):
        raise QuadratureError(f"Quadrature on [{a:.6g}, {b:.6g}] returned {value}")
    if len(result) > 3:
        allowed = 1e3 * max(epsabs, epsrel * abs(value))
        if abserr > allowed:
            raise QuadratureError(
                f"Quadrature on [{a:.6g}, {b:.6g}] did not converge "
                f"(error estimate {abserr:.3g}): {result[3]}"
            )
    return float(value)


@dataclass(frozen=True)
class AxialFunction:
    """Function of t with its first derivative and, optionally, its second.

    When no second derivative is supplied it is obtained by a fourth-order central
    difference of the first derivative.
    """

    value: Callable[[Any], Any]
    first: Callable[[Any], Any]
    second: Callable[[Any], Any] | None = None
    name: str = "g"
    fd_step: float = DEFAULT_FD_STEP

    def __call__(self, t: Any) -> Any:
        return self.value(t)

    def derivative(self, t: Any) -> Any:
        return self.first(t)

    def second_derivative(self, t: Any) -> Any:
        if self.second is not None:
            return self.second(t)
        return self.fd_second(t)

    def fd_second(
        self,
        t: Any,
        step: float | None = None,
        lower: float = -math.inf,
        upper: float = math.inf,
    ) -> Any:
        """Difference quotient of g' whose stencil stays inside [lower, upper].

        Finite bounds need a scalar t; near a bound the stencil turns one-sided.
        """
        s = self.fd_step if step is None else step
        d = self.first
        if math.isfinite(lower) and t - 2 * s < lower:
            return (-3 * d(t) + 4 * d(t + s) - d(t + 2 * s)) / (2 * s)
        if math.isfinite(upper) and t + 2 * s > upper:
            return (3 * d(t) - 4 * d(t - s) + d(t - 2 * s)) / (2 * s)
        return (-d(t + 2 * s) + 8 * d(t + s) - 8 * d(t - s) + d(t - 2 * s)) / (12 * s)


def sine_mode(eps: float, j: int = 1) -> AxialFunction:
    """sin(j pi t / eps), which vanishes at -eps and 0."""
    k = j * math.pi / eps
    return AxialFunction(
        value=lambda t: np.sin(k * t),
        first=lambda t: k * np.cos(k * t),
        second=lambda t: -(k**2) * np.sin(k * t),
        name=f"sin({j}*pi*t/eps)",
    )


def polynomial_function(coefficients: list[float], name: str = "poly") -> AxialFunction:
    """Polynomial in t, coefficients from the constant term upwards."""
    poly = np.polynomial.Polynomial(coefficients)
    d1 = poly.deriv(1)
    d2 = poly.deriv(2)
    return AxialFunction(
        value=lambda t: poly(t),
        first=lambda t: d1(t),
        second=lambda t: d2(t),
        name=name,
    )


@dataclass(frozen=True)
class SturmLiouvilleProblem:
    """Regular weighted eigenproblem on [-eps, 0].

    p = lambda^n, q = c(n+1) lambda^n, w = lambda^(n-2).
    """

    density: ConeDensity
    n: int
    c: float
    eps: float
    num_eigen: int = 3

    def __post_init__(self) -> None:
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise ConfigurationError(f"Truncation depth must be positive, got eps={self.eps}")
        if self.eps >= self.density.model.eps_max:
            raise ConfigurationError(
                f"eps={self.eps} reaches the singular endpoint of model {self.model.name!r}"
            )
        if self.num_eigen < 1:
            raise ConfigurationError(f"num_eigen must be >= 1, got {self.num_eigen}")

    @property
    def model(self) -> WarpedModel:
        return self.density.model

    def p(self, t: Any) -> Any:
        return self.density.lam(t) ** self.n

    def q(self, t: Any) -> Any:
        return self.c * (self.n + 1) * self.density.lam(t) ** self.n

    def w(self, t: Any) -> Any:
        return self.density.lam(t) ** (self.n - 2)

    def log_p_prime(self, t: Any) -> Any:
        """p'/p = n lambda'/lambda."""
        return self.n * self.density.log_derivative(t)

    def max_lambda_squared(self, samples: int = 257) -> float:
        t = np.linspace(-self.eps, 0.0, samples)
        return float(np.max(self.density.lam(t) ** 2))


@dataclass(frozen=True)
class SpectralResult:
    """Lowest eigenpairs of a SturmLiouvilleProblem.

    Eigenfunctions are sampled on ``t`` (endpoints included), normalized in the
    weighted L2 norm with weight lambda^(n-2) and signed so that g'(-eps) > 0.
    """

    problem: SturmLiouvilleProblem
    eigenvalues: np.ndarray
    t: np.ndarray
    eigenfunctions: np.ndarray
    method: SolverName
    grid_size: int
    residuals: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)
    functions: tuple[AxialFunction, ...] | None = None

    @property
    def delta1(self) -> float:
        return float(self.eigenvalues[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.problem.model.name,
            "n": self.problem.n,
            "c": self.problem.c,
            "eps": self.problem.eps,
            "method": self.method,
            "grid_size": self.grid_size,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": [float(r) for r in self.residuals],
        }


def problem_for(
    model: WarpedModel,
    eps: float,
    num_eigen: int = 3,
    clamp: float = DEFAULT_EPS_CLAMP,
) -> SturmLiouvilleProblem:
    """Axial problem of the truncated cone of depth eps in model."""
    model.check_eps(eps, clamp)
    return SturmLiouvilleProblem(
        density=density(model), n=model.n, c=model.c, eps=float(eps), num_eigen=num_eigen
    )


def _fix_sign(g: np.ndarray) -> np.ndarray:
    # First sample that is clearly nonzero decides the sign
    scale = np.max(np.abs(g))
    idx = np.flatnonzero(np.abs(g) > 1e-8 * scale)
    if idx.size and g[idx[0]] < 0:
        return -g
    return g


def _fd_eigenpairs(
    problem: SturmLiouvilleProblem, grid_size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Lowest eigenpairs of the conservative discretization on grid_size interior points."""
    count = problem.num_eigen
    eps = problem.eps
    h = eps / (grid_size + 1)
    t = -eps + h * np.arange(1, grid_size + 1)
    t_half = -eps + h * (np.arange(grid_size + 1) + 0.5)

    p_half = problem.p(t_half)
    q = problem.q(t)
    w = problem.w(t)
    if not (np.all(np.isfinite(p_half)) and np.all(np.isfinite(q)) and np.all(np.isfinite(w))):
        raise SolverError(f"Non-finite coefficient on [-{eps:.6g}, 0] for {problem.model.name!r}")
    if np.any(p_half <= 0.0) or np.any(w <= 0.0):
        raise SolverError(f"Problem on [-{eps:.6g}, 0] is not regular (p or w not positive)")

    diag = (p_half[:-1] + p_half[1:]) / h**2 - q
    off = -p_half[1:-1] / h**2

    # A g = delta W g  ->  (W^-1/2 A W^-1/2) y = delta y,  g = W^-1/2 y
    sqrt_w = np.sqrt(w)
    d = diag / w
    e = off / (sqrt_w[:-1] * sqrt_w[1:])
    try:
        values, vectors = eigh_tridiagonal(
            d, e, select="i", select_range=(0, count - 1), lapack_driver="stebz"
        )
    except (np.linalg.LinAlgError, ValueError) as ex:
        raise SolverError(f"Tridiagonal eigensolver failed: {ex}") from ex

    g = vectors / sqrt_w[:, None]
    norms = np.sqrt(h * np.sum(w[:, None] * g**2, axis=0))
    g = g / norms
    for i in range(g.shape[1]):
        g[:, i] = _fix_sign(g[:, i])
    return values, g, t, h


def solve_fd(
    problem: SturmLiouvilleProblem,
    grid_size: int = 1024,
    richardson: bool = True,
) -> SpectralResult:
    """Finite-difference eigenpairs with one Richardson step in h^2.

    Eigenvalues from grid_size and 2*grid_size interior points are combined as
    (h1^2 d2 - h2^2 d1) / (h1^2 - h2^2). Eigenfunctions are those of the finer grid.

    Raises:
        SolverError: Grid too coarse for num_eigen, or a non-finite coefficient.
    """
    if grid_size < MIN_GRID_SIZE:
        raise SolverError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    if problem.num_eigen > grid_size // 8:
        raise SolverError(
            f"grid_size {grid_size} is too coarse for {problem.num_eigen} reliable eigenvalues"
        )

    coarse, g, t, h = _fd_eigenpairs(problem, grid_size)
    diagnostics: dict[str, Any] = {"coarse_eigenvalues": [float(v) for v in coarse]}
    values = coarse
    if richardson:
        fine, g, t, h2 = _fd_eigenpairs(problem, 2 * grid_size)
        values = (h**2 * fine - h2**2 * coarse) / (h**2 - h2**2)
        diagnostics["fine_eigenvalues"] = [float(v) for v in fine]
        diagnostics["richardson_correction"] = [float(v) for v in values - fine]
        h = h2

    if not np.all(np.isfinite(values)):
        raise SolverError("Finite-difference eigenvalues are not finite")

    t_full = np.concatenate(([-problem.eps], t, [0.0]))
    funcs = np.zeros((problem.num_eigen, t_full.size))
    funcs[:, 1:-1] = g.T
    residuals = np.array(
        [residual(problem, float(v), funcs[i], t_full) for i, v in enumerate(values)]
    )
    diagnostics["step"] = h
    return SpectralResult(
        problem=problem,
        eigenvalues=np.asarray(values, dtype=float),
        t=t_full,
        eigenfunctions=funcs,
        method="finite_difference",
        grid_size=int(t.size),
        residuals=residuals,
        diagnostics=diagnostics,
    )


class _Shooter:
    """Modified Pruefer integration g = R sin(theta), g' = R cos(theta).

    theta' = cos^2 + ((q + delta w)/p) sin^2 + (p'/p) sin cos, theta(-eps) = 0,
    so g has floor(theta(0)/pi) zeros in (-eps, 0) and the j-th eigenvalue
    solves theta(0) = j pi.
    """

    def __init__(self, problem: SturmLiouvilleProblem, rtol: float, atol: float = 1e-12):
        self.problem = problem
        self.rtol = rtol
        self.atol = atol
        self.evaluations = 0

    def _rhs(self, delta: float) -> Callable[[float, np.ndarray], list[float]]:
        problem = self.problem
        c_term = problem.c * (problem.n + 1)

        def rhs(t: float, y: np.ndarray) -> list[float]:
            lam = problem.density.lam(t)
            ratio = c_term + delta / lam**2  # (q + delta w) / p
            log_p = problem.log_p_prime(t)
            s, co = math.sin(y[0]), math.cos(y[0])
            return [
                co * co + ratio * s * s + log_p * s * co,
                (1.0 - ratio) * s * co - log_p * co * co,
            ]

        return rhs

    def integrate(self, delta: float, dense: bool = False, t_eval: np.ndarray | None = None):
        self.evaluations += 1
        sol = solve_ivp(
            self._rhs(delta),
            (-self.problem.eps, 0.0),
            [0.0, 0.0],
            method="RK45",
            rtol=self.rtol,
            atol=self.atol,
            dense_output=dense,
            t_eval=t_eval,
        )
        if sol.status != 0:
            raise SolverError(
                f"Shooting integration failed at delta={delta:.12g} "
                f"(eps={self.problem.eps:.12g}): {sol.message}"
            )
        return sol

    def angle(self, delta: float) -> float:
        return float(self.integrate(delta).y[0, -1])


def _bracket(
    shooter: _Shooter, j: int, lower: float, ceiling: float
) -> tuple[float, float]:
    """Find [a, b] with theta(0; a) < j pi <= theta(0; b) by doubling from lower."""
    target = j * math.pi
    step = 1.0
    hi = lower + step
    while shooter.angle(hi) < target:
        if hi >= ceiling:
            raise SolverError(
                f"No bracket for eigenvalue {j} below ceiling {ceiling:.6g} "
                f"(eps={shooter.problem.eps:.6g})"
            )
        lower = hi
        step *= 2.0
        hi = min(hi + step, ceiling)
    return lower, hi


def delta_bounds(problem: SturmLiouvilleProblem) -> tuple[float, float]:
    """Lower bound with no oscillation and the shooting ceiling for delta."""
    lam2 = problem.max_lambda_squared()
    lower = -abs(problem.c) * (problem.n + 1) * lam2 - 1.0
    oscillation = max(1.0, lam2) * (50 * math.pi / problem.eps) ** 2
    ceiling = problem.c * (problem.n + 1) * lam2 + oscillation
    return lower, ceiling


def _shooting_function(
    shooter: _Shooter, delta: float, epsabs: float, epsrel: float, j: int
) -> AxialFunction:
    problem = shooter.problem
    sol = shooter.integrate(delta, dense=True).sol

    def raw(t: Any) -> Any:
        y = sol(t)
        return np.exp(y[1]) * np.sin(y[0])

    norm2 = integrate(lambda t: problem.w(t) * raw(t) ** 2, -problem.eps, 0.0, epsabs, epsrel)
    if norm2 <= 0.0:
        raise SolverError(f"Eigenfunction {j} has zero weighted norm")
    scale = 1.0 / math.sqrt(norm2)

    def value(t: Any) -> Any:
        return scale * raw(t)

    def first(t: Any) -> Any:
        y = sol(t)
        return scale * np.exp(y[1]) * np.cos(y[0])

    return AxialFunction(value=value, first=first, name=f"g{j}")


def solve_shooting(
    problem: SturmLiouvilleProblem,
    tol: float = 1e-10,
    rtol: float = 1e-10,
    samples: int = 513,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
) -> SpectralResult:
    """Eigenpairs certified by oscillation count, bracketing and Brent bisection.

    Raises:
        SolverError: No bracket below the delta ceiling, or the integrator failed
            (step underflow close to a singular endpoint).
    """
    if tol <= 0.0:
        raise ConfigurationError(f"Shooting tolerance must be positive, got {tol}")
    shooter = _Shooter(problem, rtol)
    lower, ceiling = delta_bounds(problem)

    values: list[float] = []
    functions: list[AxialFunction] = []
    for j in range(1, problem.num_eigen + 1):
        a, b = _bracket(shooter, j, lower, ceiling)
        target = j * math.pi
        delta = brentq(
            lambda d: shooter.angle(d) - target, a, b, xtol=tol, rtol=4 * np.finfo(float).eps
        )
        values.append(float(delta))
        functions.append(_shooting_function(shooter, delta, epsabs, epsrel, j))
        lower = delta

    t = np.linspace(-problem.eps, 0.0, samples)
    funcs = np.array([fn(t) for fn in functions])
    funcs[:, 0] = 0.0
    funcs[:, -1] = 0.0
    residuals = np.array([residual(problem, v, funcs[i], t) for i, v in enumerate(values)])
    return SpectralResult(
        problem=problem,
        eigenvalues=np.asarray(values),
        t=t,
        eigenfunctions=funcs,
        method="shooting",
        grid_size=samples,
        residuals=residuals,
        diagnostics={"integrations": shooter.evaluations, "ceiling": ceiling, "tol": tol},
        functions=tuple(functions),
    )


def axial_eigenfunction(
    problem: SturmLiouvilleProblem,
    j: int = 1,
    tol: float = 1e-10,
    rtol: float = 1e-11,
) -> tuple[float, AxialFunction]:
    """Smooth j-th eigenpair (delta_j, g_j) from the shooting integrator."""
    if j < 1:
        raise ConfigurationError(f"Eigenfunction index must be >= 1, got {j}")
    sub = SturmLiouvilleProblem(
        density=problem.density, n=problem.n, c=problem.c, eps=problem.eps, num_eigen=j
    )
    result = solve_shooting(sub, tol=tol, rtol=rtol, samples=65)
    assert result.functions is not None
    return float(result.eigenvalues[j - 1]), result.functions[j - 1]


def _check_boundary(problem: SturmLiouvilleProblem, g: AxialFunction) -> None:
    samples = np.linspace(-problem.eps, 0.0, 65)
    scale = max(float(np.max(np.abs(g(samples)))), 1e-300)
    ends = max(abs(float(g(-problem.eps))), abs(float(g(0.0))))
    if ends > 1e-8 * scale:
        raise ConfigurationError(
            f"Test function {g.name} does not vanish at t = -eps and t = 0 (|g| = {ends:.3g})"
        )


def rayleigh_quotient_axial(
    problem: SturmLiouvilleProblem,
    g: AxialFunction,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
) -> float:
    """Int lambda^n (g'^2 - c(n+1) g^2) / Int lambda^(n-2) g^2; never below delta_1.

    Raises:
        ConfigurationError: g violates the boundary conditions or vanishes.
    """
    _check_boundary(problem, g)
    a, b = -problem.eps, 0.0
    denominator = integrate(lambda t: problem.w(t) * g(t) ** 2, a, b, epsabs, epsrel)
    if denominator <= 0.0:
        raise ConfigurationError(f"Test function {g.name} is identically zero")
    numerator = integrate(
        lambda t: problem.p(t) * g.derivative(t) ** 2 - problem.q(t) * g(t) ** 2,
        a,
        b,
        epsabs,
        epsrel,
    )
    return numerator / denominator


def residual(
    problem: SturmLiouvilleProblem,
    delta: float,
    g: np.ndarray,
    t: np.ndarray | None = None,
) -> float:
    """Max interior |(p g')' + q g + delta w g| on a uniform grid, by second-order
    differencing, normalized by max|g| * max w."""
    g = np.asarray(g, dtype=float)
    if t is None:
        t = np.linspace(-problem.eps, 0.0, g.size)
    h = float(t[1] - t[0])
    p_half = problem.p(0.5 * (t[:-1] + t[1:]))
    flux = p_half * np.diff(g) / h
    divergence = np.diff(flux) / h
    inner = t[1:-1]
    value = divergence + (problem.q(inner) + delta * problem.w(inner)) * g[1:-1]
    scale = float(np.max(np.abs(g))) * float(np.max(problem.w(t)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(value)) / scale)


def weighted_gram(
    result: SpectralResult, epsabs: float = 1e-12, epsrel: float = 1e-12
) -> np.ndarray:
    """Matrix of Int g_i g_j lambda^(n-2) dt.

    Smooth eigenfunctions are integrated adaptively; sampled ones with the
    trapezoidal rule, which on the uniform solver grid is exactly the discrete
    inner product the finite-difference eigenvectors are orthonormal in.
    """
    problem = result.problem
    k = len(result.eigenvalues)
    gram = np.zeros((k, k))
    if result.functions is not None:
        fns = result.functions
        for i in range(k):
            for j in range(i, k):
                gram[i, j] = gram[j, i] = integrate(
                    lambda t, a=fns[i], b=fns[j]: problem.w(t) * a(t) * b(t),
                    -problem.eps,
                    0.0,
                    epsabs,
                    epsrel,
                )
        return gram
    w = problem.w(result.t)
    for i in range(k):
        for j in range(i, k):
            integrand = w * result.eigenfunctions[i] * result.eigenfunctions[j]
            gram[i, j] = gram[j, i] = float(trapezoid(integrand, result.t))
    return gram


def random_test_functions(
    problem: SturmLiouvilleProblem,
    count: int = 100,
    seed: int = 0,
    max_degree: int = 3,
    max_mode: int = 4,
) -> list[AxialFunction]:
    """Random admissible functions P(s) sin(m pi s) with s = (t + eps)/eps."""
    rng = np.random.default_rng(seed)
    eps = problem.eps
    functions: list[AxialFunction] = []
    for index in range(count):
        degree = int(rng.integers(0, max_degree + 1))
        coeffs = rng.normal(size=degree + 1)
        coeffs[0] = coeffs[0] if abs(coeffs[0]) > 0.1 else 1.0
        m = int(rng.integers(1, max_mode + 1))
        poly = np.polynomial.Polynomial(coeffs)
        dpoly = poly.deriv(1)
        d2poly = poly.deriv(2)
        k = m * math.pi

        def value(t, poly=poly, k=k):
            s = (t + eps) / eps
            return poly(s) * np.sin(k * s)

        def first(t, poly=poly, dpoly=dpoly, k=k):
            s = (t + eps) / eps
            return (dpoly(s) * np.sin(k * s) + k * poly(s) * np.cos(k * s)) / eps

        def second(t, poly=poly, dpoly=dpoly, d2poly=d2poly, k=k):
            s = (t + eps) / eps
            return (
                d2poly(s) * np.sin(k * s)
                + 2 * k * dpoly(s) * np.cos(k * s)
                - k**2 * poly(s) * np.sin(k * s)
            ) / eps**2

        functions.append(
            AxialFunction(value=value, first=first, second=second, name=f"random{index}")
        )
    return functions


def solve(
    problem: SturmLiouvilleProblem,
    config: SolverConfig,
    method: SolverMethod | None = None,
) -> SpectralResult:
    """Solve with the configured method; ``both`` cross-checks FD against shooting.

    On disagreement the FD grid is doubled up to MAX_FD_REFINEMENTS times, which
    matters close to a singular endpoint where lambda varies on a short scale.

    Raises:
        SolverDisagreementError: The two solvers differ by more than
            max(agreement_atol, agreement_rtol * |delta|) for some eigenvalue.
    """
    method = method or config.method
    fd = None
    shoot = None
    if method in ("fd", "both"):
        fd = solve_fd(problem, config.grid_size, config.richardson)
    if method in ("shooting", "both"):
        shoot = solve_shooting(
            problem,
            tol=config.shooting_tol,
            rtol=config.shooting_rtol,
            samples=config.shooting_grid,
            epsabs=config.quad_epsabs,
            epsrel=config.quad_epsrel,
        )
    if fd is None:
        assert shoot is not None
        return shoot
    if shoot is None:
        return fd

    allowed = np.maximum(config.agreement_atol, config.agreement_rtol * np.abs(shoot.eigenvalues))
    gap = np.abs(fd.eigenvalues - shoot.eigenvalues)
    grid_size = config.grid_size
    refinements = 0
    while np.any(gap > allowed) and refinements < MAX_FD_REFINEMENTS:
        grid_size *= 2
        refinements += 1
        fd = solve_fd(problem, grid_size, config.richardson)
        gap = np.abs(fd.eigenvalues - shoot.eigenvalues)

    check = {
        "cross_check": "shooting",
        "shooting_eigenvalues": [float(v) for v in shoot.eigenvalues],
        "max_discrepancy": float(np.max(gap)),
        "allowed_discrepancy": [float(a) for a in allowed],
        "fd_refinements": refinements,
    }
    if np.any(gap > allowed):
        worst = int(np.argmax(gap / allowed))
        raise SolverDisagreementError(
            f"FD and shooting disagree for eigenvalue {worst + 1} "
            f"({fd.eigenvalues[worst]:.12g} vs {shoot.eigenvalues[worst]:.12g}, "
            f"eps={problem.eps:.12g}, n={problem.n})",
            diagnostics={**fd.diagnostics, **check},
        )
    return replace(fd, diagnostics={**fd.diagnostics, **check})
