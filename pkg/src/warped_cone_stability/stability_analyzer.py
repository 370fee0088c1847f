"""Instability verdict lambda_1 + delta_1 < 0, index form and the spherical estimates."""

import asyncio
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Literal

import numpy as np

from .config import SolverConfig, SolverMethod
from .errors import CatalogError, ConfigurationError, WarpedConeError
from .hypersurface_spectra import (
    Lambda1Mode,
    MinimalHypersurface,
    catalog_surface,
    clifford_balanced,
    l1_spectrum,
    lambda1,
)
from .sturm_liouville import (
    AxialFunction,
    axial_eigenfunction,
    integrate,
    problem_for,
    solve,
)
from .warped_model import WarpedModel

Verdict = Literal[
    "unstable",
    "stable_under_fixed_boundary_normal_variations",
    "not_decided_by_criterion",
]

# Largest n for which the spherical estimate is negative
PAPER_WINDOW_MAX = 14

SOURCE_TAGS = {"finite_difference": "fd", "shooting": "shooting"}


@dataclass(frozen=True)
class SolverOptions:
    """How delta_1 and lambda_1 are obtained for a report."""

    config: SolverConfig = field(default_factory=SolverConfig)
    method: SolverMethod | None = None
    lambda1_mode: Lambda1Mode = "exact"
    num_eigen: int = 1

    @property
    def resolved_method(self) -> SolverMethod:
        return self.method or self.config.method


@dataclass(frozen=True)
class StabilityReport:
    """lambda_1, delta_1 and the criterion for one (model, surface, eps)."""

    model: str
    surface: str
    n: int
    eps: float
    lambda1: float
    lambda1_source: str
    delta1: float
    delta1_source: str
    paper_bound: float | None = None
    note: str | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def sum(self) -> float:
        return self.lambda1 + self.delta1

    @property
    def verdict(self) -> Verdict:
        if self.sum < 0.0:
            return "unstable"
        if self.lambda1_source == "bound":
            return "not_decided_by_criterion"
        return "stable_under_fixed_boundary_normal_variations"

    @property
    def unstable(self) -> bool:
        return self.verdict == "unstable"

    def describe(self) -> str:
        """One-line human summary."""
        if self.unstable:
            return "unstable, sum<0"
        if self.verdict == "not_decided_by_criterion":
            return "not decided by criterion, bound sum>=0"
        return "no destabilizing normal variation with fixed boundary exists (sum>=0)"

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "surface": self.surface,
            "n": self.n,
            "eps": self.eps,
            "lambda1": {"value": self.lambda1, "source": self.lambda1_source},
            "delta1": {"value": self.delta1, "source": self.delta1_source},
            "sum": {"value": self.sum, "source": f"{self.lambda1_source}+{self.delta1_source}"},
            "verdict": self.verdict,
            "paper_bound": (
                None
                if self.paper_bound is None
                else {"value": self.paper_bound, "source": "analytic"}
            ),
            "note": self.note,
            "diagnostics": self.diagnostics,
        }


def check_compatible(model: WarpedModel, surface: MinimalHypersurface) -> None:
    """The cone needs a surface of the model's fiber with matching dimension."""
    if surface.fiber_k != model.k:
        raise ConfigurationError(
            f"Surface {surface.name} lives in a fiber of curvature {surface.fiber_k:g}, "
            f"model {model.name!r} has k={model.k:g}"
        )
    if surface.n != model.n:
        raise ConfigurationError(
            f"Surface {surface.name} has dimension {surface.n}, model has n={model.n}"
        )


def paper_estimate_applies(model: WarpedModel, surface: MinimalHypersurface) -> bool:
    return model.name == "sphere" and surface.fiber_k == 1.0 and not surface.totally_geodesic


def verdict(
    model: WarpedModel,
    surface: MinimalHypersurface,
    eps: float,
    options: SolverOptions | None = None,
) -> StabilityReport:
    """Decide the criterion for the cone of depth eps over surface in model.

    Raises:
        ConfigurationError: Incompatible fiber curvature or inadmissible eps.
        SolverDisagreementError: FD and shooting disagree beyond tolerance.
    """
    options = options or SolverOptions()
    config = options.config
    check_compatible(model, surface)
    lam1, lam1_source = lambda1(surface, options.lambda1_mode)

    problem = problem_for(model, eps, num_eigen=options.num_eigen, clamp=config.eps_clamp)
    result = solve(problem, config, options.resolved_method)

    diagnostics: dict[str, Any] = {
        "method": result.method,
        "grid_size": result.grid_size,
        "residuals": [float(r) for r in result.residuals],
    }
    for key in (
        "cross_check",
        "shooting_eigenvalues",
        "max_discrepancy",
        "fd_refinements",
        "integrations",
    ):
        if key in result.diagnostics:
            diagnostics[key] = result.diagnostics[key]

    note = None
    bound = None
    if paper_estimate_applies(model, surface):
        bound = paper_bound(model.n)
        if model.n > PAPER_WINDOW_MAX:
            note = "beyond paper's theorem"

    return StabilityReport(
        model=model.name,
        surface=surface.name,
        n=model.n,
        eps=float(eps),
        lambda1=float(lam1),
        lambda1_source=lam1_source,
        delta1=result.delta1,
        delta1_source=SOURCE_TAGS[result.method],
        paper_bound=bound,
        note=note,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class VariationTerm:
    """a * f_i(p) * g(t); g is the j-th axial eigenfunction unless given explicitly."""

    i: int
    a: float
    j: int | None = None
    g: AxialFunction | None = None

    def __post_init__(self) -> None:
        if self.i < 1:
            raise ConfigurationError(f"Surface eigenfunction index must be >= 1, got {self.i}")
        if (self.j is None) == (self.g is None):
            raise ConfigurationError("A variation term needs exactly one of j or g")
        if self.j is not None and self.j < 1:
            raise ConfigurationError(f"Axial eigenfunction index must be >= 1, got {self.j}")


@dataclass(frozen=True)
class SeparableVariation:
    """F(p, t) = sum a_ij f_i(p) g_j(t) with L2-orthonormal f_i.

    surface_norm2 is the common squared norm of the f_i; the volume of M is
    normalized to 1 so it defaults to 1.
    """

    terms: tuple[VariationTerm, ...]
    surface_norm2: float = 1.0

    @classmethod
    def single(cls, i: int, j: int, a: float = 1.0) -> "SeparableVariation":
        return cls(terms=(VariationTerm(i=i, a=a, j=j),))

    @classmethod
    def from_function(cls, i: int, g: AxialFunction, a: float = 1.0) -> "SeparableVariation":
        return cls(terms=(VariationTerm(i=i, a=a, g=g),))

    @property
    def factorized(self) -> bool:
        return all(term.g is None for term in self.terms)


def _combine(functions: list[tuple[float, AxialFunction]], fd_step: float) -> AxialFunction:
    def second(t: Any) -> Any:
        return sum(a * g.second(t) for a, g in functions)

    exact = all(g.second is not None for _, g in functions)
    return AxialFunction(
        value=lambda t: sum(a * g(t) for a, g in functions),
        first=lambda t: sum(a * g.derivative(t) for a, g in functions),
        second=second if exact else None,
        name="+".join(g.name for _, g in functions),
        fd_step=fd_step,
    )


def _axial_index_integral(
    model: WarpedModel,
    surface: MinimalHypersurface,
    eps: float,
    mu: float,
    g: AxialFunction,
    config: SolverConfig,
) -> float:
    """Int g f^(n-2) (mu g - n f f' g' - f^2 g'' - c(n+1) f^2 g - |A|^2 g) dt.

    g'' comes from g.second when present, otherwise from difference quotients
    of g' kept inside [-eps, 0].
    """
    n, c, a2 = model.n, model.c, surface.norm_a2
    f, fp = model.f, model.f_prime
    scale = max(abs(g(t)) for t in np.linspace(-eps, 0.0, 33))
    ends = max(abs(g(-eps)), abs(g(0.0)))
    if ends > 1e-8 * max(scale, 1e-300):
        raise ConfigurationError(f"Axial function {g.name} does not vanish at -eps and 0")

    def second(t: float) -> float:
        if g.second is not None:
            return g.second(t)
        return g.fd_second(t, lower=-eps, upper=0.0)

    def integrand(t: float) -> float:
        ft = f(t)
        value = g(t)
        jacobi = (
            mu * value
            - n * ft * fp(t) * g.derivative(t)
            - ft**2 * second(t)
            - c * (n + 1) * ft**2 * value
            - a2 * value
        )
        return value * ft ** (n - 2) * jacobi

    return integrate(integrand, -eps, 0.0, config.quad_epsabs, config.quad_epsrel)


def index_form(
    v: SeparableVariation,
    model: WarpedModel,
    surface: MinimalHypersurface,
    eps: float,
    options: SolverOptions | None = None,
) -> float:
    """Second variation I(F) of the separable normal variation v.

    Pure eigen-expansions use sum a_ij^2 (lambda_i + delta_j) |f_i|^2 |g_j|_w^2.
    Anything with an explicit axial function is integrated directly, with the
    Laplacian of the surface factor replaced by -mu_i.
    """
    options = options or SolverOptions()
    config = options.config
    check_compatible(model, surface)
    if not v.terms:
        return 0.0
    if all(term.a == 0.0 for term in v.terms):
        return 0.0

    max_i = max(term.i for term in v.terms)
    lam = l1_spectrum(surface, max_i).eigenvalues

    if v.factorized:
        max_j = max(term.j or 1 for term in v.terms)
        problem = problem_for(model, eps, num_eigen=max_j, clamp=config.eps_clamp)
        delta = solve(problem, config, options.resolved_method).eigenvalues
        coefficients: dict[tuple[int, int], float] = {}
        for term in v.terms:
            key = (term.i, term.j or 1)
            coefficients[key] = coefficients.get(key, 0.0) + term.a
        return v.surface_norm2 * sum(
            a * a * (lam[i - 1] + delta[j - 1]) for (i, j), a in coefficients.items()
        )

    problem = problem_for(model, eps, num_eigen=1, clamp=config.eps_clamp)
    eigen_cache: dict[int, AxialFunction] = {}
    grouped: dict[int, list[tuple[float, AxialFunction]]] = {}
    for term in v.terms:
        g = term.g
        if g is None:
            assert term.j is not None
            if term.j not in eigen_cache:
                _, eigen_cache[term.j] = axial_eigenfunction(
                    problem, term.j, tol=config.shooting_tol
                )
            g = eigen_cache[term.j]
        grouped.setdefault(term.i, []).append((term.a, g))

    total = 0.0
    for i, functions in grouped.items():
        mu = lam[i - 1] + surface.norm_a2
        combined = _combine(functions, config.fd_step)
        total += _axial_index_integral(model, surface, eps, mu, combined, config)
    return v.surface_norm2 * total


def paper_h(eps: float, n: int) -> AxialFunction:
    """h(t) = sin(pi t / eps) / sqrt(cos(t)^(n-2)) on [-eps, 0]."""
    if not 0.0 < eps <= math.pi / 2:
        raise ConfigurationError(f"paper_h needs 0 < eps <= pi/2, got {eps}")
    if n < 2:
        raise ConfigurationError(f"n must be >= 2, got {n}")
    k = math.pi / eps
    m = (n - 2) / 2

    def sine(t):
        # sin(k t) = -sin(k (t + eps)); each form is exactly zero at its own endpoint
        near_left = np.asarray(t) < -eps / 2
        s = np.where(near_left, -np.sin(k * (t + eps)), np.sin(k * t))
        c = np.where(near_left, -np.cos(k * (t + eps)), np.cos(k * t))
        return s, c

    def value(t):
        s, _ = sine(t)
        return s * np.cos(t) ** (-m)

    def first(t):
        s, c = sine(t)
        return (k * c + m * np.tan(t) * s) * np.cos(t) ** (-m)

    def second(t):
        s, c = sine(t)
        tan = np.tan(t)
        return ((-k * k + m + m * (1 + m) * tan**2) * s + 2 * m * k * tan * c) * np.cos(t) ** (-m)

    return AxialFunction(value=value, first=first, second=second, name=f"h(eps={eps:g}, n={n})")


@dataclass(frozen=True)
class PaperIntegrals:
    i1: float
    i2: float
    i3: float

    @property
    def quotient(self) -> float:
        """(I1 - I2) / I3, the Rayleigh quotient of h."""
        return (self.i1 - self.i2) / self.i3

    def bound(self, n: int) -> float:
        """-n + (I1 - I2) / I3."""
        return -n + self.quotient

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.i1, self.i2, self.i3)


def paper_integrals(
    eps: float, n: int, epsabs: float = 1e-10, epsrel: float = 1e-10
) -> PaperIntegrals:
    """Quadrature of I1, I2, I3 for the test function h on [-eps, 0].

    I1 keeps the cross term ((n-2) pi / (4 eps)) Int sin(2 pi t/eps) sin(2t), which
    vanishes at eps = pi/2.
    """
    if not 0.0 < eps <= math.pi / 2:
        raise ConfigurationError(f"paper_integrals needs 0 < eps <= pi/2, got {eps}")
    k = math.pi / eps

    def quad(fn: Callable[[float], float]) -> float:
        return integrate(fn, -eps, 0.0, epsabs, epsrel)

    i1 = (
        k**2 * quad(lambda t: math.cos(k * t) ** 2 * math.cos(t) ** 2)
        + (n - 2) ** 2 / 4 * quad(lambda t: math.sin(k * t) ** 2 * math.sin(t) ** 2)
        + (n - 2) * k / 4 * quad(lambda t: math.sin(2 * k * t) * math.sin(2 * t))
    )
    i2 = (n + 1) * quad(lambda t: math.cos(t) ** 2 * math.sin(k * t) ** 2)
    i3 = quad(lambda t: math.sin(k * t) ** 2)
    return PaperIntegrals(i1=i1, i2=i2, i3=i3)


def paper_integral_limits(n: int) -> PaperIntegrals:
    """Closed forms of I1, I2, I3 at eps = pi/2."""
    return PaperIntegrals(
        i1=math.pi / 2 * (1 + ((n - 2) / 4) ** 2),
        i2=(n + 1) * math.pi / 8,
        i3=math.pi / 4,
    )


def paper_bound(n: int) -> float:
    """n^2/8 - 2n + 2, the limit of -n + (I1 - I2)/I3."""
    if n < 2:
        raise ConfigurationError(f"n must be >= 2, got {n}")
    return n * n / 8 - 2 * n + 2


def paper_bound_exact(n: int) -> Fraction:
    if n < 2:
        raise ConfigurationError(f"n must be >= 2, got {n}")
    return Fraction(n * n, 8) - 2 * n + 2


def paper_window(n_max: int = 30) -> list[int]:
    """Dimensions 2 <= n <= n_max with a negative spherical estimate."""
    return [n for n in range(2, n_max + 1) if paper_bound_exact(n) < 0]


def euclidean_delta(n: int, eps: float, j: int = 1) -> float:
    """delta_j = (n-1)^2/4 + (j pi / ln(1/(1-eps)))^2 for f = 1 + t."""
    if not 0.0 < eps < 1.0:
        raise ConfigurationError(f"Euclidean eps must lie in (0, 1), got {eps}")
    return (n - 1) ** 2 / 4 + (j * math.pi / math.log(1.0 / (1.0 - eps))) ** 2


def euclidean_limit_sum(n: int) -> float:
    """lim_{eps -> 1} of -n + delta_1."""
    return (n - 1) ** 2 / 4 - n


def simons_window(n_max: int = 30) -> list[int]:
    return [n for n in range(2, n_max + 1) if Fraction((n - 1) ** 2, 4) - n < 0]


def clifford_family(n: int) -> MinimalHypersurface:
    return clifford_balanced(n)


def equator_family(n: int) -> MinimalHypersurface:
    return catalog_surface("equator", n=n)


def flat_subtorus_family(n: int) -> MinimalHypersurface:
    return catalog_surface("flat_subtorus", n=n)


SURFACE_FAMILIES: dict[str, Callable[[int], MinimalHypersurface]] = {
    "clifford": clifford_family,
    "equator": equator_family,
    "flat_subtorus": flat_subtorus_family,
}


def surface_family(name: str) -> Callable[[int], MinimalHypersurface]:
    family = SURFACE_FAMILIES.get(name)
    if family is None:
        raise CatalogError(
            f"Unknown surface family {name!r}; available: {', '.join(SURFACE_FAMILIES)}"
        )
    return family


@dataclass(frozen=True)
class SweepFailure:
    n: int
    eps: float
    error: str

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "eps": self.eps, "error": self.error}


@dataclass(frozen=True)
class SweepResult:
    """Reports ordered by (n, eps), plus the cells that failed."""

    model: str
    family: str
    reports: tuple[StabilityReport, ...]
    failures: tuple[SweepFailure, ...] = ()

    @property
    def n_values(self) -> list[int]:
        return sorted({r.n for r in self.reports})

    @property
    def largest_eps(self) -> float | None:
        return max((r.eps for r in self.reports), default=None)

    def window(self, eps: float | None = None) -> list[int]:
        """Unstable n at the given eps (default: the largest eps of the sweep)."""
        eps = self.largest_eps if eps is None else eps
        return sorted(r.n for r in self.reports if r.eps == eps and r.unstable)

    def thresholds(self) -> dict[int, float | None]:
        """Per n, the smallest tested eps from which every larger tested eps is unstable."""
        out: dict[int, float | None] = {}
        for n in self.n_values:
            cells = sorted((r for r in self.reports if r.n == n), key=lambda r: r.eps)
            threshold = None
            for report in reversed(cells):
                if not report.unstable:
                    break
                threshold = report.eps
            out[n] = threshold
        return out

    def summary(self) -> str:
        eps = self.largest_eps
        if eps is None:
            return f"sweep {self.model}/{self.family}: no completed cells"
        window = self.window(eps)
        if not window:
            text = "no unstable cells"
        else:
            contiguous = window == list(range(window[0], window[-1] + 1))
            shape = "contiguous" if contiguous else "not contiguous"
            text = f"unstable for n={window[0]}..{window[-1]} ({shape})"
            beyond = [n for n in window if n > PAPER_WINDOW_MAX]
            if self.model == "sphere" and beyond:
                text += f"; n={beyond[0]}..{beyond[-1]} beyond paper's theorem"
        failed = f", {len(self.failures)} failed cells" if self.failures else ""
        return f"sweep {self.model}/{self.family} at eps={eps:.12g}: {text}{failed}"


async def run_sweep(
    model_for: Callable[[int], WarpedModel],
    family: str,
    n_values: Iterable[int],
    eps_values: Iterable[float],
    options: SolverOptions | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Evaluate every (n, eps) cell on a worker pool of size jobs.

    Failed cells are recorded and the sweep carries on; results are ordered by
    (n, eps) whatever the completion order.
    """
    options = options or SolverOptions()
    make_surface = surface_family(family)
    ns = sorted(set(int(n) for n in n_values))
    epss = sorted(set(float(e) for e in eps_values))
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}")

    models = {n: model_for(n) for n in ns}
    surfaces = {n: make_surface(n) for n in ns}
    for n in ns:
        check_compatible(models[n], surfaces[n])
        for eps in epss:
            models[n].check_eps(eps, options.config.eps_clamp)

    def cell(n: int, eps: float) -> StabilityReport | SweepFailure:
        try:
            return verdict(models[n], surfaces[n], eps, options)
        except WarpedConeError as e:
            return SweepFailure(n=n, eps=eps, error=str(e))

    loop = asyncio.get_running_loop()
    cells = [(n, eps) for n in ns for eps in epss]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = await asyncio.gather(
            *(loop.run_in_executor(pool, cell, n, eps) for n, eps in cells)
        )

    reports = []
    failures = []
    for outcome in outcomes:
        if isinstance(outcome, SweepFailure):
            sys.stderr.write(
                f"Sweep cell n={outcome.n} eps={outcome.eps:.12g} failed: {outcome.error}\n"
            )
            failures.append(outcome)
        else:
            reports.append(outcome)
    name = models[ns[0]].name if ns else "?"
    return SweepResult(
        model=name, family=family, reports=tuple(reports), failures=tuple(failures)
    )


def sweep(
    model_for: Callable[[int], WarpedModel],
    family: str,
    n_values: Iterable[int],
    eps_values: Iterable[float],
    options: SolverOptions | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Synchronous wrapper around run_sweep."""
    return asyncio.run(run_sweep(model_for, family, n_values, eps_values, options, jobs))
