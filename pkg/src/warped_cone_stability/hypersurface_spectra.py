"""Catalog of closed minimal hypersurfaces and spectra of L1 = -Laplacian - |A|^2."""

import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Literal

import numpy as np

from .errors import CatalogError, ConfigurationError

SpectrumSource = Literal["exact_constant_A", "catalog_formula", "upper_bound_only"]
Lambda1Mode = Literal["exact", "bound"]

# Product-sphere eigenvalues are enumerated for a, b <= ENUM_LIMIT
ENUM_LIMIT = 50
MAX_COUNT = 100

CATALOG_DESCRIPTIONS = {
    "equator": "totally geodesic S^n in S^(n+1) (fiber_k = 1, |A|^2 = 0)",
    "clifford": "S^p(sqrt(p/n)) x S^q(sqrt(q/n)) in S^(n+1), p + q = n (fiber_k = 1, |A|^2 = n)",
    "flat_subtorus": "totally geodesic T^n = R^n/(2 pi Z)^n in T^(n+1) (fiber_k = 0, |A|^2 = 0)",
}


@dataclass(frozen=True)
class MinimalHypersurface:
    """Closed minimal hypersurface of the fiber with constant |A|^2.

    Volume is normalized to 1; every quantity used downstream is either a ratio
    of integrals or scale-free.
    """

    name: str
    kind: str
    n: int
    fiber_k: float
    norm_a2: float
    params: tuple[int, ...] = field(default_factory=tuple)

    @property
    def totally_geodesic(self) -> bool:
        return self.norm_a2 == 0.0

    @property
    def volume(self) -> float:
        return 1.0

    @property
    def integral_a2(self) -> float:
        """Int |A|^2 dM."""
        return self.norm_a2 * self.volume

    @property
    def radii(self) -> tuple[float, ...]:
        if self.kind == "clifford":
            p, q = self.params
            return (math.sqrt(p / self.n), math.sqrt(q / self.n))
        if self.kind == "equator":
            return (1.0,)
        return ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "n": self.n,
            "fiber_k": self.fiber_k,
            "normA2": self.norm_a2,
            "totally_geodesic": self.totally_geodesic,
            "params": list(self.params),
        }


@dataclass(frozen=True)
class HypersurfaceSpectrum:
    """Ordered eigenvalues of L1 with the provenance of the numbers."""

    surface: str
    n: int
    eigenvalues: np.ndarray
    source: SpectrumSource

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            "surface": self.surface,
            "n": self.n,
            "source": self.source,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }


def catalog_surface(
    name: str, n: int | None = None, p: int | None = None, q: int | None = None
) -> MinimalHypersurface:
    """Build a catalog entry.

    Args:
        name: equator, clifford or flat_subtorus.
        n: Dimension (equator, flat_subtorus; optional for clifford).
        p: First sphere factor of a Clifford hypersurface.
        q: Second sphere factor of a Clifford hypersurface.

    Raises:
        CatalogError: Unknown name, p or q < 1, or p + q != n.
    """
    if name == "clifford":
        if p is None or q is None:
            raise CatalogError("clifford needs both p and q, e.g. clifford:1,1")
        if p < 1 or q < 1:
            raise CatalogError(f"clifford factors must be >= 1, got p={p}, q={q}")
        if n is not None and p + q != n:
            raise CatalogError(f"clifford({p},{q}) has dimension {p + q}, not n={n}")
        dim = p + q
        return MinimalHypersurface(
            name=f"clifford:{p},{q}",
            kind="clifford",
            n=dim,
            fiber_k=1.0,
            norm_a2=float(dim),
            params=(p, q),
        )
    if name in ("equator", "flat_subtorus"):
        if n is None or n < 2:
            raise CatalogError(f"{name} needs a dimension n >= 2, got {n}")
        return MinimalHypersurface(
            name=f"{name}:{n}",
            kind=name,
            n=n,
            fiber_k=1.0 if name == "equator" else 0.0,
            norm_a2=0.0,
            params=(n,),
        )
    raise CatalogError(f"Unknown surface {name!r}; available: {', '.join(CATALOG_DESCRIPTIONS)}")


_SPEC = re.compile(r"^\s*([a-z_]+)\s*(?::\s*([0-9,\s]+))?\s*$")


def parse_surface_spec(spec: str, n: int | None = None) -> MinimalHypersurface:
    """Parse ``clifford:p,q``, ``equator:n`` or ``flat_subtorus:n``.

    The dimension after the colon may be left out when ``n`` is given.
    """
    match = _SPEC.match(spec)
    if not match:
        raise CatalogError(f"Cannot parse surface {spec!r}")
    name, args = match.group(1), match.group(2)
    values = [int(v) for v in args.split(",") if v.strip()] if args else []
    if name == "clifford":
        if len(values) == 2:
            return catalog_surface("clifford", n=n, p=values[0], q=values[1])
        if not values and n is not None:
            return clifford_balanced(n)
        raise CatalogError(f"clifford needs two factors, got {spec!r}")
    if len(values) > 1:
        raise CatalogError(f"{name} takes a single dimension, got {spec!r}")
    dim = values[0] if values else n
    if values and n is not None and values[0] != n:
        raise CatalogError(f"Surface {spec!r} has dimension {values[0]}, not n={n}")
    return catalog_surface(name, n=dim)


def clifford_balanced(n: int) -> MinimalHypersurface:
    """clifford(ceil(n/2), floor(n/2))."""
    if n < 2:
        raise CatalogError(f"Clifford hypersurfaces need n >= 2, got {n}")
    return catalog_surface("clifford", p=(n + 1) // 2, q=n // 2)


def list_catalog() -> list[dict[str, str]]:
    return [{"name": name, "description": text} for name, text in CATALOG_DESCRIPTIONS.items()]


def sphere_harmonic_multiplicity(degree: int, dim: int) -> int:
    """Dimension of degree-`degree` harmonics on S^dim."""
    total = math.comb(degree + dim, dim)
    if degree + dim - 2 >= 0 and degree >= 2:
        total -= math.comb(degree + dim - 2, dim)
    return total


def _sphere_levels(dim: int, scale: float, limit: int) -> list[tuple[float, int]]:
    # -Laplacian on S^dim(r) with scale = 1/r^2
    return [
        (degree * (degree + dim - 1) * scale, sphere_harmonic_multiplicity(degree, dim))
        for degree in range(limit + 1)
    ]


def _merge(levels: Iterable[tuple[float, int]], tol: float = 1e-9) -> list[tuple[float, int]]:
    merged: list[tuple[float, int]] = []
    for value, mult in sorted(levels):
        if merged and abs(value - merged[-1][0]) <= tol * max(1.0, abs(value)):
            merged[-1] = (merged[-1][0], merged[-1][1] + mult)
        else:
            merged.append((value, mult))
    return merged


def _torus_levels(n: int, count: int) -> list[tuple[float, int]]:
    # Counts of |m|^2 = s over Z^n by repeated convolution of the 1-D counts
    radius = 1
    while True:
        top = radius * radius
        one_d = np.zeros(top + 1, dtype=np.int64)
        for m in range(radius + 1):
            one_d[m * m] += 1 if m == 0 else 2
        counts = np.array([1], dtype=np.int64)
        for _ in range(n):
            counts = np.convolve(counts, one_d)[: top + 1]
        if counts.sum() >= count:
            return [(float(s), int(c)) for s, c in enumerate(counts) if c > 0]
        radius *= 2


def laplace_spectrum(s: MinimalHypersurface, count: int) -> list[tuple[float, int]]:
    """Distinct eigenvalues of -Laplacian with multiplicities, covering `count` eigenvalues.

    Raises:
        CatalogError: The bounded enumeration cannot certify `count` eigenvalues.
    """
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    if s.kind == "flat_subtorus":
        levels = _torus_levels(s.n, count)
        return _truncate(levels, count)
    if s.kind == "equator":
        levels = _merge(_sphere_levels(s.n, 1.0, ENUM_LIMIT))
        excluded = (ENUM_LIMIT + 1) * (ENUM_LIMIT + s.n)
    elif s.kind == "clifford":
        p, q = s.params
        first = _sphere_levels(p, s.n / p, ENUM_LIMIT)
        second = _sphere_levels(q, s.n / q, ENUM_LIMIT)
        levels = _merge((a + b, ma * mb) for a, ma in first for b, mb in second)
        # Smallest eigenvalue with a or b beyond the enumeration
        excluded = min(
            (ENUM_LIMIT + 1) * (ENUM_LIMIT + p) * s.n / p,
            (ENUM_LIMIT + 1) * (ENUM_LIMIT + q) * s.n / q,
        )
    else:
        raise CatalogError(f"No Laplace spectrum for surface kind {s.kind!r}")
    result = _truncate(levels, count)
    if result[-1][0] >= excluded:
        raise CatalogError(
            f"Enumeration with a, b <= {ENUM_LIMIT} is not sufficient for {count} eigenvalues"
        )
    return result


def _truncate(levels: list[tuple[float, int]], count: int) -> list[tuple[float, int]]:
    out: list[tuple[float, int]] = []
    total = 0
    for value, mult in levels:
        out.append((value, mult))
        total += mult
        if total >= count:
            return out
    raise CatalogError(f"Spectrum enumeration produced only {total} < {count} eigenvalues")


def laplace_eigenvalues(s: MinimalHypersurface, count: int) -> np.ndarray:
    """First `count` eigenvalues of -Laplacian repeated by multiplicity."""
    values: list[float] = []
    for value, mult in laplace_spectrum(s, count):
        values.extend([value] * mult)
    return np.asarray(values[:count])


def l1_spectrum(s: MinimalHypersurface, count: int) -> HypersurfaceSpectrum:
    """mu_i - |A|^2 in increasing order; lambda_1 = -|A|^2 from the constants."""
    if count > MAX_COUNT:
        raise ConfigurationError(f"At most {MAX_COUNT} eigenvalues are supported, got {count}")
    mu = laplace_eigenvalues(s, count)
    return HypersurfaceSpectrum(
        surface=s.name, n=s.n, eigenvalues=mu - s.norm_a2, source="catalog_formula"
    )


def simons_bound_from_integrals(n: int, tau: float, integral_a2: float, volume: float) -> float:
    """-(n + tau) Int|A|^2 / (Int|A|^2 + tau Vol).

    As a function of tau it is non-increasing as tau decreases to 0 exactly when
    the mean of |A|^2 is at most n; the limit at tau = 0 is -n.
    """
    if tau <= 0.0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if integral_a2 <= 0.0:
        raise ConfigurationError("Simons bound is vacuous when Int |A|^2 = 0")
    return -(n + tau) * integral_a2 / (integral_a2 + tau * volume)


def simons_lambda1_bound(s: MinimalHypersurface, tau: float) -> float:
    """Upper bound for lambda_1 from the test function (|A|^2 + tau)^(1/2).

    Raises:
        ConfigurationError: Non-spherical fiber or a totally geodesic surface.
    """
    if s.fiber_k != 1.0:
        raise ConfigurationError(
            f"Simons bound is only available for spherical fibers, {s.name} has k={s.fiber_k}"
        )
    if s.totally_geodesic:
        raise ConfigurationError(f"Simons bound is vacuous for totally geodesic {s.name}")
    return simons_bound_from_integrals(s.n, tau, s.integral_a2, s.volume)


def lambda1(s: MinimalHypersurface, mode: Lambda1Mode = "exact") -> tuple[float, str]:
    """lambda_1 and its source tag: exact from the catalog, or the bound -n."""
    if mode == "exact":
        return l1_spectrum(s, 1).lambda1, "exact"
    if mode == "bound":
        # The tau -> 0 limit of the Simons bound
        simons_lambda1_bound(s, 1.0)
        return -float(s.n), "bound"
    raise ConfigurationError(f"Unknown lambda1 mode {mode!r}; expected exact or bound")


def rayleigh_quotient_surface(
    s: MinimalHypersurface, components: Iterable[tuple[float, float]]
) -> float:
    """Rayleigh quotient of g = sum a_i phi_i given as (mu_i, a_i) pairs.

    phi_i are L2-orthonormal eigenfunctions of -Laplacian with eigenvalue mu_i.
    """
    pairs = list(components)
    weight = sum(a * a for _, a in pairs)
    if weight == 0.0:
        raise ConfigurationError("Test function is identically zero")
    known = {round(v, 9) for v, _ in laplace_spectrum(s, max(len(pairs), 1) + 64)}
    top = max(known)
    for mu, _ in pairs:
        if mu <= top and round(mu, 9) not in known:
            raise CatalogError(f"{mu} is not a Laplace eigenvalue of {s.name}")
    energy = sum(a * a * mu for mu, a in pairs)
    return (energy - s.norm_a2 * weight) / weight
