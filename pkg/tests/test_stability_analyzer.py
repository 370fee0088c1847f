"""Tests for the instability criterion, the index form and the spherical estimates."""

import math
from fractions import Fraction

import pytest

from warped_cone_stability.config import SolverConfig
from warped_cone_stability.errors import CatalogError, ConfigurationError
from warped_cone_stability.hypersurface_spectra import catalog_surface, clifford_balanced
from warped_cone_stability.stability_analyzer import (
    PAPER_WINDOW_MAX,
    SeparableVariation,
    SolverOptions,
    StabilityReport,
    SweepResult,
    VariationTerm,
    check_compatible,
    euclidean_delta,
    euclidean_limit_sum,
    index_form,
    paper_bound,
    paper_bound_exact,
    paper_h,
    paper_integral_limits,
    paper_integrals,
    paper_window,
    run_sweep,
    simons_window,
    surface_family,
    sweep,
    verdict,
)
from warped_cone_stability.sturm_liouville import (
    AxialFunction,
    axial_eigenfunction,
    problem_for,
    rayleigh_quotient_axial,
    sine_mode,
    solve_shooting,
)
from warped_cone_stability.warped_model import builtin_model

NEAR_POLE = math.pi / 2 - 0.01
SHOOTING = SolverOptions(method="shooting")


def _report(n, eps, total, lambda1_source="exact", model="sphere"):
    return StabilityReport(
        model=model,
        surface=f"clifford:{n}",
        n=n,
        eps=eps,
        lambda1=-float(n),
        lambda1_source=lambda1_source,
        delta1=total + n,
        delta1_source="fd",
    )


class TestVerdict:
    """Tests for lambda_1 + delta_1 < 0."""

    def test_clifford_torus_near_pole_is_unstable(self):
        """Test the unstable Clifford torus cone close to the pole."""
        report = verdict(builtin_model("sphere", 2), catalog_surface("clifford", p=1, q=1), 1.5607)
        assert report.unstable
        assert report.verdict == "unstable"
        assert report.describe() == "unstable, sum<0"
        assert report.lambda1 == -2.0
        assert report.lambda1_source == "exact"
        assert report.delta1_source == "fd"
        assert report.paper_bound == -1.5
        assert report.note is None
        assert report.diagnostics["cross_check"] == "shooting"

    @pytest.mark.parametrize("n", [3, 8, 14])
    def test_theorem_window(self, n):
        """Test negative sums inside the proven window."""
        report = verdict(builtin_model("sphere", n), clifford_balanced(n), NEAR_POLE, SHOOTING)
        assert report.sum < 0
        assert report.delta1_source == "shooting"

    def test_flat_model_is_stable(self):
        """Test that flat cones are stable with lambda1 = 0."""
        report = verdict(
            builtin_model("flat", 3), catalog_surface("flat_subtorus", n=3), 1.0, SHOOTING
        )
        assert report.lambda1 == 0.0
        assert report.delta1 == pytest.approx(math.pi**2, rel=1e-8)
        assert report.verdict == "stable_under_fixed_boundary_normal_variations"
        assert report.paper_bound is None

    def test_bound_mode_is_not_decisive(self):
        """Test that a positive sum from the bound decides nothing."""
        options = SolverOptions(lambda1_mode="bound", method="shooting")
        report = verdict(builtin_model("sphere", 2), catalog_surface("clifford", p=1, q=1), 0.5,
                         options)
        assert report.lambda1_source == "bound"
        assert report.sum > 0
        assert report.verdict == "not_decided_by_criterion"

    def test_beyond_window_note(self):
        """Test the note for n = 15."""
        report = verdict(builtin_model("sphere", 15), clifford_balanced(15), 0.5, SHOOTING)
        assert report.note == "beyond paper's theorem"
        assert report.paper_bound == pytest.approx(0.125)

    def test_incompatible_fiber(self):
        """Test a surface of the wrong fiber."""
        with pytest.raises(ConfigurationError, match="curvature"):
            check_compatible(builtin_model("sphere", 3), catalog_surface("flat_subtorus", n=3))

    def test_incompatible_dimension(self):
        """Test a surface of the wrong dimension."""
        with pytest.raises(ConfigurationError, match="dimension"):
            check_compatible(builtin_model("sphere", 3), catalog_surface("clifford", p=1, q=1))

    @pytest.mark.parametrize(
        "name, surface, eps_values",
        [
            ("sphere", "clifford", [0.4, 0.8, 1.2, 1.5]),
            ("euclidean", "clifford", [0.2, 0.5, 0.8, 0.95]),
            ("hyperbolic_exp", "flat_subtorus", [0.5, 1.0, 2.0]),
        ],
    )
    def test_sum_non_increasing_in_eps(self, name, surface, eps_values):
        """Deeper cones never raise lambda_1 + delta_1."""
        base = (
            catalog_surface("clifford", p=1, q=1)
            if surface == "clifford"
            else catalog_surface(surface, n=2)
        )
        model = builtin_model(name, 2)
        sums = [verdict(model, base, eps, SHOOTING).sum for eps in eps_values]
        assert all(b <= a for a, b in zip(sums, sums[1:]))

    def test_eps_out_of_range(self):
        """Test eps past the pole."""
        with pytest.raises(ConfigurationError):
            verdict(builtin_model("sphere", 2), catalog_surface("clifford", p=1, q=1), 1.6)

    def test_to_dict_carries_sources(self):
        """Test that values carry their sources."""
        data = _report(2, 1.0, -0.5).to_dict()
        assert data["lambda1"] == {"value": -2.0, "source": "exact"}
        assert data["delta1"]["source"] == "fd"
        assert data["sum"] == {"value": -0.5, "source": "exact+fd"}
        assert data["verdict"] == "unstable"


class TestIndexForm:
    """I(f_i g_j) = (lambda_i + delta_j) |f_i|^2 |g_j|_w^2."""

    def test_flat_closed_form(self):
        """Test (lambda_i + (j pi/eps)^2) on the flat model."""
        model = builtin_model("flat", 2)
        surface = catalog_surface("flat_subtorus", n=2)
        eps = 0.5
        for i, lam in [(1, 0.0), (2, 1.0)]:
            for j in (1, 2):
                value = index_form(SeparableVariation.single(i, j), model, surface, eps, SHOOTING)
                assert value == pytest.approx(lam + (j * math.pi / eps) ** 2, rel=1e-6)

    def test_flat_sine_mode_quadrature(self):
        """Test the quadrature path against the closed form."""
        model = builtin_model("flat", 2)
        surface = catalog_surface("flat_subtorus", n=2)
        eps = 0.5
        v = SeparableVariation.from_function(2, sine_mode(eps, 1))
        expected = (1.0 + (math.pi / eps) ** 2) * eps / 2
        assert index_form(v, model, surface, eps) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("i, j", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_sphere_paths_agree(self, i, j):
        """Quadrature of the Jacobi operator against the factorized eigenvalues."""
        model = builtin_model("sphere", 2)
        surface = catalog_surface("clifford", p=1, q=1)
        eps = 1.0
        factored = index_form(SeparableVariation.single(i, j), model, surface, eps, SHOOTING)
        _, g = axial_eigenfunction(problem_for(model, eps, num_eigen=j), j)
        direct = index_form(SeparableVariation.from_function(i, g), model, surface, eps)
        assert direct == pytest.approx(factored, rel=1e-6, abs=1e-8)

    def test_combination_adds_squares(self):
        """Test that orthogonal terms add."""
        model = builtin_model("flat", 2)
        surface = catalog_surface("flat_subtorus", n=2)
        v = SeparableVariation(
            terms=(VariationTerm(i=1, a=2.0, j=1), VariationTerm(i=2, a=1.0, j=2))
        )
        expected = 4 * (math.pi / 0.5) ** 2 + (1 + (2 * math.pi / 0.5) ** 2)
        assert index_form(v, model, surface, 0.5, SHOOTING) == pytest.approx(expected, rel=1e-6)

    def test_negative_for_unstable_cone(self):
        """Test a negative second variation close to the pole."""
        model = builtin_model("sphere", 2)
        surface = catalog_surface("clifford", p=1, q=1)
        value = index_form(SeparableVariation.single(1, 1), model, surface, NEAR_POLE, SHOOTING)
        assert value < 0

    @pytest.mark.parametrize("gap", [1e-3, 1e-4])
    def test_paper_h_close_to_pole(self, gap):
        """I(phi_1 h) = (lambda_1 + Q(h)) |h|_w^2 with |h|_w^2 = eps / 2 on the sphere."""
        eps = math.pi / 2 - gap
        v = SeparableVariation.from_function(1, paper_h(eps, 5))
        surface = catalog_surface("clifford", p=3, q=2)
        value = index_form(v, builtin_model("sphere", 5), surface, eps)
        assert math.isfinite(value)
        expected = paper_integrals(eps, 5).bound(5) * eps / 2
        assert value == pytest.approx(expected, rel=1e-6)

    def test_repeated_terms_keep_closed_form(self):
        """Terms sharing f_1 are summed before integrating: I(2 h) = 4 I(h)."""
        eps = math.pi / 2 - 1e-4
        h = paper_h(eps, 5)
        v = SeparableVariation(
            terms=(VariationTerm(i=1, a=1.0, g=h), VariationTerm(i=1, a=1.0, g=h))
        )
        surface = catalog_surface("clifford", p=3, q=2)
        value = index_form(v, builtin_model("sphere", 5), surface, eps)
        assert value == pytest.approx(2 * eps * paper_integrals(eps, 5).bound(5), rel=1e-6)

    def test_difference_quotients_close_to_pole(self):
        """Without a closed-form g'' the stencil stays inside [-eps, 0]."""
        eps = math.pi / 2 - 1e-3
        h = paper_h(eps, 5)
        bare = AxialFunction(value=h.value, first=h.first)
        v = SeparableVariation.from_function(1, bare)
        surface = catalog_surface("clifford", p=3, q=2)
        value = index_form(v, builtin_model("sphere", 5), surface, eps)
        assert math.isfinite(value)
        assert value < 0

    def test_zero_variation(self):
        """Test empty and zero variations."""
        model = builtin_model("flat", 2)
        surface = catalog_surface("flat_subtorus", n=2)
        assert index_form(SeparableVariation(terms=()), model, surface, 0.5) == 0.0
        v = SeparableVariation.single(1, 1, a=0.0)
        assert index_form(v, model, surface, 0.5) == 0.0

    def test_axial_function_must_vanish(self):
        """Test an axial function with nonzero ends."""
        model = builtin_model("flat", 2)
        surface = catalog_surface("flat_subtorus", n=2)
        v = SeparableVariation.from_function(1, sine_mode(1.0, 1))
        with pytest.raises(ConfigurationError, match="vanish"):
            index_form(v, model, surface, 0.5)

    def test_term_validation(self):
        """Test that a term needs exactly one of j and g."""
        with pytest.raises(ConfigurationError):
            VariationTerm(i=0, a=1.0, j=1)
        with pytest.raises(ConfigurationError):
            VariationTerm(i=1, a=1.0)
        with pytest.raises(ConfigurationError):
            VariationTerm(i=1, a=1.0, j=1, g=sine_mode(1.0))


class TestSphericalEstimate:
    """The test function h and its integrals."""

    def test_limits_n6(self):
        """Test the closed-form limits for n = 6."""
        limits = paper_integral_limits(6)
        assert limits.i1 == pytest.approx(math.pi)
        assert limits.i2 == pytest.approx(7 * math.pi / 8)
        assert limits.i3 == pytest.approx(math.pi / 4)
        assert limits.bound(6) == pytest.approx(-5.5)

    @pytest.mark.parametrize("n", [2, 6, 14, 20])
    def test_quadrature_matches_limits(self, n):
        """Test the integrals at eps = pi/2 against the limits."""
        found = paper_integrals(math.pi / 2, n)
        limits = paper_integral_limits(n)
        for a, b in zip(found.as_tuple(), limits.as_tuple()):
            assert a == pytest.approx(b, rel=1e-8)
        assert found.bound(n) == pytest.approx(paper_bound(n), abs=1e-8)

    def test_bound_values(self):
        """Test n^2/8 - 2n + 2 in float and exact form."""
        assert paper_bound(2) == -1.5
        assert paper_bound(14) == -1.5
        assert paper_bound(15) == pytest.approx(0.125)
        assert paper_bound_exact(6) == Fraction(-11, 2)

    def test_window(self):
        """Test the proven window n = 2..14."""
        assert paper_window(30) == list(range(2, PAPER_WINDOW_MAX + 1))

    def test_h_value(self):
        """Test h(-0.5) = sin(-pi/2) / cos(0.5) for eps = 1, n = 4."""
        assert paper_h(1.0, 4)(-0.5) == pytest.approx(-1.13949, abs=1e-5)

    @pytest.mark.parametrize("n, eps", [(2, 0.7), (5, 1.2), (9, math.pi / 2 - 0.01)])
    def test_h_second_derivative(self, n, eps):
        """The closed-form h'' matches difference quotients of h'."""
        h = paper_h(eps, n)
        for t in (-0.9 * eps, -0.5 * eps, -0.1 * eps):
            assert h.second(t) == pytest.approx(h.fd_second(t), rel=1e-6, abs=1e-6)

    def test_h_vanishes_at_ends(self):
        """Test that h is exactly zero at both ends."""
        h = paper_h(1.2, 4)
        assert h(-1.2) == 0.0
        assert h(0.0) == 0.0
        assert paper_h(math.pi / 2, 6)(-math.pi / 2) == 0.0

    @pytest.mark.parametrize("n, eps", [(4, 1.2), (7, 0.9)])
    def test_quotient_is_rayleigh_quotient_of_h(self, n, eps):
        """Test (I1 - I2) / I3 against the axial Rayleigh quotient."""
        problem = problem_for(builtin_model("sphere", n), eps)
        quotient = rayleigh_quotient_axial(problem, paper_h(eps, n))
        assert paper_integrals(eps, n).quotient == pytest.approx(quotient, rel=1e-8)

    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_bound_is_sound(self, n):
        """Test that the estimate never undercuts lambda1 + delta1."""
        eps = 1.3
        problem = problem_for(builtin_model("sphere", n), eps)
        exact_sum = -n + solve_shooting(problem).delta1
        assert paper_integrals(eps, n).bound(n) >= exact_sum - 1e-8

    @pytest.mark.parametrize("n", [2, 8, 14])
    def test_bound_near_pole(self, n):
        """Test that the estimate approaches its limit."""
        assert paper_integrals(math.pi / 2 - 1e-3, n).bound(n) == pytest.approx(
            paper_bound(n), abs=0.05
        )

    def test_argument_checks(self):
        """Test eps and n ranges."""
        with pytest.raises(ConfigurationError):
            paper_h(2.0, 3)
        with pytest.raises(ConfigurationError):
            paper_integrals(0.0, 3)
        with pytest.raises(ConfigurationError):
            paper_bound(1)


class TestEuclideanWindow:
    """The classical window n <= 5."""

    def test_limit_sum(self):
        """Test the Euclidean limit sum and window."""
        assert euclidean_limit_sum(5) == -1.0
        assert euclidean_limit_sum(6) == 0.25
        assert simons_window(30) == [2, 3, 4, 5]

    def test_delta_formula(self):
        """Test the Euclidean delta_j formula."""
        assert euclidean_delta(3, 0.5, 2) == pytest.approx(1 + (2 * math.pi / math.log(2)) ** 2)
        with pytest.raises(ConfigurationError):
            euclidean_delta(3, 1.0)


class TestSweepResult:
    """Window, thresholds and summary of a sweep."""

    def test_thresholds(self):
        """Test the first unstable eps per n."""
        result = SweepResult(
            model="sphere",
            family="clifford",
            reports=(
                _report(2, 0.5, 1.0),
                _report(2, 1.0, -0.1),
                _report(2, 1.5, -1.0),
                _report(3, 0.5, 2.0),
                _report(3, 1.0, -0.2),
                _report(3, 1.5, 0.3),
            ),
        )
        assert result.thresholds() == {2: 1.0, 3: None}
        assert result.window() == [2]
        assert result.window(1.0) == [2, 3]

    def test_summary_labels_beyond_window(self):
        """Test that n past 14 is labeled."""
        reports = tuple(_report(n, 1.5, -1.0) for n in range(13, 17))
        result = SweepResult(model="sphere", family="clifford", reports=reports)
        summary = result.summary()
        assert "unstable for n=13..16 (contiguous)" in summary
        assert "n=15..16 beyond paper's theorem" in summary

    def test_summary_gap(self):
        """Test a window with a hole."""
        reports = (_report(2, 1.0, -1.0), _report(3, 1.0, 1.0), _report(4, 1.0, -1.0))
        result = SweepResult(model="euclidean", family="clifford", reports=reports)
        assert "not contiguous" in result.summary()
        assert "beyond" not in result.summary()

    def test_empty(self):
        """Test a sweep with no cells."""
        result = SweepResult(model="sphere", family="clifford", reports=())
        assert result.largest_eps is None
        assert "no completed cells" in result.summary()


class TestSweep:
    """Tests for the worker-pool sweep."""

    async def test_euclidean_classical_window(self):
        """Test the window n = 2..5 for Euclidean cones."""
        result = await run_sweep(
            lambda n: builtin_model("euclidean", n),
            "clifford",
            range(2, 9),
            [0.999],
            SHOOTING,
            jobs=4,
        )
        assert result.window() == [2, 3, 4, 5]
        for report in result.reports:
            expected = euclidean_delta(report.n, 0.999) - report.n
            assert report.sum == pytest.approx(expected, rel=1e-5, abs=1e-6)

    async def test_spherical_theorem_window(self):
        """Test the window n = 2..14 close to the pole."""
        result = await run_sweep(
            lambda n: builtin_model("sphere", n),
            "clifford",
            range(2, PAPER_WINDOW_MAX + 1),
            [NEAR_POLE],
            SHOOTING,
            jobs=4,
        )
        assert result.window() == list(range(2, PAPER_WINDOW_MAX + 1))
        assert not result.failures
        assert "unstable for n=2..14 (contiguous)" in result.summary()

    async def test_ordering_independent_of_jobs(self):
        """Test that the pool size does not change the reports."""
        args = (lambda n: builtin_model("flat", n), "flat_subtorus", [4, 2, 3], [1.0, 0.5])
        serial = await run_sweep(*args, SHOOTING, jobs=1)
        parallel = await run_sweep(*args, SHOOTING, jobs=3)
        assert [(r.n, r.eps) for r in parallel.reports] == [
            (2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0), (4, 0.5), (4, 1.0)
        ]
        assert [r.to_dict() for r in serial.reports] == [r.to_dict() for r in parallel.reports]

    async def test_failed_cells_are_recorded(self, capsys):
        """Test that a failing cell is logged and kept."""
        config = SolverConfig(
            grid_size=16, richardson=False, agreement_rtol=1e-14, agreement_atol=1e-14
        )
        result = await run_sweep(
            lambda n: builtin_model("flat", n),
            "flat_subtorus",
            [2],
            [1.0],
            SolverOptions(config=config),
        )
        assert not result.reports
        assert len(result.failures) == 1
        assert "disagree" in result.failures[0].error
        assert "Sweep cell n=2 eps=1 failed" in capsys.readouterr().err

    async def test_rejects_inadmissible_eps(self):
        """Test eps past the pole."""
        with pytest.raises(ConfigurationError):
            await run_sweep(lambda n: builtin_model("sphere", n), "clifford", [2], [1.6])

    async def test_rejects_bad_jobs(self):
        """Test a pool of size zero."""
        with pytest.raises(ConfigurationError):
            await run_sweep(lambda n: builtin_model("flat", n), "flat_subtorus", [2], [1.0],
                            jobs=0)

    def test_sync_wrapper(self):
        """Test the blocking sweep."""
        result = sweep(
            lambda n: builtin_model("flat", n), "flat_subtorus", [2], [1.0], SHOOTING
        )
        assert result.reports[0].verdict == "stable_under_fixed_boundary_normal_variations"

    def test_unknown_family(self):
        """Test an unknown surface family."""
        with pytest.raises(CatalogError):
            surface_family("hopf")
