"""Tests for the one-dimensional functional and the optimal stripe width."""

import math

import numpy as np
import pytest

from src.core.error_handling import PreconditionError, ToleranceError
from src.stripes.energy import EnergyModel
from src.stripes.kernels import KernelSpec
from src.stripes.lattice import StripeSpec, make_stripes
from src.stripes.stripes1d import (
    OneDConfig,
    a_tau,
    a_tau_closed,
    a_tau_derivatives,
    c_bar_closed_form,
    chessboard_bound,
    e_inf_tau,
    e_inf_tau_derivatives,
    e_inf_tau_from_a,
    eta0_bisection,
    f1_energy,
    fit_c_bar,
    golden_section,
    interval_bound_report,
    optimal_h,
    r_tau_1d,
    stripe_energy_dsc,
    sweep,
    tau_zero_optimum,
)

LN2 = math.log(2.0)
H_BAR = 4.0 * LN2


def stripe_density_tau_zero(h):
    """e(h) = -1/h + 2 ln 2 / h² for d=1, p=3, tau=0."""
    return -1.0 / h + 2.0 * LN2 / h**2


class TestOneDConfig:
    """Tests for periodic subsets of the line."""

    @pytest.mark.unit
    def test_from_widths(self):
        """Test alternating runs and derived quantities."""
        cfg = OneDConfig.from_widths([1.0, 2.0, 1.5, 0.5])

        assert cfg.period == 5.0
        assert cfg.intervals == ((0.0, 1.0), (3.0, 4.5))
        assert cfg.mass == 2.5
        assert cfg.perimeter == 4
        np.testing.assert_allclose(cfg.gaps(), [1.0, 2.0, 1.5, 0.5])

    @pytest.mark.unit
    def test_from_boundary_starting_inside(self):
        """Test a set whose first jump leaves E."""
        cfg = OneDConfig.from_boundary(4.0, [1.0, 3.0], starts_inside=True)

        assert cfg.intervals == ((3.0, 5.0),)
        positions, signs = cfg.boundary()
        np.testing.assert_allclose(positions, [1.0, 3.0])
        np.testing.assert_allclose(signs, [-1.0, 1.0])

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "period, intervals",
        [
            (4.0, ((1.0, 1.0),)),
            (4.0, ((5.0, 6.0),)),
            (4.0, ((0.0, 2.0), (1.5, 3.0))),
            (4.0, ((1.0, 5.5),)),
            (0.0, ()),
        ],
    )
    def test_invalid_sets(self, period, intervals):
        """Test empty, misplaced and overlapping intervals."""
        with pytest.raises(PreconditionError):
            OneDConfig(period, intervals)

    @pytest.mark.unit
    def test_trivial_sets(self):
        """Test the empty and the full line."""
        assert OneDConfig(3.0).is_trivial()
        assert OneDConfig(3.0, ((0.0, 3.0),)).is_trivial()
        assert f1_energy(OneDConfig(3.0), KernelSpec(1, 3.0)) == 0.0

    @pytest.mark.unit
    def test_stripe_disagreement(self):
        """Test V(z) of stripes, a triangle wave of period 2h."""
        cfg = OneDConfig.stripes(1.0, phase=0.3)

        assert cfg.disagreement(0.5) == pytest.approx(1.0)
        assert cfg.disagreement(1.0) == pytest.approx(2.0)
        assert cfg.disagreement(2.0) == pytest.approx(0.0, abs=1e-12)
        assert cfg.cumulative(5.0) == pytest.approx(2.7)


class TestStripeEnergy:
    """Tests for the stripe energy density and its closed forms."""

    @pytest.mark.unit
    @pytest.mark.parametrize("h", [0.5, 1.0, 3.0])
    def test_tau_zero_closed_form(self, h, reference_spec):
        """Test e(h) = -1/h + C̄ h^{1-q} at tau=0."""
        assert e_inf_tau(h, reference_spec) == pytest.approx(stripe_density_tau_zero(h), rel=1e-9)
        assert e_inf_tau_from_a(h, reference_spec) == pytest.approx(
            stripe_density_tau_zero(h), rel=1e-12
        )

    @pytest.mark.unit
    @pytest.mark.parametrize("h", [0.4, 1.3, 5.0])
    def test_three_evaluations_agree(self, h):
        """Test quadrature, Hurwitz closed form and second-difference series."""
        spec = KernelSpec(1, 3.5, 0.3)

        quadrature = e_inf_tau(h, spec)

        for method in ("hurwitz", "series"):
            assert e_inf_tau_from_a(h, spec, method) == pytest.approx(
                quadrature, rel=1e-8, abs=1e-9
            )
        assert a_tau(h, spec) == pytest.approx(a_tau_closed(h, spec), rel=1e-9, abs=1e-10)

    @pytest.mark.unit
    def test_unknown_method(self, reference_spec):
        """Test method validation."""
        with pytest.raises(PreconditionError):
            e_inf_tau_from_a(1.0, reference_spec, "simpson")

    @pytest.mark.unit
    def test_a_tau_derivatives_match_finite_differences(self):
        """Test A' and A'' against central differences of the Hurwitz form."""
        spec = KernelSpec(2, 5.0, 0.2)
        h, step = 0.9, 1e-4
        values = [a_tau_closed(h + k * step, spec) for k in (-1, 0, 1)]

        first, second = a_tau_derivatives(h, spec)

        assert first == pytest.approx((values[2] - values[0]) / (2 * step), rel=1e-6)
        assert second == pytest.approx(
            (values[2] - 2 * values[1] + values[0]) / step**2, rel=1e-4
        )
        with pytest.raises(PreconditionError):
            a_tau_derivatives(0.0, spec)

    @pytest.mark.unit
    def test_derivatives_match_finite_differences(self):
        """Test e' and e'' against central differences of the closed form."""
        spec = KernelSpec(1, 3.0, 0.3)
        h, step = 1.3, 1e-4
        values = [e_inf_tau_from_a(h + k * step, spec) for k in (-1, 0, 1)]

        first, second = e_inf_tau_derivatives(h, spec)

        assert first == pytest.approx((values[2] - values[0]) / (2 * step), rel=1e-6)
        assert second == pytest.approx(
            (values[2] - 2 * values[1] + values[0]) / step**2, rel=1e-4
        )

    @pytest.mark.unit
    def test_power_law_constant(self, reference_spec):
        """Test C̄ = 2 ln 2 for d=1, p=3 and its fit from quadrature energies."""
        c_bar, exponent = fit_c_bar(reference_spec)

        assert c_bar_closed_form(reference_spec) == pytest.approx(2.0 * LN2)
        assert c_bar == pytest.approx(2.0 * LN2, rel=1e-6)
        assert exponent == pytest.approx(2.0, rel=1e-6)

    @pytest.mark.unit
    def test_power_law_fit_needs_tau_zero(self):
        """Test the fit precondition."""
        with pytest.raises(PreconditionError):
            fit_c_bar(KernelSpec(1, 3.0, 0.1))

    @pytest.mark.unit
    def test_chessboard_bound_is_exact_for_stripes(self, reference_spec):
        """Test that the gap bound reproduces the stripe density."""
        cfg = OneDConfig.stripes(2.0)

        assert chessboard_bound(cfg, reference_spec) == pytest.approx(
            stripe_density_tau_zero(2.0), rel=1e-12
        )

    @pytest.mark.unit
    def test_chessboard_bound_below_energy(self, rng):
        """Test F^1(E) >= (1/L) Σ g e(g) on 100 random sets."""
        spec = KernelSpec(1, 3.0, 0.2)

        for k in range(100):
            cfg = OneDConfig.random(rng, 12.0, 1 + k % 4, min_gap=0.5)

            assert f1_energy(cfg, spec) >= chessboard_bound(cfg, spec) - 1e-9


class TestOptimalWidth:
    """Tests for the optimal stripe width."""

    @pytest.mark.unit
    def test_golden_section_on_parabola(self):
        """Test the bracketing minimizer."""
        x, value = golden_section(lambda t: (t - 1.7) ** 2 + 3.0, 0.0, 5.0, tol=1e-12)

        assert x == pytest.approx(1.7, abs=1e-6)
        assert value == pytest.approx(3.0)

    @pytest.mark.unit
    def test_tau_zero_optimum(self, reference_spec):
        """Test h̄* = 4 ln 2 and e'' = (q-2)/h̄*³ for d=1, p=3."""
        h_bar, curvature = tau_zero_optimum(reference_spec)

        assert h_bar == pytest.approx(H_BAR)
        assert curvature == pytest.approx(1.0 / H_BAR**3)

    @pytest.mark.unit
    def test_optimal_width_at_tau_zero(self, reference_spec):
        """Test the numerical optimum against the closed form."""
        optimum = optimal_h(reference_spec)

        assert optimum.h_star == pytest.approx(H_BAR, rel=1e-7)
        assert optimum.c_star == pytest.approx(-1.0 / (8.0 * LN2), rel=1e-9)
        assert optimum.second_derivative == pytest.approx(1.0 / H_BAR**3, rel=1e-5)
        assert optimum.unique
        assert set(optimum.to_record()) == {"h_star", "c_star", "second_derivative"}

    @pytest.mark.unit
    def test_optimal_width_with_smoothing(self):
        """Test that the optimum is a stationary point for tau > 0."""
        spec = KernelSpec(1, 3.0, 0.2)

        optimum = optimal_h(spec)

        assert e_inf_tau_derivatives(optimum.h_star, spec)[0] == pytest.approx(0.0, abs=1e-8)
        assert optimum.c_star < 0
        assert optimum.c_star <= e_inf_tau(0.8 * optimum.h_star, spec)
        assert optimum.c_star <= e_inf_tau(1.25 * optimum.h_star, spec)

    @pytest.mark.unit
    def test_optimal_width_converges_as_tau_vanishes(self, reference_spec):
        """Test h*_τ -> h̄* monotonically along tau = 1e-2, 1e-3, 1e-4."""
        distances = [
            abs(optimal_h(reference_spec.with_tau(tau)).h_star - H_BAR)
            for tau in (1e-2, 1e-3, 1e-4)
        ]

        assert distances[0] > distances[1] > distances[2]
        assert distances[2] < 1e-2 * H_BAR

    @pytest.mark.unit
    def test_invalid_bracket(self, reference_spec):
        """Test bracket validation."""
        with pytest.raises(PreconditionError):
            optimal_h(reference_spec, (2.0, 1.0))

    @pytest.mark.unit
    def test_no_interior_minimum(self, reference_spec):
        """Test a bracket on which the energy is monotone."""
        with pytest.raises(ToleranceError):
            optimal_h(reference_spec, (1e-2, 1e-1))

    @pytest.mark.unit
    def test_sweep_rows(self):
        """Test row order and content of a (tau, p) sweep."""
        rows = sweep([0.0, 0.1], [3.0, 4.0])

        assert [(row["p"], row["tau"]) for row in rows] == [
            (3.0, 0.0), (3.0, 0.1), (4.0, 0.0), (4.0, 0.1)
        ]
        assert rows[0]["h_star"] == pytest.approx(H_BAR, rel=1e-7)


class TestLocalJumpEnergy:
    """Tests for the local energy of a jump and the gap threshold."""

    @pytest.mark.unit
    def test_stripe_jumps_carry_equal_shares(self, reference_spec):
        """Test r(s) = h e(h) at every jump of stripes."""
        cfg = OneDConfig.stripes(2.0)

        for s in (0.0, 2.0):
            assert r_tau_1d(cfg, s, reference_spec) == pytest.approx(
                2.0 * stripe_density_tau_zero(2.0), rel=1e-7
            )

    @pytest.mark.unit
    def test_jump_energies_add_up(self, rng):
        """Test Σ_s r(s) = L F^1(E)."""
        spec = KernelSpec(1, 3.0, 0.2)
        cfg = OneDConfig.random(rng, 9.0, 2, min_gap=0.6)
        positions, _ = cfg.boundary()

        total = sum(r_tau_1d(cfg, s, spec) for s in positions)

        assert total == pytest.approx(cfg.period * f1_energy(cfg, spec), rel=1e-7, abs=1e-8)

    @pytest.mark.unit
    def test_jump_must_exist(self, reference_spec):
        """Test the boundary-point check."""
        with pytest.raises(PreconditionError):
            r_tau_1d(OneDConfig.stripes(2.0), 1.0, reference_spec)

    @pytest.mark.unit
    def test_gap_threshold(self, reference_spec):
        """Test Ψ(η₀) = 1, i.e. η₀ = 1/2 for d=1, p=3, tau=0."""
        assert eta0_bisection(reference_spec) == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.unit
    def test_gap_threshold_needs_large_psi(self):
        """Test that no threshold exists once Ψ(0) <= 1."""
        with pytest.raises(PreconditionError):
            eta0_bisection(KernelSpec(1, 3.0, 1.0))

    @pytest.mark.unit
    def test_interval_bound_on_stripes(self, reference_spec):
        """Test that stripes need no additive constant against C*."""
        report = interval_bound_report(
            OneDConfig.stripes(2.0), reference_spec, c_star=-1.0 / (8.0 * LN2)
        )

        assert report.samples == 12
        assert report.c0 == pytest.approx(0.0, abs=1e-9)
        assert min(report.margins) >= -1e-9
        assert "margins" not in report.to_record()


class TestLatticeStripes:
    """Tests for the folded lattice stripe energy."""

    @pytest.mark.unit
    @pytest.mark.parametrize("width", [1, 2])
    def test_one_norm_stripes_match_lattice_model(self, width, one_norm_plane_spec):
        """Test the folded formula against the full lattice functional in d=2."""
        model = EnergyModel.rescaled(one_norm_plane_spec, 4, 1.0)
        cfg = make_stripes(StripeSpec(0, float(width)), 2, 4)

        assert stripe_energy_dsc(width, one_norm_plane_spec, spacing=1.0) == pytest.approx(
            model.evaluate(cfg), abs=5e-5
        )

    @pytest.mark.unit
    def test_one_norm_needs_spacing(self, one_norm_plane_spec):
        """Test that the one-norm family has no implied spacing."""
        with pytest.raises(PreconditionError):
            stripe_energy_dsc(1, one_norm_plane_spec)
        with pytest.raises(PreconditionError):
            stripe_energy_dsc(0, one_norm_plane_spec, spacing=1.0)
