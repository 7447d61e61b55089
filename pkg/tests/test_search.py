"""Tests for exhaustive enumeration, stripe scans and simulated annealing."""

import json

import numpy as np
import pytest

from src.core.error_handling import BudgetExceededError, PreconditionError
from src.stripes.energy import jc_dsc
from src.stripes.kernels import KernelFamily, KernelSpec
from src.stripes.lattice import TorusConfig
from src.stripes.search import (
    ENERGY_ATOL,
    AnnealSchedule,
    SearchMethod,
    anneal,
    anneal_restarts,
    build_model,
    enumerate_configs,
    stripe_scan,
)


@pytest.fixture
def line_model(euclidean_line_spec):
    """Rescaled Euclidean model in d=1, p=3, tau=0.7 on eight cells."""
    return build_model(1, 8, euclidean_line_spec)


class TestBuildModel:
    """Tests for model construction."""

    @pytest.mark.unit
    def test_euclidean_spacing_defaults_to_smoothing(self, euclidean_line_spec):
        """Test κ = τ^{1/β} for the Euclidean family."""
        model = build_model(1, 8, euclidean_line_spec)

        assert model.spacing == pytest.approx(0.7)
        assert build_model(2, 4, KernelSpec(2, 4.0, 0.5)).spacing == 1.0

    @pytest.mark.unit
    def test_coupled_model(self):
        """Test the coupled functional with J."""
        model = build_model(1, 8, coupling=2.0, p=3.0)

        assert model.perimeter_weight == 2.0
        assert model.kernel.spec.family is KernelFamily.EUCLIDEAN

    @pytest.mark.unit
    def test_invalid_requests(self, euclidean_line_spec):
        """Test missing and inconsistent parameters."""
        with pytest.raises(PreconditionError):
            build_model(1, 8)
        with pytest.raises(PreconditionError):
            build_model(1, 8, coupling=2.0)
        with pytest.raises(PreconditionError):
            build_model(2, 4, euclidean_line_spec)


class TestStripeScan:
    """Tests for stripe-width scans."""

    @pytest.mark.unit
    def test_line_scan_prefers_width_two(self, euclidean_line_spec):
        """Test the optimal width for d=1, p=3, tau=0.7 on twelve cells."""
        report = stripe_scan(build_model(1, 12, euclidean_line_spec))

        assert sorted(report.widths) == [1, 2, 3, 6]
        assert min(report.widths, key=report.widths.get) == 2
        assert report.best_energy == pytest.approx(report.widths[2])
        assert report.best_energy < report.widths[1] < 0
        assert report.method is SearchMethod.STRIPE_SCAN

    @pytest.mark.unit
    def test_no_admissible_width(self):
        """Test a torus too small for any stripes."""
        with pytest.raises(PreconditionError):
            stripe_scan(build_model(1, 1, KernelSpec(1, 3.0, 0.5)))


class TestEnumeration:
    """Tests for exhaustive ground-state search."""

    @pytest.mark.unit
    @pytest.mark.parametrize("n", [8, 12])
    def test_line_ground_state_is_stripes(self, n, euclidean_line_spec):
        """Test that the global minimizer is periodic stripes of width two."""
        model = build_model(1, n, euclidean_line_spec)

        report = enumerate_configs(model)

        assert report.visited == 2**n
        assert len(report.minimizers) == 1
        assert report.is_stripe == [True]
        assert report.stripe_spec.width == pytest.approx(2 * 0.7)
        assert report.best_energy == pytest.approx(stripe_scan(model).best_energy, abs=1e-11)

    @pytest.mark.unit
    def test_line_ground_state_sixteen_cells(self, euclidean_line_spec):
        """Test the width-two minimizer on sixteen cells against the stripe scan."""
        model = build_model(1, 16, euclidean_line_spec)

        report = enumerate_configs(model)

        assert report.visited == 2**16
        assert report.is_stripe == [True]
        assert report.stripe_spec.width == pytest.approx(2 * 0.7)
        assert report.best_energy == pytest.approx(stripe_scan(model).best_energy, abs=1e-11)

    @pytest.mark.unit
    def test_plane_ground_state_is_stripes(self, euclidean_plane_spec):
        """Test stripes of width two on the 4x4 torus for d=2, p=4, tau=1."""
        model = build_model(2, 4, euclidean_plane_spec)

        report = enumerate_configs(model)

        assert report.visited == 2**16
        assert all(report.is_stripe)
        assert report.stripe_spec.width == pytest.approx(2.0)
        assert model.evaluate(TorusConfig.checkerboard(2, 4)) > report.best_energy
        for cfg in report.minimizers:
            assert model.evaluate(cfg) <= report.best_energy + 1e-12

    @pytest.mark.unit
    def test_minimizer_tie_tolerance(self):
        """Test that only energies within 1e-12 of the minimum count as ties."""
        assert ENERGY_ATOL == 1e-12

    @pytest.mark.unit
    def test_trivial_regime_above_critical_coupling(self):
        """Test that ∅ and the full torus minimize once J > J_c."""
        model = build_model(1, 8, coupling=jc_dsc(1, 3.0) + 0.1, p=3.0)

        report = enumerate_configs(model)

        assert report.best_energy == pytest.approx(0.0, abs=1e-12)
        assert report.minimizers == [TorusConfig.empty(1, 8)]
        assert report.stripe_spec is None

    @pytest.mark.unit
    def test_workers_do_not_change_the_result(self, line_model):
        """Test chunked parallel enumeration."""
        serial = enumerate_configs(line_model, workers=1, chunk=32)
        parallel = enumerate_configs(line_model, workers=3, chunk=32)

        assert parallel.best_energy == serial.best_energy
        assert parallel.minimizers == serial.minimizers
        assert parallel.visited == serial.visited

    @pytest.mark.unit
    def test_budget(self, line_model):
        """Test the enumeration budget in cells."""
        with pytest.raises(BudgetExceededError):
            enumerate_configs(line_model, budget=6)
        with pytest.raises(BudgetExceededError):
            enumerate_configs(build_model(2, 6, KernelSpec(2, 4.0, 0.5)))

    @pytest.mark.unit
    def test_report_json(self, line_model):
        """Test the serialized search report."""
        record = json.loads(enumerate_configs(line_model).to_json())

        assert record["method"] == "exhaustive"
        assert record["visited"] == 256
        assert record["minimizers"][0]["is_stripe"] is True
        assert record["stripe_spec"]["direction"] == 0


class TestAnnealing:
    """Tests for simulated annealing."""

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "kwargs", [{"t0": -1.0}, {"cooling": 0.0}, {"cooling": 1.5}, {"steps": -1}]
    )
    def test_invalid_schedule(self, kwargs):
        """Test schedule validation."""
        with pytest.raises(PreconditionError):
            AnnealSchedule(**kwargs)

    @pytest.mark.unit
    def test_geometric_cooling(self):
        """Test T_k = t0 · cooling^{k // sweep}."""
        schedule = AnnealSchedule(t0=2.0, cooling=0.5)

        assert schedule.temperature(0, 8) == 2.0
        assert schedule.temperature(7, 8) == 2.0
        assert schedule.temperature(16, 8) == 0.5

    @pytest.mark.unit
    def test_same_seed_same_result(self, line_model, rng):
        """Test reproducibility for a fixed seed."""
        start = TorusConfig.random(1, 8, rng)
        schedule = AnnealSchedule(steps=800, seed=7)

        first = anneal(start, line_model, schedule)
        second = anneal(start, line_model, schedule)

        assert first.best_energy == second.best_energy
        assert first.minimizers == second.minimizers
        assert first.trace == second.trace

    @pytest.mark.unit
    def test_quenched_result_is_a_local_minimum(self, line_model, rng):
        """Test that no single flip lowers the final energy."""
        start = TorusConfig.random(1, 8, rng)

        report = anneal(start, line_model, AnnealSchedule(steps=200, seed=3))
        final = report.minimizers[0]

        for index in range(8):
            cells = final.cells.copy()
            cells[index] ^= 1
            assert line_model.evaluate(TorusConfig(1, 8, cells, 0.7)) >= report.best_energy - 1e-12

    @pytest.mark.unit
    def test_restarts_find_the_ground_state(self, line_model):
        """Test that independent chains reach the exhaustive minimum."""
        exact = enumerate_configs(line_model)

        report = anneal_restarts(line_model, AnnealSchedule(steps=2000, seed=11), restarts=8)

        assert report.best_energy == pytest.approx(exact.best_energy, abs=1e-10)
        assert report.minimizers == exact.minimizers
        assert report.visited == 8 * 2000

    @pytest.mark.slow
    def test_restarts_on_sixteen_cells(self, euclidean_line_spec):
        """Test annealing against the stripe scan on sixteen cells."""
        model = build_model(1, 16, euclidean_line_spec)

        report = anneal_restarts(model, AnnealSchedule(steps=20_000, seed=0), restarts=10)

        assert report.best_energy == pytest.approx(stripe_scan(model).best_energy, abs=1e-10)

    @pytest.mark.unit
    def test_restarts_on_twelve_cells(self, euclidean_line_spec):
        """Test annealing against the stripe scan on a twelve-cell line."""
        model = build_model(1, 12, euclidean_line_spec)

        report = anneal_restarts(model, AnnealSchedule(steps=4000, seed=2), restarts=8)

        assert report.best_energy <= stripe_scan(model).best_energy + 1e-9
        assert all(report.is_stripe)

    @pytest.mark.unit
    def test_restarts_on_small_plane(self, euclidean_plane_spec):
        """Test that annealing on the 4x4 torus ends in the exhaustive stripe minimum."""
        model = build_model(2, 4, euclidean_plane_spec)

        report = anneal_restarts(model, AnnealSchedule(steps=2000, seed=4), restarts=8)

        assert report.best_energy == pytest.approx(
            enumerate_configs(model).best_energy, abs=1e-10
        )
        assert report.best_energy <= stripe_scan(model).best_energy + 1e-9
        assert all(report.is_stripe)

    @pytest.mark.slow
    def test_restarts_on_large_plane(self, euclidean_plane_spec):
        """Test 20 seeded chains on the 16x16 torus against the stripe scan."""
        model = build_model(2, 16, euclidean_plane_spec)

        report = anneal_restarts(model, AnnealSchedule(steps=60_000, seed=0), restarts=20)

        assert report.best_energy <= stripe_scan(model).best_energy + 1e-9
        assert all(report.is_stripe)

    @pytest.mark.unit
    def test_start_must_match_model(self, line_model):
        """Test the torus check of the starting configuration."""
        with pytest.raises(PreconditionError):
            anneal(TorusConfig.empty(1, 6), line_model, AnnealSchedule(steps=10))
        with pytest.raises(PreconditionError):
            anneal_restarts(line_model, AnnealSchedule(steps=10), restarts=0)

    @pytest.mark.unit
    def test_restarts_are_deterministic_across_workers(self, line_model):
        """Test that threads do not change seeded chains."""
        schedule = AnnealSchedule(steps=300, seed=5)

        serial = anneal_restarts(line_model, schedule, restarts=4, workers=1)
        parallel = anneal_restarts(line_model, schedule, restarts=4, workers=4)

        assert serial.best_energy == parallel.best_energy
        assert serial.minimizers == parallel.minimizers
        np.testing.assert_equal(serial.visited, parallel.visited)
