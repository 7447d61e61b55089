"""Tests for the compute configuration loaded from the environment."""

import os
from unittest.mock import patch

import pytest

from src.core.error_handling import ConfigurationError
from src.stripes.config import ComputeConfig, get_compute_config, reload_compute_config


class TestComputeConfig:
    """Test cases for ComputeConfig."""

    @pytest.mark.unit
    def test_default_config(self):
        """Test default configuration values."""
        config = ComputeConfig()

        assert config.workers == 1
        assert config.lattice_tol == 1e-10
        assert config.lattice_tol_multi == 1e-6
        assert config.enum_budget_d1 == 20
        assert config.enum_budget_d2 == 25

    @pytest.mark.unit
    @patch.dict(
        os.environ,
        {
            "STRIPES_WORKERS": "4",
            "STRIPES_LATTICE_TOL": "1e-8",
            "STRIPES_ENUM_BUDGET_D2": "16",
        },
    )
    def test_config_from_environment(self):
        """Test configuration loading from environment."""
        config = ComputeConfig.from_environment()

        assert config.workers == 4
        assert config.lattice_tol == 1e-8
        assert config.enum_budget_d2 == 16
        assert config.quad_tol == ComputeConfig().quad_tol

    @pytest.mark.unit
    @patch.dict(os.environ, {"STRIPES_WORKERS": "many"})
    def test_invalid_number_in_environment(self):
        """Test that a non-numeric setting is reported as a configuration error."""
        with pytest.raises(ConfigurationError, match="Invalid numeric"):
            ComputeConfig.from_environment()

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "kwargs",
        [{"workers": 0}, {"max_image_radius": 0}, {"lattice_tol": 0.0}, {"quad_tol": -1.0}],
    )
    def test_invalid_values_rejected(self, kwargs):
        """Test validation of out-of-range settings."""
        with pytest.raises(ConfigurationError):
            ComputeConfig(**kwargs)

    @pytest.mark.unit
    def test_dimension_dependent_settings(self):
        """Test tolerance and budget selection by dimension."""
        config = ComputeConfig(lattice_tol=1e-11, lattice_tol_multi=1e-5)

        assert config.periodization_tol(1) == 1e-11
        assert config.periodization_tol(3) == 1e-5
        assert config.enum_budget(1) == config.enum_budget_d1
        assert config.enum_budget(2) == config.enum_budget_d2

    @pytest.mark.unit
    def test_global_instance_is_cached_until_reload(self):
        """Test get_compute_config caching and reload_compute_config."""
        first = get_compute_config()
        assert get_compute_config() is first

        with patch.dict(os.environ, {"STRIPES_WORKERS": "3"}):
            assert get_compute_config().workers == first.workers
            reload_compute_config()
            assert get_compute_config().workers == 3
