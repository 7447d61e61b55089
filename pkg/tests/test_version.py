"""Tests for version module."""

import importlib
from unittest.mock import patch

import pytest

import version


@pytest.fixture
def reload_version():
    """Reload the version module under a patched environment, then restore it."""

    def _reload(environ):
        with patch.dict("os.environ", environ, clear=True):
            return importlib.reload(version)

    yield _reload
    importlib.reload(version)


class TestVersion:
    """Tests for the VERSION constant and get_version."""

    @pytest.mark.unit
    def test_defaults_to_dev(self, reload_version):
        """Test the fallback without a VERSION variable."""
        assert reload_version({}).get_version() == "dev"

    @pytest.mark.unit
    @pytest.mark.parametrize("value", ["1.2.3", "2.0.0-rc.1+build.7", ""])
    def test_read_from_environment(self, reload_version, value):
        """Test that the environment value is reported unchanged."""
        module = reload_version({"VERSION": value})

        assert module.VERSION == value
        assert module.get_version() == value

    @pytest.mark.unit
    def test_module_is_documented(self):
        """Test the module and function docstrings used by --help output."""
        assert "stripe-energy" in version.__doc__
        assert "--version" in version.get_version.__doc__
