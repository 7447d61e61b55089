"""
Numerical modules of the stripe-energy toolkit.

kernels      interaction kernels, reduced 1D kernels and torus periodization
lattice      periodic cell configurations, slices, stripes and grid files
energy       critical constants, lattice functionals and the G / I decomposition
stripes1d    the one-dimensional functional and the optimal stripe width
search       exhaustive enumeration, stripe scans and simulated annealing
diagnostics  local energies on sub-cubes, stripe distance and region maps
"""

from .config import ComputeConfig, get_compute_config, reload_compute_config
from .diagnostics import (
    LocalEnergy,
    RegionMap,
    averaged_lower_bound,
    checkerboard_report,
    local_energy,
    region_decompose,
    stripe_distance,
    stripe_distance_eta,
    verification_report,
)
from .energy import EnergyBreakdown, EnergyModel, decompose, jc_continuum, jc_dsc
from .kernels import KernelFamily, KernelSpec, periodize
from .lattice import StripeSpec, TorusConfig, make_stripes, read_grid, write_grid
from .search import AnnealSchedule, SearchReport, anneal, enumerate_configs, stripe_scan
from .stripes1d import OneDConfig, StripeOptimum, e_inf_tau, f1_energy, optimal_h

__all__ = [
    # Configuration
    "ComputeConfig",
    "get_compute_config",
    "reload_compute_config",
    # Kernels and lattice
    "KernelFamily",
    "KernelSpec",
    "periodize",
    "StripeSpec",
    "TorusConfig",
    "make_stripes",
    "read_grid",
    "write_grid",
    # Energies
    "EnergyBreakdown",
    "EnergyModel",
    "decompose",
    "jc_continuum",
    "jc_dsc",
    # One-dimensional reduction
    "OneDConfig",
    "StripeOptimum",
    "e_inf_tau",
    "f1_energy",
    "optimal_h",
    # Search
    "AnnealSchedule",
    "SearchReport",
    "anneal",
    "enumerate_configs",
    "stripe_scan",
    # Diagnostics
    "LocalEnergy",
    "RegionMap",
    "averaged_lower_bound",
    "checkerboard_report",
    "local_energy",
    "region_decompose",
    "stripe_distance",
    "stripe_distance_eta",
    "verification_report",
]
