"""
Stripe-formation energies on periodic lattices and in the 1D reduction.
"""

__version__ = "1.0.0"
__author__ = "PitchConnect"
__description__ = "Lattice and 1D stripe-formation energies, decompositions and ground-state search"
