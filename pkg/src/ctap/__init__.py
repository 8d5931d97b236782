"""Phase evolution of a vortex state under coherent tunneling adiabatic passage."""

__version__ = "0.1.0"
