"""Gap eigenvalues of Dirac-Coulomb operators."""

__version__ = "0.1.0"
