"""Exact WKB Stokes geometry and sheaf-theoretic Borel singularity prediction."""

__version__ = "0.1.0"
