"""Chung-Lu random graphs: sampling, principal eigenpairs, and CLT checks."""

__version__ = "0.1.0"
