"""Hermitian random matrices with dependent entries, described by cumulant graphs."""

__version__ = "0.1.0"
