"""Exact jet calculus and verification of integrable Monge-Ampere equations."""

__version__ = "0.1.0"
