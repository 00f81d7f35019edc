"""Nonsymmetric Ornstein-Uhlenbeck operators: sector angles, Bellman-function
convexity, Galerkin semigroups and holomorphic multipliers."""

__version__ = "0.1.0"
