"""Unbounded order convergence and lattice martingale lab."""
