"""Test suite for the lattice martingale lab."""
