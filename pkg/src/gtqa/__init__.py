"""Tensor-network simulation of Trotterized quantum annealing on sparse graphs."""

__version__ = "0.1.0"
