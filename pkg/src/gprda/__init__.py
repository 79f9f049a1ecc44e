"""Synthetic GPR inversion toolkit: 1D FDTD forward modeling, signal
preparation, domain-adversarial training, Sobol sensitivity ordering,
hierarchical estimation, and evaluation."""

__version__ = "0.1.0"
