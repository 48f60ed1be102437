"""Hybrid classical-quantum regression on a simulated 4-qubit register.

Subpackages are imported on demand; the command-line entry point is
``hqnn`` (see :mod:`hqnn.cli`).
"""
__version__ = "0.1.0"

__all__ = ["analysis", "ansatz", "classnet", "cli", "dataset", "diffgrad", "models", "noisestudy", "qcore"]
