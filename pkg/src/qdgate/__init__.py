"""Simulation of a two-dot cavity geometric phase gate.

Modules: ``qcore`` (operators), ``model`` (parameters and units),
``hamiltonians``, ``geometry`` (displacement loops and phases),
``lindblad`` (master-equation integration), ``experiments`` (fidelity
sweeps) and ``cli``.
"""

__version__ = "0.1.0"
