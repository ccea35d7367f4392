"""Numerical laboratory for modular theory on truncated Hilbert-Schmidt space.

Submodules
----------
operators : truncated oscillator matrices, Hermite functions, spectral calculus
hs        : Hilbert-Schmidt space, ``A v B`` superoperators, modular conjugation
modular   : KMS vector, modular operator, Tomita map, modular flow, KMS checks
landau    : Landau-level ladders, Hamiltonians and the cartesian audit
wigner    : Wigner transform onto plane grids and the intertwining check
quasi     : weight families, seminorm sweeps and ideal diagnostics
cli       : the ``modlab`` experiment runner
"""

__version__ = "0.1.0"
