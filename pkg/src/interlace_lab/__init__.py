"""Random-walk interlacement soups, Gaussian fields and renormalized local times.

Submodules: ``lattice`` (Green's function, capacity), ``sim`` (soup sampler),
``field`` (Gaussian field, Wick powers), ``wick_algebra`` and ``poly`` (exact
polynomial identities), ``moments`` (moment oracle, isomorphism checks),
``continuum`` (chain/cycle asymptotics) and ``cli``.
"""

__version__ = "0.1.0"
