"""glauberlab: finite reversible birth/death generators as a laboratory.

Exact state-space enumeration for exclusion and truncated-gas families,
structural identity checks for second-order (carre-du-champ style) entropy
arguments, certified decay constants with search-based counterparts, semigroup
evolution, and event-driven simulation of the finite and continuum dynamics.
"""

from . import (
    bochner,
    functionals,
    generator,
    models,
    montecarlo,
    spectral,
    statespace,
)

__all__ = [
    "statespace",
    "models",
    "generator",
    "functionals",
    "bochner",
    "spectral",
    "montecarlo",
    "__version__",
]

__version__ = "0.1.0"
