"""Moment-encoded lattice Boltzmann solver suite.

Subpackages cover the discrete velocity models (:mod:`momentlbm.lattice`),
moment encoding (:mod:`momentlbm.moments`), collision operators
(:mod:`momentlbm.collision`), the linear stability analyzer
(:mod:`momentlbm.stability`), fixed-point moment quantization
(:mod:`momentlbm.quantization`), obstacle geometry
(:mod:`momentlbm.geometry`), time integration (:mod:`momentlbm.solver`),
and the command line front end (:mod:`momentlbm.cli`).
"""

from .lattice import LatticeModel, make_lattice

__all__ = ["LatticeModel", "make_lattice"]
__version__ = "0.1.0"
