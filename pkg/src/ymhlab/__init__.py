"""Discrete Coulomb-Yang-Mills-Higgs and R_tau energies on the unit ball."""

from . import boundary, charges, dec, energies, gauge, hopf, optimize, su2
from .dec import Cochain, CubicalComplex
from .energies import EnergyReport, Params
from .gauge import FieldConfig

__version__ = "0.1.0"

__all__ = [
    "boundary", "charges", "dec", "energies", "gauge", "hopf", "optimize", "su2",
    "Cochain", "CubicalComplex", "EnergyReport", "Params", "FieldConfig",
]
