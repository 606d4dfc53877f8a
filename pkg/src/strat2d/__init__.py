"""Pseudospectral laboratory for the 2D inviscid stratified Boussinesq
system in vorticity form: simulation, frozen-transport iteration, dispersive
measurements, and inequality verification on the periodic torus."""

from .errors import (
    BlowupSuspectedError,
    ConfigError,
    GridMismatchError,
    HermitianSymmetryError,
    NonzeroMeanError,
    Strat2dError,
)
from .grid import GridSpec, SpectralField, VectorField

__version__ = "0.1.0"

__all__ = [
    "BlowupSuspectedError",
    "ConfigError",
    "GridMismatchError",
    "GridSpec",
    "HermitianSymmetryError",
    "NonzeroMeanError",
    "SpectralField",
    "Strat2dError",
    "VectorField",
    "__version__",
]
