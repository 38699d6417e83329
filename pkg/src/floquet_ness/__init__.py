"""Floquet scattering rates and steady states of a driven N-level system in a dilute 1D gas.

The package is organized along the computational pipeline:

``model``
    physical specification (levels, drive, contact coupling) and the Floquet
    coupling matrix between (level, Floquet index) channels.
``scattering``
    truncated multichannel Lippmann-Schwinger solve at zero scatterer
    positions, on-shell T-matrix extraction, optical-theorem residuals.
``rates``
    thermal-average transition rates by panelled Gauss-Legendre quadrature
    over incoming momenta, exponential moments, zero-temperature limits.
``ness``
    Pauli generator, steady states, time evolution, high-temperature
    expansion and the thermal-domain estimate.
``diagnostics``
    every sum-rule the rates must satisfy, evaluated as numeric residuals.
``cli``
    configuration, sweeps, caching and CSV export.
"""

from .model import Channel, SystemSpec, Truncation, paper_system
from .scattering import ChannelBasis, ScatteringSolution
from .rates import RateTable, RateEngine

__all__ = [
    "Channel",
    "SystemSpec",
    "Truncation",
    "paper_system",
    "ChannelBasis",
    "ScatteringSolution",
    "RateTable",
    "RateEngine",
]

__version__ = "0.1.0"
