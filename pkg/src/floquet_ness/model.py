"""Physical specification of the driven system and its Floquet coupling matrix.

The driven Hamiltonian is diagonal in the bare levels, with level ``j``
oscillating as ``E_j + c_j * lam * cos(omega t)`` for integer drive
coefficients ``c_j``.  For this drive class the Floquet eigenbasis is known in
closed form: quasi-energies are ``E_j + nu*hbar*omega`` and the coupling
between channels ``(j', nu')`` and ``(j'', nu'')`` factorizes into a bare
matrix element times a period-averaged phase factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .errors import ConfigError, DegenerateSpectrumError

__all__ = [
    "Channel",
    "SystemSpec",
    "Truncation",
    "paper_system",
    "paper_coupling_vectors",
    "quasi_energy",
    "coupling_base",
    "phase_average_factor",
    "bessel_phase_factor",
    "floquet_coupling",
]


@dataclass(frozen=True, order=True)
class Channel:
    """A scattering channel: bare level ``j`` (1-based) and Floquet index ``nu``."""

    j: int
    nu: int


@dataclass(frozen=True)
class Truncation:
    """Numerical truncation: Floquet window, momentum cutoff, quadrature order.

    ``e_cut`` is the cutoff kinetic energy of incoming gas particles; the
    thermal momentum integral runs over ``[0, sqrt(2 m e_cut)]``.
    """

    nu_cut: int = 8
    e_cut: float = 150.0
    quad_points: int = 40
    degeneracy_tol: float = 1e-9

    def __post_init__(self):
        if self.nu_cut < 0:
            raise ConfigError(f"nu_cut must be >= 0, got {self.nu_cut}")
        if self.e_cut <= 0:
            raise ConfigError(f"e_cut must be > 0, got {self.e_cut}")
        if self.quad_points < 8:
            raise ConfigError(f"quad_points must be >= 8, got {self.quad_points}")
        if self.degeneracy_tol <= 0:
            raise ConfigError("degeneracy_tol must be > 0")

    def p_cut(self, mass: float) -> float:
        return float(np.sqrt(2.0 * mass * self.e_cut))


@dataclass(frozen=True)
class SystemSpec:
    """Driven N-level system coupled to a dilute 1D gas by contact scatterers.

    Parameters
    ----------
    levels : bare level energies ``E_j``, length ``N >= 2``.
    omega : driving angular frequency, > 0.
    lambda_drive : driving strength, >= 0.
    drive_profile : integer coefficients ``c_j``; level ``j`` is driven as
        ``E_j + c_j * lambda_drive * cos(omega t)``.
    coupling_strengths : contact strengths ``V_i``, one per scatterer.
    coupling_vectors : overlaps ``<chi_i|phi_j>`` as a complex matrix with one
        row per scatterer (rows must be unit-norm states).
    """

    levels: tuple
    omega: float
    lambda_drive: float
    drive_profile: tuple
    coupling_strengths: tuple
    coupling_vectors: tuple  # tuple of tuples of complex
    hbar: float = 1.0
    mass: float = 1.0
    density: float = 1.0

    def __post_init__(self):
        # normalize containers so specs hash and compare by value
        object.__setattr__(self, "levels", tuple(float(e) for e in self.levels))
        if any(float(c) != int(c) for c in self.drive_profile):
            raise ConfigError("drive coefficients must be integers")
        object.__setattr__(self, "drive_profile",
                           tuple(int(c) for c in self.drive_profile))
        object.__setattr__(self, "coupling_strengths",
                           tuple(float(v) for v in self.coupling_strengths))
        object.__setattr__(self, "coupling_vectors",
                           tuple(tuple(complex(x) for x in row)
                                 for row in self.coupling_vectors))
        n = len(self.levels)
        if n < 2:
            raise ConfigError("need at least two levels")
        if not (self.omega > 0):
            raise ConfigError("omega must be > 0")
        if self.lambda_drive < 0:
            raise ConfigError("lambda_drive must be >= 0")
        if self.hbar <= 0 or self.mass <= 0 or self.density <= 0:
            raise ConfigError("hbar, mass, density must be > 0")
        if len(self.drive_profile) != n:
            raise ConfigError("drive_profile length must match levels")
        vecs = np.asarray(self.coupling_vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape != (len(self.coupling_strengths), n):
            raise ConfigError(
                "coupling_vectors must have one row per scatterer and one "
                "column per level"
            )
        if not np.all(np.isfinite(np.asarray(self.coupling_strengths, dtype=float))):
            raise ConfigError("coupling strengths must be finite")
        norms = np.linalg.norm(vecs, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-8):
            raise ConfigError(f"coupling_vectors rows must be unit norm, got {norms}")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_energy(self, j: int) -> float:
        """Bare energy of 1-based level ``j``."""
        if not 1 <= j <= self.n_levels:
            raise ConfigError(f"level index {j} outside 1..{self.n_levels}")
        return float(self.levels[j - 1])

    def coupling_matrix(self) -> np.ndarray:
        """Complex overlap matrix with rows ``<chi_i|phi_j>``."""
        return np.asarray(self.coupling_vectors, dtype=complex)

    def check_nondegenerate(self, trunc: Truncation) -> None:
        """Reject quasi-energy coincidences within the truncation window.

        The populations-only description assumes a non-degenerate
        quasi-energy spectrum, so ``|E_j - E_j' + nu*hbar*omega|`` must stay
        above ``degeneracy_tol`` for all level pairs and ``|nu| <= 2 nu_cut``.
        """
        levels = np.asarray(self.levels, dtype=float)
        hw = self.hbar * self.omega
        for a in range(self.n_levels):
            for b in range(self.n_levels):
                for nu in range(-2 * trunc.nu_cut, 2 * trunc.nu_cut + 1):
                    if a == b and nu == 0:
                        continue
                    gap = abs(levels[a] - levels[b] + nu * hw)
                    if gap <= trunc.degeneracy_tol:
                        raise DegenerateSpectrumError(
                            f"quasi-energies of levels {a + 1} and {b + 1} "
                            f"coincide at Floquet offset {nu} (gap {gap:.3e})"
                        )


def paper_coupling_vectors() -> tuple:
    """The three unit ``|chi_i>`` states of the driven three-level toy model."""
    s = 1.0 / np.sqrt(3.0)
    w = np.exp(2j * np.pi / 3.0)
    rows = (
        (s, s, s),
        (s * w * w, s, s * w),
        (s * np.conj(w * w), s, s * np.conj(w)),
    )
    return tuple(tuple(complex(x) for x in row) for row in rows)


def paper_system(lambda_drive: float = 0.5, omega: float = 1.35,
                 levels=(-0.5, 0.0, 0.4), density: float = 1.0) -> SystemSpec:
    """Default three-level system used throughout the tests and the CLI."""
    return SystemSpec(
        levels=tuple(float(e) for e in levels),
        omega=float(omega),
        lambda_drive=float(lambda_drive),
        drive_profile=(-1, 0, 1),
        coupling_strengths=(1.0, 0.7, 1.5),
        coupling_vectors=paper_coupling_vectors(),
        density=float(density),
    )


def quasi_energy(spec: SystemSpec, ch: Channel) -> float:
    """Quasi-energy ``E_j + nu*hbar*omega`` of channel ``ch``.

    For the diagonal zero-mean drive class the nu=0 quasi-energy equals the
    bare level energy exactly.
    """
    return spec.level_energy(ch.j) + ch.nu * spec.hbar * spec.omega


def coupling_base(spec: SystemSpec, j1: int, j2: int) -> complex:
    """Bare coupling element ``sum_i <phi_j1|chi_i> V_i <chi_i|phi_j2>``."""
    vecs = spec.coupling_matrix()
    if not (1 <= j1 <= spec.n_levels and 1 <= j2 <= spec.n_levels):
        raise ConfigError(f"level indices ({j1}, {j2}) outside 1..{spec.n_levels}")
    v = np.asarray(spec.coupling_strengths, dtype=float)
    return complex(np.sum(np.conj(vecs[:, j1 - 1]) * v * vecs[:, j2 - 1]))


def coupling_base_matrix(spec: SystemSpec) -> np.ndarray:
    """All bare coupling elements as an N x N Hermitian matrix."""
    vecs = spec.coupling_matrix()
    v = np.asarray(spec.coupling_strengths, dtype=float)
    return np.einsum("ia,i,ib->ab", np.conj(vecs), v, vecs)


def phase_average_factor(spec: SystemSpec, dc: int, dnu: int,
                         n_nodes: int | None = None) -> complex:
    """Period average of ``exp(-i dnu w t) exp(i dc (lam/hbar w) sin(w t))``.

    Evaluated by the uniform trapezoid rule over one period (spectrally
    accurate for periodic analytic integrands).  ``dc`` is the difference of
    drive coefficients and ``dnu`` the difference of Floquet indices.
    """
    if n_nodes is None:
        n_nodes = 2 * (4 * abs(dnu) + 16)
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    z = dc * spec.lambda_drive / (spec.hbar * spec.omega)
    vals = np.exp(-1j * dnu * theta + 1j * z * np.sin(theta))
    return complex(np.mean(vals))


def bessel_phase_factor(spec: SystemSpec, dc: int, dnu: int) -> float:
    """Same phase factor through the integer-order Bessel identity ``J_dnu(dc z)``."""
    z = dc * spec.lambda_drive / (spec.hbar * spec.omega)
    return float(jv(dnu, z))


def floquet_coupling(spec: SystemSpec, ch1: Channel, ch2: Channel) -> complex:
    """Coupling between Floquet channels: phase factor times the bare element.

    Depends on (``nu1 - nu2``, drive-coefficient difference) only, which makes
    it exactly invariant under a common Brillouin shift of both channels.
    """
    dc = int(spec.drive_profile[ch1.j - 1]) - int(spec.drive_profile[ch2.j - 1])
    dnu = ch1.nu - ch2.nu
    factor = phase_average_factor(spec, dc, dnu)
    return factor * coupling_base(spec, ch1.j, ch2.j)
