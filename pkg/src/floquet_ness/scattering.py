"""Truncated multichannel Lippmann-Schwinger solver and on-shell T elements.

All scatterers sit at the origin, so the linear system closes over the
wavefunction amplitudes at a single point and the outgoing-direction
dependence of the on-shell T elements drops out.  The epsilon -> +0 limit of
the free Green's integral is taken analytically:

    integral dp' / (dE + i eps)  =  -i pi sqrt(2 m / dE),

with the square root of a negative argument taken positive imaginary, which
makes the value real and negative for closed channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConfigError,
    ConsistencyError,
    SolverConditionError,
    ThresholdCollisionError,
)
from .model import Channel, SystemSpec, Truncation, coupling_base_matrix, phase_average_factor

__all__ = [
    "ChannelBasis",
    "ScatteringSolution",
    "outgoing_momentum",
    "green_integral",
    "build_system",
    "solve_amplitudes",
    "t_matrix_elements",
    "optical_theorem_residual",
    "optical_theorem_residual_reversed",
    "merged_sums",
    "RESIDUAL_FLOOR",
]

# Floor added to optical-theorem denominators so the zero-coupling case
# reports a zero residual instead of 0/0.
RESIDUAL_FLOOR = 1e-300

_COND_GUARD = 1e12
_V1_V2_TOL = 1e-8


class ChannelBasis:
    """Ordered set of channels (j, nu), j = 1..N, |nu| <= nu_cut (j-major).

    Precomputes the quasi-energy vector and the Floquet coupling matrix; both
    are shared read-only by every solve at this (spec, truncation).
    """

    def __init__(self, spec: SystemSpec, trunc: Truncation):
        spec.check_nondegenerate(trunc)
        self.spec = spec
        self.trunc = trunc
        self.channels = [
            Channel(j, nu)
            for j in range(1, spec.n_levels + 1)
            for nu in range(-trunc.nu_cut, trunc.nu_cut + 1)
        ]
        self._index = {ch: k for k, ch in enumerate(self.channels)}
        self.size = len(self.channels)

        jarr = np.array([ch.j for ch in self.channels])
        nuarr = np.array([ch.nu for ch in self.channels])
        levels = np.asarray(spec.levels, dtype=float)
        self.quasi = levels[jarr - 1] + nuarr * spec.hbar * spec.omega

        carr = np.asarray(spec.drive_profile, dtype=int)[jarr - 1]
        base = coupling_base_matrix(spec)[np.ix_(jarr - 1, jarr - 1)]
        factors = {
            (dc, dnu): phase_average_factor(spec, dc, dnu)
            for dc in np.unique(carr[:, None] - carr[None, :])
            for dnu in range(-2 * trunc.nu_cut, 2 * trunc.nu_cut + 1)
        }
        phase = np.empty((self.size, self.size), dtype=complex)
        for a in range(self.size):
            for b in range(self.size):
                phase[a, b] = factors[(carr[a] - carr[b], int(nuarr[a] - nuarr[b]))]
        self.coupling = phase * base

    def index(self, ch: Channel) -> int:
        try:
            return self._index[ch]
        except KeyError:
            raise ConfigError(f"channel {ch} outside basis") from None

    def __contains__(self, ch: Channel) -> bool:
        return ch in self._index

    def __len__(self) -> int:
        return self.size


@lru_cache(maxsize=32)
def _basis_cache(spec: SystemSpec, trunc: Truncation) -> ChannelBasis:
    return ChannelBasis(spec, trunc)


def get_basis(spec: SystemSpec, trunc: Truncation) -> ChannelBasis:
    """Shared ChannelBasis for (spec, trunc); construction is idempotent."""
    return _basis_cache(spec, trunc)


def outgoing_momentum(spec: SystemSpec, trunc: Truncation, p: float, j_in: int,
                      ch: Channel):
    """On-shell outgoing momentum ``+sqrt(p^2 + 2m(E_in0 - E_ch))`` or None.

    None marks a closed channel (radicand <= 0, the threshold itself
    included).
    """
    rad = p * p + 2.0 * spec.mass * (spec.level_energy(j_in) -
                                     (spec.level_energy(ch.j) + ch.nu * spec.hbar * spec.omega))
    if rad <= 0.0:
        return None
    return float(np.sqrt(rad))


def green_integral(spec: SystemSpec, e_in: float, ch: Channel,
                   quasi: float | None = None) -> complex:
    """Analytic free Green's integral for channel ``ch`` at total energy ``e_in``.

    Returns ``-i pi sqrt(2m/dE)``: negative imaginary for open channels
    (dE > 0), real negative for closed ones (dE < 0).
    """
    if quasi is None:
        quasi = spec.level_energy(ch.j) + ch.nu * spec.hbar * spec.omega
    de = e_in - quasi
    if de == 0.0:
        raise ThresholdCollisionError(
            f"incoming energy {e_in} sits on the threshold of {ch}", channel=ch)
    root = np.sqrt(2.0 * spec.mass / abs(de))
    if de > 0:
        return complex(0.0, -np.pi * root)
    return complex(-np.pi * root, 0.0)


def _green_vector(basis: ChannelBasis, e_in: float) -> np.ndarray:
    de = e_in - basis.quasi
    if np.any(de == 0.0):
        k = int(np.nonzero(de == 0.0)[0][0])
        raise ThresholdCollisionError(
            f"incoming energy {e_in} sits on the threshold of {basis.channels[k]}",
            channel=basis.channels[k])
    root = np.pi * np.sqrt(2.0 * basis.spec.mass / np.abs(de))
    return np.where(de > 0, -1j * root, -root + 0j)


def build_system(spec: SystemSpec, trunc: Truncation, p: float, j_in: int,
                 basis: ChannelBasis | None = None) -> np.ndarray:
    """Dense system matrix ``sqrt(2 pi hbar) I - diag(green) @ coupling``."""
    if basis is None:
        basis = get_basis(spec, trunc)
    e_in = p * p / (2.0 * spec.mass) + spec.level_energy(j_in)
    green = _green_vector(basis, e_in)
    a = -green[:, None] * basis.coupling
    a[np.diag_indices(basis.size)] += np.sqrt(2.0 * np.pi * spec.hbar)
    return a


@dataclass
class ScatteringSolution:
    """Amplitudes and on-shell T elements for one incoming (p, level, nu=0).

    ``t_row`` holds the route-v1 values for every basis channel; entries for
    closed channels are the analytic continuation and are excluded from any
    on-shell sum via ``open_flags``.  ``p_out`` carries the outgoing momentum
    of each open channel (NaN when closed).
    """

    p_in: float
    j_in: int
    psi: np.ndarray
    t_row: np.ndarray
    open_flags: np.ndarray
    p_out: np.ndarray
    condition: float
    basis: ChannelBasis

    def t_element(self, ch: Channel) -> complex:
        return complex(self.t_row[self.basis.index(ch)])


def solve_amplitudes(spec: SystemSpec, trunc: Truncation, p: float, j_in: int,
                     basis: ChannelBasis | None = None) -> ScatteringSolution:
    """Solve the truncated linear system at incoming (p, j_in, nu=0).

    The T elements are extracted along both routes (coupling @ psi, and the
    Green-factor inverse of the scattered amplitude) and must agree; the
    condition number is estimated and guarded.
    """
    if basis is None:
        basis = get_basis(spec, trunc)
    if not 1 <= j_in <= spec.n_levels:
        raise ConfigError(f"level index {j_in} outside 1..{spec.n_levels}")
    a = build_system(spec, trunc, p, j_in, basis)
    rhs = np.zeros(basis.size, dtype=complex)
    i_in = basis.index(Channel(j_in, 0))
    rhs[i_in] = 1.0

    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > _COND_GUARD:
        raise SolverConditionError(
            f"system at p={p}, j_in={j_in} rejected: cond={cond:.3e}", cond=cond)
    psi = np.linalg.solve(a, rhs)
    resid = float(np.max(np.abs(a @ psi - rhs)))
    if resid > 1e-10 * max(1.0, float(np.max(np.abs(psi)))):
        raise SolverConditionError(
            f"solve residual {resid:.3e} at p={p}, j_in={j_in}",
            cond=cond, residual=resid)

    e_in = p * p / (2.0 * spec.mass) + spec.level_energy(j_in)
    green = _green_vector(basis, e_in)
    t_v1 = basis.coupling @ psi
    t_v2 = (np.sqrt(2.0 * np.pi * spec.hbar) * psi - rhs) / green
    scale = float(np.max(np.abs(t_v1))) + RESIDUAL_FLOOR
    worst = float(np.max(np.abs(t_v1 - t_v2)))
    if worst > _V1_V2_TOL * max(1.0, scale):
        raise ConsistencyError(
            f"T-extraction routes disagree by {worst:.3e} at p={p}, j_in={j_in}")

    rad = p * p + 2.0 * spec.mass * (spec.level_energy(j_in) - basis.quasi)
    open_flags = rad > 0.0
    p_out = np.where(open_flags, np.sqrt(np.abs(rad)), np.nan)
    return ScatteringSolution(p_in=float(p), j_in=j_in, psi=psi, t_row=t_v1,
                              open_flags=open_flags, p_out=p_out,
                              condition=cond, basis=basis)


def t_matrix_elements(sol: ScatteringSolution) -> np.ndarray:
    """Route-v1 on-shell T elements over the basis (cross-checked at solve time)."""
    return sol.t_row


def solve_t_batch(basis: ChannelBasis, pvec: np.ndarray, j_in: int,
                  block: int = 256):
    """Batched solves over a momentum vector; returns (T rows, psi, worst residual).

    Fast path for quadrature: assembles stacked systems and lets LAPACK sweep
    them.  A residual guard replaces the per-matrix condition estimate.
    """
    spec = basis.spec
    n = basis.size
    i_in = basis.index(Channel(j_in, 0))
    sq = np.sqrt(2.0 * np.pi * spec.hbar)
    t_rows = np.empty((len(pvec), n), dtype=complex)
    psis = np.empty((len(pvec), n), dtype=complex)
    worst_resid = 0.0
    for s in range(0, len(pvec), block):
        pp = np.asarray(pvec[s:s + block], dtype=float)
        e_in = pp ** 2 / (2.0 * spec.mass) + spec.level_energy(j_in)
        de = e_in[:, None] - basis.quasi[None, :]
        if np.any(de == 0.0):
            i, k = np.argwhere(de == 0.0)[0]
            raise ThresholdCollisionError(
                f"node p={pp[i]} on threshold of {basis.channels[k]}",
                channel=basis.channels[int(k)])
        root = np.pi * np.sqrt(2.0 * spec.mass / np.abs(de))
        green = np.where(de > 0, -1j * root, -root + 0j)
        a = -green[:, :, None] * basis.coupling[None, :, :]
        a[:, np.arange(n), np.arange(n)] += sq
        rhs = np.zeros((len(pp), n), dtype=complex)
        rhs[:, i_in] = 1.0
        psi = np.linalg.solve(a, rhs[:, :, None])[:, :, 0]
        resid = np.max(np.abs(np.einsum("kab,kb->ka", a, psi) - rhs))
        worst_resid = max(worst_resid, float(resid))
        if worst_resid > 1e-8:
            k = int(s + np.argmax(np.max(np.abs(
                np.einsum("kab,kb->ka", a, psi) - rhs), axis=1)))
            raise SolverConditionError(
                f"batched solve residual {worst_resid:.3e} near p={pvec[k]}",
                residual=worst_resid)
        psis[s:s + block] = psi
        t_rows[s:s + block] = psi @ basis.coupling.T
    return t_rows, psis, worst_resid


def _optical_sums(sol: ScatteringSolution) -> tuple[float, float]:
    """(LHS, RHS) of the first-form optical theorem at this solution.

    LHS = -2 Im T(in; in); RHS sums ``|T|^2 / p_out`` over open channels and
    both outgoing directions (identical at zero scatterer positions, summed
    as two explicit terms).
    """
    basis = sol.basis
    i_in = basis.index(Channel(sol.j_in, 0))
    lhs = -2.0 * float(np.imag(sol.t_row[i_in]))
    mask = sol.open_flags
    per_dir = np.abs(sol.t_row[mask]) ** 2 / sol.p_out[mask]
    rhs = 2.0 * np.pi * basis.spec.mass * float(np.sum(2.0 * per_dir))
    return lhs, rhs


def optical_theorem_residual(spec: SystemSpec, trunc: Truncation, p: float,
                             ch_in: Channel,
                             basis: ChannelBasis | None = None) -> float:
    """Relative defect of the first unitarity form at incoming (p, ch_in).

    ``|LHS - RHS| / (|LHS| + |RHS| + floor)`` with LHS the negative doubled
    imaginary part of the diagonal element and RHS the open-channel sum.
    """
    if ch_in.nu != 0:
        raise ConfigError("incoming Floquet index is fixed to 0")
    if not p > 0:
        raise ConfigError("incoming momentum must be positive")
    sol = solve_amplitudes(spec, trunc, p, ch_in.j, basis)
    lhs, rhs = _optical_sums(sol)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + RESIDUAL_FLOOR)


def optical_theorem_residual_reversed(spec: SystemSpec, trunc: Truncation,
                                      p: float, ch_in: Channel,
                                      basis: ChannelBasis | None = None) -> float:
    """Relative defect of the second unitarity form (reversed T arguments).

    The RHS needs elements with the incoming state in channel (j'', nu'' != 0);
    those come from the nu=0 solve at the on-shell momentum through the
    Brillouin shift of the outgoing index.
    """
    if ch_in.nu != 0:
        raise ConfigError("incoming Floquet index is fixed to 0")
    if basis is None:
        basis = get_basis(spec, trunc)
    sol = solve_amplitudes(spec, trunc, p, ch_in.j, basis)
    i_in = basis.index(Channel(ch_in.j, 0))
    lhs = -2.0 * float(np.imag(sol.t_row[i_in]))
    rhs = 0.0
    for k, ch in enumerate(basis.channels):
        if not sol.open_flags[k]:
            continue
        shifted = Channel(ch_in.j, -ch.nu)
        if shifted not in basis:
            continue
        rev = solve_amplitudes(spec, trunc, float(sol.p_out[k]), ch.j, basis)
        amp2 = abs(rev.t_element(shifted)) ** 2
        rhs += 2.0 * np.pi * spec.mass * 2.0 * amp2 / float(sol.p_out[k])
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + RESIDUAL_FLOOR)


def merged_sums(spec: SystemSpec, trunc: Truncation, p: float, ch_in: Channel,
                basis: ChannelBasis | None = None) -> tuple[float, float]:
    """Both sides of the merged unitarity lemma at incoming (p, ch_in).

    Each side is an open-channel sum of ``|T|^2 / p_out``, with the T
    arguments interchanged between the two sides.
    """
    if basis is None:
        basis = get_basis(spec, trunc)
    sol = solve_amplitudes(spec, trunc, p, ch_in.j, basis)
    lhs = rhs = 0.0
    for k, ch in enumerate(basis.channels):
        if not sol.open_flags[k]:
            continue
        pt = float(sol.p_out[k])
        lhs += 2.0 * abs(sol.t_row[k]) ** 2 / pt
        shifted = Channel(ch_in.j, -ch.nu)
        if shifted not in basis:
            continue
        rev = solve_amplitudes(spec, trunc, pt, ch.j, basis)
        rhs += 2.0 * abs(rev.t_element(shifted)) ** 2 / pt
    return lhs, rhs
