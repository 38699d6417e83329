"""Numeric residuals for every sum rule the computed rates must satisfy.

Nothing here is ever integrated at beta = 0 (the thermal normalization
diverges there); every beta -> 0 statement is the accelerated limit of a
geometric sequence of positive temperatures.  All quantities are ratios, so
the overall rate normalization (gas density, partition function, any common
rescaling) cancels identically.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ConvergenceError, NoiseFloorError
from .model import SystemSpec, Truncation
from .rates import RateEngine, RateTable

__all__ = [
    "NOISE_FLOOR_FRACTION",
    "beta_zero_sequence",
    "aitken",
    "floquet_thermalization_residual",
    "thermalization_sums",
    "detailed_balance_ratio",
    "energy_exchange_moment",
    "energy_exchange_beta0",
    "rate_symmetry_beta0",
    "merged_symmetry_residual",
    "sum_balance_beta0",
]

# rates below this fraction of the table maximum are unresolved for ratios
NOISE_FLOOR_FRACTION = 1e-10


def beta_zero_sequence(spec: SystemSpec, count: int = 9,
                       ratio: float = 0.5) -> tuple:
    """Geometric beta sequence for beta -> 0 limits.

    Largest member is 0.05 over the lowest level gap.  The approach to the
    limit is slow (logarithmic in beta for contact coupling), so more points
    than a plain power-law extrapolation would need are taken by default.
    """
    gap = abs(spec.level_energy(2) - spec.level_energy(1))
    start = 0.05 / gap
    return tuple(start * ratio ** k for k in range(count))


def aitken(values) -> float:
    """Iterated Aitken delta-squared acceleration of a convergent sequence.

    Each pass is kept only while it shrinks the tail increment: sequences
    whose deeper difference columns hit rounding noise stop early instead of
    amplifying it.  Raises if the raw sequence is too short or its tail is
    not settling at all.
    """
    x = np.asarray(values, dtype=float)
    if len(x) < 3:
        raise ConvergenceError("need at least 3 sequence points")
    d = np.abs(np.diff(x))
    scale = float(np.max(np.abs(x)))
    if d[-1] > 4.0 * (d[0] + 1e-300) and d[-1] > 1e-10 * max(scale, 1e-300):
        raise ConvergenceError("sequence tail is diverging")
    est = float(x[-1])
    gap = float(d[-1])
    while len(x) >= 3:
        d1 = np.diff(x)
        d2 = np.diff(x, 2)
        safe = np.abs(d2) > 1e-14 * (np.abs(x[:-2]) + 1e-300)
        x = np.where(safe, x[:-2] - d1[:-1] ** 2 / np.where(safe, d2, 1.0),
                     x[2:])
        new_gap = float(abs(x[-1] - x[-2])) if len(x) >= 2 else 0.0
        if len(x) >= 2 and new_gap >= gap:
            break
        est = float(x[-1])
        gap = new_gap if len(x) >= 2 else gap
    return est


def thermalization_sums(table: RateTable, j: int) -> tuple[float, float]:
    """(LHS, RHS) of the Floquet thermalization condition for level ``j``.

    Both sides are divided by ``exp(-beta E_j0)``, which cancels in the
    relative error and keeps the exponentials representable at large beta.
    """
    spec = table.spec
    beta = table.beta
    hw = spec.hbar * spec.omega
    e0 = spec.level_energy(j)
    lhs = rhs = 0.0
    for jp in range(1, spec.n_levels + 1):
        de = spec.level_energy(jp) - e0
        for nu in range(-table.trunc.nu_cut, table.trunc.nu_cut + 1):
            lhs += table.rate(j, jp, -nu) * np.exp(-beta * (de + nu * hw))
            rhs += table.rate(jp, j, nu)
    return lhs, rhs


def floquet_thermalization_residual(spec: SystemSpec, table: RateTable,
                                    j: int) -> float:
    """Relative error ``2|LHS - RHS| / (LHS + RHS)`` of the balance at level j.

    LHS sums incoming rates weighted by the outgoing-channel Boltzmann
    factor; RHS is the Boltzmann-weighted total escape rate.  Elastic terms
    are included on both sides.
    """
    if not 1 <= j <= spec.n_levels:
        raise ConfigError(f"level index {j} outside 1..{spec.n_levels}")
    lhs, rhs = thermalization_sums(table, j)
    if lhs + rhs == 0.0:
        raise ConfigError("empty thermalization sums")
    return float(2.0 * abs(lhs - rhs) / (lhs + rhs))


def detailed_balance_ratio(table: RateTable, jp: int, j: int, nu: int) -> float:
    """Pairwise ratio ``a^-nu_{j jp} e^{-beta E_jp,nu} / (e^{-beta E_j0} a^nu_{jp j})``.

    Equals 1 iff detailed balance holds for this (j, jp, nu); the summed
    thermalization conditions do not require that.
    """
    spec = table.spec
    floor = NOISE_FLOOR_FRACTION * table.max_rate()
    num_rate = table.rate(j, jp, -nu)
    den_rate = table.rate(jp, j, nu)
    if den_rate <= floor or num_rate <= floor:
        raise NoiseFloorError(
            f"rates for ({j},{jp},nu={nu}) below noise floor {floor:.3e}")
    de = spec.level_energy(jp) + nu * spec.hbar * spec.omega - spec.level_energy(j)
    return float(num_rate * np.exp(-table.beta * de) / den_rate)


def _tables(spec, trunc, betas, engine):
    if engine is None:
        engine = RateEngine.shared(spec, trunc)
    return [engine.table(b) for b in betas]


def energy_exchange_moment(table: RateTable) -> float:
    """Normalized first Floquet moment ``sum nu a^nu / sum |nu| a^nu`` (j != j').

    Zero for any table symmetric under nu -> -nu, and defined as zero when no
    inelastic Floquet channel carries weight (zero driving).
    """
    num = den = 0.0
    for (jt, jf, nu), v in table.per_nu.items():
        if jt == jf:
            continue
        num += nu * v
        den += abs(nu) * v
    if den == 0.0:
        return 0.0
    return float(num / den)


def energy_exchange_beta0(spec: SystemSpec, trunc: Truncation,
                          beta_sequence=None,
                          engine: RateEngine | None = None) -> float:
    """Normalized first Floquet moment of the inelastic rates, extrapolated to beta = 0.

    Zero net energy exchange with the drive at infinite temperature makes the
    limit vanish.
    """
    if beta_sequence is None:
        beta_sequence = beta_zero_sequence(spec)
    seq = [energy_exchange_moment(t)
           for t in _tables(spec, trunc, beta_sequence, engine)]
    if all(v == 0.0 for v in seq):
        return 0.0
    return aitken(seq)


def rate_symmetry_beta0(spec: SystemSpec, trunc: Truncation, beta_sequence,
                        jp: int, j: int, nu: int,
                        engine: RateEngine | None = None) -> float:
    """Extrapolated beta -> 0 ratio ``a^nu_{jp j} / a^-nu_{jp j}``; contract -> 1."""
    if beta_sequence is None:
        beta_sequence = beta_zero_sequence(spec)
    seq = []
    for table in _tables(spec, trunc, beta_sequence, engine):
        floor = NOISE_FLOOR_FRACTION * table.max_rate()
        up = table.rate(jp, j, nu)
        dn = table.rate(jp, j, -nu)
        if up <= floor or dn <= floor:
            raise NoiseFloorError(
                f"rates ({jp},{j},+-{nu}) below noise floor at beta={table.beta}")
        seq.append(up / dn)
    return aitken(seq)


def _signed_limit(seq) -> float:
    """Limit estimate for a signed residual sequence.

    Such sequences typically rise out of a rounding-noise plateau before
    settling; the noise prefix is dropped, a geometric tail is accelerated,
    and a still-growing tail is continued by one increment as a conservative
    estimate.
    """
    x = np.asarray(seq, dtype=float)
    mag = float(np.max(np.abs(x)))
    if mag < 1e-12 or len(x) < 3:
        return float(x[-1])
    first = int(np.argmax(np.abs(x) > 1e-3 * mag))
    x = x[first:]
    if len(x) >= 3:
        d1 = x[-2] - x[-3]
        d2 = x[-1] - x[-2]
        if abs(d2) < abs(d1):
            r = d2 / d1
            return float(x[-1] + d2 * r / (1.0 - r))
    return float(2.0 * x[-1] - x[-2])


def merged_symmetry_residual(spec: SystemSpec, trunc: Truncation,
                             beta_probe=None,
                             engine: RateEngine | None = None) -> float:
    """beta -> 0 limit of the thermalization residual (worst level).

    The signed relative defect is extrapolated per level before taking the
    magnitude; at beta = 0 the statement reduces to the balance of total
    in- and out-rates.
    """
    if beta_probe is None:
        beta_probe = beta_zero_sequence(spec)
    tables = _tables(spec, trunc, beta_probe, engine)
    worst = 0.0
    for j in range(1, spec.n_levels + 1):
        seq = []
        for table in tables:
            lhs, rhs = thermalization_sums(table, j)
            seq.append(2.0 * (lhs - rhs) / (lhs + rhs))
        worst = max(worst, abs(_signed_limit(seq)))
    return worst


def sum_balance_beta0(spec: SystemSpec, trunc: Truncation, j: int,
                      beta_sequence=None,
                      engine: RateEngine | None = None) -> float:
    """Extrapolated beta -> 0 ratio of total out-rates to in-rates at level j."""
    if beta_sequence is None:
        beta_sequence = beta_zero_sequence(spec)
    seq = []
    for table in _tables(spec, trunc, beta_sequence, engine):
        out = sum(table.total(jp, j) for jp in range(1, spec.n_levels + 1))
        into = sum(table.total(j, jp) for jp in range(1, spec.n_levels + 1))
        seq.append(out / into)
    return aitken(seq)
