"""Thermal transition rates between Floquet channels by momentum quadrature.

The d=1 rate for taking the system from level ``j`` to level ``j'`` while the
Floquet index changes by ``nu`` is

    a^nu_{j'j}(beta) = (2 N / Z) * int_0^{p_cut} dp  exp(-beta p^2 / 2m)
                       * (m / ptilde) * sum_{s=+-} |T(s ptilde, (j' nu); p, (j 0))|^2,

with ``Z = sqrt(2 pi m / beta)`` and ``ptilde`` the outgoing on-shell
momentum; the leading 2 folds the two incoming directions (the solve depends
on p^2 only).  The integrand is piecewise analytic between channel-opening
momenta; panels split there and a square-root substitution anchored at each
threshold edge removes both the 1/ptilde endpoint and the square-root cusps,
so Gauss-Legendre converges spectrally per panel.

T solves are independent of beta, so one node set per incoming level serves
every temperature; a ``RateEngine`` does those solves once and turns them
into tables by plain weighted sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, ConvergenceError, UndefinedMomentError
from .model import Channel, SystemSpec, Truncation
from .scattering import ChannelBasis, get_basis, solve_t_batch

__all__ = [
    "RateTable",
    "RateEngine",
    "momentum_panels",
    "quadrature_nodes",
    "transition_rate",
    "rate_table",
    "exp_moment",
    "moment_curvature_at_zero",
    "zero_temperature_rates",
]

_LADDER_RATIO = 1.5
_LADDER_START_FRACTION = 1.0 / 256.0


def channel_thresholds(spec: SystemSpec, j_in: int, basis: ChannelBasis,
                       p_cut: float) -> list[float]:
    """Opening momenta of every basis channel inside (0, p_cut).

    The elastic channel opens at p = 0, which seeds the list; endothermic
    channels open at ``sqrt(2m (E_ch - E_jin))``.
    """
    gaps = 2.0 * spec.mass * (basis.quasi - spec.level_energy(j_in))
    ts = {0.0}
    for g in gaps:
        if 0.0 < g < p_cut * p_cut:
            ts.add(float(np.sqrt(g)))
    return sorted(ts)


def momentum_panels(spec: SystemSpec, trunc: Truncation, j_in: int,
                    basis: ChannelBasis | None = None):
    """Panel list [(a, b, anchor)] covering (0, p_cut).

    ``anchor`` is 'left'/'right' when the corresponding edge is a channel
    threshold (square-root substitution applied there) or 'plain'.  Segments
    between thresholds are halved so each half carries at most one anchor,
    and a geometric ladder of extra edges keeps panels short enough for the
    Boltzmann factor at any temperature of interest.
    """
    if basis is None:
        basis = get_basis(spec, trunc)
    p_cut = trunc.p_cut(spec.mass)
    ts = channel_thresholds(spec, j_in, basis, p_cut)
    ladder = []
    w = p_cut * _LADDER_START_FRACTION
    while w < p_cut * (1.0 - 1e-9):
        if all(abs(w - t) > 1e-9 * p_cut for t in ts):
            ladder.append(w)
        w *= _LADDER_RATIO
    edges = sorted(set(ts) | set(ladder) | {p_cut})
    thr = set(ts)
    panels = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        panels.append((a, mid, "left" if a in thr else "plain"))
        panels.append((mid, b, "right" if b in thr else "plain"))
    return panels


def quadrature_nodes(spec: SystemSpec, trunc: Truncation, j_in: int,
                     basis: ChannelBasis | None = None):
    """Gauss-Legendre nodes and weights (Jacobian included) over all panels."""
    x, w = leggauss(trunc.quad_points)
    nodes, weights = [], []
    for a, b, anchor in momentum_panels(spec, trunc, j_in, basis):
        if anchor == "left":
            ub = np.sqrt(b * b - a * a)
            u = 0.5 * (x + 1.0) * ub
            uw = 0.5 * ub * w
            p = np.sqrt(u * u + a * a)
            nodes.append(p)
            weights.append(uw * u / p)
        elif anchor == "right":
            vb = np.sqrt(b * b - a * a)
            v = 0.5 * (x + 1.0) * vb
            vw = 0.5 * vb * w
            p = np.sqrt(b * b - v * v)
            nodes.append(p)
            weights.append(vw * v / p)
        else:
            nodes.append(0.5 * (x + 1.0) * (b - a) + a)
            weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class RateTable:
    """Floquet rates at one inverse temperature.

    ``per_nu`` maps (j_to, j_from, nu) to ``a^nu_{j_to, j_from}`` and
    ``totals`` maps (j_to, j_from) to the nu-sum.  Elastic entries
    (j_to == j_from) are kept: they cancel in the Pauli generator but enter
    the thermalization sum rules.
    """

    spec: SystemSpec
    trunc: Truncation
    beta: float
    per_nu: dict = field(repr=False)
    totals: dict = field(repr=False)

    def rate(self, j_to: int, j_from: int, nu: int) -> float:
        return self.per_nu.get((j_to, j_from, nu), 0.0)

    def total(self, j_to: int, j_from: int) -> float:
        return self.totals[(j_to, j_from)]

    def max_rate(self) -> float:
        return max(self.per_nu.values())

    def scaled(self, factor: float) -> "RateTable":
        """Copy with every rate multiplied by a positive factor.

        All shipped observables are invariant under this rescaling (common
        prefactors such as the gas density cancel).
        """
        if factor <= 0:
            raise ConfigError("scale factor must be positive")
        return RateTable(
            spec=self.spec, trunc=self.trunc, beta=self.beta,
            per_nu={k: v * factor for k, v in self.per_nu.items()},
            totals={k: v * factor for k, v in self.totals.items()},
        )

    def validate(self, tol: float = 1e-12) -> None:
        n = self.spec.n_levels
        for v in self.per_nu.values():
            if v < 0:
                raise ConfigError(f"negative rate {v}")
        for jt in range(1, n + 1):
            for jf in range(1, n + 1):
                s = sum(v for (a, b, _), v in self.per_nu.items()
                        if a == jt and b == jf)
                ref = self.totals[(jt, jf)]
                if abs(s - ref) > tol * max(1.0, abs(ref)):
                    raise ConfigError(
                        f"totals inconsistent for ({jt},{jf}): {s} vs {ref}")


class RateEngine:
    """Shared T-solve data for one (spec, truncation); tables per beta are cheap.

    The engine evaluates |T|^2 and 1/ptilde on the quadrature nodes of every
    incoming level once; ``table(beta)`` is then a weighted sum.  An optional
    :class:`~floquet_ness.cache.SolutionCache` persists the per-node solves.
    """

    _memo: dict = {}

    def __init__(self, spec: SystemSpec, trunc: Truncation, cache=None):
        self.spec = spec
        self.trunc = trunc
        self.basis = get_basis(spec, trunc)
        self._nodes = {}
        for j_in in range(1, spec.n_levels + 1):
            p, w = quadrature_nodes(spec, trunc, j_in, self.basis)
            t_rows = self._t_rows(p, j_in, cache)
            rad = p[:, None] ** 2 + 2.0 * spec.mass * (
                spec.level_energy(j_in) - self.basis.quasi[None, :])
            inv_pt = np.where(rad > 0.0, 1.0 / np.sqrt(np.abs(rad)), 0.0)
            self._nodes[j_in] = (p, w, np.abs(t_rows) ** 2, inv_pt)

    def _t_rows(self, p: np.ndarray, j_in: int, cache) -> np.ndarray:
        if cache is None:
            t_rows, _, _ = solve_t_batch(self.basis, p, j_in)
            return t_rows
        from .config import spec_id, trunc_id  # local import, no cycle at module load

        sid, tid = spec_id(self.spec), trunc_id(self.trunc)
        keys = [cache.record_key(sid, tid, pi, j_in) for pi in p]
        t_rows = np.empty((len(p), self.basis.size), dtype=complex)
        missing = []
        for i, key in enumerate(keys):
            hit = cache.get(key)
            if hit is None:
                missing.append(i)
            else:
                t_rows[i] = hit[1]
        if missing:
            fresh, psis, _ = solve_t_batch(self.basis, p[missing], j_in)
            for n, i in enumerate(missing):
                t_rows[i] = fresh[n]
                cache.put(keys[i], psis[n], fresh[n])
        return t_rows

    @classmethod
    def shared(cls, spec: SystemSpec, trunc: Truncation) -> "RateEngine":
        """Memoized engine; repeated one-shot calls reuse the solves."""
        key = (spec, trunc)
        if key not in cls._memo:
            if len(cls._memo) > 8:
                cls._memo.clear()
            cls._memo[key] = cls(spec, trunc)
        return cls._memo[key]

    def n_solves(self) -> int:
        return sum(len(p) for p, _, _, _ in self._nodes.values())

    def channel_integrals(self, j_in: int, beta: float) -> np.ndarray:
        """Per-channel rate vector a^nu_{(j',nu) <- j_in} at this beta."""
        if not beta > 0:
            raise ConfigError(f"beta must be > 0, got {beta}")
        spec = self.spec
        p, w, t2, inv_pt = self._nodes[j_in]
        z = np.sqrt(2.0 * np.pi * spec.mass / beta)
        boltz = np.exp(-beta * p ** 2 / (2.0 * spec.mass))
        # inner 2: both outgoing directions carry the same |T|^2 at q = 0;
        # outer 2: both incoming directions (solve depends on p^2 only).
        integrand = (w * boltz)[:, None] * (spec.mass * inv_pt) * (2.0 * t2)
        return 2.0 * spec.density * integrand.sum(axis=0) / z

    def table(self, beta: float) -> RateTable:
        per_nu = {}
        totals = {}
        n = self.spec.n_levels
        for j_from in range(1, n + 1):
            vec = self.channel_integrals(j_from, beta)
            for k, ch in enumerate(self.basis.channels):
                per_nu[(ch.j, j_from, ch.nu)] = float(vec[k])
        for jt in range(1, n + 1):
            for jf in range(1, n + 1):
                totals[(jt, jf)] = float(sum(
                    per_nu[(jt, jf, nu)]
                    for nu in range(-self.trunc.nu_cut, self.trunc.nu_cut + 1)))
        return RateTable(spec=self.spec, trunc=self.trunc, beta=float(beta),
                         per_nu=per_nu, totals=totals)


def transition_rate(spec: SystemSpec, trunc: Truncation, j_to: int, j_from: int,
                    nu: int, beta: float) -> float:
    """One Floquet rate ``a^nu_{j_to, j_from}(beta)``; beta must be positive."""
    if abs(nu) > trunc.nu_cut:
        raise ConfigError(f"|nu|={abs(nu)} outside truncation {trunc.nu_cut}")
    engine = RateEngine.shared(spec, trunc)
    vec = engine.channel_integrals(j_from, beta)
    return float(vec[engine.basis.index(Channel(j_to, nu))])


def rate_table(spec: SystemSpec, trunc: Truncation, beta: float) -> RateTable:
    """Full table of Floquet rates and totals at one inverse temperature."""
    return RateEngine.shared(spec, trunc).table(beta)


def exp_moment(table: RateTable, j: int, jp: int) -> float:
    """Ratio ``sum_nu a^nu_{j jp} e^{beta nu hbar omega} / sum_nu a^nu_{j jp}``.

    Independent of any common rate prefactor.  Requires a nonzero total.
    """
    total = table.total(j, jp)
    if total <= 0.0:
        raise UndefinedMomentError(f"total rate ({j},{jp}) vanishes")
    hw = table.spec.hbar * table.spec.omega
    num = sum(
        table.rate(j, jp, nu) * np.exp(table.beta * nu * hw)
        for nu in range(-table.trunc.nu_cut, table.trunc.nu_cut + 1))
    return float(num / total)


def moment_curvature_at_zero(spec: SystemSpec, trunc: Truncation, j: int,
                             jp: int, beta_fd: float | None = None,
                             engine: RateEngine | None = None) -> float:
    """Second beta-derivative of the exponential moment at beta = 0.

    The moment equals 1 at beta = 0 exactly, so a one-sided stencil on
    (beta_fd, 2 beta_fd) with Richardson elimination of the O(beta) error
    suffices; beta enters both through the thermal weight in the rates and
    the explicit exponential, and both are differenced together.  The default
    step is 1e-2 in units where the lowest level gap is 0.5.
    """
    if beta_fd is None:
        gap = spec.level_energy(2) - spec.level_energy(1)
        beta_fd = 1e-2 * 0.5 / abs(gap)
    if engine is None:
        engine = RateEngine.shared(spec, trunc)

    def d_estimate(b):
        m = exp_moment(engine.table(b), j, jp)
        return 2.0 * (m - 1.0) / (b * b)

    return float(2.0 * d_estimate(beta_fd) - d_estimate(2.0 * beta_fd))


def zero_temperature_rates(spec: SystemSpec, trunc: Truncation,
                           p_min: float = 1e-3,
                           stability_tol: float = 1e-3) -> RateTable:
    """Rates in the beta -> infinity limit, up to a common normalization.

    Only channels below the incoming level stay open; each open rate is
    ``N * (m / ptilde0) * sum_{s=+-} |T(s ptilde0; p_min)|^2 / p_min^2`` with
    ``ptilde0`` the zero-energy outgoing momentum.  In one dimension the T
    elements vanish linearly with the probe momentum, so the probe-square
    normalization makes the limit stable; the table is verified by halving
    ``p_min`` and comparing max-normalized entries.
    """
    if p_min <= 0:
        raise ConfigError("p_min must be positive")
    basis = get_basis(spec, trunc)

    def probe(pm):
        per_nu = {}
        for j_from in range(1, spec.n_levels + 1):
            t_rows, _, _ = solve_t_batch(basis, np.array([pm]), j_from)
            t2 = np.abs(t_rows) ** 2
            drop = 2.0 * spec.mass * (spec.level_energy(j_from) - basis.quasi)
            for k, ch in enumerate(basis.channels):
                if drop[k] > 0.0:
                    pt0 = np.sqrt(drop[k])
                    val = spec.density * (spec.mass / pt0) * 2.0 * t2[0, k] / pm ** 2
                else:
                    val = 0.0
                per_nu[(ch.j, j_from, ch.nu)] = float(val)
        return per_nu

    ref = probe(p_min)
    check = probe(p_min / 2.0)
    top = max(ref.values())
    drift = max(abs(ref[k] / top - check[k] / max(check.values()))
                for k in ref)
    if drift > stability_tol:
        raise ConvergenceError(
            f"zero-temperature limit unstable under p_min halving "
            f"(drift {drift:.2e} > {stability_tol:.2e}); reduce p_min")
    totals = {}
    for jt in range(1, spec.n_levels + 1):
        for jf in range(1, spec.n_levels + 1):
            totals[(jt, jf)] = float(sum(
                ref[(jt, jf, nu)]
                for nu in range(-trunc.nu_cut, trunc.nu_cut + 1)))
    return RateTable(spec=spec, trunc=trunc, beta=float("inf"),
                     per_nu=ref, totals=totals)
