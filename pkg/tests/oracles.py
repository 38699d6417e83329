"""Independent oracles used by the unit and acceptance tests.

The rate oracle integrates the same physical integrand as the production
path but with none of its quadrature machinery: uniform grids, composite
Simpson, and explicit exclusion windows around every channel-opening
momentum (where the production path instead substitutes variables).
"""

import numpy as np
from scipy.integrate import simpson

from floquet_ness.model import Channel
from floquet_ness.rates import channel_thresholds, quadrature_nodes
from floquet_ness.scattering import get_basis, solve_t_batch

_WINDOW_FRACTION = 1e-8


class DenseRateOracle:
    """Brute-force thermal rate integrals on dense uniform grids.

    The T solves per incoming level are done once and shared by every
    (outgoing channel, beta) query.
    """

    def __init__(self, spec, trunc, factor: int = 20):
        self.spec = spec
        self.trunc = trunc
        self.basis = get_basis(spec, trunc)
        self.factor = factor
        self._grids = {}

    def _grid(self, j_from: int):
        if j_from in self._grids:
            return self._grids[j_from]
        spec, trunc = self.spec, self.trunc
        p_cut = trunc.p_cut(spec.mass)
        n_ref = len(quadrature_nodes(spec, trunc, j_from, self.basis)[0])
        total = self.factor * n_ref
        window = _WINDOW_FRACTION * p_cut
        edges = channel_thresholds(spec, j_from, self.basis, p_cut) + [p_cut]
        segments = []
        for a, b in zip(edges[:-1], edges[1:]):
            lo, hi = a + window, b - window
            if hi <= lo:
                continue
            n = max(65, (int(total * (b - a) / p_cut) // 2) * 2 + 1)
            p = np.linspace(lo, hi, n)
            t_rows, _, _ = solve_t_batch(self.basis, p, j_from)
            segments.append((p, np.abs(t_rows) ** 2))
        self._grids[j_from] = segments
        return segments

    def rate(self, j_to: int, j_from: int, nu: int, beta: float) -> float:
        spec = self.spec
        k = self.basis.index(Channel(j_to, nu))
        acc = 0.0
        for p, t2 in self._grid(j_from):
            rad = p ** 2 + 2.0 * spec.mass * (
                spec.level_energy(j_from) - self.basis.quasi[k])
            f = np.where(
                rad > 0.0,
                np.exp(-beta * p ** 2 / (2.0 * spec.mass))
                * (spec.mass / np.sqrt(np.abs(np.where(rad > 0, rad, 1.0))))
                * 2.0 * t2[:, k],
                0.0,
            )
            acc += simpson(f, x=p)
        z = np.sqrt(2.0 * np.pi * spec.mass / beta)
        return float(2.0 * spec.density * acc / z)


def null_space_populations(w: np.ndarray) -> np.ndarray:
    """Brute-force steady state: SVD null vector, normalized to unit sum."""
    _, _, vh = np.linalg.svd(w)
    vec = np.real(vh[-1])
    vec = vec / vec.sum()
    return vec
