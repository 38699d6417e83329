"""Pauli generator, steady states, and the high-temperature structure.

The population dynamics is ``dp_j/dt = sum_j' a_{jj'} p_j' - p_j sum_j' a_{j'j}``
with the total rates of a RateTable; elastic entries cancel between gain and
loss and never enter the generator.  Steady states come from the kernel of
the generator via a row-replacement solve, never from time integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateSpectrumError
from .model import SystemSpec, Truncation
from .rates import RateEngine, RateTable, moment_curvature_at_zero

__all__ = [
    "Populations",
    "build_generator",
    "steady_state",
    "evolve",
    "boltzmann",
    "high_t_slope",
    "thermal_domain_bound",
    "default_slope_grid",
]

_KERNEL_RESIDUAL_TOL = 1e-10
_SECOND_SV_FLOOR = 1e-12


@dataclass(frozen=True)
class Populations:
    """Normalized level populations at a given inverse temperature context."""

    beta: float
    p: tuple

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if np.any(arr < -1e-12):
            raise ConfigError(f"negative population in {arr}")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ConfigError(f"populations sum to {arr.sum()}, not 1")
        object.__setattr__(self, "p", tuple(float(max(x, 0.0)) for x in arr))

    def __getitem__(self, j: int) -> float:
        """Population of 1-based level j."""
        return self.p[j - 1]

    def asarray(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)


def build_generator(table: RateTable) -> np.ndarray:
    """Pauli generator W: W[j,j'] = a_{jj'} off-diagonal, zero column sums."""
    n = table.spec.n_levels
    w = np.zeros((n, n))
    for jt in range(1, n + 1):
        for jf in range(1, n + 1):
            if jt != jf:
                w[jt - 1, jf - 1] = table.total(jt, jf)
    w[np.diag_indices(n)] = -w.sum(axis=0)
    return w


def steady_state(w: np.ndarray, beta: float = float("nan")) -> Populations:
    """Normalized kernel vector of the generator.

    The row with the largest diagonal magnitude is replaced by the all-ones
    normalization row; the result is cross-checked against ``W p = 0`` and a
    one-dimensional-kernel guard (second-smallest singular value).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ConfigError("generator must be square")
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        raise DegenerateSpectrumError("zero generator has no unique steady state")
    sv = np.linalg.svd(w, compute_uv=False)
    if sv[-2] < _SECOND_SV_FLOOR * sv[0]:
        raise DegenerateSpectrumError(
            f"rate graph disconnected: second singular value {sv[-2]:.3e}")
    row = int(np.argmax(np.abs(np.diag(w))))
    m = w.copy()
    m[row, :] = 1.0
    rhs = np.zeros(n)
    rhs[row] = 1.0
    pop = np.linalg.solve(m, rhs)
    resid = float(np.max(np.abs(w @ pop)))
    if resid > _KERNEL_RESIDUAL_TOL * max(1.0, scale):
        raise ConfigError(f"steady-state residual {resid:.3e} too large")
    return Populations(beta=beta, p=tuple(pop))


def steady_state_of(table: RateTable) -> Populations:
    """Steady state of the Pauli dynamics generated by a rate table."""
    return steady_state(build_generator(table), beta=table.beta)


def evolve(w: np.ndarray, p0: Populations, t_final: float, dt: float):
    """Fixed-step 4th-order integration of ``dp/dt = W p``.

    Returns (times, trajectory) with the trajectory rows normalized by
    construction (zero column sums); drift beyond 1e-10 flags a too-large
    step.  Demonstration helper only; steady states come from the linear
    solve.
    """
    if dt <= 0 or t_final <= 0:
        raise ConfigError("t_final and dt must be positive")
    steps = int(np.ceil(t_final / dt))
    p = p0.asarray()
    times = [0.0]
    traj = [p.copy()]
    for k in range(steps):
        k1 = w @ p
        k2 = w @ (p + 0.5 * dt * k1)
        k3 = w @ (p + 0.5 * dt * k2)
        k4 = w @ (p + dt * k3)
        p = p + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if abs(p.sum() - 1.0) > 1e-10:
            raise ConfigError(f"normalization drift at step {k}: reduce dt")
        times.append((k + 1) * dt)
        traj.append(p.copy())
    return np.asarray(times), np.asarray(traj)


def boltzmann(spec: SystemSpec, beta: float) -> Populations:
    """Thermal populations over the nu=0 quasi-energies (the bare levels)."""
    if beta < 0:
        raise ConfigError("beta must be >= 0")
    e = np.asarray(spec.levels, dtype=float)
    z = np.exp(-beta * (e - e.min()))
    z /= z.sum()
    return Populations(beta=beta, p=tuple(z))


def default_slope_grid(spec: SystemSpec) -> tuple:
    """Small-beta grid for the high-temperature slope fit.

    Four points at 0.02..0.08 in units where the lowest gap is 0.5: far
    enough inside the thermal domain that the quadratic term stays below the
    slope tolerance, large enough that modest momentum cutoffs still resolve
    the thermal integrals.
    """
    gap = spec.level_energy(2) - spec.level_energy(1)
    return tuple(0.02 * k * 0.5 / abs(gap) for k in range(1, 5))


def high_t_slope(spec: SystemSpec, trunc: Truncation, j: int, jp: int,
                 beta_grid=None, engine: RateEngine | None = None) -> float:
    """Least-squares slope of ``ln(p_jp / p_j)`` versus beta on a small grid.

    At high temperature the slope equals minus the quasi-energy difference
    ``E_jp0 - E_j0`` regardless of the driving.
    """
    if beta_grid is None:
        beta_grid = default_slope_grid(spec)
    if len(beta_grid) < 3:
        raise ConfigError("need at least 3 grid points")
    if engine is None:
        engine = RateEngine.shared(spec, trunc)
    ys = []
    for beta in beta_grid:
        pop = steady_state_of(engine.table(beta))
        ys.append(np.log(pop[jp] / pop[j]))
    a = np.vstack([np.asarray(beta_grid, dtype=float),
                   np.ones(len(beta_grid))]).T
    slope, _ = np.linalg.lstsq(a, np.asarray(ys), rcond=None)[0]
    return float(slope)


def thermal_domain_bound(spec: SystemSpec, trunc: Truncation, j: int, jp: int,
                         beta_fd: float | None = None,
                         engine: RateEngine | None = None) -> float:
    """High-temperature domain estimate for the pair (j, jp).

    Evaluates ``2 (E_jp0 - E_j0) / (curvature + (E_jp0 - E_j0)^2)`` with the
    exponential-moment curvature at beta = 0; the steady state stays close to
    thermal for beta well below this value.
    """
    if j == jp:
        raise ConfigError("need two distinct levels")
    delta = spec.level_energy(jp) - spec.level_energy(j)
    curv = moment_curvature_at_zero(spec, trunc, j, jp, beta_fd=beta_fd,
                                    engine=engine)
    return float(2.0 * delta / (curv + delta * delta))
