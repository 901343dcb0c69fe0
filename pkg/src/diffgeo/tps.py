"""Transition-path sampling via annealed Langevin along a spacetime curve.

Conditioning a Boltzmann density q(x0) on a noisy observation x_t gives
another Boltzmann density with energy

    U(x0 | x_t) = U(x0) + (SNR(t)/2) ||x0 - x_t/a_t||^2,

so sliding (x_t, t) along a curve from (x_a, t_min) into noise and back down
to (x_b, t_min) anneals a Langevin chain from one well to the other.  Paths
are scored by MaxEnergy, the largest U encountered; a grid bottleneck search
provides the geometric lower bound for that score.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import DomainError, NumericalError
from .geometry import DiscretizedCurve
from .models.boltzmann import BoltzmannPotential
from .schedule import NoiseSchedule, SpacetimePoint


@dataclass
class TransitionChain:
    """Every visited state of one annealed chain, plus bookkeeping."""

    states: np.ndarray  # (N_gamma * K + 1, D)
    geodesic_index: np.ndarray  # conditioning point n for each state
    seed: int | None = None

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.geodesic_index = np.asarray(self.geodesic_index, dtype=int)
        if self.geodesic_index.shape[0] != self.states.shape[0]:
            raise DomainError("geodesic_index must align with states")


@dataclass
class PathReport:
    max_energy: float
    n_energy_evals: int
    seed: int | None = None


# -- conditional (denoising) energy -----------------------------------------


def _snr_center(schedule: NoiseSchedule, z: SpacetimePoint):
    schedule.check_t(z.t)
    alpha, _ = schedule.alpha_sigma(z.t)
    snr = float(schedule.snr(z.t))
    return snr, np.atleast_1d(z.x) / float(alpha)


def denoising_energy(
    potential: BoltzmannPotential, schedule: NoiseSchedule, x0, z: SpacetimePoint
):
    """U(x0) + (SNR(t)/2) ||x0 - x_t/a_t||^2; batched over rows of x0."""
    snr, center = _snr_center(schedule, z)
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    x0 = np.atleast_2d(x0)
    out = np.asarray(potential.energy(x0), dtype=float) + 0.5 * snr * np.sum(
        (x0 - center) ** 2, axis=-1
    )
    return float(out[0]) if single else out


def denoising_energy_grad(
    potential: BoltzmannPotential, schedule: NoiseSchedule, x0, z: SpacetimePoint
):
    """Gradient of denoising_energy in x0: grad U(x0) + SNR (x0 - x_t/a_t)."""
    snr, center = _snr_center(schedule, z)
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    x0 = np.atleast_2d(x0)
    out = np.asarray(potential.gradient(x0), dtype=float) + snr * (x0 - center)
    return out[0] if single else out


# -- annealed Langevin sampler ----------------------------------------------


def _path_seeds(seed: int, n_paths: int) -> np.ndarray:
    # distinct, deterministic 31-bit streams per path
    return np.array(
        [(seed * 1000003 + p) % (2**31 - 1) for p in range(n_paths)], dtype=np.int64
    )


@accel.njit(cache=True)
def _anneal_dw_kernel(cond, snr, k_steps, dt, seeds, x_init, noise_scale):  # pragma: no cover
    n_paths = seeds.shape[0]
    ng, d = cond.shape
    total = ng * k_steps + 1
    out = np.empty((n_paths, total, d))
    bad = np.full((n_paths, 2), -1, dtype=np.int64)
    c = np.sqrt(2.0 * dt)
    for p in range(n_paths):
        np.random.seed(seeds[p])
        noise = np.random.standard_normal((total - 1, d)) * noise_scale
        x = x_init.copy()
        out[p, 0] = x
        i = 0
        for n in range(ng):
            for _ in range(k_steps):
                gx = 4.0 * x[0] * (x[0] * x[0] - 1.0) + snr[n] * (x[0] - cond[n, 0])
                gy = 4.0 * x[1] + snr[n] * (x[1] - cond[n, 1])
                x[0] = x[0] - dt * gx + c * noise[i, 0]
                x[1] = x[1] - dt * gy + c * noise[i, 1]
                i += 1
                out[p, i] = x
                if not (np.isfinite(x[0]) and np.isfinite(x[1])):
                    bad[p, 0] = n
                    bad[p, 1] = i
                    break
            if bad[p, 0] >= 0:
                break
    return out, bad


def _anneal_numpy(potential, cond, snr, k_steps, dt, seeds, x_init, noise_scale):
    n_paths = seeds.shape[0]
    ng, d = cond.shape
    total = ng * k_steps + 1
    noise = np.empty((n_paths, total - 1, d))
    for p in range(n_paths):
        noise[p] = (
            np.random.RandomState(seeds[p]).standard_normal((total - 1, d))
            * noise_scale
        )
    out = np.empty((n_paths, total, d))
    x = np.tile(x_init, (n_paths, 1))
    out[:, 0] = x
    c = np.sqrt(2.0 * dt)
    i = 0
    for n in range(ng):
        for _ in range(k_steps):
            g = np.asarray(potential.gradient(x), dtype=float) + snr[n] * (
                x - cond[n]
            )
            x = x - dt * g + c * noise[:, i, :]
            i += 1
            out[:, i] = x
            finite = np.isfinite(x).all(axis=1)
            if not finite.all():
                p = int(np.argmin(finite))
                raise NumericalError(
                    f"non-finite state in path {p} at annealing block {n}, "
                    f"inner step {i}"
                )
    return out


def sample_transition_paths(
    potential: BoltzmannPotential,
    geodesic: DiscretizedCurve,
    schedule: NoiseSchedule,
    k_steps: int,
    dt: float,
    n_paths: int,
    seed: int,
    noise_scale: float = 1.0,
    force: str | None = None,
) -> list[TransitionChain]:
    """Annealed Langevin chains conditioned on successive curve points.

    Each chain starts at the curve's first x-coordinate, takes ``k_steps``
    unadjusted Langevin steps on U(. | gamma_n) for n = 0..N_gamma-1, and
    records every state (N_gamma * k_steps + 1 including the start).  Paths
    use independent RNG streams derived from ``seed``; ``noise_scale=0``
    turns the chain into deterministic gradient descent (test mode).
    """
    if k_steps < 1:
        raise DomainError("k_steps must be >= 1")
    if dt <= 0:
        raise DomainError("dt must be positive")
    if n_paths < 1:
        raise DomainError("need at least one path")
    if geodesic.dim != potential.dim:
        raise DomainError("curve and potential disagree on dimension")
    schedule.check_t(geodesic.t)
    alpha, _ = schedule.alpha_sigma(geodesic.t)
    cond = geodesic.x / np.asarray(alpha, dtype=float)[:, None]
    snr = np.asarray(schedule.snr(geodesic.t), dtype=float)
    seeds = _path_seeds(seed, n_paths)
    x_init = geodesic.x[0].copy()

    use_numba = (
        accel.numba_enabled() if force is None else force == "numba"
    ) and potential.kind == "double_well"
    if use_numba:
        out, bad = _anneal_dw_kernel(
            cond, snr, k_steps, dt, seeds, x_init, float(noise_scale)
        )
        for p in range(n_paths):
            if bad[p, 0] >= 0:
                raise NumericalError(
                    f"non-finite state in path {p} at annealing block "
                    f"{bad[p, 0]}, inner step {bad[p, 1]}"
                )
    else:
        out = _anneal_numpy(
            potential, cond, snr, k_steps, dt, seeds, x_init, float(noise_scale)
        )
    index = np.concatenate([[0], np.repeat(np.arange(geodesic.n), k_steps)])
    return [
        TransitionChain(out[p], index, int(seeds[p])) for p in range(n_paths)
    ]


def straight_chain(x_a, x_b, n_states: int) -> TransitionChain:
    """Deterministic straight-line interpolation, for baseline MaxEnergy."""
    if n_states < 2:
        raise DomainError("need at least 2 states")
    s = np.linspace(0.0, 1.0, n_states)[:, None]
    states = (1.0 - s) * np.atleast_1d(x_a) + s * np.atleast_1d(x_b)
    return TransitionChain(states, np.zeros(n_states, dtype=int))


def report_paths(potential: BoltzmannPotential, chains) -> tuple[list[PathReport], dict]:
    """Per-path MaxEnergy plus the aggregate table row."""
    chains = list(chains)
    if not chains:
        raise DomainError("chains must be nonempty")
    reports = [
        PathReport(
            max_energy=float(np.max(potential.energy(ch.states))),
            n_energy_evals=ch.states.shape[0] - 1,
            seed=ch.seed,
        )
        for ch in chains
    ]
    maxes = np.array([r.max_energy for r in reports])
    aggregate = {
        "max_energy_mean": float(maxes.mean()),
        "max_energy_std": float(maxes.std(ddof=1)) if len(maxes) > 1 else 0.0,
        "n_energy_evals": reports[0].n_energy_evals,
        "n_paths": len(reports),
        "total_grad_evals": int(sum(r.n_energy_evals for r in reports)),
    }
    return reports, aggregate


# -- minimax barrier lower bound --------------------------------------------


def lower_bound_max_energy(
    potential: BoltzmannPotential,
    x_a,
    x_b,
    resolution: float,
    pad: float = 1.0,
    bounds: tuple | None = None,
) -> float:
    """min over grid paths of the max node energy (bottleneck Dijkstra).

    8-connected grid covering the endpoints (padded box by default, or
    explicit ``bounds`` = ((x_lo, x_hi), (y_lo, y_hi))).
    """
    if potential.dim != 2:
        raise DomainError("barrier search implemented for 2D potentials")
    if resolution <= 0:
        raise DomainError("resolution must be positive")
    a = np.atleast_1d(np.asarray(x_a, dtype=float))
    b = np.atleast_1d(np.asarray(x_b, dtype=float))
    if bounds is None:
        lo = np.minimum(a, b) - pad
        hi = np.maximum(a, b) + pad
    else:
        (x_lo, x_hi), (y_lo, y_hi) = bounds
        lo = np.array([x_lo, y_lo], dtype=float)
        hi = np.array([x_hi, y_hi], dtype=float)
        if np.any(a < lo) or np.any(a > hi) or np.any(b < lo) or np.any(b > hi):
            raise DomainError("endpoints outside the search grid")
    nx = int(np.floor((hi[0] - lo[0]) / resolution)) + 1
    ny = int(np.floor((hi[1] - lo[1]) / resolution)) + 1
    xs = lo[0] + resolution * np.arange(nx)
    ys = lo[1] + resolution * np.arange(ny)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    energy = np.asarray(potential.energy(grid), dtype=float).reshape(nx, ny)

    def snap(p):
        return (
            int(round((p[0] - lo[0]) / resolution)),
            int(round((p[1] - lo[1]) / resolution)),
        )

    start, goal = snap(a), snap(b)
    best = np.full((nx, ny), np.inf)
    best[start] = energy[start]
    heap = [(energy[start], start)]
    moves = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    while heap:
        bound, (i, j) = heapq.heappop(heap)
        if (i, j) == goal:
            return float(bound)
        if bound > best[i, j]:
            continue
        for di, dj in moves:
            ii, jj = i + di, j + dj
            if 0 <= ii < nx and 0 <= jj < ny:
                cand = max(bound, energy[ii, jj])
                if cand < best[ii, jj]:
                    best[ii, jj] = cand
                    heapq.heappush(heap, (cand, (ii, jj)))
    raise NumericalError("goal unreachable on the search grid")
