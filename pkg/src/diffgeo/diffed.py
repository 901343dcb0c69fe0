"""Diffusion edit distance: Fisher-Rao length of the spacetime geodesic.

Two data points are anchored into spacetime at a small shared time (default:
where log-SNR crosses 2, i.e. the posterior is sharply concentrated), the
geodesic between the anchors is optimized, and the distance is the length of
the optimized curve.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geodesic import OptimizerConfig, optimize_geodesic
from .geometry import curve_length
from .schedule import NoiseSchedule


@dataclass
class DiffEdResult:
    distance: float
    curve: object
    energy_trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.distance < 0:
            raise DomainError("distance must be nonnegative")


def default_anchor_time(schedule: NoiseSchedule) -> float:
    """Anchor the clean endpoints where log-SNR = 2."""
    return float(schedule.t_of_logsnr(2.0))


def diffed(
    model,
    schedule: NoiseSchedule,
    x_a: np.ndarray,
    x_b: np.ndarray,
    config: OptimizerConfig | None = None,
) -> DiffEdResult:
    """Distance, optimized curve, and energy trace between two data points."""
    if config is None:
        config = OptimizerConfig(t_min=default_anchor_time(schedule))
    curve = optimize_geodesic(model, schedule, x_a, x_b, config)
    distance = curve_length(model, schedule, curve.discretize(config.n_gamma))
    return DiffEdResult(distance, curve, curve.energy_trace)


def diffed_matrix(
    model,
    schedule: NoiseSchedule,
    points: np.ndarray,
    config: OptimizerConfig | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Symmetric pairwise distance matrix; each pair is an independent job."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[0]
    jobs = [(i, j) for i in range(m) for j in range(i + 1, m)]

    def run(pair):
        i, j = pair
        return i, j, diffed(model, schedule, points[i], points[j], config).distance

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(p) for p in jobs]
    out = np.zeros((m, m))
    for i, j, d in results:
        out[i, j] = out[j, i] = d
    return out
