"""Spacetime geodesics: spline curves with fixed endpoints, energy descent.

A curve between two spacetime points is parametrized by K free interior
control points in R^{D+1} interpolated by a natural cubic spline (or, as a
config option, by the interior discretization points directly).  The
Fisher-Rao curve energy is minimized over those parameters with Adam; the
gradient comes from one forward-mode dual-number pass through spline
evaluation, the time floor, and the eta/mu maps of the geometry layer.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import duals, geometry
from .duals import Dual
from .errors import DomainError, NumericalError
from .geometry import DiscretizedCurve
from .optim import Adam
from .schedule import NoiseSchedule, SpacetimePoint


@dataclass
class OptimizerConfig:
    """Knobs for optimize_geodesic; every field has a sensible default."""

    steps: int = 3000
    learning_rate: float = 0.1
    optimizer: str = "adam"
    n_gamma: int = 128
    t_min: float = 0.01
    t_floor_mode: str = "softplus"
    n_nodes: int = 8
    t_peak: float | None = None  # None: t at log-SNR -2
    t_ceiling: float | None = None  # None: schedule horizon T
    floor_sharpness: float | None = None  # None: 50 / t_min
    lr_schedule: str = "cosine"
    parametrization: str = "spline"

    def __post_init__(self):
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be positive")
        if self.n_gamma < 2:
            raise DomainError("n_gamma must be >= 2")
        if self.t_min <= 0:
            raise DomainError("t_min must be positive")
        if self.t_floor_mode not in ("softplus", "clamp"):
            raise DomainError("t_floor_mode must be softplus or clamp")
        if self.n_nodes < 1:
            raise DomainError("need at least one free node")
        if self.parametrization not in ("spline", "points"):
            raise DomainError("parametrization must be spline or points")


@lru_cache(maxsize=128)
def _spline_basis(n_knots: int, n_points: int) -> np.ndarray:
    """Natural-cubic cardinal basis: (n_points, n_knots), rows at uniform s."""
    knots = np.linspace(0.0, 1.0, n_knots)
    s = np.linspace(0.0, 1.0, n_points)
    basis = np.empty((n_points, n_knots))
    unit = np.zeros(n_knots)
    for j in range(n_knots):
        unit[:] = 0.0
        unit[j] = 1.0
        basis[:, j] = CubicSpline(knots, unit, bc_type="natural")(s)
    return basis


def _floor_time(t, t_min: float, mode: str, sharpness: float, ceiling: float):
    """Keep t in [t_min, ceiling]; softplus is smooth, clamp is hard."""
    if mode == "clamp":
        t = duals.maximum(t, t_min)
    else:
        t = t_min + duals.softplus(sharpness * (t - t_min)) / sharpness
    return duals.minimum(t, ceiling)


class CubicSplineCurve:
    """Natural cubic spline through fixed endpoints and K free nodes.

    Nodes live in R^{D+1} (x coordinates then raw time); the time channel
    passes through a floor at t_min during evaluation, so raw node times
    are unconstrained.  Endpoint rows of any discretization are assigned
    exactly, never through the spline or the floor.
    """

    def __init__(
        self,
        z_a: SpacetimePoint,
        z_b: SpacetimePoint,
        nodes: np.ndarray,
        t_min: float,
        t_floor_mode: str = "softplus",
        floor_sharpness: float | None = None,
        t_ceiling: float = np.inf,
    ):
        self.z_a = z_a
        self.z_b = z_b
        self.nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        self.t_min = float(t_min)
        self.t_floor_mode = t_floor_mode
        self.floor_sharpness = (
            50.0 / self.t_min if floor_sharpness is None else float(floor_sharpness)
        )
        self.t_ceiling = float(t_ceiling)
        self.energy_trace: list[float] = []
        if self.nodes.shape[1] != self.dim + 1:
            raise DomainError("nodes must have D+1 columns (x..., t)")
        if z_a.t < self.t_min or z_b.t < self.t_min:
            raise DomainError("endpoint times must lie at or above t_min")
        if z_a.dim != z_b.dim:
            raise DomainError("endpoints disagree on dimension")

    @property
    def dim(self) -> int:
        return self.z_a.dim

    @property
    def k(self) -> int:
        return self.nodes.shape[0]

    @property
    def _endpoint_rows(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.append(self.z_a.x, self.z_a.t),
            np.append(self.z_b.x, self.z_b.t),
        )

    def _is_degenerate(self) -> bool:
        row_a, row_b = self._endpoint_rows
        return bool(
            np.array_equal(row_a, row_b)
            and np.all(self.nodes == row_a[None, :])
        )

    def with_nodes(self, nodes: np.ndarray) -> "CubicSplineCurve":
        return CubicSplineCurve(
            self.z_a,
            self.z_b,
            nodes,
            self.t_min,
            self.t_floor_mode,
            self.floor_sharpness,
            self.t_ceiling,
        )

    # -- evaluation ---------------------------------------------------------

    def _raw_values(self, n_points: int) -> np.ndarray:
        row_a, row_b = self._endpoint_rows
        control = np.vstack([row_a, self.nodes, row_b])
        return _spline_basis(self.k + 2, n_points) @ control

    def discretize(self, n_points: int) -> DiscretizedCurve:
        if n_points < 2:
            raise DomainError("n_points must be >= 2")
        row_a, row_b = self._endpoint_rows
        if self._is_degenerate():
            vals = np.tile(row_a, (n_points, 1))
            return DiscretizedCurve(vals[:, :-1], vals[:, -1])
        vals = self._raw_values(n_points)
        t = _floor_time(
            vals[:, -1], self.t_min, self.t_floor_mode, self.floor_sharpness,
            self.t_ceiling,
        )
        t[0], t[-1] = self.z_a.t, self.z_b.t
        x = vals[:, :-1]
        x[0], x[-1] = self.z_a.x, self.z_b.x
        if np.any(t < self.t_min):
            raise NumericalError("time coordinate below t_min after flooring")
        return DiscretizedCurve(x, t)

    def discretize_dual(self, n_points: int) -> tuple[Dual, Dual]:
        """(x, t) as Duals with one tangent per free node coordinate."""
        d1 = self.dim + 1
        p = self.nodes.size
        if self._is_degenerate():
            # A constant curve is already the exact geodesic; zero tangents
            # keep the optimizer from amplifying spline round-off.
            row_a, _ = self._endpoint_rows
            vals = np.tile(row_a, (n_points, 1))
            tan = np.zeros((n_points, d1, p))
            return Dual(vals[:, :-1], tan[:, :-1]), Dual(vals[:, -1], tan[:, -1])
        vals = self._raw_values(n_points)
        tan = np.zeros((n_points, d1, p))
        interior = _spline_basis(self.k + 2, n_points)[:, 1:-1]
        for c in range(d1):
            tan[:, c, c::d1] = interior
        tan[0] = 0.0
        tan[-1] = 0.0
        x = Dual(vals[:, :-1], tan[:, :-1, :])
        t = _floor_time(
            Dual(vals[:, -1], tan[:, -1, :]),
            self.t_min,
            self.t_floor_mode,
            self.floor_sharpness,
            self.t_ceiling,
        )
        t.val[0], t.val[-1] = self.z_a.t, self.z_b.t
        t.tan[0] = 0.0
        t.tan[-1] = 0.0
        x.val[0], x.val[-1] = self.z_a.x, self.z_b.x
        return x, t


class PointParametrizedCurve:
    """Interior discretization points as the free parameters (no spline)."""

    def __init__(
        self,
        z_a: SpacetimePoint,
        z_b: SpacetimePoint,
        interior: np.ndarray,
        t_min: float,
        t_floor_mode: str = "softplus",
        floor_sharpness: float | None = None,
        t_ceiling: float = np.inf,
    ):
        self.z_a = z_a
        self.z_b = z_b
        self.nodes = np.atleast_2d(np.asarray(interior, dtype=float))
        self.t_min = float(t_min)
        self.t_floor_mode = t_floor_mode
        self.floor_sharpness = (
            50.0 / self.t_min if floor_sharpness is None else float(floor_sharpness)
        )
        self.t_ceiling = float(t_ceiling)
        self.energy_trace: list[float] = []

    @property
    def dim(self) -> int:
        return self.z_a.dim

    @property
    def k(self) -> int:
        return self.nodes.shape[0]

    def with_nodes(self, nodes: np.ndarray) -> "PointParametrizedCurve":
        out = PointParametrizedCurve(
            self.z_a,
            self.z_b,
            nodes,
            self.t_min,
            self.t_floor_mode,
            self.floor_sharpness,
            self.t_ceiling,
        )
        return out

    def _check_n(self, n_points: int) -> None:
        if n_points != self.k + 2:
            raise DomainError(
                "point-parametrized curve is tied to its own discretization"
            )

    def discretize(self, n_points: int) -> DiscretizedCurve:
        self._check_n(n_points)
        row_a = np.append(self.z_a.x, self.z_a.t)
        row_b = np.append(self.z_b.x, self.z_b.t)
        if np.array_equal(row_a, row_b) and np.all(self.nodes == row_a[None, :]):
            vals = np.tile(row_a, (n_points, 1))
            return DiscretizedCurve(vals[:, :-1], vals[:, -1])
        t_in = _floor_time(
            self.nodes[:, -1], self.t_min, self.t_floor_mode,
            self.floor_sharpness, self.t_ceiling,
        )
        x = np.vstack([self.z_a.x, self.nodes[:, :-1], self.z_b.x])
        t = np.concatenate([[self.z_a.t], t_in, [self.z_b.t]])
        return DiscretizedCurve(x, t)

    def discretize_dual(self, n_points: int) -> tuple[Dual, Dual]:
        self._check_n(n_points)
        d1 = self.dim + 1
        p = self.nodes.size
        k = self.k
        row_a = np.append(self.z_a.x, self.z_a.t)
        row_b = np.append(self.z_b.x, self.z_b.t)
        if np.array_equal(row_a, row_b) and np.all(self.nodes == row_a[None, :]):
            vals = np.tile(row_a, (n_points, 1))
            tz = np.zeros((n_points, d1, p))
            return Dual(vals[:, :-1], tz[:, :-1]), Dual(vals[:, -1], tz[:, -1])
        tan = np.zeros((k, d1, p))
        for i in range(k):
            for c in range(d1):
                tan[i, c, i * d1 + c] = 1.0
        t_in = _floor_time(
            Dual(self.nodes[:, -1], tan[:, -1, :]),
            self.t_min,
            self.t_floor_mode,
            self.floor_sharpness,
            self.t_ceiling,
        )
        x_val = np.vstack([self.z_a.x, self.nodes[:, :-1], self.z_b.x])
        x_tan = np.zeros((k + 2, self.dim, p))
        x_tan[1:-1] = tan[:, :-1, :]
        t_val = np.concatenate([[self.z_a.t], t_in.val, [self.z_b.t]])
        t_tan = np.zeros((k + 2, p))
        t_tan[1:-1] = t_in.tan
        return Dual(x_val, x_tan), Dual(t_val, t_tan)


# -- initialization ---------------------------------------------------------


def default_t_peak(schedule: NoiseSchedule) -> float:
    """Initialization apex: the time where log-SNR crosses -2."""
    return float(schedule.t_of_logsnr(-2.0))


def initialize_spline(
    z_a: SpacetimePoint,
    z_b: SpacetimePoint,
    schedule: NoiseSchedule,
    config: OptimizerConfig,
) -> CubicSplineCurve | PointParametrizedCurve:
    """Straight line in x; parabolic arc in t rising toward t_peak.

    For bitwise-identical endpoints the curve initializes flat (constant),
    which is the exact geodesic of a point.
    """
    ceiling = schedule.T if config.t_ceiling is None else min(config.t_ceiling, schedule.T)
    t_peak = default_t_peak(schedule) if config.t_peak is None else config.t_peak
    t_peak = min(t_peak, ceiling)
    if config.parametrization == "points":
        n_free = config.n_gamma - 2
    else:
        n_free = config.n_nodes
    s = np.arange(1, n_free + 1) / (n_free + 1)
    xa, xb = np.atleast_1d(z_a.x), np.atleast_1d(z_b.x)
    degenerate = np.array_equal(xa, xb) and z_a.t == z_b.t
    x = (1.0 - s)[:, None] * xa + s[:, None] * xb
    t_line = (1.0 - s) * z_a.t + s * z_b.t
    if degenerate:
        t = np.full(n_free, z_a.t)
    else:
        bump = max(0.0, t_peak - 0.5 * (z_a.t + z_b.t))
        t = t_line + 4.0 * s * (1.0 - s) * bump
    nodes = np.column_stack([x, t])
    cls = PointParametrizedCurve if config.parametrization == "points" else CubicSplineCurve
    return cls(
        z_a,
        z_b,
        nodes,
        config.t_min,
        config.t_floor_mode,
        config.floor_sharpness,
        t_ceiling=ceiling,
    )


# -- energy and gradient ----------------------------------------------------


def evaluate_curve(model, schedule, spline, n_gamma: int):
    """(etas, mus) arrays at the uniform discretization of a spline."""
    return geometry.curve_params(model, schedule, spline.discretize(n_gamma))


def _energy_and_grad(model, schedule, spline, n_gamma: int):
    x, t = spline.discretize_dual(n_gamma)
    etas = geometry.natural_params_batch(schedule, x, t)
    mus = geometry.expectation_params_batch(model, schedule, x, t)
    e = geometry.energy_from_params(etas, mus)
    return float(e.val), e.tan.reshape(spline.nodes.shape)


def energy_gradient(model, schedule, spline, n_gamma: int) -> np.ndarray:
    """d(curve energy)/d(node coordinates), shaped like spline.nodes."""
    if n_gamma < 2:
        raise DomainError("n_gamma must be >= 2")
    if spline.dim != model.dim:
        raise DomainError("spline and model disagree on dimension")
    return _energy_and_grad(model, schedule, spline, n_gamma)[1]


def curve_energy_of_spline(model, schedule, spline, n_gamma: int) -> float:
    return geometry.curve_energy(model, schedule, spline.discretize(n_gamma))


# -- optimization -----------------------------------------------------------


def optimize_geodesic_between(
    model,
    schedule: NoiseSchedule,
    z_a: SpacetimePoint,
    z_b: SpacetimePoint,
    config: OptimizerConfig | None = None,
):
    """Energy descent between two spacetime points; returns the curve.

    The energy trace (initial energy, then energy after every step) is left
    on the returned curve's ``energy_trace``.
    """
    config = config or OptimizerConfig()
    if model.dim != z_a.dim:
        raise DomainError("model and endpoints disagree on dimension")
    spline = initialize_spline(z_a, z_b, schedule, config)
    opt = Adam(
        lr=config.learning_rate,
        kind=config.optimizer,
        lr_schedule=config.lr_schedule,
        total_steps=config.steps,
    )
    trace = []
    nodes = spline.nodes
    for k in range(config.steps):
        energy, grad = _energy_and_grad(model, schedule, spline, config.n_gamma)
        if not np.isfinite(energy):
            raise NumericalError(f"non-finite energy at iteration {k}")
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient at iteration {k}")
        trace.append(energy)
        nodes = opt.step(nodes, grad)
        spline = spline.with_nodes(nodes)
    trace.append(curve_energy_of_spline(model, schedule, spline, config.n_gamma))
    spline.energy_trace = trace
    return spline


def optimize_geodesic(
    model,
    schedule: NoiseSchedule,
    x_a: np.ndarray,
    x_b: np.ndarray,
    config: OptimizerConfig | None = None,
):
    """Geodesic between data points embedded into spacetime at t_min."""
    config = config or OptimizerConfig()
    z_a = SpacetimePoint(x_a, config.t_min)
    z_b = SpacetimePoint(x_b, config.t_min)
    return optimize_geodesic_between(model, schedule, z_a, z_b, config)
