"""Probability-flow ODE and reverse-SDE solvers, plus the pullback check.

The forward corruption process induces a deterministic probability-flow ODE

    dx/dt = f_t x - (1/2) g_t^2 score(x, t)

and a reverse SDE with the same drift structure but a doubled score
coefficient and g_t dW noise.  Integrating the ODE up in t encodes data into
the latent (high-noise) space; integrating down decodes.  The pullback
check encodes every interpolant of a straight data-space segment, decodes,
and reports how far the round trip drifts from straight: the latent metric
collapses along decoded straight lines, so the deviation is solver error.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .geometry import DiscretizedCurve
from .schedule import NoiseSchedule, SpacetimePoint

METHODS = ("euler", "heun")


@dataclass
class Trajectory:
    """Solver output: states (steps+1, N, D) at times (steps+1,)."""

    states: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise DomainError("states and times must align")

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def points(self, row: int = 0):
        """The trajectory of one batch row as SpacetimePoints."""
        return [
            SpacetimePoint(self.states[k, row], float(self.times[k]))
            for k in range(self.times.shape[0])
        ]

    def to_curve(self, row: int = 0) -> DiscretizedCurve:
        return DiscretizedCurve(
            self.states[:, row], self.times, fixed_endpoints=True
        )


def _score_fn(model_or_score):
    if hasattr(model_or_score, "score"):
        return model_or_score.score
    if callable(model_or_score):
        return model_or_score
    raise DomainError("need a denoiser model or a score callable")


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None], True
    if x.ndim == 2:
        return x, False
    raise DomainError("state must be a point (D,) or batch (N, D)")


def _rhs(score, schedule, x, t, half):
    f, g2 = schedule.drift_diffusion(t)
    coef = 0.5 * g2 if half else g2
    return float(f) * x - coef * np.asarray(score(x, t), dtype=float)


def _check_finite(x, k):
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite state at solver step {k}")


def _integrate(score, schedule, x, ts, method):
    """Shared deterministic stepper; ts may ascend or descend."""
    n_steps = ts.shape[0] - 1
    out = np.empty((n_steps + 1,) + x.shape)
    out[0] = x
    for k in range(n_steps):
        dt = ts[k + 1] - ts[k]
        d = _rhs(score, schedule, x, ts[k], half=True)
        if method == "heun" and k < n_steps - 1:
            # 2nd-order correction on all but the final step
            pred = x + dt * d
            d2 = _rhs(score, schedule, pred, ts[k + 1], half=True)
            x = x + dt * 0.5 * (d + d2)
        else:
            x = x + dt * d
        _check_finite(x, k)
        out[k + 1] = x
    return out


def _validate(schedule, t_start, t_end, steps, method):
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}")
    schedule.check_t(np.array([t_start, t_end]))


def solve_pf_ode(
    model_or_score,
    schedule: NoiseSchedule,
    x_start,
    t_start: float,
    t_end: float,
    steps: int,
    method: str = "heun",
) -> Trajectory:
    """Integrate the probability-flow ODE from t_start down to t_end."""
    _validate(schedule, t_start, t_end, steps, method)
    if not t_start > t_end:
        raise DomainError("need t_start > t_end; use encode() to go up in t")
    score = _score_fn(model_or_score)
    x, _ = _as_batch(x_start)
    ts = np.linspace(t_start, t_end, steps + 1)
    return Trajectory(_integrate(score, schedule, x, ts, method), ts)


def encode(
    model_or_score,
    schedule: NoiseSchedule,
    x_start,
    t_start: float,
    t_end: float,
    steps: int,
    method: str = "heun",
) -> Trajectory:
    """Integrate the same ODE up in t (data -> latent)."""
    _validate(schedule, t_start, t_end, steps, method)
    if not t_end > t_start:
        raise DomainError("encode integrates upward: need t_end > t_start")
    score = _score_fn(model_or_score)
    x, _ = _as_batch(x_start)
    ts = np.linspace(t_start, t_end, steps + 1)
    return Trajectory(_integrate(score, schedule, x, ts, method), ts)


def solve_reverse_sde(
    model_or_score,
    schedule: NoiseSchedule,
    x_start,
    t_start: float,
    t_end: float,
    steps: int,
    seed: int = 0,
    noise_scale: float = 1.0,
) -> Trajectory:
    """Euler-Maruyama on the reverse SDE, integrating down in t.

    noise_scale multiplies only the dW term (0 isolates the drift, whose
    score coefficient is g^2 rather than the ODE's g^2/2).
    """
    _validate(schedule, t_start, t_end, steps, "euler")
    if not t_start > t_end:
        raise DomainError("need t_start > t_end")
    score = _score_fn(model_or_score)
    x, _ = _as_batch(x_start)
    ts = np.linspace(t_start, t_end, steps + 1)
    rng = np.random.default_rng(seed)
    out = np.empty((steps + 1,) + x.shape)
    out[0] = x
    for k in range(steps):
        dt = ts[k + 1] - ts[k]
        _, g2 = schedule.drift_diffusion(ts[k])
        d = _rhs(score, schedule, x, ts[k], half=False)
        noise = rng.standard_normal(x.shape)
        x = x + dt * d + noise_scale * np.sqrt(g2 * abs(dt)) * noise
        _check_finite(x, k)
        out[k + 1] = x
    return Trajectory(out, ts)


def pullback_straightness(
    model_or_score,
    schedule: NoiseSchedule,
    x_a,
    x_b,
    steps: int,
    n_interp: int = 16,
    data_t: float = 1e-3,
    method: str = "heun",
) -> float:
    """Max round-trip deviation of a straight data segment (encode, decode).

    Encodes each interpolant (1-s) x_a + s x_b from data_t to the schedule
    horizon, decodes the latents back, and returns max_s of the euclidean
    distance between decoded(s) and the original interpolant.
    """
    if n_interp < 2:
        raise DomainError("need at least the two endpoints")
    xa = np.atleast_1d(np.asarray(x_a, dtype=float))
    xb = np.atleast_1d(np.asarray(x_b, dtype=float))
    s = np.linspace(0.0, 1.0, n_interp)[:, None]
    seg = (1.0 - s) * xa + s * xb
    up = encode(model_or_score, schedule, seg, data_t, schedule.T, steps, method)
    down = solve_pf_ode(
        model_or_score, schedule, up.final, schedule.T, data_t, steps, method
    )
    dev = np.linalg.norm(down.final - seg, axis=-1)
    return float(np.max(dev))
