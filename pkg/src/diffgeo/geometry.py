"""Fisher-Rao layer for the denoising posterior exponential family.

A spacetime point z = (x, t) indexes the posterior p(x0 | x_t = x) of a
diffusion process.  These posteriors form an exponential family with
sufficient statistics (x0, ||x0||^2), natural parameter

    eta(z) = (a_t / s_t^2 * x,  -a_t^2 / (2 s_t^2))

and expectation parameter

    mu(z) = (E[x0|x_t],  E[||x0||^2 | x_t]),

where the second-moment coordinate comes from the denoiser via
``||xhat||^2 + (s_t^2 / a_t) div xhat``.  Curve energy, length and KL
divergences along curves then need only eta/mu differences; no sampling
and no log-partition evaluations.
"""

from dataclasses import dataclass

import numpy as np

from . import duals
from .duals import Dual, value_of
from .errors import DomainError
from .models.base import DenoiserModel, hutchinson_divergence
from .schedule import NoiseSchedule, SpacetimePoint

# Beyond this dimension, exact basis-probe divergences give way to a fixed
# number of Rademacher probes.
_EXACT_DIV_MAX_DIM = 8
_DEFAULT_PROBES = 8


@dataclass
class ExpFamilyStats:
    """Natural and expectation parameters of one posterior, stacked (D+1,)."""

    eta: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        if self.eta.shape != self.mu.shape or self.eta.ndim != 1:
            raise DomainError("eta and mu must be vectors of equal length")

    def validate(self, tol: float = 1e-6) -> None:
        """Moment consistency: second moment dominates squared mean."""
        if not self.eta[-1] < 0:
            raise DomainError("eta's last coordinate must be negative")
        gap = self.mu[-1] - np.sum(self.mu[:-1] ** 2)
        if gap < -tol:
            raise DomainError(
                f"second moment {self.mu[-1]:.6g} below squared mean by {-gap:.3g}"
            )


class DiscretizedCurve:
    """Ordered spacetime points z_0..z_{N-1}; endpoints treated as fixed."""

    def __init__(self, x: np.ndarray, t: np.ndarray, fixed_endpoints: bool = True):
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.t = np.asarray(t, dtype=float).ravel()
        self.fixed_endpoints = fixed_endpoints
        if self.x.shape[0] != self.t.shape[0]:
            raise DomainError("x and t disagree on point count")
        if self.n < 2:
            raise DomainError("a curve needs at least 2 points")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def points(self) -> list[SpacetimePoint]:
        return [SpacetimePoint(self.x[i], self.t[i]) for i in range(self.n)]

    @classmethod
    def from_points(cls, points, fixed_endpoints: bool = True) -> "DiscretizedCurve":
        x = np.stack([np.atleast_1d(np.asarray(p.x, dtype=float)) for p in points])
        t = np.array([float(p.t) for p in points])
        return cls(x, t, fixed_endpoints)

    def reversed(self) -> "DiscretizedCurve":
        return DiscretizedCurve(self.x[::-1], self.t[::-1], self.fixed_endpoints)


def straight_curve(z_a: SpacetimePoint, z_b: SpacetimePoint, n: int) -> DiscretizedCurve:
    """Linear interpolation in (x, t) with n points."""
    if n < 2:
        raise DomainError("a curve needs at least 2 points")
    s = np.linspace(0.0, 1.0, n)
    x = (1.0 - s)[:, None] * np.atleast_1d(z_a.x) + s[:, None] * np.atleast_1d(z_b.x)
    t = (1.0 - s) * z_a.t + s * z_b.t
    return DiscretizedCurve(x, t)


def _u(v):
    return v.unsqueeze(-1) if isinstance(v, Dual) else np.asarray(v)[..., None]


# -- parameter maps ---------------------------------------------------------


def natural_params_batch(schedule: NoiseSchedule, x, t):
    """eta at a batch of points; x: (N, D), t: (N,) -> (N, D+1).  Dual-aware."""
    alpha, sigma = schedule.alpha_sigma(t)
    s2 = sigma * sigma
    eta_x = _u(alpha / s2) * x
    eta_t = (-0.5) * alpha * alpha / s2
    return duals.concatenate([eta_x, _u(eta_t)], axis=-1)


def natural_params(schedule: NoiseSchedule, z: SpacetimePoint) -> np.ndarray:
    schedule.check_t(z.t)
    return natural_params_batch(schedule, z.x[None, :], np.array([z.t]))[0]


def _divergence_batch(model: DenoiserModel, x, t, probes):
    if isinstance(x, Dual) or isinstance(t, Dual):
        if model.supports_divergence_dual:
            return model.divergence(x, t)
        # Learned backends lack cheap second derivatives: freeze the
        # divergence at the primal point (zero tangent).
        return model.divergence(value_of(x), value_of(t))
    if probes is None:
        if model.dim <= _EXACT_DIV_MAX_DIM:
            return model.divergence(x, t)
        return hutchinson_divergence(model, x, t, _DEFAULT_PROBES, "rademacher")
    return hutchinson_divergence(model, x, t, probes, "rademacher")


def expectation_params_batch(model: DenoiserModel, schedule: NoiseSchedule, x, t, probes=None):
    """mu at a batch of points; x: (N, D), t: (N,) -> (N, D+1).  Dual-aware.

    probes=None uses the exact divergence up to dimension 8 and falls back
    to 8 Rademacher probes beyond; an explicit count forces Rademacher.
    """
    xhat = model.denoise(x, t)
    div = _divergence_batch(model, x, t, probes)
    alpha, sigma = schedule.alpha_sigma(t)
    mu_time = duals.dsum(xhat * xhat, axis=-1) + (sigma * sigma / alpha) * div
    return duals.concatenate([xhat, _u(mu_time)], axis=-1)


def expectation_params(
    model: DenoiserModel,
    schedule: NoiseSchedule,
    z: SpacetimePoint,
    probes: int | None = None,
) -> np.ndarray:
    schedule.check_t(z.t)
    return expectation_params_batch(
        model, schedule, z.x[None, :], np.array([z.t]), probes
    )[0]


def curve_params(model: DenoiserModel, schedule: NoiseSchedule, curve: DiscretizedCurve, probes=None):
    """(etas, mus) along a curve, each (N, D+1)."""
    if curve.dim != model.dim:
        raise DomainError(f"curve dimension {curve.dim} != model dimension {model.dim}")
    schedule.check_t(curve.t)
    etas = natural_params_batch(schedule, curve.x, curve.t)
    mus = expectation_params_batch(model, schedule, curve.x, curve.t, probes)
    return etas, mus


# -- energy, length, KL -----------------------------------------------------


def _segment_products(etas, mus):
    """Per-segment (eta_{n+1}-eta_n)^T (mu_{n+1}-mu_n); Dual-aware."""
    return duals.dsum((etas[1:] - etas[:-1]) * (mus[1:] - mus[:-1]), axis=-1)


def energy_from_params(etas, mus):
    """Discrete curve energy (N-1)/2 * sum of segment products; Dual-aware."""
    n = (etas.val if isinstance(etas, Dual) else etas).shape[0]
    return 0.5 * (n - 1) * duals.dsum(_segment_products(etas, mus), axis=None)


def segment_inner_products(model, schedule, curve, probes=None) -> np.ndarray:
    return _segment_products(*curve_params(model, schedule, curve, probes))


def curve_energy(model, schedule, curve, probes=None) -> float:
    """Fisher-Rao action of a discretized curve (signed segments)."""
    return float(energy_from_params(*curve_params(model, schedule, curve, probes)))


def curve_length(model, schedule, curve, probes=None, return_diagnostics: bool = False):
    """Fisher-Rao length; negative segment products clamp to 0 pre-sqrt.

    Clamps can only arise from inexact mu estimates (learned models or
    Rademacher probes); the count is reported in the diagnostics.
    """
    prods = segment_inner_products(model, schedule, curve, probes)
    clamped = int(np.sum(prods < 0.0))
    length = float(np.sum(np.sqrt(np.maximum(prods, 0.0))))
    if return_diagnostics:
        return length, {"clamped_segments": clamped}
    return length


def symmetrized_kl(model, schedule, z1: SpacetimePoint, z2: SpacetimePoint, probes=None) -> float:
    """(KL(p1||p2) + KL(p2||p1)) / 2 via parameter differences."""
    x = np.stack([np.atleast_1d(z1.x), np.atleast_1d(z2.x)])
    t = np.array([z1.t, z2.t])
    curve = DiscretizedCurve(x, t)
    return float(0.5 * segment_inner_products(model, schedule, curve, probes)[0])


_DIRECTIONS = ("from_star", "to_star")


def kl_along_curve(
    model,
    schedule,
    curve: DiscretizedCurve,
    z_star: SpacetimePoint,
    direction: str = "from_star",
    probes=None,
) -> np.ndarray:
    """Relative KL profile along a curve against a reference point.

    from_star: KL(z*||gamma_s) - KL(z*||gamma_0); to_star swaps the
    arguments.  Line-integral form (derivatives of eta or mu against the
    other parameter's offset), cumulative trapezoid, entry 0 is 0.  The
    additive constant at gamma_0 is not evaluated.
    """
    if direction not in _DIRECTIONS:
        raise DomainError(f"direction must be one of {_DIRECTIONS}")
    etas, mus = curve_params(model, schedule, curve, probes)
    eta_star = natural_params(schedule, z_star)
    mu_star = expectation_params(model, schedule, z_star, probes)
    if direction == "from_star":
        integrand = np.sum(np.gradient(etas, axis=0) * (mus - mu_star), axis=1)
    else:
        integrand = np.sum(np.gradient(mus, axis=0) * (etas - eta_star), axis=1)
    steps = 0.5 * (integrand[1:] + integrand[:-1])
    return np.concatenate([[0.0], np.cumsum(steps)])
