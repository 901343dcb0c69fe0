"""Penalized geodesic optimization: soft constraints on spacetime curves.

Two penalty families, both entering the objective as lambda(step) * penalty:

* ``low_variance`` keeps the curve out of low-SNR time regions via the
  integrand max(-logSNR(t), rho);
* ``region_avoid`` pushes the curve KL-far from a marked point z* via
  min(rho, -KL_rel(s)), where KL_rel is the cumulative relative profile
  KL(z* || gamma_s) - KL(z* || gamma_0).  The curve-independent constant at
  gamma_0 is dropped, so rho thresholds are on this relative scale.

lambda follows a piecewise-linear ramp in the optimizer step; steps where
every lambda is zero skip the penalty terms entirely and are bit-identical
to the unconstrained optimizer.  Region-avoid runs are normally paired with
a low-variance penalty (raw KL can be inflated by just adding entropy);
builders in the config layer do that pairing, this module keeps the
penalties independent.
"""

from dataclasses import dataclass, field

import numpy as np

from . import duals, geometry
from .errors import DomainError, NumericalError
from .geodesic import (
    OptimizerConfig,
    curve_energy_of_spline,
    initialize_spline,
)
from .optim import Adam
from .schedule import NoiseSchedule, SpacetimePoint

PENALTY_KINDS = ("low_variance", "region_avoid")


def delayed_ramp(delay_steps: int = 1200, end_step: int = 5000, final_value: float = 100.0):
    """lambda schedule that is 0 until delay_steps, then linear to final_value."""
    if not 0 <= delay_steps < end_step:
        raise DomainError("need 0 <= delay_steps < end_step")
    if final_value < 0:
        raise DomainError("lambda must stay >= 0")
    return np.array(
        [[0.0, 0.0], [float(delay_steps), 0.0], [float(end_step), final_value]]
    )


@dataclass
class PenaltySpec:
    """One soft constraint: what to penalize, how hard, and when."""

    kind: str
    rho: float = 3.0
    lambda_schedule: np.ndarray = field(default_factory=delayed_ramp)
    z_star: SpacetimePoint | None = None

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise DomainError(f"kind must be one of {PENALTY_KINDS}")
        sched = np.atleast_2d(np.asarray(self.lambda_schedule, dtype=float))
        if sched.shape[1] != 2 or sched.shape[0] < 1:
            raise DomainError("lambda_schedule must be rows of [step, lambda]")
        if np.any(np.diff(sched[:, 0]) < 0):
            raise DomainError("lambda_schedule steps must be nondecreasing")
        if np.any(sched[:, 1] < 0):
            raise DomainError("lambda must be >= 0 everywhere on the schedule")
        self.lambda_schedule = sched
        self.rho = float(self.rho)
        if self.kind == "region_avoid" and self.z_star is None:
            raise DomainError("region_avoid needs a z_star point")

    def lambda_at(self, step: int) -> float:
        # piecewise-linear with constant extrapolation on both sides
        return float(
            np.interp(step, self.lambda_schedule[:, 0], self.lambda_schedule[:, 1])
        )


# -- penalty values ---------------------------------------------------------


def _left_riemann_mean(h, n: int):
    return duals.dsum(h[: n - 1]) / (n - 1)


def _low_variance_from_t(schedule, t, rho, n):
    h = duals.maximum(-schedule.logsnr(t), rho)
    return _left_riemann_mean(h, n)


def _central_diff(f):
    """np.gradient (unit spacing) on a dual stack: 2nd-order interior, 1st edges."""
    first = (f[1] - f[0]).unsqueeze(0)
    last = (f[-1] - f[-2]).unsqueeze(0)
    mid = (f[2:] - f[:-2]) * 0.5
    return duals.concatenate([first, mid, last], axis=0)


def _region_avoid_from_params(etas, mus, mu_star, rho, n):
    deta = _central_diff(etas)
    integrand = duals.dsum(deta * (mus - mu_star), axis=1)
    steps = (integrand[1:] + integrand[:-1]) * 0.5
    kl_rel = duals.cumsum(duals.concatenate([integrand[:1] * 0.0, steps], axis=0), 0)
    h = duals.minimum(-kl_rel, rho)
    return _left_riemann_mean(h, n)


def low_variance_penalty(schedule: NoiseSchedule, curve, rho: float = 3.0) -> float:
    """Mean of max(-logSNR(t_n), rho) over the curve (left Riemann sum)."""
    return float(_low_variance_from_t(schedule, curve.t, float(rho), curve.n))


def region_avoid_penalty(
    model, schedule: NoiseSchedule, curve, z_star: SpacetimePoint, rho: float
) -> float:
    """Mean of min(rho, -KL_rel(s)) along the curve; bounded above by rho."""
    profile = geometry.kl_along_curve(model, schedule, curve, z_star, "from_star")
    h = np.minimum(-profile, float(rho))
    return float(np.mean(h[:-1]))


# -- penalized optimization -------------------------------------------------


def _objective_and_grad(model, schedule, spline, n_gamma, active):
    """(energy, [penalty values], grad of energy + sum lambda*penalty)."""
    x, t = spline.discretize_dual(n_gamma)
    etas = geometry.natural_params_batch(schedule, x, t)
    mus = geometry.expectation_params_batch(model, schedule, x, t)
    e = geometry.energy_from_params(etas, mus)
    obj = e
    values = []
    for spec, lam in active:
        if spec.kind == "low_variance":
            p = _low_variance_from_t(schedule, t, spec.rho, n_gamma)
        else:
            mu_star = geometry.expectation_params(model, schedule, spec.z_star)
            p = _region_avoid_from_params(etas, mus, mu_star, spec.rho, n_gamma)
        values.append(float(p.val))
        obj = obj + lam * p
    return float(e.val), values, obj.tan.reshape(spline.nodes.shape)


def penalty_value(model, schedule, curve, spec: PenaltySpec) -> float:
    if spec.kind == "low_variance":
        return low_variance_penalty(schedule, curve, spec.rho)
    return region_avoid_penalty(model, schedule, curve, spec.z_star, spec.rho)


def optimize_constrained(
    model,
    schedule: NoiseSchedule,
    x_a: np.ndarray,
    x_b: np.ndarray,
    penalties,
    config: OptimizerConfig | None = None,
):
    """Minimize curve energy + sum_i lambda_i(step) * penalty_i.

    Endpoints are embedded at t_min like optimize_geodesic.  The returned
    curve carries ``energy_trace`` (plain energy, penalty excluded) and
    ``penalty_traces``, one list per spec with NaN at steps where that
    penalty's lambda was zero (the term is skipped entirely there, keeping
    zero-lambda runs bit-identical to the unconstrained optimizer).
    """
    config = config or OptimizerConfig()
    penalties = list(penalties)
    for spec in penalties:
        if not isinstance(spec, PenaltySpec):
            raise DomainError("penalties must be PenaltySpec instances")
    z_a = SpacetimePoint(x_a, config.t_min)
    z_b = SpacetimePoint(x_b, config.t_min)
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
    ptraces = [[] for _ in penalties]
    nodes = spline.nodes
    for k in range(config.steps):
        lams = [spec.lambda_at(k) for spec in penalties]
        active = [(s, l) for s, l in zip(penalties, lams) if l > 0.0]
        energy, values, grad = _objective_and_grad(
            model, schedule, spline, config.n_gamma, active
        )
        if not np.isfinite(energy):
            raise NumericalError(f"non-finite energy at iteration {k}")
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient at iteration {k}")
        trace.append(energy)
        vals = iter(values)
        for i, lam in enumerate(lams):
            ptraces[i].append(next(vals) if lam > 0.0 else np.nan)
        nodes = opt.step(nodes, grad)
        spline = spline.with_nodes(nodes)
    trace.append(curve_energy_of_spline(model, schedule, spline, config.n_gamma))
    final_curve = spline.discretize(config.n_gamma)
    for i, spec in enumerate(penalties):
        ptraces[i].append(penalty_value(model, schedule, final_curve, spec))
    spline.energy_trace = trace
    spline.penalty_traces = ptraces
    return spline
