"""Boltzmann-potential toys and an unadjusted Langevin sampler.

Samples follow q(x) proportional to exp(-U(x)) via Euler-Maruyama:
``x <- x - grad U(x) dt + sqrt(2 dt) eps``.  Two analytic potentials ship:
a 2D double well and the negative log-density of a 2D Gaussian mixture.
Both have @njit chain kernels; arbitrary Python-callable potentials use the
numpy path.  Both paths consume the same legacy RNG stream in the same
order (one init draw, then one noise block per step), so results agree
across backends for a fixed seed.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import accel
from ..errors import DomainError, NumericalError
from .gmm import GaussianMixture


@dataclass
class BoltzmannPotential:
    """Dimensionless energy U with its analytic gradient."""

    energy: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    dim: int
    kind: str = "custom"  # dispatch tag for the @njit chain kernels
    params: tuple = field(default_factory=tuple)


def double_well() -> BoltzmannPotential:
    """U(x, y) = (x^2 - 1)^2 + 2 y^2, minima at (+-1, 0)."""

    def energy(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x[:, 0] ** 2 - 1.0) ** 2 + 2.0 * x[:, 1] ** 2

    def gradient(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.empty_like(x)
        g[:, 0] = 4.0 * x[:, 0] * (x[:, 0] * x[:, 0] - 1.0)
        g[:, 1] = 4.0 * x[:, 1]
        return g

    return BoltzmannPotential(energy, gradient, dim=2, kind="double_well")


def mixture_potential_2d(mixture: GaussianMixture | None = None) -> BoltzmannPotential:
    """U = -log q for a 2D Gaussian mixture (default: three separated modes)."""
    if mixture is None:
        mixture = GaussianMixture(
            weights=[1 / 3, 1 / 3, 1 / 3],
            means=[[-1.5, -1.0], [1.5, -1.0], [0.0, 1.5]],
            variance=0.25,
        )
    if mixture.dim != 2:
        raise DomainError("mixture_potential_2d needs a 2D mixture")
    log_w = np.log(mixture.weights)

    def energy(x):
        return -mixture.log_density(x)

    def gradient(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        diff = mixture.means - x[:, None, :]  # (N, C, D)
        sq = np.sum(diff * diff, axis=-1)
        logits = log_w - 0.5 * sq / mixture.variance
        lse = logits.max(axis=1, keepdims=True)
        r = np.exp(logits - lse)
        r /= r.sum(axis=1, keepdims=True)
        return -np.sum(r[:, :, None] * diff, axis=1) / mixture.variance

    return BoltzmannPotential(
        energy,
        gradient,
        dim=2,
        kind="gmm2d",
        params=(log_w, mixture.means, mixture.variance),
    )


@accel.njit(cache=True)
def _double_well_kernel(n, steps, dt, seed, init, use_init):  # pragma: no cover
    np.random.seed(seed)
    x = init.copy() if use_init else np.random.standard_normal((n, 2))
    c = np.sqrt(2.0 * dt)
    g = np.empty((n, 2))
    for k in range(steps):
        for i in range(n):
            g[i, 0] = 4.0 * x[i, 0] * (x[i, 0] * x[i, 0] - 1.0)
            g[i, 1] = 4.0 * x[i, 1]
            if not (np.isfinite(g[i, 0]) and np.isfinite(g[i, 1])):
                return x, k, i
        eps = np.random.standard_normal((n, 2))
        for i in range(n):
            x[i, 0] = x[i, 0] - dt * g[i, 0] + c * eps[i, 0]
            x[i, 1] = x[i, 1] - dt * g[i, 1] + c * eps[i, 1]
    return x, -1, -1


@accel.njit(cache=True)
def _gmm2d_kernel(n, steps, dt, seed, log_w, means, var, init, use_init):  # pragma: no cover
    d = means.shape[1]
    nc = means.shape[0]
    np.random.seed(seed)
    x = init.copy() if use_init else np.random.standard_normal((n, d))
    c = np.sqrt(2.0 * dt)
    g = np.empty((n, d))
    logits = np.empty(nc)
    for k in range(steps):
        for i in range(n):
            hi = -1e300
            for j in range(nc):
                sq = 0.0
                for l in range(d):
                    dd = means[j, l] - x[i, l]
                    sq += dd * dd
                logits[j] = log_w[j] - 0.5 * sq / var
                if logits[j] > hi:
                    hi = logits[j]
            tot = 0.0
            for j in range(nc):
                tot += np.exp(logits[j] - hi)
            ok = True
            for l in range(d):
                acc = 0.0
                for j in range(nc):
                    acc += (np.exp(logits[j] - hi) / tot) * (means[j, l] - x[i, l])
                g[i, l] = -acc / var
                ok = ok and np.isfinite(g[i, l])
            if not ok:
                return x, k, i
        eps = np.random.standard_normal((n, d))
        for i in range(n):
            for l in range(d):
                x[i, l] = x[i, l] - dt * g[i, l] + c * eps[i, l]
    return x, -1, -1


def _sample_numpy(potential, n, steps, dt, rs, init):
    x = init.copy() if init is not None else rs.standard_normal((n, potential.dim))
    c = np.sqrt(2.0 * dt)
    for k in range(steps):
        g = np.asarray(potential.gradient(x), dtype=float)
        bad = ~np.all(np.isfinite(g), axis=1)
        if np.any(bad):
            raise NumericalError(
                f"non-finite gradient for chain {int(np.argmax(bad))} at step {k}"
            )
        x = x - dt * g + c * rs.standard_normal((n, potential.dim))
    return x


def boltzmann_sample(
    potential: BoltzmannPotential,
    n: int,
    steps: int,
    dt: float,
    seed: int,
    init: np.ndarray | None = None,
    force: str | None = None,
) -> np.ndarray:
    """Final states of n Langevin chains; (n, D), seeded and reproducible.

    Chains start from ``init`` when given, else from N(0, I) drawn from the
    same stream.  ``force`` in {"numba", "numpy"} pins the backend (tests).
    """
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if dt <= 0:
        raise DomainError("dt must be positive")
    if n < 1:
        raise DomainError("need at least one chain")
    if init is not None:
        init = np.array(init, dtype=float)
        if init.shape != (n, potential.dim):
            raise DomainError(f"init must have shape ({n}, {potential.dim})")

    use_numba = (
        accel.numba_enabled() if force is None else force == "numba"
    ) and potential.kind in ("double_well", "gmm2d")
    if not use_numba:
        return _sample_numpy(
            potential, n, steps, dt, np.random.RandomState(seed), init
        )
    use_init = init is not None
    dummy = init if use_init else np.zeros((n, potential.dim))
    if potential.kind == "double_well":
        x, bad_step, bad_chain = _double_well_kernel(
            n, steps, dt, seed, dummy, use_init
        )
    else:
        log_w, means, var = potential.params
        x, bad_step, bad_chain = _gmm2d_kernel(
            n, steps, dt, seed, log_w, means, var, dummy, use_init
        )
    if bad_step >= 0:
        raise NumericalError(
            f"non-finite gradient for chain {bad_chain} at step {bad_step}"
        )
    return x
