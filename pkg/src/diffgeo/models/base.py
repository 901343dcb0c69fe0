"""Denoiser model interface and the stochastic divergence estimator.

A denoiser model is bound to a noise schedule at construction and exposes
``denoise(x, t) ~ E[x0 | x_t]`` for batches ``x: (N, D)``, ``t: (N,)``.
``denoise`` must also accept :class:`~diffgeo.duals.Dual` inputs, which is
how directional derivatives (JVPs) are taken everywhere in this package.
"""

from abc import ABC, abstractmethod

import numpy as np

from ..duals import Dual
from ..errors import DomainError


class DenoiserModel(ABC):
    """Approximates the posterior mean E[x0 | x_t] and its divergence."""

    schedule = None
    dim: int = 0

    #: True when divergence(x, t) itself accepts Dual inputs (i.e. the
    #: backend supports second directional derivatives).  Backends without
    #: this capability get a frozen-divergence treatment in curve gradients.
    supports_divergence_dual = False

    @abstractmethod
    def denoise(self, x, t):
        """E[x0 | x_t] for x: (N, D), t: (N,); Dual-aware."""

    def divergence(self, x, t):
        """div_x E[x0 | x_t], shape (N,).

        Default: exact trace of the denoiser Jacobian via D basis-vector
        JVPs through :meth:`denoise`.  Analytic backends override with a
        closed form.  Dual inputs are rejected here (no second derivatives).
        """
        if isinstance(x, Dual) or isinstance(t, Dual):
            raise DomainError(
                f"{type(self).__name__} does not support divergence derivatives"
            )
        return hutchinson_divergence(self, x, t, probes=self.dim, probe_kind="basis")

    def score(self, x, t):
        """Marginal score recovered from the posterior mean.

        E[x0|x_t] = (x_t + s_t^2 score)/a_t  =>  score = (a_t xhat - x)/s_t^2.
        """
        alpha, sigma = self.schedule.alpha_sigma(t)
        xhat = self.denoise(x, t)
        a = alpha if np.isscalar(alpha) else _expand(alpha)
        s2 = sigma**2 if np.isscalar(sigma) else _expand(sigma**2)
        return (a * xhat - x) / s2


def _expand(v):
    return v.unsqueeze(-1) if isinstance(v, Dual) else np.asarray(v)[..., None]


def hutchinson_divergence(model, x, t, probes: int, probe_kind: str = "rademacher",
                          rng=None, return_samples: bool = False):
    """Estimate div_x of ``model.denoise`` at a batch of points.

    probe_kind "basis" walks the first min(probes, D) coordinate directions
    and sums v^T J v; with probes >= D this is the exact Jacobian trace.
    "rademacher" averages v^T J v over random sign vectors (unbiased).  All
    probes ride one forward pass with a stacked tangent.
    """
    if probes < 1:
        raise DomainError("probes must be >= 1")
    if probe_kind not in ("basis", "rademacher"):
        raise DomainError(f"unknown probe kind {probe_kind!r}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1]).astype(float)
    n, d = x.shape

    if probe_kind == "basis":
        p = min(probes, d)
        v = np.broadcast_to(np.eye(d)[:, :p], (n, d, p)).copy()
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        v = rng.integers(0, 2, size=(n, d, probes)) * 2.0 - 1.0

    out = model.denoise(Dual(x, v), Dual(t, np.zeros((n, v.shape[-1]))))
    samples = np.einsum("ndp,ndp->np", out.tan, v)
    est = samples.sum(axis=1) if probe_kind == "basis" else samples.mean(axis=1)
    if return_samples:
        return est, samples
    return est


def denoise_from_score(score, schedule, x, t):
    """Posterior mean from a score value: (x + s_t^2 * score)/a_t."""
    alpha, sigma = schedule.alpha_sigma(t)
    alpha = np.asarray(alpha, dtype=float)
    s2 = np.asarray(sigma, dtype=float) ** 2
    if alpha.ndim:  # batched t, align against (..., D) states
        alpha, s2 = alpha[..., None], s2[..., None]
    return (x + s2 * score) / alpha
