"""Analytic denoising for Gaussian-mixture data.

For data q = sum_i pi_i N(mu_i, s0^2 I) and forward kernel
N(a_t x0, s_t^2 I), the time-t marginal is a mixture with component
variance m2 = a_t^2 s0^2 + s_t^2 and the denoising posterior p(x0|x_t) is a
mixture of Gaussians with shared isotropic variance
v = s0^2 s_t^2 / m2 and component means
m_i = (a_t s0^2 x + s_t^2 mu_i) / m2, weighted by the marginal
responsibilities.  Everything below (posterior mean, its divergence, the
score, the posterior second moment) follows in closed form.

The batched evaluation has two implementations: a generic numpy path that
also accepts Dual inputs (giving exact directional derivatives, including
of the divergence), and an @njit kernel mirroring it operation-for-
operation for bitwise-comparable output on the plain path.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import accel, duals
from ..duals import Dual
from ..errors import DomainError
from .base import DenoiserModel


@dataclass
class GaussianMixture:
    """Isotropic Gaussian mixture with a shared scalar variance."""

    weights: np.ndarray
    means: np.ndarray
    variance: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.variance = float(self.variance)
        if self.means.shape[0] != self.weights.shape[0]:
            raise DomainError("weights and means disagree on component count")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be nonnegative and sum to 1")
        if self.variance <= 0:
            raise DomainError("variance must be positive")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_density(self, x) -> np.ndarray:
        """log q(x) for x: (N, D)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        sq = np.sum((x[:, None, :] - self.means) ** 2, axis=-1)
        logits = np.log(self.weights) - 0.5 * sq / self.variance
        lse = duals.logsumexp(logits, axis=1)
        return lse - 0.5 * self.dim * np.log(2 * np.pi * self.variance)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.weights.shape[0], size=n, p=self.weights)
        return self.means[comp] + np.sqrt(self.variance) * rng.standard_normal(
            (n, self.dim)
        )


def three_mode_1d() -> GaussianMixture:
    """The 1D three-mode benchmark mixture used across tests and presets."""
    return GaussianMixture(
        weights=[0.275, 0.45, 0.275], means=[[-2.5], [0.5], [2.5]], variance=0.75**2
    )


# -- generic (numpy or Dual) posterior statistics ---------------------------


def _u(v):
    """Append a trailing value axis."""
    return v.unsqueeze(-1) if isinstance(v, Dual) else np.asarray(v)[..., None]


def _u2(v):
    """Insert a component axis before the last value axis: (N,D) -> (N,1,D)."""
    return v.unsqueeze(-2) if isinstance(v, Dual) else np.asarray(v)[..., None, :]


def _stats_generic(mix: GaussianMixture, schedule, x, t):
    d = mix.dim
    alpha, sigma = schedule.alpha_sigma(t)
    sig2 = sigma * sigma
    m2 = alpha * alpha * mix.variance + sig2  # marginal component variance
    xu = _u2(x)
    diff = xu - _u(_u(alpha)) * mix.means  # (N, C, D)
    sq = duals.dsum(diff * diff, axis=-1)
    logits = np.log(mix.weights) + (-0.5) * sq / _u(m2)
    lse = duals.logsumexp(logits, axis=1)
    r = duals.exp(logits - _u(lse))  # responsibilities (N, C)

    v = mix.variance * sig2 / m2  # shared posterior variance (N,)
    m = (_u(_u(alpha * mix.variance)) * xu + _u(_u(sig2)) * mix.means) / _u(_u(m2))
    ru = _u(r)
    xhat = duals.dsum(ru * m, axis=1)
    score = duals.dsum(ru * (-1.0 * diff), axis=1) / _u(m2)
    # div xhat: constant within-component slope a_lin plus the responsibility
    # reweighting term sum_i r_i (g_i - gbar)^T m_i with g_i = -(diff)/m2.
    a_lin = alpha * mix.variance / m2
    gc = (-1.0 * diff) / _u(_u(m2)) - _u2(score)
    div = d * a_lin + duals.dsum(r * duals.dsum(gc * m, axis=-1), axis=1)
    second = duals.dsum(r * (duals.dsum(m * m, axis=-1) + d * _u(v)), axis=1)
    logp = lse - 0.5 * d * duals.log(2 * np.pi * m2)
    return xhat, div, second, score, logp


# -- numba kernel mirroring the plain path ----------------------------------


@accel.njit(cache=True)
def _stats_kernel(x, alpha, sigma, log_w, means, var):  # pragma: no cover - jit
    n, d = x.shape
    c = means.shape[0]
    xhat = np.zeros((n, d))
    div = np.zeros(n)
    second = np.zeros(n)
    score = np.zeros((n, d))
    logp = np.zeros(n)
    logits = np.zeros(c)
    m = np.zeros((c, d))
    r = np.zeros(c)
    for i in range(n):
        a = alpha[i]
        sig2 = sigma[i] * sigma[i]
        m2 = a * a * var + sig2
        hi = -1e300
        for j in range(c):
            sq = 0.0
            for k in range(d):
                dd = x[i, k] - a * means[j, k]
                sq += dd * dd
            logits[j] = log_w[j] - 0.5 * sq / m2
            if logits[j] > hi:
                hi = logits[j]
        tot = 0.0
        for j in range(c):
            tot += np.exp(logits[j] - hi)
        lse = hi + np.log(tot)
        v = var * sig2 / m2
        for j in range(c):
            r[j] = np.exp(logits[j] - lse)
            for k in range(d):
                m[j, k] = (a * var * x[i, k] + sig2 * means[j, k]) / m2
        for k in range(d):
            acc = 0.0
            sc = 0.0
            for j in range(c):
                acc += r[j] * m[j, k]
                sc += r[j] * (a * means[j, k] - x[i, k])
            xhat[i, k] = acc
            score[i, k] = sc / m2
        a_lin = a * var / m2
        dv = d * a_lin
        sm = 0.0
        for j in range(c):
            inner = 0.0
            msq = 0.0
            for k in range(d):
                g = (a * means[j, k] - x[i, k]) / m2
                inner += (g - score[i, k]) * m[j, k]
                msq += m[j, k] * m[j, k]
            dv += r[j] * inner
            sm += r[j] * (msq + d * v)
        div[i] = dv
        second[i] = sm
        logp[i] = lse - 0.5 * d * np.log(2.0 * np.pi * m2)
    return xhat, div, second, score, logp


def posterior_stats(mix: GaussianMixture, schedule, x, t, force: str | None = None):
    """(xhat, div, second_moment, score, log p_t) at a batch of (x, t).

    Dual inputs always take the generic path.  Plain inputs dispatch to the
    @njit kernel unless disabled (``force`` overrides, for tests/benchmarks).
    """
    if isinstance(x, Dual) or isinstance(t, Dual):
        return _stats_generic(mix, schedule, x, t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1]).astype(float)
    use_numba = accel.numba_enabled() if force is None else force == "numba"
    if not use_numba:
        return _stats_generic(mix, schedule, x, t)
    schedule.check_t(t)
    alpha, sigma = schedule.alpha_sigma(t)
    return _stats_kernel(
        x,
        np.broadcast_to(np.asarray(alpha, dtype=float), t.shape).astype(float),
        np.broadcast_to(np.asarray(sigma, dtype=float), t.shape).astype(float),
        np.log(mix.weights),
        mix.means,
        mix.variance,
    )


# -- public operations ------------------------------------------------------


def gmm_score(mix: GaussianMixture, schedule, x, t):
    """Score of the time-t marginal of mixture data, batched."""
    return posterior_stats(mix, schedule, x, t)[3]


def gmm_log_marginal(mix: GaussianMixture, schedule, x, t):
    """log p_t(x) of the time-t marginal (used by finite-difference tests)."""
    return posterior_stats(mix, schedule, x, t)[4]


class GmmDenoiser(DenoiserModel):
    """Exact denoiser for Gaussian-mixture data."""

    supports_divergence_dual = True

    def __init__(self, mixture: GaussianMixture, schedule):
        self.mixture = mixture
        self.schedule = schedule
        self.dim = mixture.dim

    def denoise(self, x, t):
        return posterior_stats(self.mixture, self.schedule, x, t)[0]

    def divergence(self, x, t):
        return posterior_stats(self.mixture, self.schedule, x, t)[1]

    def score(self, x, t):
        return posterior_stats(self.mixture, self.schedule, x, t)[3]

    def posterior_second_moment(self, x, t):
        """E[||x0||^2 | x_t] from the posterior mixture directly.

        Equal (analytically) to ||xhat||^2 + (s_t^2/a_t) div xhat; kept as an
        independent route for cross-checks.
        """
        return posterior_stats(self.mixture, self.schedule, x, t)[2]
