"""Denoising-loss training for the MLP denoiser.

The loss is a noise-level-weighted regression of the network output onto
the clean point: ``w(lam) ||model(x_t, t) - x0||^2`` with
``w(lam) = sqrt(sigmoid(lam + 2))``, where ``x_t = a_t x0 + s_t eps``.
Noise levels are drawn uniformly in log-SNR over the schedule's usable
band.  Gradients come from handwritten backprop for the fixed dense
architecture; the optimizer is Adam/AdamW with bias correction.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NumericalError
from ..optim import Adam
from ..schedule import NoiseSchedule
from .mlp import MlpDenoiser


@dataclass
class TrainConfig:
    steps: int = 4000
    lr: float = 1e-3
    batch_size: int = 128
    seed: int = 0
    hidden_size: int = 128
    hidden_layers: int = 3
    n_freqs: int = 64
    optimizer: str = "adamw"
    weight_decay: float = 1e-4
    lr_schedule: str = "constant"


def _silu(z):
    return z / (1.0 + np.exp(-z))


def _silu_grad(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 + z * (1.0 - s))


def _forward_cached(model: MlpDenoiser, f: np.ndarray):
    """Forward pass keeping pre-activations for backprop."""
    zs = []
    h = f
    hs = [h]
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        zs.append(z)
        h = _silu(z) if i < last else z
        hs.append(h)
    return hs, zs


def _backward(model: MlpDenoiser, hs, zs, g_out):
    """Gradients of the loss w.r.t. every weight and bias."""
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = g_out
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = hs[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * _silu_grad(zs[i - 1])
    return grads_w, grads_b


def train_denoiser(
    samples: np.ndarray, schedule: NoiseSchedule, config: TrainConfig | None = None
) -> MlpDenoiser:
    """Fit an MlpDenoiser to samples; loss history lands in model.loss_trace."""
    config = config or TrainConfig()
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DomainError("need at least one training sample")
    samples = np.atleast_2d(samples)
    if config.steps < 1:
        raise DomainError("steps must be >= 1")
    m, dim = samples.shape

    model = MlpDenoiser(
        schedule,
        dim,
        hidden_size=config.hidden_size,
        hidden_layers=config.hidden_layers,
        n_freqs=config.n_freqs,
        seed=config.seed,
    )
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(
        lr=config.lr,
        weight_decay=config.weight_decay,
        kind=config.optimizer,
        lr_schedule=config.lr_schedule,
        total_steps=config.steps,
    )
    # usable log-SNR band: one unit inside both ends of the schedule's range
    lam_lo = float(schedule.logsnr(schedule.T)) + 1.0
    lam_hi = schedule.lambda_max - 1.0
    if lam_lo >= lam_hi:
        raise DomainError("schedule log-SNR range too narrow for training")

    b = config.batch_size
    params = model.weights + model.biases
    nw = len(model.weights)
    for step in range(config.steps):
        lam = rng.uniform(lam_lo, lam_hi, size=b)
        t = schedule.t_of_logsnr(lam)
        x0 = samples[rng.integers(0, m, size=b)]
        alpha, sigma = schedule.alpha_sigma(t)
        x_t = alpha[:, None] * x0 + sigma[:, None] * rng.standard_normal((b, dim))

        f = model.features(x_t, t)
        hs, zs = _forward_cached(model, f)
        resid = hs[-1] - x0
        w = np.sqrt(1.0 / (1.0 + np.exp(-(lam + 2.0))))
        loss = float(np.mean(w * np.sum(resid * resid, axis=1)))
        if not np.isfinite(loss):
            raise NumericalError(f"training loss became non-finite at step {step}")
        model.loss_trace.append(loss)

        g_out = (2.0 / b) * w[:, None] * resid
        grads_w, grads_b = _backward(model, hs, zs, g_out)
        params = opt.step(params, grads_w + grads_b)
        model.weights = params[:nw]
        model.biases = params[nw:]
    return model
