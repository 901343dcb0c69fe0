"""A small trainable denoiser: sinusoidal features + SiLU MLP.

Each input coordinate and the log-SNR are expanded with sin/cos features on
a geometric frequency ladder, concatenated, and passed through a few dense
SiLU layers with a linear head predicting E[x0|x_t].  The forward pass also
accepts Dual inputs, giving exact directional derivatives (JVPs) used by
the divergence estimator.  Backprop for training is implemented by hand for
this fixed architecture in :mod:`diffgeo.models.training`.
"""

import json

import numpy as np

from .. import duals
from ..duals import Dual
from ..errors import DomainError
from ..schedule import NoiseSchedule
from .base import DenoiserModel


def sinusoidal_features(s, freqs: np.ndarray):
    """[sin(w_j s), cos(w_j s)] for a batch of scalars s: (N,) -> (N, 2F)."""
    su = s.unsqueeze(-1) if isinstance(s, Dual) else np.asarray(s, float)[..., None]
    arg = su * freqs
    return duals.concatenate([duals.sin(arg), duals.cos(arg)], axis=-1)


def _silu(z):
    return z * duals.sigmoid(z)


class MlpDenoiser(DenoiserModel):
    """Dense denoiser network bound to a noise schedule."""

    def __init__(
        self,
        schedule: NoiseSchedule,
        dim: int,
        hidden_size: int = 128,
        hidden_layers: int = 3,
        n_freqs: int = 64,
        freq_base: float = 1e4,
        freq_scale: float = 2 * np.pi,
        seed: int = 0,
    ):
        if dim < 1 or hidden_size < 1 or hidden_layers < 1 or n_freqs < 1:
            raise DomainError("architecture sizes must be positive")
        self.schedule = schedule
        self.dim = dim
        self.hidden_size = hidden_size
        self.hidden_layers = hidden_layers
        self.n_freqs = n_freqs
        self.freq_base = float(freq_base)
        self.freq_scale = float(freq_scale)
        # ladder from freq_scale down to freq_scale/base
        expo = np.arange(n_freqs) / max(n_freqs - 1, 1)
        self.freqs = self.freq_scale * self.freq_base ** (-expo)
        sizes = (
            [2 * n_freqs * (dim + 1)]
            + [hidden_size] * hidden_layers
            + [dim]
        )
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.loss_trace: list[float] = []

    # -- forward ------------------------------------------------------------

    def features(self, x, t):
        """Concatenated sin/cos features of every coordinate and log-SNR."""
        lam = self.schedule.logsnr(t)
        parts = [
            sinusoidal_features(x[:, i], self.freqs) for i in range(self.dim)
        ]
        parts.append(sinusoidal_features(lam, self.freqs))
        return duals.concatenate(parts, axis=-1)

    def denoise(self, x, t):
        if not isinstance(x, Dual):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            if not isinstance(t, Dual):
                t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1])
        h = self.features(x, t)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = duals.matmul(h, w) + b
            if i < last:
                h = _silu(h)
        return h

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "mlp_denoiser",
            "schedule": self.schedule.to_config(),
            "arch": {
                "dim": self.dim,
                "hidden_size": self.hidden_size,
                "hidden_layers": self.hidden_layers,
                "n_freqs": self.n_freqs,
                "freq_base": self.freq_base,
                "freq_scale": self.freq_scale,
            },
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpDenoiser":
        if doc.get("kind") != "mlp_denoiser":
            raise DomainError("not an MLP denoiser checkpoint")
        arch = doc["arch"]
        model = cls(NoiseSchedule.from_config(doc["schedule"]), **arch)
        for i, (w, b) in enumerate(zip(doc["weights"], doc["biases"])):
            model.weights[i] = np.asarray(w, dtype=float).reshape(
                model.weights[i].shape
            )
            model.biases[i] = np.asarray(b, dtype=float)
        return model

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "MlpDenoiser":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
