"""Adam-family optimizers with bias-corrected moments.

Functional style: ``step(params, grads)`` returns updated parameters and
keeps moment state inside the optimizer.  Parameters may be a single array
or a list of arrays (e.g. per-layer weights).

The cosine learning-rate decay is the default for curve optimization: with
a constant step size Adam keeps orbiting the optimum at a scale set by lr,
which shows up as persistent wiggles in the objective trace.  Annealing the
rate to zero makes the trace settle cleanly.
"""

import numpy as np

from .errors import DomainError

_KINDS = ("adam", "adamw")
_SCHEDULES = ("constant", "cosine")


class Adam:
    """Adam (coupled L2) or AdamW (decoupled weight decay).

    With ``lr_schedule="cosine"`` the rate follows
    ``lr * 0.5 * (1 + cos(pi * k / total_steps))``; ``total_steps`` is then
    required.
    """

    def __init__(
        self,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        kind: str = "adam",
        lr_schedule: str = "constant",
        total_steps: int | None = None,
        amsgrad: bool = True,
    ):
        if kind not in _KINDS:
            raise DomainError(f"unknown optimizer kind {kind!r}")
        if lr_schedule not in _SCHEDULES:
            raise DomainError(f"unknown lr schedule {lr_schedule!r}")
        if lr_schedule == "cosine" and not total_steps:
            raise DomainError("cosine lr schedule needs total_steps")
        if lr <= 0:
            raise DomainError("lr must be positive")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.kind = kind
        self.lr_schedule = lr_schedule
        self.total_steps = total_steps
        # Monotone second moment (AMSGrad): after the objective settles, the
        # denominator cannot shrink back toward eps, so near-zero gradients
        # on a plateau stop producing O(lr) re-excitation steps.
        self.amsgrad = amsgrad
        self._m = None
        self._v = None
        self._vmax = None
        self._k = 0

    def current_lr(self) -> float:
        """Rate that the *next* step will use."""
        if self.lr_schedule == "cosine":
            frac = min(self._k / self.total_steps, 1.0)
            return self.lr * 0.5 * (1.0 + np.cos(np.pi * frac))
        return self.lr

    def step(self, params, grads):
        """One update; returns new params with the same structure."""
        single = isinstance(params, np.ndarray)
        plist = [params] if single else list(params)
        glist = [grads] if single else list(grads)
        if self._m is None:
            self._m = [np.zeros_like(p) for p in plist]
            self._v = [np.zeros_like(p) for p in plist]
            self._vmax = [np.zeros_like(p) for p in plist]
        lr = self.current_lr()
        self._k += 1
        b1k = 1.0 - self.beta1**self._k
        b2k = 1.0 - self.beta2**self._k
        out = []
        for i, (p, g) in enumerate(zip(plist, glist)):
            g = np.asarray(g, dtype=float)
            if self.kind == "adam" and self.weight_decay:
                g = g + self.weight_decay * p
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            v = self._v[i]
            if self.amsgrad:
                self._vmax[i] = np.maximum(self._vmax[i], v)
                v = self._vmax[i]
            upd = (self._m[i] / b1k) / (np.sqrt(v / b2k) + self.eps)
            if self.kind == "adamw" and self.weight_decay:
                upd = upd + self.weight_decay * p
            out.append(p - lr * upd)
        return out[0] if single else out
