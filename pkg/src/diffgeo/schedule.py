"""Noise schedules for the forward process q(x_t | x_0) = N(a_t x_0, s_t^2 I).

Two schedule families are provided:

* ``vp_logsnr_linear`` -- variance preserving with log-SNR linear in t:
  lam(t) = lam_max + (lam_min - lam_max) * t / T, a_t^2 = sigmoid(lam),
  s_t^2 = sigmoid(-lam).  Defaults lam in [-10, 10], T = 1.
* ``ve`` -- variance exploding: a_t = 1, s_t = t, default horizon T = 80.

alpha/sigma are evaluated in log space so extreme log-SNR values stay
stable.  All evaluation methods accept floats, numpy arrays, or
:class:`~diffgeo.duals.Dual` inputs (the latter propagate t-derivatives).
"""

from dataclasses import dataclass, field

import numpy as np

from . import duals
from .duals import Dual, value_of
from .errors import DomainError

VP_LOGSNR_LINEAR = "vp_logsnr_linear"
VE = "ve"


@dataclass
class SpacetimePoint:
    """A point z = (x, t) of the latent spacetime R^D x (0, T]."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.t = float(self.t)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @property
    def z(self) -> np.ndarray:
        """The point as a flat (D+1,) array, time last."""
        return np.append(self.x, self.t)


@dataclass
class NoiseSchedule:
    kind: str
    lambda_min: float = -10.0
    lambda_max: float = 10.0
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in (VP_LOGSNR_LINEAR, VE):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if self.kind == VP_LOGSNR_LINEAR and not self.lambda_min < self.lambda_max:
            raise DomainError("lambda_min must be below lambda_max")
        if self.T <= 0:
            raise DomainError("horizon T must be positive")

    # -- constructors -------------------------------------------------------

    @classmethod
    def vp_logsnr_linear(cls, lambda_min=-10.0, lambda_max=10.0, T=1.0):
        return cls(VP_LOGSNR_LINEAR, lambda_min, lambda_max, T)

    @classmethod
    def ve(cls, T=80.0):
        return cls(VE, T=T)

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "T": self.T,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "NoiseSchedule":
        kind = cfg.get("kind", VP_LOGSNR_LINEAR)
        if kind == VE:
            return cls.ve(T=float(cfg.get("T", 80.0)))
        return cls.vp_logsnr_linear(
            lambda_min=float(cfg.get("lambda_min", -10.0)),
            lambda_max=float(cfg.get("lambda_max", 10.0)),
            T=float(cfg.get("T", 1.0)),
        )

    # -- domain -------------------------------------------------------------

    def check_t(self, t) -> None:
        tv = np.asarray(value_of(t), dtype=float)
        if np.any(tv <= 0.0) or np.any(tv > self.T * (1 + 1e-12)):
            raise DomainError(f"t must lie in (0, T={self.T}], got {tv}")

    # -- core maps ----------------------------------------------------------

    def logsnr(self, t):
        self.check_t(t)
        if self.kind == VE:
            return -2.0 * duals.log(t)
        slope = (self.lambda_min - self.lambda_max) / self.T
        return self.lambda_max + slope * t

    def snr(self, t):
        return duals.exp(self.logsnr(t))

    def alpha_sigma(self, t):
        """(a_t, s_t), evaluated in log space."""
        self.check_t(t)
        if self.kind == VE:
            tv = t
            if not isinstance(tv, Dual):
                tv = np.asarray(tv, dtype=float)
            one = (tv * 0.0) + 1.0
            return one, tv
        lam = self.logsnr(t)
        alpha = duals.exp(-0.5 * duals.softplus(-lam))
        sigma = duals.exp(-0.5 * duals.softplus(lam))
        return alpha, sigma

    def t_of_logsnr(self, lam):
        """Inverse of :meth:`logsnr`."""
        lam_arr = np.asarray(value_of(lam), dtype=float)
        if self.kind == VE:
            t = np.exp(-0.5 * np.asarray(lam, dtype=float))
            if np.any(t > self.T * (1 + 1e-12)):
                raise DomainError(f"log-SNR {lam_arr} maps below t=0 or beyond T={self.T}")
            return float(t) if t.ndim == 0 else t
        if np.any(lam_arr < self.lambda_min) or np.any(lam_arr > self.lambda_max):
            raise DomainError(
                f"log-SNR must lie in [{self.lambda_min}, {self.lambda_max}], got {lam_arr}"
            )
        t = self.T * (self.lambda_max - np.asarray(lam, dtype=float)) / (
            self.lambda_max - self.lambda_min
        )
        t = np.maximum(t, np.finfo(float).tiny)
        return float(t) if t.ndim == 0 else t

    # -- SDE coefficients ---------------------------------------------------

    def drift_diffusion(self, t):
        """(f_t, g_t^2) with f_t = d log a_t / dt and g_t^2 = d s_t^2/dt - 2 f_t s_t^2."""
        self.check_t(t)
        if self.kind == VE:
            f = np.zeros_like(np.asarray(t, dtype=float))
            return f, 2.0 * np.asarray(t, dtype=float)
        dlam = (self.lambda_min - self.lambda_max) / self.T
        _, sigma = self.alpha_sigma(t)
        sig2 = sigma**2
        return 0.5 * dlam * sig2, -dlam * sig2
