"""Run-configuration parsing and object builders.

One JSON document describes one experiment.  Builders validate as they go
and raise ConfigError with a JSON-pointer path to the offending entry, so a
typo in a nested block surfaces as e.g. "/optimizer/steps" rather than a
stack trace from deep inside the optimizer.
"""

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .constraints import PenaltySpec, delayed_ramp
from .errors import ConfigError, DomainError
from .geodesic import OptimizerConfig
from .models.boltzmann import double_well, mixture_potential_2d
from .models.gmm import GaussianMixture, GmmDenoiser
from .models.mlp import MlpDenoiser
from .models.training import TrainConfig
from .schedule import NoiseSchedule, SpacetimePoint

MODEL_BACKENDS = ("gmm", "mlp")
POTENTIAL_KINDS = ("double_well", "gmm2d")

_MISSING = object()


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("/", f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError("/", f"invalid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("/", "top-level config must be a JSON object")
    return doc


def _get(cfg: dict, key: str, pointer: str, default=_MISSING):
    if key in cfg:
        return cfg[key]
    if default is _MISSING:
        raise ConfigError(f"{pointer}/{key}", "required entry is missing")
    return default


def _section(cfg: dict, key: str, pointer: str, default=_MISSING) -> dict:
    val = _get(cfg, key, pointer, default)
    if not isinstance(val, dict):
        raise ConfigError(f"{pointer}/{key}", "expected an object")
    return val


def _vector(val, pointer: str) -> np.ndarray:
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(pointer, f"expected numbers: {e}") from e
    if arr.ndim == 0:
        arr = arr[None]
    return arr


# -- builders ---------------------------------------------------------------


def build_schedule(cfg: dict, pointer: str = "/schedule") -> NoiseSchedule:
    try:
        return NoiseSchedule.from_config(cfg)
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError(pointer, str(e)) from e


def build_model(cfg: dict, schedule: NoiseSchedule, pointer: str = "/model"):
    kind = _get(cfg, "kind", pointer)
    if kind == "gmm":
        try:
            mix = GaussianMixture(
                np.asarray(_get(cfg, "weights", pointer), dtype=float),
                np.asarray(_get(cfg, "means", pointer), dtype=float),
                float(_get(cfg, "variance", pointer)),
            )
            return GmmDenoiser(mix, schedule)
        except ConfigError:
            raise
        except (DomainError, TypeError, ValueError) as e:
            raise ConfigError(pointer, str(e)) from e
    if kind == "mlp":
        ckpt = Path(_get(cfg, "checkpoint", pointer))
        if not ckpt.exists():
            raise ConfigError(f"{pointer}/checkpoint", f"no such file: {ckpt}")
        model = MlpDenoiser.load(ckpt)
        if model.schedule.to_config() != schedule.to_config():
            raise ConfigError(
                f"{pointer}/checkpoint",
                "checkpoint schedule differs from the run's schedule",
            )
        return model
    raise ConfigError(
        f"{pointer}/kind",
        f"unknown model backend {kind!r}; valid backends: {', '.join(MODEL_BACKENDS)}",
    )


def build_potential(cfg: dict, pointer: str = "/potential"):
    kind = _get(cfg, "kind", pointer)
    if kind == "double_well":
        return double_well()
    if kind == "gmm2d":
        return mixture_potential_2d()
    raise ConfigError(
        f"{pointer}/kind",
        f"unknown potential {kind!r}; valid kinds: {', '.join(POTENTIAL_KINDS)}",
    )


_OPT_KEYS = {
    "steps",
    "learning_rate",
    "optimizer",
    "n_gamma",
    "t_min",
    "t_floor_mode",
    "n_nodes",
    "t_peak",
    "t_ceiling",
    "floor_sharpness",
    "lr_schedule",
    "parametrization",
    "anchor_logsnr",
    "ceiling_logsnr",
}


def build_optimizer(
    cfg: dict, schedule: NoiseSchedule, pointer: str = "/optimizer"
) -> OptimizerConfig:
    for key in cfg:
        if key not in _OPT_KEYS:
            raise ConfigError(f"{pointer}/{key}", "unknown optimizer option")
    kwargs = {k: v for k, v in cfg.items() if k not in ("anchor_logsnr", "ceiling_logsnr")}
    try:
        if "anchor_logsnr" in cfg:
            if "t_min" in cfg:
                raise ConfigError(
                    f"{pointer}/anchor_logsnr", "give either t_min or anchor_logsnr"
                )
            kwargs["t_min"] = float(schedule.t_of_logsnr(float(cfg["anchor_logsnr"])))
        if "ceiling_logsnr" in cfg:
            if "t_ceiling" in cfg:
                raise ConfigError(
                    f"{pointer}/ceiling_logsnr", "give either t_ceiling or ceiling_logsnr"
                )
            kwargs["t_ceiling"] = float(
                schedule.t_of_logsnr(float(cfg["ceiling_logsnr"]))
            )
        return OptimizerConfig(**kwargs)
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError(pointer, str(e)) from e


def build_point(cfg: dict, pointer: str) -> SpacetimePoint:
    x = _vector(_get(cfg, "x", pointer), f"{pointer}/x")
    try:
        return SpacetimePoint(x, float(_get(cfg, "t", pointer)))
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError(pointer, str(e)) from e


def build_penalties(items, schedule: NoiseSchedule, pointer: str = "/penalties"):
    if not isinstance(items, list):
        raise ConfigError(pointer, "expected a list of penalty objects")
    specs = []
    for i, item in enumerate(items):
        p = f"{pointer}/{i}"
        if not isinstance(item, dict):
            raise ConfigError(p, "expected an object")
        kind = _get(item, "kind", p)
        rho = float(_get(item, "rho", p, 3.0))
        if "ramp" in item:
            ramp = _section(item, "ramp", p)
            sched = delayed_ramp(
                int(_get(ramp, "delay", f"{p}/ramp", 1200)),
                int(_get(ramp, "end", f"{p}/ramp", 5000)),
                float(_get(ramp, "final", f"{p}/ramp", 100.0)),
            )
        else:
            sched = np.asarray(_get(item, "schedule", p, [[0.0, 1.0]]), dtype=float)
        z_star = None
        if "z_star" in item:
            z_star = build_point(_section(item, "z_star", p), f"{p}/z_star")
        try:
            specs.append(PenaltySpec(kind, rho, sched, z_star))
        except DomainError as e:
            raise ConfigError(p, str(e)) from e
    return specs


def build_train_config(cfg: dict, pointer: str = "/train") -> TrainConfig:
    try:
        return TrainConfig(**cfg)
    except (DomainError, TypeError, ValueError) as e:
        raise ConfigError(pointer, str(e)) from e


# -- shipped presets --------------------------------------------------------


def preset_path(name: str) -> Path:
    base = resources.files("diffgeo") / "presets"
    p = Path(str(base / name))
    if not p.exists():
        names = ", ".join(sorted(q.name for q in Path(str(base)).glob("*.json")))
        raise ConfigError("/", f"no preset named {name!r}; available: {names}")
    return p


def list_presets():
    base = Path(str(resources.files("diffgeo") / "presets"))
    return sorted(p.name for p in base.glob("*.json"))
