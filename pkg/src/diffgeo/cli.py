"""Command-line entry point.

Subcommands mirror the experiment types: geodesic optimization (optionally
penalized), pairwise diffusion distances, transition-path sampling,
the straight-line pullback check, and denoiser training.  Each takes a JSON
run config plus --seed / --out / --threads flags and writes CSV/JSON (and
where it helps, SVG) artifacts.  Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import constraints, geometry, io, pfode, svg, tps
from .diffed import default_anchor_time, diffed_matrix
from .config import (
    build_model,
    build_optimizer,
    build_penalties,
    build_point,
    build_potential,
    build_schedule,
    build_train_config,
    load_config,
    _get,
    _section,
    _vector,
)
from .errors import ConfigError, DiffgeoError, DomainError, NumericalError
from .geodesic import OptimizerConfig, optimize_geodesic_between
from .models.gmm import GaussianMixture, GmmDenoiser, gmm_log_marginal, three_mode_1d
from .models.training import train_denoiser
from .schedule import NoiseSchedule, SpacetimePoint


def _resolve_seed(cfg: dict, seed_flag):
    return int(seed_flag) if seed_flag is not None else int(cfg.get("seed", 0))


def _endpoints(cfg: dict, t_default: float):
    sec = _section(cfg, "endpoints", "")
    xa = _vector(_get(sec, "x_a", "/endpoints"), "/endpoints/x_a")
    xb = _vector(_get(sec, "x_b", "/endpoints"), "/endpoints/x_b")
    ta = float(sec.get("t_a", t_default))
    tb = float(sec.get("t_b", t_default))
    return SpacetimePoint(xa, ta), SpacetimePoint(xb, tb)


def _curve_svg(path, model, schedule, curve) -> None:
    """Overlay the curve on a density heatmap (analytic 1D/2D only)."""
    if not isinstance(model, GmmDenoiser):
        return
    mix = model.mixture
    if curve.dim == 1:
        xs = np.linspace(curve.x.min() - 1.5, curve.x.max() + 1.5, 120)
        ts = np.linspace(min(curve.t.min(), 0.05), min(schedule.T, curve.t.max() * 1.3), 100)
        grid = np.empty((xs.size, ts.size))
        for j, t in enumerate(ts):
            grid[:, j] = gmm_log_marginal(mix, schedule, xs[:, None], float(t))
        canvas = svg.SvgCanvas(((xs[0], xs[-1]), (ts[0], ts[-1])))
        canvas.heatmap(np.exp(grid))
        canvas.polyline(curve.x[:, 0], curve.t)
        canvas.scatter([curve.x[0, 0], curve.x[-1, 0]], [curve.t[0], curve.t[-1]])
        canvas.save(path)
    elif curve.dim == 2:
        lo = mix.means.min(axis=0) - 2.0
        hi = mix.means.max(axis=0) + 2.0
        xs = np.linspace(lo[0], hi[0], 100)
        ys = np.linspace(lo[1], hi[1], 100)
        pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
        grid = mix.log_density(pts).reshape(100, 100)
        canvas = svg.SvgCanvas(((xs[0], xs[-1]), (ys[0], ys[-1])))
        canvas.heatmap(np.exp(grid))
        canvas.polyline(curve.x[:, 0], curve.x[:, 1])
        canvas.scatter(curve.x[[0, -1], 0], curve.x[[0, -1], 1])
        canvas.save(path)


def cmd_geodesic(cfg: dict, out: Path, seed=None, threads: int = 1) -> int:
    seed = _resolve_seed(cfg, seed)
    schedule = build_schedule(_section(cfg, "schedule", "", {}))
    model = build_model(_section(cfg, "model", ""), schedule)
    opt = build_optimizer(_section(cfg, "optimizer", "", {}), schedule)
    penalties = build_penalties(cfg.get("penalties", []), schedule)
    if penalties:
        sec = _section(cfg, "endpoints", "")
        if "t_a" in sec or "t_b" in sec:
            raise ConfigError(
                "/endpoints", "penalized runs embed endpoints at t_min; drop t_a/t_b"
            )
        xa = _vector(_get(sec, "x_a", "/endpoints"), "/endpoints/x_a")
        xb = _vector(_get(sec, "x_b", "/endpoints"), "/endpoints/x_b")
        spline = constraints.optimize_constrained(model, schedule, xa, xb, penalties, opt)
    else:
        z_a, z_b = _endpoints(cfg, opt.t_min)
        spline = optimize_geodesic_between(model, schedule, z_a, z_b, opt)
    curve = spline.discretize(opt.n_gamma)
    etas, mus = geometry.curve_params(model, schedule, curve)
    length, diag = geometry.curve_length(model, schedule, curve, return_diagnostics=True)
    io.write_curve_csv(out / "curve.csv", curve, etas, mus)
    io.write_trace_csv(out / "energy_trace.csv", spline.energy_trace)
    for i, ptrace in enumerate(getattr(spline, "penalty_traces", [])):
        io.write_trace_csv(out / f"penalty_trace_{i}.csv", ptrace, name="penalty")
    report = {
        "energy": spline.energy_trace[-1],
        "length": length,
        "clamped_segments": diag["clamped_segments"],
        "n_gamma": opt.n_gamma,
        "steps": opt.steps,
        "seed": seed,
    }
    for i, spec in enumerate(penalties):
        report[f"penalty_{i}_kind"] = spec.kind
        report[f"penalty_{i}_final"] = spline.penalty_traces[i][-1]
    io.write_json(out / "report.json", report)
    _curve_svg(out / "geodesic.svg", model, schedule, curve)
    return 0


def cmd_diffed(cfg: dict, out: Path, seed=None, threads: int = 1) -> int:
    seed = _resolve_seed(cfg, seed)
    schedule = build_schedule(_section(cfg, "schedule", "", {}))
    model = build_model(_section(cfg, "model", ""), schedule)
    pts = [_vector(p, f"/points/{i}") for i, p in enumerate(_get(cfg, "points", ""))]
    if len(pts) < 2:
        raise ConfigError("/points", "need at least two points")
    opt = None
    if "optimizer" in cfg:
        opt = build_optimizer(_section(cfg, "optimizer", ""), schedule)
    mat = diffed_matrix(model, schedule, np.stack(pts), opt, threads=threads)
    io.write_matrix_csv(out / "distances.csv", mat)
    anchor = opt.t_min if opt is not None else default_anchor_time(schedule)
    off = mat[np.triu_indices(len(pts), k=1)]
    io.write_json(
        out / "report.json",
        {
            "n_points": len(pts),
            "anchor_t": float(anchor),
            "min_distance": float(off.min()),
            "max_distance": float(off.max()),
            "seed": seed,
        },
    )
    return 0


def cmd_tps(cfg: dict, out: Path, seed=None, threads: int = 1) -> int:
    seed = _resolve_seed(cfg, seed)
    schedule = build_schedule(_section(cfg, "schedule", "", {}))
    model = build_model(_section(cfg, "model", ""), schedule)
    potential = build_potential(_section(cfg, "potential", ""))
    opt = build_optimizer(_section(cfg, "optimizer", "", {}), schedule)
    sec = _section(cfg, "endpoints", "")
    xa = _vector(_get(sec, "x_a", "/endpoints"), "/endpoints/x_a")
    xb = _vector(_get(sec, "x_b", "/endpoints"), "/endpoints/x_b")
    k_steps = int(cfg.get("k_steps", 128))
    dt = float(cfg.get("dt", 4e-4))
    n_paths = int(cfg.get("n_paths", 100))
    from .geodesic import optimize_geodesic

    spline = optimize_geodesic(model, schedule, xa, xb, opt)
    curve = spline.discretize(opt.n_gamma)
    chains = tps.sample_transition_paths(
        potential, curve, schedule, k_steps, dt, n_paths, seed
    )
    reports, agg = tps.report_paths(potential, chains)
    io.write_chains_csv(out / "chains.csv", chains)
    report = dict(agg)
    report["seed"] = seed
    report["geodesic_energy"] = spline.energy_trace[-1]
    baseline = tps.straight_chain(xa, xb, curve.n * k_steps + 1)
    report["baseline_max_energy"] = tps.report_paths(potential, [baseline])[1][
        "max_energy_mean"
    ]
    if "lower_bound" in cfg:
        lb = _section(cfg, "lower_bound", "")
        report["lower_bound"] = tps.lower_bound_max_energy(
            potential,
            xa,
            xb,
            float(_get(lb, "resolution", "/lower_bound", 1e-2)),
            pad=float(_get(lb, "pad", "/lower_bound", 1.0)),
        )
    io.write_json(out / "report.json", report)
    if potential.dim == 2:
        lo = np.minimum(xa, xb) - 1.0
        hi = np.maximum(xa, xb) + 1.0
        xs = np.linspace(lo[0], hi[0], 100)
        ys = np.linspace(lo[1], hi[1], 100)
        pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
        grid = potential.energy(pts).reshape(100, 100)
        canvas = svg.SvgCanvas(((xs[0], xs[-1]), (ys[0], ys[-1])))
        canvas.heatmap(-grid)
        for ch in chains[:5]:
            canvas.polyline(ch.states[::16, 0], ch.states[::16, 1], "#ffffff", 0.7)
        canvas.polyline(curve.x[:, 0], curve.x[:, 1], "#ff5050", 2.0)
        canvas.save(out / "tps.svg")
    return 0


def cmd_pullback(
    cfg: dict, out: Path, seed=None, threads: int = 1, threshold=None
) -> int:
    seed = _resolve_seed(cfg, seed)
    schedule = build_schedule(_section(cfg, "schedule", "", {}))
    model = build_model(_section(cfg, "model", ""), schedule)
    xa = _vector(_get(cfg, "x_a", ""), "/x_a")
    xb = _vector(_get(cfg, "x_b", ""), "/x_b")
    steps = int(cfg.get("steps", 512))
    dev = pfode.pullback_straightness(
        model,
        schedule,
        xa,
        xb,
        steps,
        n_interp=int(cfg.get("n_interp", 16)),
        data_t=float(cfg.get("data_t", 1e-3)),
        method=str(cfg.get("method", "heun")),
    )
    report = {"max_deviation": dev, "steps": steps, "seed": seed}
    if threshold is not None:
        report["threshold"] = float(threshold)
    io.write_json(out / "report.json", report)
    if threshold is not None and dev > float(threshold):
        print(f"pullback deviation {dev:.3e} exceeds threshold {threshold}", file=sys.stderr)
        return 3
    return 0


def cmd_train(cfg: dict, out: Path, seed=None, threads: int = 1) -> int:
    seed = _resolve_seed(cfg, seed)
    schedule = build_schedule(_section(cfg, "schedule", "", {}))
    data = _section(cfg, "data", "", {"kind": "gmm"})
    kind = data.get("kind", "gmm")
    if kind != "gmm":
        raise ConfigError("/data/kind", "only gmm sample data is supported")
    if "weights" in data:
        mix = GaussianMixture(
            np.asarray(data["weights"], dtype=float),
            np.asarray(data["means"], dtype=float),
            float(data["variance"]),
        )
    else:
        mix = three_mode_1d()
    n_samples = int(data.get("n_samples", 4096))
    samples = mix.sample(n_samples, np.random.default_rng(seed))
    tcfg_in = dict(_section(cfg, "train", "", {}))
    tcfg_in["seed"] = seed
    tcfg = build_train_config(tcfg_in)
    model = train_denoiser(samples, schedule, tcfg)
    model.save(out / "checkpoint.json")
    io.write_trace_csv(out / "loss_trace.csv", model.loss_trace, name="loss")
    io.write_json(
        out / "report.json",
        {
            "final_loss": model.loss_trace[-1],
            "steps": tcfg.steps,
            "n_samples": n_samples,
            "seed": seed,
        },
    )
    return 0


_COMMANDS = {
    "geodesic": cmd_geodesic,
    "diffed": cmd_diffed,
    "tps": cmd_tps,
    "pullback": cmd_pullback,
    "train": cmd_train,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diffgeo",
        description="Information-geometric tools for diffusion models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        if name == "pullback":
            p.add_argument("--threshold", type=float, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        kwargs = {"seed": args.seed, "threads": args.threads}
        if args.command == "pullback":
            kwargs["threshold"] = args.threshold
        return _COMMANDS[args.command](cfg, out, **kwargs)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
