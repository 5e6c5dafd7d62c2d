"""Command-line front end.

Config files are flat ``key = value`` documents (``#`` comments, blank
lines allowed); dotted keys address the stepping and solver blocks.
All quantities are dimensionless: the solvers run on the normalized
problem, so friction enters either as the physical ``d`` (normalized
away when possible) or directly as ``D``.

    command = transient
    n = 1.0
    alpha = 1.0
    D = 1.0
    datum = fig1_bump
    t_end = 100.0
    output_dir = out/run1
    step.tau = 1e-5
    step.mesh_nodes = 257

Grammar: ``dropspread <subcommand> --config <path> [--override k=v]...``
with subcommands selfsimilar | asymptotics | transient | figure | sweep
(figure takes the tag instead of a config).  Exit codes: 1 config
error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import asymptotics, harness, selfsimilar, transient
from .core import (
    BALANCED, ProblemParams, SolverError, classify_regime, normalize,
    normalize_balanced,
)

__all__ = ["RunConfig", "ParseError", "ValidationError", "parse_config",
           "serialize_config", "main"]

COMMANDS = ("selfsimilar", "asymptotics", "transient", "figure", "sweep")


class ParseError(Exception):
    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(Exception):
    pass


_SCALARS = {
    "n": float, "alpha": float, "d": float, "D": float, "mass": float,
    "t_end": float, "datum": str, "output_dir": str, "command": str,
    "figure": str,
    "step.tau": float, "step.mesh_nodes": int, "step.theta_clamp": float,
    "step.rescale_period": int, "step.tau_growth": float,
    "step.tau_max_fraction": float,
    "solver.tol_B": float, "solver.eps_start": float, "solver.series_terms": int,
}
_LISTS = {"output_times": float, "sweep.n": float, "sweep.alpha": float}


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: float
    alpha: float
    d: float | None = None
    D: float | None = None
    mass: float = 2.0
    datum: str = "fig1_bump"
    t_end: float = 10.0
    output_times: tuple = ()
    output_dir: str = "out/run"
    figure: str = ""
    step: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    sweep_n: tuple = ()
    sweep_alpha: tuple = ()

    def params(self):
        return ProblemParams(n=self.n, alpha=self.alpha, d=self.d,
                             D=self.D, mass=self.mass)

    def step_config(self):
        return transient.StepConfig(**self.step)

    def shooting_config(self):
        return selfsimilar.ShootingConfig(**self.solver)


def _parse_raw(text):
    """key = value lines to a raw string dict, with positions for errors."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno,
                             len(line) - len(line.lstrip()) + 1)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError("empty key", lineno, 1)
        if not value:
            raise ParseError(f"empty value for key {key!r}", lineno,
                             stripped.index("=") + 2)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno, 1)
        if key not in _SCALARS and key not in _LISTS:
            raise ParseError(f"unknown key {key!r}", lineno, 1)
        raw[key] = (value, lineno)
    return raw


def _convert(raw):
    out = {}
    for key, (value, lineno) in raw.items():
        try:
            if key in _LISTS:
                conv = _LISTS[key]
                out[key] = tuple(conv(v.strip()) for v in value.split(",") if v.strip())
            else:
                conv = _SCALARS[key]
                out[key] = conv(value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", lineno, 1) from None
    return out


def _build_config(vals, command=None):
    cmd = command or vals.get("command")
    if cmd is None:
        raise ValidationError("no command given (config key 'command' or subcommand)")
    if cmd not in COMMANDS:
        raise ValidationError(f"unknown command {cmd!r}; expected one of {COMMANDS}")
    step = {k.split(".", 1)[1]: v for k, v in vals.items() if k.startswith("step.")}
    solver = {k.split(".", 1)[1]: v for k, v in vals.items() if k.startswith("solver.")}
    cfg = RunConfig(
        command=cmd,
        n=vals.get("n", 1.0),
        alpha=vals.get("alpha", 1.0),
        d=vals.get("d"),
        D=vals.get("D"),
        mass=vals.get("mass", 2.0),
        datum=vals.get("datum", "fig1_bump"),
        t_end=vals.get("t_end", 10.0),
        output_times=tuple(vals.get("output_times", ())),
        output_dir=vals.get("output_dir", "out/run"),
        figure=vals.get("figure", ""),
        step=step,
        solver=solver,
        sweep_n=tuple(vals.get("sweep.n", ())),
        sweep_alpha=tuple(vals.get("sweep.alpha", ())),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if not (1.0 <= cfg.n < 3.0):
        raise ValidationError(f"n out of [1,3): {cfg.n}")
    if not cfg.alpha > 0.0:
        raise ValidationError(f"alpha must be > 0: {cfg.alpha}")
    if (cfg.d is None) == (cfg.D is None):
        raise ValidationError("set exactly one of d (physical) or D (normalized)")
    if cfg.d is not None and not cfg.d > 0.0:
        raise ValidationError(f"d must be > 0: {cfg.d}")
    if cfg.D is not None and cfg.D < 0.0:
        raise ValidationError(f"D must be >= 0: {cfg.D}")
    if not cfg.mass > 0.0:
        raise ValidationError(f"mass must be > 0: {cfg.mass}")
    if cfg.command == "transient":
        if cfg.datum not in transient.PRESETS and not cfg.datum.startswith("file:"):
            raise ValidationError(
                f"unknown datum {cfg.datum!r}; presets: {sorted(transient.PRESETS)}")
        if not cfg.t_end > 0.0:
            raise ValidationError(f"t_end must be > 0: {cfg.t_end}")
    if cfg.command == "asymptotics" and classify_regime(cfg.n, cfg.alpha) == BALANCED:
        raise ValidationError(
            "alpha = 4/(n+3) is the balanced case with an exact profile; "
            "use the selfsimilar command")
    if cfg.command == "figure" and cfg.figure and cfg.figure not in harness.figure_tags():
        raise ValidationError(
            f"unknown figure {cfg.figure!r}; known: {harness.figure_tags()}")
    if cfg.command == "selfsimilar" and cfg.D is not None:
        pass  # any D >= 0 is admissible in the balanced family
    try:
        cfg.step_config()
        cfg.shooting_config()
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None


def parse_config(text, command=None):
    """Parse and validate a config document; see the module docstring."""
    return _build_config(_convert(_parse_raw(text)), command=command)


def serialize_config(cfg: RunConfig):
    """Write a RunConfig back to the parseable text form (round-trips)."""
    lines = [f"command = {cfg.command}", f"n = {cfg.n!r}", f"alpha = {cfg.alpha!r}"]
    if cfg.d is not None:
        lines.append(f"d = {cfg.d!r}")
    if cfg.D is not None:
        lines.append(f"D = {cfg.D!r}")
    lines.append(f"mass = {cfg.mass!r}")
    lines.append(f"datum = {cfg.datum}")
    lines.append(f"t_end = {cfg.t_end!r}")
    if cfg.output_times:
        lines.append("output_times = " + ",".join(repr(v) for v in cfg.output_times))
    lines.append(f"output_dir = {cfg.output_dir}")
    if cfg.figure:
        lines.append(f"figure = {cfg.figure}")
    for k, v in sorted(cfg.step.items()):
        lines.append(f"step.{k} = {v!r}")
    for k, v in sorted(cfg.solver.items()):
        lines.append(f"solver.{k} = {v!r}")
    if cfg.sweep_n:
        lines.append("sweep.n = " + ",".join(repr(v) for v in cfg.sweep_n))
    if cfg.sweep_alpha:
        lines.append("sweep.alpha = " + ",".join(repr(v) for v in cfg.sweep_alpha))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# command implementations

def _ensure_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_meta(out, cfg: RunConfig, extra=None):
    meta = {"config": asdict(cfg)}
    if extra:
        meta.update(extra)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True,
                                              default=str))


def _normalized_params(cfg: RunConfig):
    params = cfg.params()
    if params.d is not None:
        if classify_regime(params.n, params.alpha) == BALANCED:
            params, _ = normalize_balanced(params)
        else:
            params, _ = normalize(params)
    return params


def _cmd_selfsimilar(cfg: RunConfig):
    params = _normalized_params(cfg)
    sol = selfsimilar.solve(params.n, params.D, cfg.shooting_config())
    out = _ensure_dir(cfg.output_dir)
    with open(out / "profile.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "H"])
        for x, H in zip(sol.profile.grid.nodes, sol.profile.values):
            wr.writerow([f"{x:.17g}", f"{H:.17g}"])
    summary = {
        "B": sol.B, "D": sol.D, "n": sol.n, "gamma": sol.gamma,
        "s_law_coefficient": sol.s_law[0], "s_law_exponent": sol.s_law[1],
        "residuals": sol.residuals,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    _write_meta(out, cfg)
    return 0


def _cmd_asymptotics(cfg: RunConfig):
    params = _normalized_params(cfg)
    pred = asymptotics.predict(params)
    out = _ensure_dir(cfg.output_dir)
    with open(out / "profiles.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "H0", "H1"])
        x = pred.H0.grid.nodes
        h1 = pred.H1.values if pred.H1 is not None else np.full_like(x, np.nan)
        for xi, h0i, h1i in zip(x, pred.H0.values, h1):
            wr.writerow([f"{xi:.17g}", f"{h0i:.17g}", f"{h1i:.17g}"])
    summary = {
        "regime": pred.regime, "gamma": pred.gamma,
        "s0_prefactor": pred.s0_prefactor, "beta": pred.beta,
        "C1": pred.C1, "C2": pred.C2, "B0": pred.B0,
        "omega_law": pred.omega_law,
        "s1_order": str(pred.s1_order) if pred.s1_order else None,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    _write_meta(out, cfg)
    return 0


def _load_datum(spec):
    if spec in transient.PRESETS:
        return spec
    path = spec[len("file:"):]
    data = np.loadtxt(path, delimiter=",", skiprows=1)

    def fn(y):
        return np.interp(y, data[:, 0], data[:, 1])

    return fn


def _cmd_transient(cfg: RunConfig):
    params = _normalized_params(cfg)
    step_cfg = cfg.step_config()
    state = transient.initial_state(_load_datum(cfg.datum), step_cfg)
    times = cfg.output_times or tuple(np.geomspace(
        max(cfg.t_end * 1e-4, step_cfg.tau * 10.0), cfg.t_end, 9))
    res = transient.run(state, params, step_cfg, cfg.t_end, snapshot_times=times)
    out = _ensure_dir(cfg.output_dir)
    with open(out / "series.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "s_minus", "s_plus", "mass", "energy"])
        for k in range(res.times.size):
            wr.writerow([f"{v:.17g}" for v in
                         (res.times[k], res.s_minus[k], res.s_plus[k],
                          res.mass[k], res.energy[k])])
    for idx, (t, rescaled, raw) in enumerate(res.snapshots):
        with open(out / f"profile_{idx:03d}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "H", f"# t = {t:.17g}"])
            for x, H in zip(rescaled.grid.nodes, rescaled.values):
                wr.writerow([f"{x:.17g}", f"{H:.17g}"])
    _write_meta(out, cfg, extra={"stats": res.stats})
    return 0


def _sweep_one(args):
    cfg_text, n, alpha, out_dir = args
    cfg = parse_config(cfg_text, command="transient")
    cfg = replace(cfg, n=n, alpha=alpha, output_dir=out_dir)
    _validate(cfg)
    return _cmd_transient(cfg)


def _cmd_sweep(cfg: RunConfig, jobs=1):
    ns = cfg.sweep_n or (cfg.n,)
    alphas = cfg.sweep_alpha or (cfg.alpha,)
    base_text = serialize_config(replace(cfg, command="transient",
                                         sweep_n=(), sweep_alpha=()))
    tasks = []
    for n in ns:
        for alpha in alphas:
            sub = str(Path(cfg.output_dir) / f"n{n:g}_alpha{alpha:g}")
            tasks.append((base_text, n, alpha, sub))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            list(ex.map(_sweep_one, tasks))
    else:
        for task in tasks:
            _sweep_one(task)
    return 0


def _apply_overrides(raw_vals, overrides):
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override must be key=value: {item!r}")
        key, _, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCALARS and key not in _LISTS:
            raise ValidationError(f"unknown override key {key!r}")
        if key in _LISTS:
            raw_vals[key] = tuple(_LISTS[key](v) for v in value.split(",") if v)
        else:
            raw_vals[key] = _SCALARS[key](value)
    return raw_vals


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dropspread",
        description="thin-film droplet spreading with contact-line friction")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("selfsimilar", "asymptotics", "transient", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--override", action="append", default=[])
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1)
    pf = sub.add_parser("figure")
    pf.add_argument("tag", choices=harness.figure_tags())
    pf.add_argument("--out", default="out")

    args = parser.parse_args(argv)
    try:
        if args.command == "figure":
            harness.reproduce_figure(args.tag, args.out)
            return 0
        text = Path(args.config).read_text()
        raw = _convert(_parse_raw(text))
        raw = _apply_overrides(raw, args.override)
        cfg = _build_config(raw, command=args.command)
        if args.command == "selfsimilar":
            return _cmd_selfsimilar(cfg)
        if args.command == "asymptotics":
            return _cmd_asymptotics(cfg)
        if args.command == "transient":
            return _cmd_transient(cfg)
        return _cmd_sweep(cfg, jobs=args.jobs)
    except (ParseError, ValidationError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
