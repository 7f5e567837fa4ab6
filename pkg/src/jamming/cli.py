"""Command-line front end.

Every subcommand reads an optional JSON config, lets flags override single
fields, validates, and writes CSV/JSON files into ``--out``. Nothing is
plotted; the files are meant to be fed to whatever plotting tool is at hand.

    python -m jamming.cli fluid --c 1.4 --out results/
    python -m jamming.cli figure1 --seed 3 --out results/fig1
    python -m jamming.cli figure2 --grid 0.25:3:0.25 --reps 20
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .fluid import (OdeSettings, er_error_bound, er_gamma, er_jamming_stats, integrate_fluid,
                    integrate_variance)
from .graphs import BoxGeometry, ErParams
from .harness import (MODELS, RunSpec, clt_study, estimate_jamming, fluid_envelope_check,
                      hitting_fraction, run_one, run_replications)
from .rsa import integrate_bounds

FIGURE2_GRID = tuple(0.25 * k for k in range(1, 13))


@dataclass
class ExperimentConfig:
    model: str = "er-chain"
    c: float = 1.0
    n: int = 1000
    reps: int = 20
    seed: int = 0
    grid: tuple = FIGURE2_GRID
    h: float = 1e-4
    dt: float = 0.01
    cell: float = 1 / 64
    level: float = 0.99
    horizon: float = 1.0
    out: str = "."

    def validate(self, command: str):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {', '.join(MODELS)}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps}")
        if not 0 < self.level < 1:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if not self.h > 0 or not self.dt > 0:
            raise ValueError("h and dt must be > 0")
        if not 0 < self.cell <= 1:
            raise ValueError(f"cell must lie in (0, 1] (fraction of r), got {self.cell}")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        needs_positive_c = command in ("fluid", "clt", "envelope") or self.model in ("rsa", "coupled")
        if needs_positive_c and not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if command == "figure2":
            if not self.grid or any(not g > 0 for g in self.grid):
                raise ValueError("c grid must be non-empty with every c > 0")
        return self


def parse_grid(text) -> tuple:
    """``"a,b,c"`` or ``"start:stop:step"`` (stop included)."""
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if not step > 0:
            raise ValueError("grid step must be > 0")
        k = int(math.floor((stop - start) / step + 1e-9))
        return tuple(round(start + i * step, 12) for i in range(k + 1))
    return tuple(float(x) for x in text.split(",") if x.strip())


def load_config(args: argparse.Namespace, command: str, defaults: dict = None) -> ExperimentConfig:
    raw = dict(defaults or {})
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        raw.update(data)
    for name in ("model", "c", "n", "reps", "seed", "grid", "h", "dt", "cell", "level", "horizon", "out"):
        value = getattr(args, name, None)
        if value is not None:
            raw[name] = value
    if "grid" in raw:
        raw["grid"] = parse_grid(raw["grid"])
    return ExperimentConfig(**raw).validate(command)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    return str(x)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue())


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(path: Path, record: dict):
    _atomic_write(path, json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _settings(cfg) -> OdeSettings:
    return OdeSettings(h=cfg.h)


def cmd_fluid(cfg: ExperimentConfig) -> dict:
    settings = _settings(cfg)
    z = integrate_fluid(er_gamma(cfg.c), settings)
    var = integrate_variance(cfg.c, settings)
    bounds = integrate_bounds(cfg.c, settings)
    T_star = z.hitting_time
    end = max(T_star, bounds.T_upper)
    t = np.arange(0.0, end + cfg.dt, cfg.dt)
    m = np.where(t <= var.hitting_time, var.m(t), np.nan)
    rows = zip(t, z(t), bounds.l(t), bounds.u(t), m)
    out = Path(cfg.out)
    write_csv(out / "fluid.csv", ("t", "z_er", "l", "u", "m"), rows)
    summary = {
        "c": cfg.c,
        "T_star": T_star,
        "T_lower": bounds.T_lower,
        "T_upper": bounds.T_upper,
        "sigma2": er_jamming_stats(cfg.c)[1],
        "lower_clamp_time": bounds.clamp_time,
        "h": cfg.h,
    }
    write_json(out / "fluid_summary.json", summary)
    return summary


def _params(cfg: ExperimentConfig):
    if cfg.model.startswith("er"):
        return ErParams(cfg.n, cfg.c)
    return BoxGeometry.square(cfg.c, cfg.n)


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    model = "coupled" if cfg.model == "rsa" else cfg.model
    spec = RunSpec(model, _params(cfg), 1, cfg.seed, cfg.level, cfg.cell)
    run = run_one(spec, 0)
    out = Path(cfg.out)
    summary = {"model": cfg.model, "c": cfg.c, "n": cfg.n, "seed": cfg.seed}
    if model == "coupled":
        write_csv(out / "trace.csv", ("step", "Z", "U", "L", "area_S", "r_tilde", "alpha"), run.trace_rows())
        n = run.z.n_total
        summary.update(
            points=n,
            T_Z=run.z.jamming_fraction,
            T_U=run.u.hitting_time / n,
            T_L=run.l.hitting_time / n,
            upper_saturated=int(np.sum(run.saturated)),
            alpha_excess=run.alpha_excess,
        )
    else:
        z = run.z_values
        write_csv(out / "trace.csv", ("step", "Z"), zip(range(len(z)), z))
        summary["T_hat"] = run.jamming_fraction
    write_json(out / "summary.json", summary)
    return summary


def cmd_figure2(cfg: ExperimentConfig) -> list:
    settings = _settings(cfg)
    rows = []
    for j, c in enumerate(cfg.grid):
        bounds = integrate_bounds(c, settings)
        spec = RunSpec("rsa", BoxGeometry.square(c, cfg.n), cfg.reps, cfg.seed, cfg.level, cfg.cell,
                       stream=(j,))
        st = estimate_jamming(spec)
        rows.append((c, bounds.T_lower, bounds.T_upper, er_jamming_stats(c)[0], st.mean, st.ci_low, st.ci_high))
    write_csv(Path(cfg.out) / "figure2.csv",
              ("c", "T_lower", "T_upper", "T_er", "rsa_mean", "ci_low", "ci_high"), rows)
    return rows


def cmd_clt(cfg: ExperimentConfig) -> dict:
    T_star, sigma2 = er_jamming_stats(cfg.c)
    spec = RunSpec("er-chain", ErParams(cfg.n, cfg.c), cfg.reps, cfg.seed, cfg.level)
    runs = run_replications(spec)
    rep = clt_study(spec, T_star, sigma2, runs)
    out = Path(cfg.out)
    write_csv(out / "clt_samples.csv", ("replicate", "T_hat", "standardized"),
              ((i, hitting_fraction(r), s) for i, (r, s) in enumerate(zip(runs, rep.samples))))
    summary = {
        "c": cfg.c, "n": cfg.n, "reps": cfg.reps, "seed": cfg.seed,
        "T_star": T_star, "sigma2": sigma2,
        "sample_mean": rep.mean, "sample_variance": rep.variance,
        "ks_statistic": rep.ks_statistic, "ks_pvalue": rep.ks_pvalue,
    }
    write_json(out / "clt_summary.json", summary)
    return summary


def cmd_envelope(cfg: ExperimentConfig) -> dict:
    T_star, _ = er_jamming_stats(cfg.c)
    spec = RunSpec("er-chain", ErParams(cfg.n, cfg.c), cfg.reps, cfg.seed, cfg.level)
    runs = run_replications(spec)
    curve = integrate_fluid(er_gamma(cfg.c), _settings(cfg))
    bound = er_error_bound(cfg.n, cfg.c, cfg.horizon)
    rep = fluid_envelope_check(spec, curve, bound, T_star, runs=runs)
    out = Path(cfg.out)
    write_csv(out / "envelope.csv", ("replicate", "sup_deviation", "T_hat"),
              ((i, s, r.jamming_fraction) for i, (s, r) in enumerate(zip(rep.sup_deviations, runs))))
    summary = {
        "c": cfg.c, "n": cfg.n, "reps": cfg.reps, "seed": cfg.seed, "horizon": cfg.horizon,
        "bound": asdict(bound),
        "l2_mean_sup_deviation": rep.l2_mean,
        "deltas": list(rep.deltas),
        "tail_empirical": rep.tail_empirical,
        "tail_bound": rep.tail_bound,
        "l2_ok": rep.l2_ok, "tails_ok": rep.tails_ok,
    }
    write_json(out / "envelope_summary.json", summary)
    return summary


COMMANDS = {
    "fluid": (cmd_fluid, {}),
    "simulate": (cmd_simulate, {}),
    "figure1": (cmd_simulate, {"model": "rsa", "c": 1.4, "n": 2000}),
    "figure2": (cmd_figure2, {"model": "rsa", "n": 1000, "reps": 20}),
    "clt": (cmd_clt, {"n": 10000, "reps": 2000}),
    "envelope": (cmd_envelope, {"n": 10000, "reps": 100}),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jamming", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with config fields; flags override it")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--model", choices=MODELS)
        s.add_argument("--c", type=float)
        s.add_argument("--n", type=int)
        s.add_argument("--reps", type=int)
        s.add_argument("--grid", help="c grid: 'a,b,c' or 'start:stop:step'")
        s.add_argument("--h", type=float, help="RK4 step")
        s.add_argument("--dt", type=float, help="output grid spacing for fluid.csv")
        s.add_argument("--cell", type=float, help="raster cell size as a fraction of r")
        s.add_argument("--level", type=float, help="confidence level")
        s.add_argument("--horizon", type=float, help="time horizon T for the error bound")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func, defaults = COMMANDS[args.command]
    try:
        cfg = load_config(args, args.command, defaults)
        result = func(cfg)
    except (ValueError, TypeError) as exc:
        print(f"jamming {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"jamming {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, dict):
        print(json.dumps(_jsonable(result), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
