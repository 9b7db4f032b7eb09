"""Command line front end: ``soliton-forge <command> [flags]``.

Configuration comes from an optional JSON file (``--config``) and flags;
flags win. Everything is validated before any grid is evaluated.

Exit codes: 0 ok, 2 validation error, 3 verification failure, 4 solver
failure. Errors are reported on stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .closed_form import WaveConfig, bracket_singular, eval_U, eval_w, eval_w_segments, poles
from .engine import (
    SetTag,
    bkp_reduced_ode,
    bkp_system,
    build_ansatz,
    collect_system,
    matches,
    paper_parameter_sets,
    p_from_eta,
    solve_system,
)
from .errors import AlphaZero, SolitonForgeError, ValidationError, VerificationFailed
from .presets import FIGURES, P_TOLERANCE
from .verification import verify_all

OUT_ENV = "SOLITON_FORGE_OUT"

WAVE_FIELDS = ("A", "B", "C", "C1", "C2", "n", "m", "alpha", "t")
GRID_DEFAULTS = {
    "xi_min": -20.0, "xi_max": 20.0, "xi_steps": 2001, "xi0": None,
    "x_min": -10.0, "x_max": 10.0, "x_steps": 61,
    "y_min": -10.0, "y_max": 10.0, "y_steps": 61, "y": 0.0,
    "t_min": 0.0, "t_max": 2.0, "t_steps": 5,
}


@dataclass
class RunConfig:
    wave: dict
    grid: dict = field(default_factory=lambda: dict(GRID_DEFAULTS))
    mode: str = "line"
    out: str | None = None
    seeds: int = 64
    rng_seed: int = 0
    pde: bool = False
    N: int | None = None

    def wave_config(self) -> WaveConfig:
        return WaveConfig(**self.wave)

    def xi_grid(self) -> np.ndarray:
        g = self.grid
        steps = int(g["xi_steps"])
        if steps < 1:
            raise ValidationError("xi_steps must be >= 1")
        if steps == 1:
            return np.array([float(g["xi_min"])])
        if not g["xi_max"] > g["xi_min"]:
            raise ValidationError("xi_max must exceed xi_min")
        return np.linspace(g["xi_min"], g["xi_max"], steps)

    def axis(self, name: str) -> np.ndarray:
        g = self.grid
        steps = int(g[f"{name}_steps"])
        if steps < 2:
            raise ValidationError(f"{name}_steps must be >= 2")
        if not g[f"{name}_max"] > g[f"{name}_min"]:
            raise ValidationError(f"{name}_max must exceed {name}_min")
        return np.linspace(g[f"{name}_min"], g[f"{name}_max"], steps)


def _parse_corrupt(items):
    out = []
    for item in items or ():
        name, _, value = item.partition("=")
        try:
            out.append((name.strip(), float(value)))
        except ValueError:
            raise ValidationError(f"bad --corrupt entry {item!r}") from None
    return tuple(out)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    wave: dict = dict(FIGURES["fig1"].wave)
    grid = dict(GRID_DEFAULTS)
    preset = getattr(args, "preset", None) or getattr(args, "name", None)
    if preset:
        wave.update(FIGURES[preset].wave)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
        for key, value in data.items():
            if key in WAVE_FIELDS:
                wave[key] = float(value)
            elif key in ("set", "set_tag"):
                wave["set_tag"] = SetTag(value)
            elif key in grid:
                grid[key] = value
            elif key in ("mode", "seeds", "rng_seed", "out", "pde"):
                if getattr(args, key, None) in (None, False):
                    setattr(args, key, value)
            else:
                raise ValidationError(f"unknown config key {key!r}")
    for key in WAVE_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            wave[key] = value
    if getattr(args, "set", None):
        wave["set_tag"] = SetTag(args.set)
    for key in grid:
        value = getattr(args, key, None)
        if value is not None:
            grid[key] = value
    corrupt = _parse_corrupt(getattr(args, "corrupt", None))
    if corrupt:
        wave["corruption"] = corrupt
    return RunConfig(
        wave=wave,
        grid=grid,
        mode=getattr(args, "mode", None) or "line",
        out=getattr(args, "out", None),
        seeds=getattr(args, "seeds", None) or 64,
        rng_seed=getattr(args, "rng_seed", None) or 0,
        pde=bool(getattr(args, "pde", False)),
        N=getattr(args, "N", None),
    )


# ---------------------------------------------------------------------------
# formatting


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def output_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def params_payload(run: RunConfig) -> dict:
    cfg = run.wave_config()
    sets = []
    for ps in paper_parameter_sets(cfg.B, cfg.C, cfg.n, cfg.m, cfg.alpha):
        record = ps.to_record()
        record["p"] = p_from_eta(ps.eta, cfg.n, cfg.m)
        sets.append(record)
    return {"Lambda": cfg.Lambda, "sets": sets}


def cmd_params(run: RunConfig, stdout) -> int:
    stdout.write(_dump(params_payload(run)))
    return 0


def collect_text(N: int | None = None) -> str:
    ode = bkp_reduced_ode()
    system = bkp_system() if N is None else collect_system(ode, build_ansatz(N), check_balance=False)
    return str(system) + "\n"


def cmd_collect(run: RunConfig, stdout) -> int:
    stdout.write(collect_text(run.N))
    return 0


def solve_payload(run: RunConfig) -> list:
    w = run.wave
    fixed = {k: float(w[k]) for k in ("B", "C", "n", "m", "alpha")}
    if fixed["alpha"] == 0:
        raise AlphaZero("alpha must be nonzero")
    if run.seeds < 1:
        raise ValidationError("seeds must be >= 1")
    found = solve_system(bkp_system(), fixed, run.seeds, run.rng_seed)
    try:
        known = paper_parameter_sets(**fixed)
    except ValidationError:
        known = []
    records = []
    for ps in found:
        record = ps.to_record()
        record["closed_form_match"] = next((ref.set_tag.value for ref in known if matches(ps, ref)), None)
        records.append(record)
    return records


def cmd_solve(run: RunConfig, stdout) -> int:
    stdout.write(_dump(solve_payload(run)))
    return 0


def line_rows(run: RunConfig, cfg: WaveConfig) -> list:
    """Rows for a 2-D slice: y fixed, x recovered from xi; poles are added as rows."""
    if cfg.n == 0:
        raise ValidationError("line mode needs n != 0 to recover x from xi")
    grid = run.xi_grid()
    y = float(run.grid["y"])
    z = np.union1d(grid, poles(cfg, float(grid.min()), float(grid.max())))
    kind = cfg.kind
    U = np.asarray(eval_U(kind, cfg, z))
    singular = np.asarray(bracket_singular(cfg, z))
    cuts = poles(cfg, float(z.min()), float(z.max()))
    if cuts.size:
        w = eval_w_segments(kind, cfg, z)
    else:
        xi0 = run.grid["xi0"]
        w = np.asarray(eval_w(kind, cfg, z, None if xi0 is None else float(xi0)))
    x = (z - cfg.m * y + cfg.p * cfg.t) / cfg.n
    return [
        (float(zi), float(xi_), y, float(cfg.t), float(ui), float(wi), int(si))
        for zi, xi_, ui, wi, si in zip(z, x, U, w, singular)
    ]


def surface_rows(run: RunConfig, cfg: WaveConfig) -> list:
    xs, ys = run.axis("x"), run.axis("y")
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = (cfg.n * X + cfg.m * Y - cfg.p * cfg.t).ravel()
    kind = cfg.kind
    U = np.asarray(eval_U(kind, cfg, Z))
    singular = np.asarray(bracket_singular(cfg, Z))
    w = eval_w_segments(kind, cfg, Z)
    return [
        (float(x), float(y), float(cfg.t), float(u), float(wv), int(s))
        for x, y, u, wv, s in zip(X.ravel(), Y.ravel(), U, w, singular)
    ]


LINE_HEADER = ["xi", "x", "y", "t", "U", "w", "singular"]
SURFACE_HEADER = ["x", "y", "t", "U", "w", "singular"]


def eval_csv(run: RunConfig) -> str:
    cfg = run.wave_config()
    if run.mode == "line":
        run.xi_grid()
        return _csv_text(LINE_HEADER, line_rows(run, cfg))
    if run.mode == "surface":
        run.axis("x"), run.axis("y")
        return _csv_text(SURFACE_HEADER, surface_rows(run, cfg))
    raise ValidationError(f"unknown mode {run.mode!r}")


def cmd_eval(run: RunConfig, stdout) -> int:
    text = eval_csv(run)
    path = Path(run.out) if run.out else output_dir() / "eval.csv"
    _write(path, text)
    stdout.write(f"{path}\n")
    return 0


def verify_payload(run: RunConfig) -> dict:
    cfg = run.wave_config()
    grid = run.xi_grid()
    if grid.size < 9:
        raise ValidationError("verification needs at least 9 grid points")
    grid3d = (run.axis("x"), run.axis("y"), run.axis("t")) if run.pde else None
    reports = verify_all(cfg, grid, grid3d)
    return {
        "kind": cfg.kind.label,
        "p": cfg.p,
        "reports": [r.to_json() for r in reports],
        "pass": all(r.passed for r in reports),
    }


def cmd_verify(run: RunConfig, stdout) -> int:
    payload = verify_payload(run)
    stdout.write(_dump(payload))
    return 0 if payload["pass"] else VerificationFailed.exit_code


def gnuplot_script(name: str) -> str:
    preset = FIGURES[name]
    col_surface, col_line = (5, 6) if preset.display == "w" else (4, 5)
    label = preset.display
    return "\n".join([
        f"# {name}: {preset.description}",
        "# (I) surface over (x, y) at fixed t; (II) slice at y = 0",
        "set datafile separator ','",
        "set datafile missing 'nan'",
        "set key noautotitle",
        "set terminal pngcairo size 1200,500",
        f"set output '{name}.png'",
        "set multiplot layout 1,2",
        "set title '(I)'",
        f"set xlabel 'x'; set ylabel 'y'; set zlabel '{label}'",
        f"splot '{name}_surface.csv' every ::1 using 1:2:{col_surface}:{col_surface} with points pt 7 ps 0.3 palette",
        "set title '(II)'",
        f"set xlabel 'x'; set ylabel '{label}'",
        f"plot '{name}_line.csv' every ::1 using 2:{col_line} with lines",
        "unset multiplot",
        "",
    ])


def figure_payload(name: str, run: RunConfig, out: Path) -> dict:
    preset = FIGURES[name]
    cfg = run.wave_config()
    if abs(cfg.p - preset.p_printed) >= P_TOLERANCE:
        raise VerificationFailed(f"{name}: p = {cfg.p} but the published value is {preset.p_printed}")
    line = _csv_text(LINE_HEADER, line_rows(run, cfg))
    surface = _csv_text(SURFACE_HEADER, surface_rows(run, cfg))
    files = {
        "line": out / f"{name}_line.csv",
        "surface": out / f"{name}_surface.csv",
        "script": out / f"{name}.gp",
    }
    _write(files["line"], line)
    _write(files["surface"], surface)
    _write(files["script"], gnuplot_script(name))
    return {
        "figure": name,
        "kind": cfg.kind.label,
        "p": cfg.p,
        "p_printed": preset.p_printed,
        "display": preset.display,
        "files": {k: str(v) for k, v in files.items()},
    }


def cmd_figure(run: RunConfig, stdout, name: str) -> int:
    out = Path(run.out) if run.out else output_dir()
    stdout.write(_dump(figure_payload(name, run, out)))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_wave_flags(p: argparse.ArgumentParser, grid: bool = True):
    p.add_argument("--config", help="JSON file with parameters (flags override it)")
    for name in WAVE_FIELDS:
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--set", choices=["SET1", "SET2"], default=None)
    if grid:
        for name, default in GRID_DEFAULTS.items():
            kind = int if name.endswith("steps") else float
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None,
                           help=f"default: {default}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soliton-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="closed-form coefficient sets, eta and p")
    _add_wave_flags(p, grid=False)
    p.add_argument("--preset", choices=sorted(FIGURES))

    p = sub.add_parser("collect", help="print the collected coefficient system")
    p.add_argument("--N", type=int, default=None, help="ansatz degree (default: balance number)")

    p = sub.add_parser("solve", help="numerically solve the coefficient system")
    _add_wave_flags(p, grid=False)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--rng-seed", dest="rng_seed", type=int, default=None)

    p = sub.add_parser("eval", help="sample U and w to CSV")
    _add_wave_flags(p)
    p.add_argument("--preset", choices=sorted(FIGURES))
    p.add_argument("--mode", choices=["line", "surface"], default=None)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run residual checks")
    _add_wave_flags(p)
    p.add_argument("--preset", choices=sorted(FIGURES))
    p.add_argument("--pde", action="store_true", help="also check the (2+1)-dimensional PDE")
    p.add_argument("--corrupt", action="append", metavar="NAME=REL",
                   help="debug: scale a coefficient (a0, a1, a2, eta) by 1+REL")

    p = sub.add_parser("figure", help="data grids and a gnuplot script for a published figure")
    p.add_argument("name", choices=sorted(FIGURES))
    p.add_argument("--config")
    p.add_argument("--out", help="output directory")
    return parser


FIGURE_GRID = {"xi_min": -15.0, "xi_max": 15.0, "xi_steps": 601}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = make_parser().parse_args(argv)
    try:
        if args.command == "collect":
            return cmd_collect(RunConfig(wave={}, N=args.N), stdout)
        run = build_run_config(args)
        if args.command == "figure":
            for key, value in FIGURE_GRID.items():
                run.grid[key] = value
        # validation before compute
        if args.command != "solve":
            run.wave_config()
        handler = {
            "params": cmd_params,
            "solve": cmd_solve,
            "eval": cmd_eval,
            "verify": cmd_verify,
        }.get(args.command)
        if handler is not None:
            return handler(run, stdout)
        return cmd_figure(run, stdout, args.name)
    except SolitonForgeError as exc:
        stderr.write(json.dumps({"error": exc.reason, "message": str(exc)}) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
