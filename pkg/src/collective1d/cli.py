"""Command-line surface: one subcommand per figure-class output.

    collective1d <poles|contour|evolve|sweep|bounces|waveguide>
                 [--config cfg.json] [--out DIR] [--override key=value ...]

Outputs are plot-ready CSV/JSON with full-precision floats and no
timestamps (identical config => byte-identical files); every output file
gets a sidecar <name>.config.json holding the fully resolved configuration.
Exit codes: 0 success, 1 configuration error, 2 solver/quadrature failure.
COLLECTIVE_THREADS caps internal thread pools.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import bounces as bn
from . import dynamics as dyn
from . import greens as gr
from . import sweep as sw
from . import waveguide as wg
from .core import ModelError, ModelParams, validate
from .quadrature import QuadratureError, QuadratureSpec

DEFAULT_CONFIG = {
    "model": {"omega1": 2.0, "lambda": 0.05, "omegaM": 5.0, "n_ff": 1, "x1": 0.0, "x2": 1.0},
    "quad": {"cutoff": None, "rel_tol": 1e-10, "abs_tol": 1e-12, "max_panels": 4000},
    "lattice": {"L": 500.0, "n_modes": 2501},
    "poles": {"x21": 29.025, "n_min": -3, "n_max": 3, "write_contour": False},
    "contour": {"x21": 29.025, "sector": "s", "re_min": 1.3, "re_max": 2.7,
                "im_min": -0.1, "im_max": 0.0, "nx": 141, "ny": 51},
    "evolve": {"x21": 29.025, "initial": "s", "t_max_factor": 5.0, "n_t": 600,
               "profile_time_factors": [], "n_x": 241},
    "sweep": {"x21_min": 5.0, "x21_max": 40.0, "step": 0.05, "zero_decay_max_n": 12},
    "bounces": {"x21": 1.0, "t_max_factor": 3.0, "n_t": 61,
                "resum_time_factors": [0.0, 1.0, 2.0, 3.0]},
    "waveguide": {"D": 1.0, "W": 1.0, "m0": 1, "n0": 1, "l_max": 10,
                  "sector": "s", "n": 1, "g0": 0.1, "k_c": 2.0, "channel_decay": 0.2},
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        for block, values in user.items():
            if block not in cfg:
                raise ConfigError(f"unknown config block {block!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config block {block!r} must be an object")
            for key, val in values.items():
                if key not in cfg[block]:
                    raise ConfigError(f"unknown key {block}.{key}")
                cfg[block][key] = val
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.split(".")
        node = cfg
        for part in parts[:-1]:
            if part not in node:
                raise ConfigError(f"unknown override path {dotted!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override path {dotted!r}")
        try:
            node[parts[-1]] = json.loads(raw)
        except json.JSONDecodeError:
            node[parts[-1]] = raw
    return cfg


def _resolve(cfg: dict):
    m = cfg["model"]
    # construct unvalidated so commands can issue their own diagnostics
    params = ModelParams(omega1=m["omega1"], lam=m["lambda"], omegaM=m["omegaM"],
                         n_ff=int(m["n_ff"]), x1=m["x1"], x2=m["x2"])
    qc = dict(cfg["quad"])
    if qc.get("cutoff") in (None, 0):
        qc["cutoff"] = 200.0 * params.omegaM
    quad = QuadratureSpec(**qc)
    return params, quad


def _sidecar(path: Path, cfg: dict) -> None:
    with open(path.with_name(path.name + ".config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check_coupled(params: ModelParams) -> None:
    if params.lam == 0:
        raise ConfigError("free theory has no resonance poles (lambda = 0)")
    validate(params, two_atom=True)


def cmd_poles(cfg: dict, out: Path) -> list[Path]:
    params, quad = _resolve(cfg)
    _check_coupled(params)
    block = cfg["poles"]
    x21 = float(block["x21"])
    n_range = range(int(block["n_min"]), int(block["n_max"]) + 1)
    written = []
    for tag in ("s", "a"):
        records, missing = gr.pole_scan(tag, x21, n_range, params, quad)
        path = out / f"poles_{tag}.csv"
        gr.pole_records_to_csv(records, path)
        written.append(path)
        if missing:
            print(f"poles[{tag}]: missed lattice indices {missing}", file=sys.stderr)
    if block.get("write_contour"):
        written += cmd_contour(cfg, out)
    return written


def cmd_contour(cfg: dict, out: Path) -> list[Path]:
    params, quad = _resolve(cfg)
    _check_coupled(params)
    c = cfg["contour"]
    cmap = gr.contour_map((c["re_min"], c["re_max"], c["im_min"], c["im_max"]),
                          (int(c["nx"]), int(c["ny"])), c["sector"], float(c["x21"]),
                          params, quad)
    path = out / f"contour_{c['sector']}.csv"
    gr.contour_to_csv(cmap, path)
    return [path]


def cmd_evolve(cfg: dict, out: Path) -> list[Path]:
    params, quad = _resolve(cfg)
    _check_coupled(params)
    e = cfg["evolve"]
    initial = str(e["initial"])
    if initial not in ("s", "a"):
        raise ConfigError("evolve.initial must be 's' or 'a'")
    if int(e["n_t"]) < 2:
        raise ConfigError("evolve.n_t must give a non-empty time grid")
    x21 = float(e["x21"])
    p = params.with_x21(x21)
    lat = cfg["lattice"]
    model = dyn.build_lattice(p, float(lat["L"]), int(lat["n_modes"]), initial)
    dyn.diagonalize(model)
    times = np.linspace(0.0, float(e["t_max_factor"]) * x21, int(e["n_t"]))
    series = dyn.survival_probability(model, initial, times)
    overlay = dyn.collective_survival(p, initial, x21, times, quad)
    paths = [out / f"p1_{initial}.csv", out / f"p1_{initial}_collective.csv"]
    dyn.timeseries_to_csv(series, paths[0])
    dyn.timeseries_to_csv(overlay, paths[1])
    xs = np.linspace(-1.5 * x21 + p.x1, p.x2 + 1.5 * x21, int(e["n_x"]))
    for fac in e["profile_time_factors"]:
        t = float(fac) * x21
        prof = dyn.field_intensity(model, initial, xs, t)
        col = dyn.collective_field(p, initial, x21, xs, t, quad)
        p1 = out / f"field_{initial}_t{fac:g}.csv"
        p2 = out / f"field_{initial}_t{fac:g}_collective.csv"
        dyn.profile_to_csv(prof, p1)
        dyn.profile_to_csv(col, p2)
        paths += [p1, p2]
    return paths


def cmd_sweep(cfg: dict, out: Path) -> list[Path]:
    params, quad = _resolve(cfg)
    _check_coupled(params)
    s = cfg["sweep"]
    grid = np.arange(float(s["x21_min"]), float(s["x21_max"]) + 1e-12, float(s["step"]))
    records = sw.sweep_poles(grid, params, quad)
    force = sw.force_indicator(records)
    path = out / "sweep.csv"
    sw.sweep_to_csv(records, path, force)
    solutions = []
    checks = {}
    for tag in ("s", "a"):
        for n in range(1, int(s["zero_decay_max_n"]) + 1):
            try:
                sol = sw.zero_decay_solve(tag, n, params, quad)
            except (gr.GreensError, ValueError):
                continue
            if grid[0] <= sol.x21_zero <= grid[-1]:
                solutions.append(sol)
                pole = gr.find_pole(tag, sol.x21_zero,
                                    gr.one_atom_pole(params, quad).value, params, quad)
                checks[(sol.sector, sol.n)] = pole.gamma
    zpath = out / "zero_decay.json"
    sw.zero_decay_to_json(solutions, zpath, checks)
    return [path, zpath]


def cmd_bounces(cfg: dict, out: Path) -> list[Path]:
    params, quad = _resolve(cfg)
    _check_coupled(params)
    b = cfg["bounces"]
    x21 = float(b["x21"])
    t_max = float(b["t_max_factor"]) * x21
    dec = bn.BounceDecomposition.build(x21, params, quad, t_max=t_max)
    times = np.linspace(0.0, t_max, int(b["n_t"]))
    amps = np.array([bn.bounce_sum(t, dec) for t in times])
    path = out / "bounce_amplitude.csv"
    bn.amplitude_to_csv(times, amps, path)
    reports = [bn.resummed(float(fac) * x21, dec, allow_divergent=True)
               for fac in b["resum_time_factors"]]
    rpath = out / "resummation.json"
    bn.resummation_report_to_json(reports, rpath)
    return [path, rpath]


def cmd_waveguide(cfg: dict, out: Path) -> list[Path]:
    w = cfg["waveguide"]
    guide = wg.WaveguideParams(
        D=float(w["D"]), W=float(w["W"]), m0=int(w["m0"]), n0=int(w["n0"]),
        l_max=int(w["l_max"]),
        coupling=wg.default_coupling(float(w["g0"]), float(w["k_c"]),
                                     float(w["channel_decay"])))
    report = wg.existence_check(guide)
    solution = wg.solve_trap(guide, int(w["n"]), w["sector"])
    pole = wg.collective_pole_wg(guide, w["sector"], solution.x21_trap,
                                 seed=solution.xi_tilde - 1e-5j)
    path = out / "waveguide_trap.json"
    wg.trap_report_to_json(solution, pole, report, path)
    return [path]


_COMMANDS = {
    "poles": cmd_poles,
    "contour": cmd_contour,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "bounces": cmd_bounces,
    "waveguide": cmd_waveguide,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="collective1d", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="dot-path override, e.g. model.lambda=0.1")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written = _COMMANDS[args.command](cfg, out)
        for path in written:
            _sidecar(path, cfg)
    except (ConfigError, ModelError, wg.WaveguideError, dyn.LatticeError,
            json.JSONDecodeError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (gr.GreensError, QuadratureError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
