"""Command-line front end: spectrum, evolve, fit, winding, export, tomo.

Configuration is a flat TOML file (keys mirror RunConfig) overridden by
command-line flags. Every command emits machine-readable CSV/JSON into
the output directory plus a human-readable JSON report on stdout; SVG
plots are optional decoration. Exit codes: 0 success, 2 usage error,
3 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import fit as fitmod
from ._svg import heatmap, line_plot
from .circuits import (
    build_ground_prep,
    build_quench_program,
    build_trotter_step,
    circuit_unitary,
    export_qasm,
    moments,
    parse_qasm,
    run_statevector,
)
from .fit import GridSpec, grid_sweep, locate_minimum
from .noise import (
    DEFAULT_SHOTS,
    Trajectory,
    build_noise_model,
    reconstruct_state,
    run_density_matrix,
    sample_trajectories,
    simulate_readout,
    tomography_settings,
)
from .qcore import fidelity, trace_distance
from .schwinger import (
    PHYSICAL_BASIS,
    ModelParams,
    UndefinedPhaseError,
    WindingLoop,
    analytic_loschmidt,
    analytic_phase_field,
    build_physical_hamiltonian,
    diagonalize,
    rate_function,
    winding_number,
)

__all__ = ["RunConfig", "parse_config", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

EVOLVE_MODES = ("analytic", "trotter-noiseless", "trotter-noisy", "trotter-sampled")
TOMO_MODES = ("noiseless", "noisy")


class UsageError(Exception):
    """Bad arguments or configuration values (exit 2)."""


class DataError(Exception):
    """Missing or malformed input data files (exit 3)."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; defaults reproduce the headline quench:
    m = J = 1, dt = 0.1, 40 steps, split_xz noise at (p1, p2) = (0.01, 0.016).
    """

    m: float = 1.0
    J: float = 1.0
    dt: float = 0.1
    steps: int = 40
    mode: str = "analytic"
    preset: str = "split_xz"
    p1: float = 0.01
    p2: float = 0.016
    p_y: float = 0.0
    readout_flip: float | None = None
    realizations: int = 20
    shots: int = DEFAULT_SHOTS
    seed: int = 7
    out: str = "."

    def to_toml(self) -> str:
        """Canonical serialization: sorted keys, repr floats, None omitted."""
        lines = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                raise TypeError("no boolean config fields expected")
            if isinstance(value, float):
                lines.append(f"{f.name} = {value!r}")
            elif isinstance(value, int):
                lines.append(f"{f.name} = {value}")
            else:
                lines.append(f"{f.name} = {json.dumps(value)}")
        return "\n".join(lines) + "\n"


_FLOAT_FIELDS = {"m", "J", "dt", "p1", "p2", "p_y", "readout_flip"}
_INT_FIELDS = {"steps", "realizations", "shots", "seed"}
_STR_FIELDS = {"mode", "preset", "out"}


def _config_from_dict(data: dict) -> RunConfig:
    known = _FLOAT_FIELDS | _INT_FIELDS | _STR_FIELDS
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    coerced = {}
    for key, value in data.items():
        if key in _FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise UsageError(f"config key {key!r} must be a number, got {value!r}")
            coerced[key] = float(value)
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise UsageError(f"config key {key!r} must be an integer, got {value!r}")
            coerced[key] = value
        else:
            if not isinstance(value, str):
                raise UsageError(f"config key {key!r} must be a string, got {value!r}")
            coerced[key] = value
    return RunConfig(**coerced)


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise DataError(f"config is not valid TOML: {err}") from None
    return _config_from_dict(data)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        except OSError as err:
            raise DataError(f"cannot read config file: {err}") from None
    overrides = {}
    for key in ("m", "J", "dt", "steps", "mode", "preset", "p1", "p2", "p_y",
                "readout_flip", "realizations", "shots", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _model(cfg: RunConfig) -> ModelParams:
    try:
        return ModelParams(cfg.m, cfg.J)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _noise_fixed(cfg: RunConfig) -> dict:
    fixed = {}
    if cfg.preset != "split_xz" and cfg.p_y:
        fixed["p_y"] = cfg.p_y
    if cfg.readout_flip is not None:
        fixed["readout_flip"] = cfg.readout_flip
    return fixed


def _noise_model(cfg: RunConfig):
    try:
        return build_noise_model(cfg.preset, cfg.p1, cfg.p2, _noise_fixed(cfg))
    except ValueError as err:
        raise UsageError(str(err)) from None


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _emit(cfg: RunConfig, name: str, report: dict) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    with open(_out_path(cfg, name), "w") as fh:
        fh.write(text + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, args) -> int:
    spec = diagonalize(_model(cfg))
    report = {
        "m": cfg.m,
        "J": cfg.J,
        "eigenvalues": [float(e) for e in spec.energies],
        "parity": list(spec.parity),
        "a_g": spec.a_g,
        "b_g": spec.b_g,
        "p_g": spec.p_g,
        "a_gbar": spec.a_gbar,
        "b_gbar": spec.b_gbar,
        "p_gbar": spec.p_gbar,
    }
    _emit(cfg, "spectrum.json", report)
    return EXIT_OK


_SERIES_HEADER = "t,echo,overlap_e,overlap_ebar,overlap_gbar,phase,rate"


def _series_rows_analytic(cfg: RunConfig, p: ModelParams, times: np.ndarray):
    spec = diagonalize(p)
    series = analytic_loschmidt(p, times)
    hq = build_physical_hamiltonian(p.quenched())
    w, v = np.linalg.eigh(hq)
    coeff = v.conj().T @ spec.ground
    overlaps = np.empty((times.size, 3))
    for i, t in enumerate(times):
        psi = v @ (np.exp(-1j * w * t) * coeff)
        for col, k in enumerate((1, 2, 3)):  # psi_e, psi_ebar, psi_gbar
            overlaps[i, col] = abs(np.vdot(spec.states[:, k], psi)) ** 2
    rate = rate_function(series.echo, 2)[0]
    return [(times[i], series.echo[i], overlaps[i, 0], overlaps[i, 1],
             overlaps[i, 2], series.phase[i], rate[i]) for i in range(times.size)]


def _eigenstates_16(p: ModelParams):
    spec = diagonalize(p)
    return spec, [PHYSICAL_BASIS.embed(spec.states[:, k]) for k in range(4)]


def _series_rows_noiseless(cfg: RunConfig, p: ModelParams):
    spec, eig16 = _eigenstates_16(p)
    state = run_statevector(build_ground_prep(p))
    step = build_trotter_step(p.quenched(), cfg.dt)
    rows = []
    for k in range(cfg.steps + 1):
        if k:
            state = run_statevector(step, state)
        amp = complex(np.vdot(eig16[0], state.amps))
        echo = abs(amp) ** 2
        rows.append((k * cfg.dt, echo,
                     abs(np.vdot(eig16[1], state.amps)) ** 2,
                     abs(np.vdot(eig16[2], state.amps)) ** 2,
                     abs(np.vdot(eig16[3], state.amps)) ** 2,
                     math.atan2(amp.imag, amp.real),
                     rate_function(np.array([echo]), 2)[0][0]))
    return rows


def _series_rows_density(cfg: RunConfig, p: ModelParams, traj: Trajectory):
    spec, eig16 = _eigenstates_16(p)
    rows = []
    for t, rho in traj.entries:
        vals = [float(np.real(np.conj(v) @ rho.matrix @ v)) for v in eig16]
        vals = [min(max(x, 0.0), 1.0) for x in vals]
        rows.append((t, vals[0], vals[1], vals[2], vals[3], 0.0,
                     rate_function(np.array([vals[0]]), 2)[0][0]))
    return rows


def _write_series(cfg: RunConfig, rows) -> str:
    path = _out_path(cfg, "series.csv")
    with open(path, "w") as fh:
        fh.write(_SERIES_HEADER + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.12g}" for x in row) + "\n")
    _validate_series(path)
    return path


def _validate_series(path: str) -> None:
    """Schema, monotone time and value-range check on the emitted CSV."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != _SERIES_HEADER:
        raise DataError(f"{path}: bad header")
    prev_t = -math.inf
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 7:
            raise DataError(f"{path}: expected 7 columns, got {len(cells)}")
        vals = [float(c) for c in cells]
        if vals[0] <= prev_t:
            raise DataError(f"{path}: time column not strictly increasing")
        prev_t = vals[0]
        if any(not 0.0 <= v <= 1.0 + 1e-9 for v in vals[1:5]):
            raise DataError(f"{path}: overlap outside [0, 1]")
        if not -math.pi - 1e-9 <= vals[5] <= math.pi + 1e-9:
            raise DataError(f"{path}: phase outside (-pi, pi]")
        if not math.isfinite(vals[6]) or vals[6] < -1e-12:
            raise DataError(f"{path}: bad rate value")


def cmd_evolve(cfg: RunConfig, args) -> int:
    if cfg.mode not in EVOLVE_MODES:
        raise UsageError(f"unknown mode {cfg.mode!r}; choose from {', '.join(EVOLVE_MODES)}")
    if cfg.dt <= 0 or cfg.steps < 0:
        raise UsageError("need dt > 0 and steps >= 0")
    p = _model(cfg)
    times = np.arange(cfg.steps + 1) * cfg.dt
    traj = None
    if cfg.mode == "analytic":
        rows = _series_rows_analytic(cfg, p, times)
    elif cfg.mode == "trotter-noiseless":
        rows = _series_rows_noiseless(cfg, p)
    else:
        nm = _noise_model(cfg)
        program = build_quench_program(p, cfg.dt, cfg.steps)
        if cfg.mode == "trotter-noisy":
            traj = run_density_matrix(program, nm)
        else:
            traj = sample_trajectories(program, nm, realizations=cfg.realizations,
                                       seed=cfg.seed)
        rows = _series_rows_density(cfg, p, traj)
    path = _write_series(cfg, rows)
    written = [path]
    if traj is not None:
        tpath = _out_path(cfg, "trajectory.json")
        fitmod.save_trajectory(traj, tpath)
        written.append(tpath)
    if getattr(args, "svg", False):
        ts = [r[0] for r in rows]
        spath = _out_path(cfg, "series.svg")
        line_plot(spath, [
            ("echo", ts, [r[1] for r in rows]),
            ("overlap_gbar", ts, [r[4] for r in rows]),
            ("rate", ts, [r[6] for r in rows]),
        ], title=f"quench m={cfg.m} J={cfg.J} ({cfg.mode})", xlabel="t", ylabel="value")
        written.append(spath)
    _emit(cfg, "evolve.json", {"mode": cfg.mode, "rows": len(rows), "files": written})
    return EXIT_OK


def cmd_fit(cfg: RunConfig, args) -> int:
    if not args.target:
        raise UsageError("fit requires --target <trajectory.json>")
    rebuild = {"m": cfg.m, "J": cfg.J, "dt": cfg.dt, "steps": cfg.steps}
    try:
        target = fitmod.load_trajectory(args.target, params=rebuild)
    except OSError as err:
        raise DataError(f"cannot read target: {err}") from None
    except ValueError as err:
        raise DataError(str(err)) from None
    axes = ("p_x", "p_z") if cfg.preset == "abc_shared" else ("p_1", "p_2")
    fixed = {}
    if cfg.preset != "split_xz" and cfg.p_y:
        fixed["p_y"] = cfg.p_y
    try:
        grid = GridSpec(axes,
                        tuple(args.grid_start or (0.0, 0.0)),
                        tuple(args.grid_step or (1e-3, 1e-3)),
                        tuple(args.grid_count or (21, 21)),
                        fixed)
        surface = grid_sweep(grid, target, cfg.preset, k=args.k, workers=args.workers)
    except ValueError as err:
        raise UsageError(str(err)) from None
    result = locate_minimum(surface)
    cpath = _out_path(cfg, "surface.csv")
    fitmod.save_surface(surface, cpath)
    jpath = _out_path(cfg, "fit.json")
    fitmod.save_fit_result(result, jpath)
    if getattr(args, "svg", False):
        v1s, v2s = grid.axis_values(0), grid.axis_values(1)
        flat = int(np.argmin(surface.values))
        marker = (flat // surface.values.shape[1], flat % surface.values.shape[1])
        heatmap(_out_path(cfg, "surface.svg"), v1s, v2s, surface.values,
                title=f"averaged trace distance ({cfg.preset})",
                xlabel=axes[1], ylabel=axes[0], marker=marker)
    _emit(cfg, "fit_report.json", {
        "preset": cfg.preset,
        "k": args.k,
        "min": result.value,
        "params": result.params,
        "tie": result.tie,
        "near_cells": len(result.near_cells),
        "files": [cpath, jpath],
    })
    return EXIT_OK


def cmd_winding(cfg: RunConfig, args) -> int:
    j_lo, j_hi, nj = args.j_min, args.j_max, args.nj
    t_lo, t_hi, nt = args.t_min, args.t_max, args.nt
    if not (j_hi > j_lo > 0 and t_hi > t_lo >= 0 and nj >= 2 and nt >= 2):
        raise UsageError("need 0 < j-min < j-max, 0 <= t-min < t-max, nj/nt >= 2")
    j_values = np.linspace(j_lo, j_hi, nj)
    t_values = np.linspace(t_lo, t_hi, nt)
    field = analytic_phase_field(cfg.m, j_values, t_values)
    vortices = []
    undefined = []
    for i in range(nj - 1):
        for j in range(nt - 1):
            try:
                nu = winding_number(field, WindingLoop.plaquette(i, j))
            except UndefinedPhaseError:
                undefined.append({"i": i, "j": j,
                                  "J": float(j_values[i]), "t": float(t_values[j])})
                continue
            if nu != 0:
                vortices.append({"i": i, "j": j, "nu": nu,
                                 "J": float((j_values[i] + j_values[i + 1]) / 2),
                                 "t": float((t_values[j] + t_values[j + 1]) / 2)})
    report = {
        "m": cfg.m,
        "j_window": [j_lo, j_hi, nj],
        "t_window": [t_lo, t_hi, nt],
        "vortices": vortices,
        "undefined_cells": undefined,
        "total_winding": sum(v["nu"] for v in vortices),
    }
    _emit(cfg, "winding.json", report)
    return EXIT_OK


def cmd_export(cfg: RunConfig, args) -> int:
    if cfg.dt <= 0 or cfg.steps < 0:
        raise UsageError("need dt > 0 and steps >= 0")
    p = _model(cfg)
    written = []
    prep = build_ground_prep(p)
    ppath = _out_path(cfg, "ground_prep.qasm")
    with open(ppath, "w") as fh:
        fh.write(export_qasm(prep))
    written.append(ppath)
    step = build_trotter_step(p.quenched(), cfg.dt)
    if cfg.steps > 0:
        circuit = step.repeat(cfg.steps)
        tpath = _out_path(cfg, f"trotter_{cfg.steps}steps.qasm")
        with open(tpath, "w") as fh:
            fh.write(export_qasm(circuit))
        written.append(tpath)
    for path in written:
        with open(path) as fh:
            parsed = parse_qasm(fh.read())
        original = prep if path == ppath else circuit
        dev = float(np.abs(circuit_unitary(parsed) - circuit_unitary(original)).max())
        if dev > 1e-10:
            raise DataError(f"{path}: round-trip unitary deviation {dev:.2e}")
    report = {"files": written, "round_trip_checked": True}
    if getattr(args, "moment_report", False):
        per_step = moments(step, "figure_faithful").depth
        report["moments_per_step"] = per_step
        report["moments_total"] = moments(step.repeat(max(cfg.steps, 1)),
                                          "figure_faithful").depth
    _emit(cfg, "export.json", report)
    return EXIT_OK


def cmd_tomo(cfg: RunConfig, args) -> int:
    if cfg.mode not in TOMO_MODES:
        raise UsageError(f"unknown mode {cfg.mode!r}; choose from {', '.join(TOMO_MODES)}")
    if cfg.shots < 1:
        raise UsageError("shots must be >= 1")
    p = _model(cfg)
    prep = build_ground_prep(p)
    nm = _noise_model(cfg)
    if cfg.mode == "noiseless":
        rho = run_statevector(prep).density_matrix()
        flip = cfg.readout_flip or 0.0
    else:
        rho = run_density_matrix(prep, nm).states[-1]
        flip = nm.readout_probability
    tables = [simulate_readout(rho, setting, flip, cfg.shots, seed=[cfg.seed, idx])
              for idx, setting in enumerate(tomography_settings(4))]
    rho_hat = reconstruct_state(tables)
    counts_path = _out_path(cfg, "counts.json")
    with open(counts_path, "w") as fh:
        json.dump([t.to_json() for t in tables], fh, indent=1, sort_keys=True)
        fh.write("\n")
    rho_path = _out_path(cfg, "reconstructed.json")
    fitmod.save_trajectory(Trajectory((0.0,), (rho_hat,), 0.0, {"mode": cfg.mode}), rho_path)
    spec = diagonalize(p)
    report = {
        "mode": cfg.mode,
        "shots": cfg.shots,
        "readout_flip": flip,
        "trace_distance_to_true": trace_distance(rho_hat, rho),
        "fidelity_with_ground": fidelity(spec.ground_state(), rho_hat),
        "files": [counts_path, rho_path],
    }
    _emit(cfg, "tomo.json", report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="TOML config file (flags override it)")
    sub.add_argument("--seed", type=int, help="base RNG seed")
    sub.add_argument("--out", help="output directory (default '.')")
    sub.add_argument("--m", type=float, help="mass m")
    sub.add_argument("--J", type=float, help="hopping J")


def _add_noise(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", choices=("abc_shared", "split_xyz", "split_xz"))
    sub.add_argument("--p1", type=float, help="first noise axis value")
    sub.add_argument("--p2", type=float, help="second noise axis value")
    sub.add_argument("--p-y", dest="p_y", type=float, help="fixed Y-flip probability")
    sub.add_argument("--readout-flip", dest="readout_flip", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schwinger-dqpt",
        description="Noisy-circuit simulation of the two-site Z2-Schwinger mass quench.")
    cmds = parser.add_subparsers(dest="command", required=True)

    s = cmds.add_parser("spectrum", help="eigenvalues and ground-state amplitudes")
    _add_common(s)

    s = cmds.add_parser("evolve", help="Loschmidt echo and overlap time series")
    _add_common(s)
    _add_noise(s)
    s.add_argument("--mode", choices=EVOLVE_MODES)
    s.add_argument("--steps", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--realizations", type=int)
    s.add_argument("--svg", action="store_true", help="also write an SVG plot")

    s = cmds.add_parser("fit", help="noise-parameter grid sweep against a target")
    _add_common(s)
    _add_noise(s)
    s.add_argument("--target", help="target trajectory JSON file")
    s.add_argument("--steps", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--k", type=int, default=3, help="averaging depth of the objective")
    s.add_argument("--grid-start", type=float, nargs=2, metavar=("A", "B"))
    s.add_argument("--grid-step", type=float, nargs=2, metavar=("A", "B"))
    s.add_argument("--grid-count", type=int, nargs=2, metavar=("A", "B"))
    s.add_argument("--workers", type=int, help="worker processes for the sweep")
    s.add_argument("--svg", action="store_true")

    s = cmds.add_parser("winding", help="vortices of the analytic phase field")
    _add_common(s)
    s.add_argument("--j-min", type=float, default=0.9)
    s.add_argument("--j-max", type=float, default=1.1)
    s.add_argument("--nj", type=int, default=21)
    s.add_argument("--t-min", type=float, default=1.0)
    s.add_argument("--t-max", type=float, default=1.25)
    s.add_argument("--nt", type=int, default=26)

    s = cmds.add_parser("export", help="write circuits as OpenQASM 2.0")
    _add_common(s)
    s.add_argument("--steps", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--moment-report", action="store_true",
                   help="print figure_faithful moment counts")

    s = cmds.add_parser("tomo", help="tomography of the prepared ground state")
    _add_common(s)
    _add_noise(s)
    s.add_argument("--mode", choices=TOMO_MODES)
    s.add_argument("--shots", type=int)
    return parser


_HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "fit": cmd_fit,
    "winding": cmd_winding,
    "export": cmd_export,
    "tomo": cmd_tomo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _HANDLERS[args.command](cfg, args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
