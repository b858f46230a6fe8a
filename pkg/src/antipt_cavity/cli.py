"""Command-line front end producing deterministic CSV tables.

Usage::

    antipt-cavity <command> [--key value ...] [--config path] [--out path]

Exit status is 0 on success, 1 on usage errors and 2 on physics or numerical
failures.
"""

from __future__ import annotations

import argparse
import cmath
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from . import checks, dynamics, nonhermitian, numerics, polaritons, scattering
from .model import CavityConfig, build_cavity, build_dimer, omega_from_splitting
from .scattering import Branch, SweepGrid

log = logging.getLogger("antipt_cavity")

COMMANDS = (
    "mirror-spectrum",
    "r0-curve",
    "phase-diagram",
    "supermodes",
    "supermodes-vs-r0",
    "coupling-map",
    "coupling-vs-w",
    "eta-curve",
    "transmission",
    "polaritons",
    "linewidth-scan",
    "dynamics",
    "validate",
)

# (min, max, count) used when the grid is not given explicitly
DEFAULT_GRIDS = {
    "mirror-spectrum": (-5.0, 5.0, 1001),
    "r0-curve": (0.0, 8.0, 801),
    "phase-diagram": (-4.8, 4.8, 961),
    "supermodes-vs-r0": (0.01, 1.0, 100),
    "coupling-map": (0.005, 0.995, 199),
    "coupling-vs-w": (0.01, 5.99, 300),
    "eta-curve": (0.01, 1.0, 100),
    "transmission": (-1.5, 1.5, 3001),
    "polaritons": (0.01, 3.99, 200),
    "linewidth-scan": (0.01, 0.5, 50),
}

HELP = {
    "omega": "direct coupling inside each mirror dimer (default 0)",
    "gamma": "probe-atom waveguide decay rate (default 0.2)",
    "delta_omega": "probe detuning from the mirror atoms (default 0)",
    "gamma_prime": "free-space loss applied to every atom (default 0)",
    "x_p": "probe position inside the cavity in wavelengths (default 0.25)",
    "grid_min": "lower end of the swept variable (command-specific default)",
    "grid_max": "upper end of the swept variable (command-specific default)",
    "grid_count": "number of grid points (command-specific default)",
    "t_max": "evolution time for dynamics (default 60)",
    "dt": "time step for dynamics (default 0.005)",
    "method": "dynamics propagator: pure or lindblad (default pure)",
    "transfer_threshold": "first-transfer level counted as efficient in dynamics (default 0.8)",
    "out": "output CSV path (default stdout)",
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    omega: float = 0.0
    gamma: float = 0.2
    delta_omega: float = 0.0
    gamma_prime: float = 0.0
    x_p: float = 0.25
    grid_min: float | None = None
    grid_max: float | None = None
    grid_count: int | None = None
    t_max: float = 60.0
    dt: float = 0.005
    method: str = "pure"
    transfer_threshold: float = 0.8
    out: str | None = None

    def grid(self) -> SweepGrid:
        lo, hi, n = DEFAULT_GRIDS[self.command]
        return SweepGrid(
            lo if self.grid_min is None else self.grid_min,
            hi if self.grid_max is None else self.grid_max,
            n if self.grid_count is None else self.grid_count,
        )

    def cavity(self) -> CavityConfig:
        return CavityConfig(
            omega=self.omega,
            probe_decay=self.gamma,
            probe_detuning=self.delta_omega,
            free_space_decay=self.gamma_prime,
            probe_position=self.x_p,
            include_probe=True,
        )

    def resolved(self) -> dict:
        data = asdict(self)
        del data["out"]
        if self.command in DEFAULT_GRIDS:
            g = self.grid()
            data.update(grid_min=g.min, grid_max=g.max, grid_count=g.count)
        return data


@dataclass
class ResultTable:
    header: list[str]
    rows: list[list[float]]
    metadata: dict
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["# " + json.dumps(self.metadata, sort_keys=True)]
        if self.summary:
            lines.append("# summary " + json.dumps(self.summary, sort_keys=True))
        lines.append(",".join(self.header))
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("row length does not match header")
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value} in result table")
    if value == 0:
        value = 0.0  # no "-0"
    return f"{value:.12g}"


_PARAM_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, value) -> object:
    if key in ("command", "method", "out"):
        if not isinstance(value, str):
            raise UsageError(f"parameter '{key}' must be a string")
        return value
    kind = int if key == "grid_count" else float
    if isinstance(value, bool):
        raise UsageError(f"parameter '{key}' must be numeric, got {value!r}")
    try:
        converted = kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"parameter '{key}' must be numeric, got {value!r}") from None
    if kind is int and isinstance(value, float) and value != converted:
        raise UsageError(f"parameter '{key}' must be an integer, got {value!r}")
    if kind is float and not math.isfinite(converted):
        raise UsageError(f"parameter '{key}' must be finite")
    return converted


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="antipt-cavity",
        description="Reproduce the atom-dimer cavity tables. Rates in units of the "
        "mirror decay rate, positions in resonant wavelengths.",
    )
    parser.add_argument("command_pos", nargs="?", metavar="command", help=", ".join(COMMANDS))
    parser.add_argument("--command", dest="command", help="alternative to the positional command")
    parser.add_argument("--config", help="flat JSON object with parameter values")
    for key, text in HELP.items():
        parser.add_argument("--" + key.replace("_", "-"), "--" + key, dest=key, help=text)
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    args = _build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a flat JSON object")
        unknown = sorted(set(loaded) - set(_PARAM_TYPES))
        if unknown:
            raise UsageError(f"unknown parameter '{unknown[0]}' in config file")
        values.update(loaded)

    if args.command_pos and args.command and args.command_pos != args.command:
        raise UsageError("conflicting commands given")
    for key in _PARAM_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if args.command_pos:
        values["command"] = args.command_pos

    values = {k: (None if v is None else _convert(k, v)) for k, v in values.items()}
    if "command" not in values:
        raise UsageError("missing required parameter 'command'")
    if values["command"] not in COMMANDS:
        raise UsageError(f"unknown command '{values['command']}'")
    if values.get("method", "pure") not in ("pure", "lindblad"):
        raise UsageError("parameter 'method' must be 'pure' or 'lindblad'")
    config = RunConfig(**values)
    try:
        if config.command in DEFAULT_GRIDS:
            config.grid()
        config.cavity()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return config


# figure recipes ---------------------------------------------------------------


def _mirror_spectrum(cfg: RunConfig) -> ResultTable:
    rows = []
    for p in scattering.sweep(build_dimer(cfg.omega), cfg.grid()):
        rows.append([p.delta, p.R, p.T, p.phase_r])
    return ResultTable(["delta", "R", "T", "arg_r"], rows, cfg.resolved())


def _r0_curve(cfg: RunConfig) -> ResultTable:
    rows = []
    for w in cfg.grid().values:
        numeric = scattering.scatter(build_dimer(omega_from_splitting(w)), 0.0).R
        rows.append([w, scattering.r0_closed(w), numeric])
    return ResultTable(["W", "R0", "R0_scattering"], rows, cfg.resolved())


def _phase_diagram(cfg: RunConfig) -> ResultTable:
    rows = []
    for w in cfg.grid().values:
        values = numerics.eig(nonhermitian.build_hc(omega_from_splitting(w))).values
        rows.append([w, *values.real, *values.imag])
    header = ["W"] + [f"reE{k}" for k in range(1, 5)] + [f"imE{k}" for k in range(1, 5)]
    return ResultTable(header, rows, cfg.resolved())


def _supermodes(cfg: RunConfig) -> ResultTable:
    modes = nonhermitian.supermodes(cfg.omega)
    rows = []
    for label, mode in (
        (1, modes.psi_minus),
        (2, modes.psi_plus),
        (3, modes.h2_modes[0]),
        (4, modes.h2_modes[1]),
    ):
        rows.append([label, mode.energy.real, mode.energy.imag, mode.decay, mode.condition])
    return ResultTable(
        ["mode", "reE", "imE", "decay", "condition"],
        rows,
        cfg.resolved(),
        {"protected": modes.protected, "at_exceptional_point": modes.at_exceptional_point},
    )


def _supermodes_vs_r0(cfg: RunConfig) -> ResultTable:
    rows = []
    for r0 in cfg.grid().values:
        w = scattering.invert_r0(r0, Branch.TWO_PEAK)
        modes = nonhermitian.supermodes(omega_from_splitting(w))
        rows.append(
            [
                r0,
                w,
                modes.psi_minus.energy.real,
                modes.gamma_minus,
                modes.psi_plus.energy.real,
                modes.gamma_plus,
            ]
        )
    header = ["R0", "W", "reE_minus", "gamma_minus", "reE_plus", "gamma_plus"]
    return ResultTable(header, rows, cfg.resolved())


def _coupling_map(cfg: RunConfig) -> ResultTable:
    rows = [
        [x, g.real, g.imag, abs(g)]
        for x, g in nonhermitian.coupling_vs_position(cfg.omega, cfg.gamma, cfg.grid())
    ]
    return ResultTable(["x_p", "re_g_r", "im_g_r", "abs_g_r"], rows, cfg.resolved())


def _coupling_vs_w(cfg: RunConfig) -> ResultTable:
    rows = []
    base = replace(cfg.cavity(), free_space_decay=0.0)
    for w in cfg.grid().values:
        c = nonhermitian.probe_couplings(replace(base, omega=omega_from_splitting(w)))
        rows.append(
            [w, c.g_r.real, c.g_r.imag, abs(c.g_r), cmath.phase(c.g_r), math.sqrt(cfg.gamma * w)]
        )
    header = ["W", "re_g_r", "im_g_r", "abs_g_r", "arg_g_r", "sqrt_gamma_W"]
    return ResultTable(header, rows, cfg.resolved())


def _eta_curve(cfg: RunConfig) -> ResultTable:
    rows = []
    for r0 in cfg.grid().values:
        rows.append(
            [
                r0,
                scattering.invert_r0(r0, Branch.SINGLE_PEAK),
                nonhermitian.coupling_factor_from_r0(r0, Branch.SINGLE_PEAK),
                scattering.invert_r0(r0, Branch.TWO_PEAK),
                nonhermitian.coupling_factor_from_r0(r0, Branch.TWO_PEAK),
            ]
        )
    header = ["R0", "W_single", "eta_single", "W_two", "eta_two"]
    return ResultTable(header, rows, cfg.resolved())


def _transmission(cfg: RunConfig) -> ResultTable:
    chain = build_cavity(cfg.cavity())
    rows = [[p.delta, p.T, p.R, p.phase_t, p.phase_r] for p in scattering.sweep(chain, cfg.grid())]
    return ResultTable(["delta", "T", "R", "arg_t", "arg_r"], rows, cfg.resolved())


def _polaritons(cfg: RunConfig) -> ResultTable:
    rows = []
    base = cfg.cavity()
    for w in cfg.grid().values:
        spec = polaritons.polariton_spectrum(replace(base, omega=omega_from_splitting(w)))
        rows.append([w, *spec.energies.real, *spec.energies.imag, spec.n_dark])
    header = ["W"] + [f"reE{k}" for k in range(1, 4)] + [f"imE{k}" for k in range(1, 4)] + ["n_dark"]
    return ResultTable(header, rows, cfg.resolved())


def _linewidth_scan(cfg: RunConfig) -> ResultTable:
    scan = polaritons.linewidth_vs_gamma(
        cfg.omega, cfg.grid(), probe_detuning=cfg.delta_omega, free_space_decay=cfg.gamma_prime
    )
    w = 2 * (cfg.omega + 1)
    rows = [
        [g, lw, math.log(max(abs(lw), 1e-300)), math.sqrt(g * w)] for g, lw in scan.points
    ]
    return ResultTable(
        ["gamma", "linewidth", "ln_linewidth", "sqrt_gamma_W"],
        rows,
        cfg.resolved(),
        {"gamma_min": scan.gamma_min, "linewidth_min": scan.linewidth_min},
    )


def _dynamics(cfg: RunConfig) -> ResultTable:
    traj = dynamics.rabi_experiment(
        replace(cfg.cavity(), free_space_decay=0.0), cfg.gamma_prime, cfg.t_max, cfg.dt, cfg.method
    )
    rows = []
    for p in traj:
        probe = p.populations[4]
        rows.append([p.time, probe, p.total_excitation - probe, p.total_excitation, *p.populations[:4]])
    header = ["time", "probe", "mirrors", "total", "p1", "p2", "p3", "p4"]
    try:
        rabi = dynamics.analyze_rabi(traj)
    except ValueError:
        summary = {}  # too short for an oscillation analysis
    else:
        summary = {
            "frequency": rabi.frequency,
            "envelope_rate": rabi.envelope_rate,
            "first_transfer": rabi.first_transfer,
            "efficient_transfer": rabi.first_transfer > cfg.transfer_threshold,
        }
    return ResultTable(header, rows, cfg.resolved(), summary)


RECIPES: dict[str, Callable[[RunConfig], ResultTable]] = {
    "mirror-spectrum": _mirror_spectrum,
    "r0-curve": _r0_curve,
    "phase-diagram": _phase_diagram,
    "supermodes": _supermodes,
    "supermodes-vs-r0": _supermodes_vs_r0,
    "coupling-map": _coupling_map,
    "coupling-vs-w": _coupling_vs_w,
    "eta-curve": _eta_curve,
    "transmission": _transmission,
    "polaritons": _polaritons,
    "linewidth-scan": _linewidth_scan,
    "dynamics": _dynamics,
}


def run(config: RunConfig, stdout=None) -> ResultTable | None:
    """Execute one command and write its output; ``validate`` returns None."""
    stdout = stdout or sys.stdout
    if config.command == "validate":
        results = checks.run_checks()
        for name, ok, measured, tol in results:
            stdout.write(f"{'PASS' if ok else 'FAIL'} {name} {measured:.3e} {tol:.1e}\n")
        if not all(ok for _, ok, _, _ in results):
            raise ArithmeticError("one or more validation checks failed")
        return None

    table = RECIPES[config.command](config)
    text = table.to_csv()
    if config.out is None:
        stdout.write(text)
        return table
    directory = os.path.dirname(os.path.abspath(config.out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".antipt-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, config.out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return table


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"antipt-cavity: usage error: {exc}\n")
        return 1
    try:
        run(config)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"antipt-cavity {config.command}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
