"""
Configuration-driven entry point.

Configs are flat ``section.key = value`` lines with ``#`` comments; unknown
keys are rejected with their line number (silent misconfiguration is the
dominant failure mode of config-driven solvers).  Commands: run, pair,
equilibrium, remainder, trace.  Every output directory receives report.txt
with the fully resolved config, the seed, kernel constants, and the
command's results, so any run can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics
from .equilibrium import EquilibriumConfig, multistart_equilibria, solve_equilibrium
from .grid import Grid, build_grid, l2_norm, neumann_mode
from .io import read_field, write_field
from .kernels import KernelOp, KernelSpec, assemble_kernel
from .model import (
    ReactionSpec,
    balanced_cubic_reaction,
    bertozzi_reaction,
    logistic_reaction,
    oono_reaction,
    zero_reaction,
)
from .solvers import SolverError
from .tangent import dimension_bound, first_negative_trace, remainder_order
from .timestepper import SolverConfig, pair_run, run

COMMANDS = ("run", "pair", "equilibrium", "remainder", "trace")

CSV_HEADER = "t,mass,min_u,max_u,l2_norm,h1_seminorm,energy,dist_to_ref,clamp_events"

# key -> (type, default); str/int/float conversions are strict
_SCHEMA: dict[str, tuple[type, object]] = {
    "command.kind": (str, ""),
    "grid.dim": (int, 1),
    "grid.n": (int, 256),
    "grid.length": (float, 1.0),
    "kernel.family": (str, "gaussian"),
    "kernel.c": (float, 1.0),
    "kernel.lam": (float, 1.0),
    "kernel.hcut": (float, 0.25),
    "kernel.kd": (float, 1.0),
    "reaction.preset": (str, "none"),
    "reaction.alpha": (float, 1.0),
    "reaction.beta": (float, 1.0),
    "reaction.h": (float, 0.5),
    "reaction.sigma": (float, 1.0),
    "reaction.scale": (float, 1.0),
    "solver.dt": (float, 0.01),
    "solver.t_end": (float, 1.0),
    "solver.record_every": (int, 1),
    "solver.bound_tol": (float, 1e-8),
    "solver.clamp_policy": (str, "clamp_and_count"),
    "solver.cg_tol": (float, 1e-10),
    "solver.cg_max_iter": (int, 500),
    "init.kind": (str, "constant"),
    "init.value": (float, 0.5),
    "init.amplitude": (float, 0.1),
    "init.mode": (int, 1),
    "init.lo": (float, 0.0),
    "init.hi": (float, 1.0),
    "init.seed": (int, 0),
    "init.path": (str, ""),
    "init2.kind": (str, ""),
    "init2.value": (float, 0.5),
    "init2.amplitude": (float, 0.1),
    "init2.mode": (int, 1),
    "init2.lo": (float, 0.0),
    "init2.hi": (float, 1.0),
    "init2.seed": (int, 1),
    "init2.path": (str, ""),
    "output.directory": (str, "nlch_out"),
    "output.snapshot_every": (int, 0),
    "equilibrium.seed_values": (str, ""),
    "equilibrium.random_seeds": (int, 0),
    "equilibrium.eps_schedule": (str, "1,0.1,0.01,0.001,0"),
    "equilibrium.damping": (float, 0.5),
    "equilibrium.picard_tol": (float, 1e-10),
    "equilibrium.max_iter": (int, 10000),
    "equilibrium.residual_tol": (float, 1e-9),
    "equilibrium.dedup_tol": (float, 1e-6),
    "remainder.eps_list": (str, "1e-2,3e-3,1e-3,3e-4"),
    "remainder.t": (float, 0.5),
    "remainder.mode": (int, 1),
    "trace.n_max": (int, 10),
    "trace.t": (float, 3.0),
    "trace.ortho_every": (int, 10),
    "trace.transient": (float, 1.0),
    "trace.samples": (int, 3),
}


@dataclass
class RunConfig:
    """A validated, fully resolved configuration."""

    values: dict[str, object]
    command: str = ""

    def __getitem__(self, key: str):
        return self.values[key]

    def echo(self) -> str:
        lines = [f"{k} = {_fmt_value(v)}" for k, v in sorted(self.values.items())]
        return "\n".join(lines)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; unknown or malformed keys are errors."""
    values = dict((k, d) for k, (_, d) in _SCHEMA.items())
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        typ, _ = _SCHEMA[key]
        try:
            if typ is int:
                if "." in val or "e" in val.lower():
                    raise ValueError
                values[key] = int(val)
            elif typ is float:
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise ValueError(f"line {lineno}: key {key!r} needs a {typ.__name__}, got {val!r}") from None
    cfg = RunConfig(values=values, command=str(values["command.kind"]))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if v["solver.dt"] <= 0:
        raise ValueError("dt must be positive")
    if v["solver.t_end"] <= 0:
        raise ValueError("t_end must be positive")
    if v["grid.dim"] not in (1, 2):
        raise ValueError(f"unsupported dimension: {v['grid.dim']}")
    if v["grid.n"] < 8:
        raise ValueError("grid.n must be >= 8")
    if v["kernel.family"] not in ("gaussian", "mollifier", "newton", "zero"):
        raise ValueError(f"unknown kernel family: {v['kernel.family']!r}")
    if v["reaction.preset"] not in ("logistic", "bertozzi", "oono", "balanced_cubic", "none"):
        raise ValueError(f"unknown reaction preset: {v['reaction.preset']!r}")
    if v["init.kind"] not in ("constant", "cosine", "random", "file"):
        raise ValueError(f"unknown init kind: {v['init.kind']!r}")
    if v["init2.kind"] not in ("", "constant", "cosine", "random", "file"):
        raise ValueError(f"unknown init2 kind: {v['init2.kind']!r}")
    if cfg.command and cfg.command not in COMMANDS:
        raise ValueError(f"unknown command: {cfg.command!r}")
    if v["init.kind"] == "file" and not Path(str(v["init.path"])).exists():
        raise ValueError(f"init.path does not exist: {v['init.path']!r}")
    if v["init2.kind"] == "file" and not Path(str(v["init2.path"])).exists():
        raise ValueError(f"init2.path does not exist: {v['init2.path']!r}")


# -- scenario construction -----------------------------------------------------

def build_kernel_spec(cfg: RunConfig) -> KernelSpec:
    fam = cfg["kernel.family"]
    if fam == "zero":
        return KernelSpec(family="gaussian", c=0.0, lam=1.0)
    if fam == "gaussian":
        return KernelSpec(family="gaussian", c=cfg["kernel.c"], lam=cfg["kernel.lam"])
    if fam == "mollifier":
        return KernelSpec(family="mollifier", c=cfg["kernel.c"], hcut=cfg["kernel.hcut"])
    return KernelSpec(family="newton", dim=cfg["grid.dim"], kd=cfg["kernel.kd"])


def build_reaction(cfg: RunConfig, grid: Grid) -> ReactionSpec:
    preset = cfg["reaction.preset"]
    if preset == "logistic":
        return logistic_reaction(grid, cfg["reaction.alpha"])
    if preset == "bertozzi":
        return bertozzi_reaction(grid, cfg["reaction.beta"], cfg["reaction.h"])
    if preset == "oono":
        return oono_reaction(grid, cfg["reaction.sigma"])
    if preset == "balanced_cubic":
        return balanced_cubic_reaction(grid, cfg["reaction.scale"])
    return zero_reaction(grid)


def build_initial(cfg: RunConfig, grid: Grid, section: str = "init",
                  seed_override: int | None = None) -> np.ndarray:
    kind = cfg[f"{section}.kind"]
    if kind == "constant":
        u0 = np.full(grid.num_nodes, float(cfg[f"{section}.value"]))
    elif kind == "cosine":
        mode = (cfg[f"{section}.mode"],) * grid.dim
        u0 = cfg[f"{section}.value"] + cfg[f"{section}.amplitude"] * neumann_mode(
            grid, mode if grid.dim > 1 else mode[0])
    elif kind == "random":
        seed = cfg[f"{section}.seed"] if seed_override is None else seed_override
        rng = np.random.default_rng(int(seed))
        u0 = rng.uniform(cfg[f"{section}.lo"], cfg[f"{section}.hi"], grid.num_nodes)
    elif kind == "file":
        fgrid, u0, _ = read_field(cfg[f"{section}.path"])
        if fgrid.num_nodes != grid.num_nodes or fgrid.dim != grid.dim:
            raise ValueError(f"{section}.path field does not match the configured grid")
    else:
        raise ValueError(f"{section} section is not configured")
    if np.min(u0) < 0.0 or np.max(u0) > 1.0:
        raise ValueError(f"{section} initial datum leaves [0,1]")
    return u0


@dataclass
class Scenario:
    grid: Grid
    op: KernelOp
    spec: ReactionSpec
    solver_cfg: SolverConfig
    u0: np.ndarray
    u0_second: np.ndarray | None = None
    seed: int | None = None


def build_scenario(cfg: RunConfig, seed_override: int | None = None) -> Scenario:
    grid = build_grid(cfg["grid.dim"], cfg["grid.n"], cfg["grid.length"])
    op = assemble_kernel(build_kernel_spec(cfg), grid)
    spec = build_reaction(cfg, grid)
    solver_cfg = SolverConfig(
        dt=cfg["solver.dt"],
        t_end=cfg["solver.t_end"],
        record_every=cfg["solver.record_every"],
        bound_tol=cfg["solver.bound_tol"],
        clamp_policy=cfg["solver.clamp_policy"],
        cg_tol=cfg["solver.cg_tol"],
        cg_max_iter=cfg["solver.cg_max_iter"],
    )
    u0 = build_initial(cfg, grid, "init", seed_override)
    u0_second = None
    if cfg["init2.kind"]:
        second_seed = None if seed_override is None else seed_override + 1
        u0_second = build_initial(cfg, grid, "init2", second_seed)
    seed = cfg["init.seed"] if seed_override is None else seed_override
    return Scenario(grid=grid, op=op, spec=spec, solver_cfg=solver_cfg,
                    u0=u0, u0_second=u0_second, seed=int(seed))


# -- output writers -------------------------------------------------------------

def _write_series_csv(path: Path, rec) -> None:
    arrays = rec.as_arrays()
    cols = CSV_HEADER.split(",")
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        n = len(arrays["t"])
        for i in range(n):
            row = []
            for c in cols:
                val = arrays[c][i]
                row.append(str(int(val)) if c == "clamp_events" else format(float(val), ".17g"))
            fh.write(",".join(row) + "\n")


def _trailing_rate(times, values) -> str:
    """Fitted exponential rate over the trailing half, or the floor report."""
    times = np.asarray(times)
    if len(times) < 2:
        return "series too short to fit"
    window = (0.5 * (times[0] + times[-1]), times[-1])
    try:
        rate, r2 = diagnostics.fit_exponential_rate(times, values, window)
        return f"rate = {rate:.6g} (r^2 = {r2:.6f}) on window [{window[0]:g}, {window[1]:g}]"
    except ValueError as exc:
        return f"not fitted: {exc}"


class Report:
    def __init__(self):
        self.lines: list[str] = []
        self.failures: list[str] = []

    def add(self, text: str = "") -> None:
        self.lines.append(text)

    def check(self, name: str, ok: bool, detail: str) -> None:
        self.add(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            self.failures.append(name)

    def write(self, path: Path) -> None:
        path.write_text("\n".join(self.lines) + "\n")


def execute(cfg: RunConfig, out_dir, command: str | None = None,
            seed_override: int | None = None) -> int:
    """Run a command, write series/snapshots/report, return the exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    command = command or cfg.command
    if not command:
        raise ValueError("no command given (CLI argument or command.kind)")
    if cfg.command and command != cfg.command:
        raise ValueError(
            f"CLI command {command!r} conflicts with config command.kind {cfg.command!r}")
    if command not in COMMANDS:
        raise ValueError(f"unknown command: {command!r}")

    report = Report()
    report.add(f"nlch {command}")
    report.add()
    try:
        scen = build_scenario(cfg, seed_override)
    except (ValueError, SolverError) as exc:
        report.add(f"configuration error: {exc}")
        report.write(out / "report.txt")
        return 2
    report.add(f"seed = {scen.seed}")
    report.add(f"kernel constants: r2_est = {scen.op.r2_est:.6g}, "
               f"rinf_est = {scen.op.rinf_est:.6g}, k2_sup = {scen.op.k2_sup:.6g}")
    if scen.op.spec.family == "newton":
        report.add(f"newton constant kd = {scen.op.spec.kd:.6g}")
    report.add()

    try:
        handler = {
            "run": _cmd_run,
            "pair": _cmd_pair,
            "equilibrium": _cmd_equilibrium,
            "remainder": _cmd_remainder,
            "trace": _cmd_trace,
        }[command]
        handler(cfg, scen, out, report)
        status = 1 if report.failures else 0
    except (SolverError, ValueError) as exc:
        report.add(f"aborted: {exc}")
        status = 2

    report.add()
    report.add("resolved configuration:")
    report.add(cfg.echo())
    report.write(out / "report.txt")
    return status


def _snapshot(out: Path, scen: Scenario, rec, cfg: RunConfig) -> None:
    every = int(cfg["output.snapshot_every"])
    if every < 1 or rec.states is None:
        return
    for idx in range(0, len(rec.states), every):
        write_field(out / f"u_{idx:06d}.nlch", scen.grid, rec.states[idx], idx * rec.dt)


def _cmd_run(cfg: RunConfig, scen: Scenario, out: Path, report: Report) -> None:
    store = int(cfg["output.snapshot_every"]) > 0
    state, rec = run(scen.u0, scen.spec, scen.op, scen.solver_cfg, store_states=store)
    _write_series_csv(out / "series.csv", rec)
    _snapshot(out, scen, rec, cfg)
    write_field(out / "u_final.nlch", scen.grid, state.u, state.t)

    arrays = rec.as_arrays()
    report.add(f"steps = {state.step_count}, t_end = {state.t:g}, "
               f"clamp events = {state.clamp_events}")
    report.add(f"final mass = {arrays['mass'][-1]:.12g}")
    lo, hi = float(np.min(arrays["min_u"])), float(np.max(arrays["max_u"]))
    report.check("phase bounds", lo >= -1e-8 and hi <= 1.0 + 1e-8,
                 f"min u = {lo:.3e}, max u = {hi:.6f}")
    resid = diagnostics.mass_balance_residual(rec)
    report.check("mass identity", resid <= 1e-12, f"per-step residual = {resid:.3e}")
    if scen.spec.lipschitz_s == 0.0:
        d_energy = np.diff(arrays["energy"])
        report.check("energy monotone (g = 0)", bool(np.all(d_energy <= 1e-10)),
                     f"max energy increment = {np.max(d_energy) if len(d_energy) else 0.0:.3e}")
    grad_tail = arrays["h1_seminorm"][arrays["t"] >= 1.0]
    if grad_tail.size:
        report.add(f"gradient norm bound for t >= 1: {np.max(grad_tail):.6g}")
    report.add(f"l2 norm decay: {_trailing_rate(arrays['t'], arrays['l2_norm'])}")


def _cmd_pair(cfg: RunConfig, scen: Scenario, out: Path, report: Report) -> None:
    if scen.u0_second is None:
        raise ValueError("pair command needs an init2 section")
    state, rec = run(scen.u0, scen.spec, scen.op, scen.solver_cfg)
    _write_series_csv(out / "series.csv", rec)
    pair = pair_run(scen.u0, scen.u0_second, scen.spec, scen.op, scen.solver_cfg)
    with open(out / "pair_distance.csv", "w", newline="\n") as fh:
        fh.write("t,distance\n")
        for t, d in zip(pair.times, pair.dist):
            fh.write(f"{format(float(t), '.17g')},{format(float(d), '.17g')}\n")
    report.add(f"initial distance = {pair.dist[0]:.6g}, final distance = {pair.dist[-1]:.6g}")
    positive = pair.dist > 0
    if np.all(positive):
        slope = np.polyfit(pair.times, np.log(pair.dist), 1)[0]
        report.add(f"fitted continuous-dependence constant C = {slope:.6g} per unit time")
        # the first quarter is a transient (fast modes of the initial
        # difference die first); linearity is judged on the remainder
        t0 = pair.times[0] + 0.25 * (pair.times[-1] - pair.times[0])
        sel = pair.times >= t0
        frac = diagnostics.linear_fit_residual_fraction(pair.times[sel],
                                                        np.log(pair.dist[sel]))
        report.check("no super-exponential growth (post-transient)", frac <= 0.10,
                     f"linear-fit residual fraction = {frac:.3f}")
        report.add(f"distance decay: {_trailing_rate(pair.times, pair.dist)}")
    else:
        report.add("distance hit zero; trajectories coincide")


def _cmd_equilibrium(cfg: RunConfig, scen: Scenario, out: Path, report: Report) -> None:
    eq_cfg = EquilibriumConfig(
        eps_schedule=tuple(float(s) for s in str(cfg["equilibrium.eps_schedule"]).split(",")),
        damping=cfg["equilibrium.damping"],
        picard_tol=cfg["equilibrium.picard_tol"],
        max_iter=cfg["equilibrium.max_iter"],
        residual_tol=cfg["equilibrium.residual_tol"],
    )
    seeds: list[np.ndarray] = []
    sv = str(cfg["equilibrium.seed_values"]).strip()
    if sv:
        for c in sv.split(","):
            seeds.append(np.full(scen.grid.num_nodes, float(c)))
    n_random = int(cfg["equilibrium.random_seeds"])
    base_seed = scen.seed if scen.seed is not None else 0
    for k in range(n_random):
        rng = np.random.default_rng(base_seed + k)
        seeds.append(rng.uniform(cfg["init.lo"], cfg["init.hi"], scen.grid.num_nodes))
    if not seeds:
        seeds.append(scen.u0)

    results = multistart_equilibria(seeds, scen.spec, scen.op, eq_cfg,
                                    dedup_tol=cfg["equilibrium.dedup_tol"])
    report.add(f"seeds = {len(seeds)}, distinct converged equilibria = {len(results)}")
    for i, res in enumerate(results):
        write_field(out / f"equilibrium_{i:02d}.nlch", scen.grid, res.u, 0.0)
        report.check(
            f"equilibrium {i} certified",
            res.certified and float(np.min(res.u)) >= -1e-8
            and float(np.max(res.u)) <= 1.0 + 1e-8,
            f"residual = {res.residual:.3e}, mass = {np.mean(res.u):.6g}, "
            f"iterations = {res.iterations}, mass defect = {res.mass_defect:.3e}",
        )


def _cmd_remainder(cfg: RunConfig, scen: Scenario, out: Path, report: Report) -> None:
    eps_list = [float(s) for s in str(cfg["remainder.eps_list"]).split(",")]
    mode = int(cfg["remainder.mode"])
    direction = neumann_mode(scen.grid, (mode,) * scen.grid.dim
                             if scen.grid.dim > 1 else mode)
    study = remainder_order(scen.u0, direction, eps_list, scen.spec, scen.op,
                            scen.solver_cfg, t=cfg["remainder.t"])
    report.add(f"tangent remainder study at t = {cfg['remainder.t']:g}, "
               f"direction = cosine mode {mode}")
    for e, r in zip(study.eps, study.remainders):
        report.add(f"  eps = {e:.3e}   remainder = {r:.6e}")
    report.add(f"result: {study}")


def _cmd_trace(cfg: RunConfig, scen: Scenario, out: Path, report: Report) -> None:
    n_max = int(cfg["trace.n_max"])
    samples = max(1, int(cfg["trace.samples"]))
    base_seed = scen.seed if scen.seed is not None else 0
    curves = []
    for k in range(samples):
        if k == 0:
            u0 = scen.u0
        else:
            rng = np.random.default_rng(base_seed + k)
            u0 = rng.uniform(cfg["init.lo"], cfg["init.hi"], scen.grid.num_nodes)
        scan = dimension_bound(u0, n_max, cfg["trace.t"], scen.spec, scen.op,
                               scen.solver_cfg, ortho_every=cfg["trace.ortho_every"],
                               transient=cfg["trace.transient"])
        curves.append(scan.traces)
    # the trace functional is a sup over initial data: take the worst case
    traces = np.max(np.vstack(curves), axis=0) if curves else np.empty(0)
    n_bound = first_negative_trace(traces)
    report.add(f"trace curve over {samples} initial data (worst case), "
               f"time average on [{cfg['trace.transient']:g}, {cfg['trace.t']:g}]:")
    for n in range(n_max):
        report.add(f"  n = {n + 1:3d}   trace = {traces[n]:.6e}")
    bound_str = str(n_bound) if n_bound is not None else f"none <= {n_max}"
    report.add(f"attractor dimension bound N = {bound_str}")
    report.check("trace negativity reached", n_bound is not None,
                 f"N = {bound_str}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlch",
        description="Nonlocal Cahn-Hilliard laboratory: runs, pair studies, "
                    "equilibria, tangent remainders, and trace-based dimension bounds.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a section.key = value config file")
    parser.add_argument("--out", default=None, help="output directory (default from config)")
    parser.add_argument("--seed", type=int, default=None, help="override the init seed")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out if args.out is not None else cfg["output.directory"]
    try:
        status = execute(cfg, out_dir, command=args.command, seed_override=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if status != 0:
        print(f"nlch {args.command}: finished with status {status} "
              f"(see {Path(out_dir) / 'report.txt'})", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
