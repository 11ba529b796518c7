"""Command-line interface: simulate, tune, plots.

Exit codes: 0 success, 1 runtime failure (divergence, infeasible start),
2 configuration error.
"""

from __future__ import annotations

import csv
import os
import sys

import click

from . import config as config_mod
from . import tuner as tuner_mod
from .errors import DivergenceError, InvalidParameterError, QuadArmError
from .sim import COLUMNS, TraceLog, run

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


@click.group()
def main():
    """Quadrotor-manipulator simulator, ADRC control stack and gain tuner."""


def _load_config(path):
    try:
        return config_mod.load(path)
    except config_mod.ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config; omit for the stock tracking scenario.")
@click.option("--out", "out_path", type=click.Path(), default="trace.csv",
              show_default=True, help="Output CSV trace.")
@click.option("--seed", type=int, default=None,
              help="Reserved; the simulation is deterministic.")
def simulate(config_path, out_path, seed):
    """Run one scenario and write the trace log as CSV."""
    cfg = _load_config(config_path)
    try:
        trace = run(cfg.scenario, cfg.params, cfg.dist_params, cfg.gains)
    except DivergenceError as exc:
        click.echo(f"simulation diverged at t={exc.time:.4f} s", err=True)
        sys.exit(EXIT_RUNTIME)
    trace.to_csv(out_path)
    click.echo(f"wrote {len(trace)} records to {out_path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config with a tuner section.")
@click.option("--out", "out_path", type=click.Path(), default="tuned.yaml",
              show_default=True, help="Output config with the tuned gains.")
@click.option("--seed", type=int, default=None,
              help="Reserved; the optimizer is deterministic.")
def tune(config_path, out_path, seed):
    """Optimize the controller gains against the configured scenario."""
    cfg = _load_config(config_path)
    problem = cfg.tune_problem()
    try:
        initial = cfg.tune_initial()
        result = tuner_mod.tune(problem, initial, cfg.tuner_options)
    except config_mod.ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    except InvalidParameterError as exc:
        click.echo(f"tuning failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)

    tuned = config_mod.config_with_gains(cfg, result.vector, cfg.tuner_layout)
    config_mod.dump(tuned, out_path)

    history_path = os.path.splitext(out_path)[0] + "_history.csv"
    layout = (tuner_mod.SHARED_LAYOUT if cfg.tuner_layout == "shared"
              else tuner_mod.PER_SUBSYSTEM_LAYOUT)
    with open(history_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cost", *layout])
        for i, (vec, cost) in enumerate(result.history):
            writer.writerow([i, repr(cost), *[repr(float(v)) for v in vec]])

    click.echo(f"final cost {result.cost:.6g} after {result.iterations} iterations "
               f"({'converged' if result.converged else 'iteration limit'})")
    click.echo(f"wrote {out_path} and {history_path}")


# each entry: (script name, plotted columns, y-axis label)
FIGURE_SET = [
    ("openloop_altitude", ["z"], "altitude [m]"),
    ("tracking_roll", ["ref_roll", "phi", "x1_hat_roll"], "roll [rad]"),
    ("tracking_pitch", ["ref_pitch", "theta", "x1_hat_pitch"], "pitch [rad]"),
    ("tracking_yaw", ["ref_yaw", "psi", "x1_hat_yaw"], "yaw [rad]"),
    ("tracking_altitude", ["ref_z", "z", "x1_hat_altitude"], "altitude [m]"),
    ("disturbance_roll", ["f_hat_roll"], "estimated disturbance"),
    ("disturbance_pitch", ["f_hat_pitch"], "estimated disturbance"),
    ("disturbance_yaw", ["f_hat_yaw"], "estimated disturbance"),
    ("disturbance_altitude", ["f_hat_altitude"], "estimated disturbance"),
    ("control_roll", ["u_roll"], "control input"),
    ("control_pitch", ["u_pitch"], "control input"),
    ("control_yaw", ["u_yaw"], "control input"),
    ("control_altitude", ["u_altitude"], "control input"),
]


@main.command()
@click.argument("trace_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default="plots",
              show_default=True, help="Directory for the plot scripts.")
def plots(trace_path, out_dir):
    """Emit one gnuplot script per figure class from a trace CSV."""
    try:
        trace = TraceLog.from_csv(trace_path)
    except (QuadArmError, ValueError) as exc:
        click.echo(f"cannot read trace: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    if not trace.rows:
        click.echo("trace contains no records", err=True)
        sys.exit(EXIT_RUNTIME)

    needed = {"t"} | {c for _, cols, _ in FIGURE_SET for c in cols}
    missing = sorted(needed - set(trace.columns))
    if missing:
        click.echo("trace is missing columns: " + ", ".join(missing), err=True)
        sys.exit(EXIT_RUNTIME)

    os.makedirs(out_dir, exist_ok=True)
    t_idx = trace.columns.index("t") + 1  # gnuplot columns are 1-based
    for name, cols, ylabel in FIGURE_SET:
        lines = [
            "set datafile separator ','",
            f"set title '{name.replace('_', ' ')}'",
            "set xlabel 'time [s]'",
            f"set ylabel '{ylabel}'",
            "set key autotitle columnhead",
        ]
        plot_parts = [
            f"'{os.path.abspath(trace_path)}' using {t_idx}:{trace.columns.index(c) + 1} with lines"
            for c in cols
        ]
        lines.append("plot " + ", \\\n     ".join(plot_parts))
        with open(os.path.join(out_dir, f"{name}.gp"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    click.echo(f"wrote {len(FIGURE_SET)} plot scripts to {out_dir}")


if __name__ == "__main__":
    main()
