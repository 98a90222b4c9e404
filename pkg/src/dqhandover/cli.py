"""Command-line front end.

Subcommands::

    dqhandover run       rollouts with one controller/metric/object
    dqhandover sweep     metric x object x perturbation grid
    dqhandover trace     per-step distance curves
    dqhandover optimize  random search over a linear policy

Configuration is a flat ``key = value`` file with ``[section]`` headers,
overridden by trailing ``key=value`` arguments (``section.key=value`` also
works).  Unknown keys are errors.  Every command writes ``resolved_config.ini``
into its output directory; passing that file back with ``--config``
reproduces the outputs byte for byte.

Episode seeds are derived as ``SeedSequence([base_seed, cell, episode])``, so
cells of a sweep draw independent, reproducible streams.

Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .controllers import GreedyController, LinearPolicy, RandomSearchPolicy, rollout, summarize
from .exceptions import ConfigError, InvariantViolation
from .reward import DEFAULT_CONTACT_WEIGHTS, N_CONTACTS, PhaseState
from .se3metrics import METRICS, MetricWeights
from .sim import OBJECTS, EpisodeLog, SimConfig

log = logging.getLogger("dqhandover")

SUBCOMMANDS = ("run", "sweep", "trace", "optimize")
PERTURBATIONS = ("off", "on")


# --- config schema -----------------------------------------------------------

def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {s!r}")
    return v


def _parse_floats(n: Optional[int]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        vals = tuple(_float(v) for v in s.replace(",", " ").split())
        if n is not None and len(vals) != n:
            raise ValueError(f"expected {n} numbers, got {len(vals)}")
        return vals
    return parse


def _parse_choice(choices: Sequence[str]) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip()
        if v not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {v!r}")
        return v
    return parse


def _parse_choices(choices: Sequence[str]) -> Callable[[str], tuple]:
    one = _parse_choice(choices)

    def parse(s: str) -> tuple:
        vals = tuple(one(v) for v in s.replace(",", " ").split())
        if not vals:
            raise ValueError("expected at least one value")
        return vals
    return parse


def _fmt_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError(f"must be >= 0, got {v}")
    return v


_sim = SimConfig()
_phase = PhaseState()
_w = MetricWeights()

# key -> (section, parser, default)
SCHEMA: dict[str, tuple[str, Callable[[str], Any], Any]] = {
    "controller": ("run", _parse_choice(("greedy", "policy")), "greedy"),
    "policy_path": ("run", str, ""),
    "episodes": ("run", _pos_int, 10),
    "seed": ("run", _nonneg_int, 0),
    "gamma": ("run", _float, 0.99),
    "object": ("sim", _parse_choice(tuple(OBJECTS)), "prism"),
    "perturbation": ("sim", _parse_choice(PERTURBATIONS), "off"),
    "max_steps": ("sim", _pos_int, _sim.max_steps),
    "reset_cube_half_extent": ("sim", _float, _sim.reset_cube_half_extent),
    "reset_rot_roll_yaw": ("sim", _float, _sim.reset_rot_roll_yaw),
    "reset_rot_pitch": ("sim", _float, _sim.reset_rot_pitch),
    "action_translation_limit": ("sim", _float, _sim.action_translation_limit),
    "action_rotation_limit": ("sim", _float, _sim.action_rotation_limit),
    "joint_limit": ("sim", _float, _sim.joint_limit),
    "control_dt": ("sim", _float, _sim.control_dt),
    "giver_linear_speed": ("sim", _float, _sim.giver_linear_speed),
    "giver_angular_speed": ("sim", _float, _sim.giver_angular_speed),
    "fall_window": ("sim", _pos_int, _sim.fall_window),
    "contact_epsilon": ("sim", _float, _sim.contact_epsilon),
    "observation_noise": ("sim", _float, _sim.observation_noise),
    "home_point": ("sim", _parse_floats(3), _sim.home_point),
    "handover_point": ("sim", _parse_floats(3), _sim.handover_point),
    "metric": ("reward", _parse_choice(METRICS), "dq"),
    "psi": ("reward", _float, _w.psi),
    "mu": ("reward", _float, _w.mu),
    "beta": ("reward", _float, _w.beta),
    "eta0": ("reward", _float, _phase.eta0),
    "alpha": ("reward", _float, _phase.alpha),
    "grasp_bonus": ("reward", _float, _phase.grasp_bonus),
    "target_bonus": ("reward", _float, _phase.target_bonus),
    "target_tolerance": ("reward", _float, _phase.target_tolerance),
    "first_step_improvement": ("reward", _parse_bool, False),
    "maneuver_translation_only": ("reward", _parse_bool, False),
    "contact_weights": ("reward", _parse_floats(N_CONTACTS), DEFAULT_CONTACT_WEIGHTS),
    "probe_step": ("controller", _float, 0.002),
    "descent_gain": ("controller", _float, 1.0),
    "joint_close_rate": ("controller", _float, 0.05),
    "metrics": ("sweep", _parse_choices(METRICS), ("dq", "euler")),
    "objects": ("sweep", _parse_choices(tuple(OBJECTS)), ("prism",)),
    "perturbations": ("sweep", _parse_choices(PERTURBATIONS), ("off",)),
    "iterations": ("optimize", _nonneg_int, 200),
    "population": ("optimize", _pos_int, 32),
    "noise_scale": ("optimize", _float, 0.05),
    "batch_seeds": ("optimize", _pos_int, 8),
    "subtask": ("optimize", _parse_choice(("translation", "full")), "translation"),
    "subtask_steps": ("optimize", _pos_int, 20),
}
SECTIONS = ("run", "sim", "reward", "controller", "sweep", "optimize")


def _resolve_key(raw: str, where: str) -> str:
    key = raw.strip()
    if "." in key:
        section, key = key.split(".", 1)
        if key not in SCHEMA or SCHEMA[key][0] != section:
            raise ConfigError(f"{where}: unknown key {raw.strip()!r}")
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown key {raw.strip()!r}")
    return key


def _set(values: dict, key: str, raw_value: str, where: str) -> None:
    parser = SCHEMA[key][1]
    try:
        values[key] = parser(raw_value.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> dict:
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    values = {k: default for k, (_, _, default) in SCHEMA.items()}
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
        section = None
        for lineno, line in enumerate(text.splitlines(), 1):
            where = f"{path}:{lineno}"
            s = line.strip()
            if not s or s.startswith(("#", ";")):
                continue
            if s.startswith("["):
                if not s.endswith("]") or s[1:-1].strip() not in SECTIONS:
                    raise ConfigError(f"{where}: unknown section {s!r}")
                section = s[1:-1].strip()
                continue
            if "=" not in s:
                raise ConfigError(f"{where}: expected 'key = value', got {s!r}")
            raw_key, raw_value = s.split("=", 1)
            key = _resolve_key(raw_key, where)
            if section is not None and SCHEMA[key][0] != section:
                raise ConfigError(f"{where}: key {key!r} belongs in [{SCHEMA[key][0]}], not [{section}]")
            _set(values, key, raw_value, where)
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r}: expected key=value")
        raw_key, raw_value = ov.split("=", 1)
        _set(values, _resolve_key(raw_key, f"override {ov!r}"), raw_value, f"override {ov!r}")
    return values


def format_config(values: dict) -> str:
    out = ["# resolved configuration"]
    for section in SECTIONS:
        out.append("")
        out.append(f"[{section}]")
        for key, (sec, _, _) in SCHEMA.items():
            if sec == section:
                out.append(f"{key} = {_fmt_value(values[key])}")
    return "\n".join(out) + "\n"


def sim_config(values: dict, metric: Optional[str] = None, obj: Optional[str] = None,
               perturbation: Optional[str] = None) -> SimConfig:
    try:
        phase = PhaseState(
            eta0=values["eta0"], alpha=values["alpha"], grasp_bonus=values["grasp_bonus"],
            target_bonus=values["target_bonus"], target_tolerance=values["target_tolerance"],
            first_step_improvement=values["first_step_improvement"],
            maneuver_translation_only=values["maneuver_translation_only"],
        )
        return SimConfig(
            reset_cube_half_extent=values["reset_cube_half_extent"],
            reset_rot_roll_yaw=values["reset_rot_roll_yaw"],
            reset_rot_pitch=values["reset_rot_pitch"],
            max_steps=values["max_steps"],
            action_translation_limit=values["action_translation_limit"],
            action_rotation_limit=values["action_rotation_limit"],
            joint_limit=values["joint_limit"],
            perturbation=(perturbation or values["perturbation"]) == "on",
            giver_linear_speed=values["giver_linear_speed"],
            giver_angular_speed=values["giver_angular_speed"],
            control_dt=values["control_dt"],
            object=OBJECTS[obj or values["object"]],
            seed=values["seed"],
            metric=metric or values["metric"],
            weights=MetricWeights(values["psi"], values["mu"], values["beta"]),
            reward=phase,
            contact_weights=tuple(values["contact_weights"]),
            home_point=tuple(values["home_point"]),
            handover_point=tuple(values["handover_point"]),
            contact_epsilon=values["contact_epsilon"],
            fall_window=values["fall_window"],
            observation_noise=values["observation_noise"],
        )
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def derive_seed(base_seed: int, cell: int, episode: int) -> int:
    """Episode seed for ``(base_seed, cell, episode)``; a 64-bit hash via SeedSequence."""
    ss = np.random.SeedSequence([base_seed, cell, episode])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_agent(values: dict, metric: str):
    if values["controller"] == "greedy":
        agent = GreedyController(
            metric=metric, probe_step=values["probe_step"],
            descent_gain=values["descent_gain"], joint_close_rate=values["joint_close_rate"],
        )
        try:
            agent.fit()
        except ValueError as exc:
            raise ConfigError(f"invalid controller settings: {exc}") from None
        return agent
    path = values["policy_path"]
    if not path:
        raise ConfigError("controller = policy needs policy_path")
    try:
        return LinearPolicy.from_text(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read policy {path!r}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"malformed policy file {path!r}: {exc}") from None


# --- output helpers ----------------------------------------------------------

def _f(x: float) -> str:
    return format(float(x), ".6f")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _aligned(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


@dataclass
class Cell:
    index: int
    metric: str
    object: str
    perturbation: str


def _run_cell(values: dict, cell: Cell, episodes: int) -> tuple[list[EpisodeLog], list[int]]:
    cfg = sim_config(values, cell.metric, cell.object, cell.perturbation)
    agent = make_agent(values, cell.metric)
    seeds = [derive_seed(values["seed"], cell.index, e) for e in range(episodes)]
    return rollout(agent, cfg, seeds), seeds


def _summary_row(cell: Cell, summary: dict, values: dict) -> dict:
    row = {
        "metric": cell.metric,
        "object": cell.object,
        "perturbation": cell.perturbation,
        "succ_pct": summary["succ_pct"],
        "fail_pct": summary["fail_pct"],
        "timeout_pct": summary["timeout_pct"],
        "mean_return": summary["mean_return"],
        "episodes": summary["episodes"],
        "seed": values["seed"],
        "success_ci95": list(summary["success_ci95"]),
        "mean_final_d_trans": summary["mean_final_d_trans"],
        "mean_final_d_rot": summary["mean_final_d_rot"],
    }
    if cell.perturbation == "on":
        row["giver_linear_speed_mps"] = values["giver_linear_speed"]
        row["giver_angular_speed_radps"] = values["giver_angular_speed"]
    return row


# Table layout of the success-rate tables: Succ. | Total Succ. | Fail; there is no
# indeterminate class here, so Succ. and Total Succ. coincide.
TABLE_HEADER = ["Agent", "Object", "Perturbation", "Episodes", "Succ. (%)", "Total Succ. (%)", "Fail (%)",
                "Timeout (%)", "Mean return", "Final d_trans", "Final d_rot"]


def _table_rows(rows: Sequence[dict]) -> list[list[str]]:
    out = []
    for r in rows:
        out.append([
            r["metric"], r["object"], r["perturbation"], str(r["episodes"]),
            f"{r['succ_pct']:.1f}", f"{r['succ_pct']:.1f}", f"{r['fail_pct']:.1f}", f"{r['timeout_pct']:.1f}",
            _f(r["mean_return"]), _f(r["mean_final_d_trans"]), _f(r["mean_final_d_rot"]),
        ])
    return out


def _giver_columns(rows: Sequence[dict]) -> tuple[list[str], list[list[str]]]:
    if not any(r["perturbation"] == "on" for r in rows):
        return [], [[] for _ in rows]
    cols = ["Giver lin. (m/s)", "Giver ang. (rad/s)"]
    vals = [
        [f"{r['giver_linear_speed_mps']:g}", f"{r['giver_angular_speed_radps']:g}"]
        if r["perturbation"] == "on" else ["0", "0"]
        for r in rows
    ]
    return cols, vals


# --- commands ----------------------------------------------------------------

def cmd_run(values: dict, out: Path) -> int:
    cell = Cell(0, values["metric"], values["object"], values["perturbation"])
    logs, seeds = _run_cell(values, cell, values["episodes"])
    for i, lg in enumerate(logs):
        _write(out / "episodes" / f"episode_{i:04d}.csv", lg.to_csv())
    row = _summary_row(cell, summarize(logs, values["gamma"]), values)
    gcols, gvals = _giver_columns([row])
    header = TABLE_HEADER + gcols
    rows = [r + g for r, g in zip(_table_rows([row]), gvals)]
    _write(out / "summary.csv", _csv_text(header, rows))
    _write(out / "summary.txt", _aligned(header, rows))
    _write(out / "summary.json", json.dumps([row], indent=2) + "\n")
    _write(out / "seeds.csv", _csv_text(["cell", "episode", "seed"], [[0, i, s] for i, s in enumerate(seeds)]))
    sys.stdout.write(_aligned(header, rows))
    return 0


def cmd_sweep(values: dict, out: Path) -> int:
    grid = product(values["metrics"], values["objects"], values["perturbations"])
    cells = [Cell(i, m, o, p) for i, (m, o, p) in enumerate(grid)]
    rows, seed_rows = [], []
    for cell in cells:
        log.info("cell %d: metric=%s object=%s perturbation=%s", cell.index, cell.metric, cell.object,
                 cell.perturbation)
        logs, seeds = _run_cell(values, cell, values["episodes"])
        rows.append(_summary_row(cell, summarize(logs, values["gamma"]), values))
        seed_rows += [[cell.index, cell.metric, cell.object, cell.perturbation, e, s] for e, s in enumerate(seeds)]
    gcols, gvals = _giver_columns(rows)
    header = TABLE_HEADER + gcols
    table = [r + g for r, g in zip(_table_rows(rows), gvals)]
    _write(out / "sweep.json", json.dumps(rows, indent=2) + "\n")
    _write(out / "sweep.txt", _aligned(header, table))
    _write(out / "sweep.csv", _csv_text(header, table))
    _write(out / "seeds.csv", _csv_text(["cell", "metric", "object", "perturbation", "episode", "seed"], seed_rows))
    sys.stdout.write(_aligned(header, table))
    return 0


TRACE_COLUMNS = ("step", "d_global", "d_trans", "d_rot")


def mean_curve(logs: Sequence[EpisodeLog]) -> list[list[float]]:
    """Per-step mean of the distance columns over successful episodes.

    Row ``k`` averages the episodes that lasted at least ``k`` steps, so there are
    as many rows as the longest success has steps.
    """
    succ = [lg for lg in logs if lg.outcome == "success"]
    n_rows = max((len(lg) for lg in succ), default=0)
    rows = []
    for k in range(n_rows):
        recs = [lg.records[k] for lg in succ if len(lg) > k]
        rows.append([
            k + 1,
            float(np.mean([r.d_global for r in recs])),
            float(np.mean([r.d_trans for r in recs])),
            float(np.mean([r.d_rot for r in recs])),
            len(recs),
        ])
    return rows


def cmd_trace(values: dict, out: Path) -> int:
    cell = Cell(0, values["metric"], values["object"], values["perturbation"])
    logs, _ = _run_cell(values, cell, values["episodes"])
    for i, lg in enumerate(logs):
        rows = [[r.step, _f(r.d_global), _f(r.d_trans), _f(r.d_rot)] for r in lg.records]
        _write(out / "traces" / f"episode_{i:04d}.csv", _csv_text(TRACE_COLUMNS, rows))
    curve = [[k, _f(g), _f(t), _f(r), n] for k, g, t, r, n in mean_curve(logs)]
    _write(out / "mean_curve.csv", _csv_text(TRACE_COLUMNS + ("episodes",), curve))
    n_succ = sum(lg.outcome == "success" for lg in logs)
    sys.stdout.write(f"{len(logs)} episodes traced, {n_succ} successful, mean curve has {len(curve)} steps\n")
    return 0


def cmd_optimize(values: dict, out: Path) -> int:
    cfg = sim_config(values)
    est = RandomSearchPolicy(
        iterations=values["iterations"], population=values["population"], noise_scale=values["noise_scale"],
        gamma=values["gamma"], subtask=values["subtask"], subtask_steps=values["subtask_steps"],
        random_state=values["seed"], sim_config=cfg,
    )
    seeds = [derive_seed(values["seed"], 0, e) for e in range(values["batch_seeds"])]

    def progress(it, score):
        if it % 10 == 0:
            log.info("iteration %d: incumbent %.6f", it, score)

    est.fit(seeds, callback=progress)
    _write(out / "policy.txt", est.policy_.to_text())
    _write(out / "scores.csv", _csv_text(["iteration", "incumbent_score"],
                                         [[i, format(s, ".12g")] for i, s in enumerate(est.scores_)]))
    sys.stdout.write(f"initial score {est.scores_[0]:.6f}, final score {est.scores_[-1]:.6f}\n")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "trace": cmd_trace, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqhandover", description="Kinematic handover reward and metric experiments.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--output-dir", default="out", help="directory for CSV/JSON outputs (default: out)")
        sp.add_argument("--seed", type=int, help="base seed (same as seed=N)")
        sp.add_argument("--episodes", type=int, help="episodes per cell (same as episodes=N)")
        sp.add_argument("-v", "--verbose", action="store_true")
        sp.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.episodes is not None:
        overrides.append(f"episodes={args.episodes}")
    out = Path(args.output_dir)
    try:
        values = load_config(args.config, overrides)
        sim_config(values)  # validate before doing any work
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "resolved_config.ini", format_config(values))
        return COMMANDS[args.subcommand](values, out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except InvariantViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
