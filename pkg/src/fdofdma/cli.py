"""Monte-Carlo experiment runner.

Configs are flat YAML files (or the name of a built-in, e.g. ``fig5``)::

    template: indoor            # outdoor | indoor
    axis: beta_db               # user_count | beta_db | fd_fraction | subchannel_count | convergence
    values: [-120, -90, -60]
    schemes: [FD-FD, FD-HD]
    num_users: 10
    fd_fraction: 1.0            # share of full-duplex users for scheme "FD"
    beta: -90 dB                # "<x> dB" or a linear value in [0, 1]
    drops: 200
    seed: 0
    dl_weights: [0.5, 0.5]      # optional, scalar or one per user
    ul_weights: 1.0
    overrides: {bs_power: 43 dBm, ue_power: 23 dBm, cell_radius: 1000, num_subchannels: 64}
    output: results.csv         # optional; --out wins
    format: csv                 # csv | json
"""
from __future__ import annotations

import argparse
import io
import json
import re
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .channel import TEMPLATES, ScenarioTemplate, build_scenario, fd_mask, sample_channels, \
    sample_topology
from .core import check_feasible
from .dcpower import DcProblem, DcSettings, InnerSolverError, dc_iterate
from .allocator import allocate
from .schemes import (exhaustive_oracle, scheme_fd, scheme_hd_downlink, scheme_hd_uplink,
                      scheme_hhd, scheme_upper_bound)

SCHEMES = ("FD", "FD-FD", "FD-HD", "HHD", "HD-D", "HD-U", "UB", "OPT")
AXES = ("user_count", "beta_db", "fd_fraction", "subchannel_count", "convergence")
FORMATS = ("csv", "json")
KEYS = {"template", "axis", "values", "schemes", "num_users", "fd_fraction", "beta", "drops",
        "seed", "dl_weights", "ul_weights", "overrides", "output", "format"}
OVERRIDES = {"bs_power", "ue_power", "cell_radius", "num_subchannels"}
CSV_COLUMNS = ("axis_value", "scheme", "mean_sum_rate", "stderr", "drops")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    template: ScenarioTemplate
    axis: str
    values: tuple
    schemes: tuple = ("FD",)
    num_users: int = 10
    fd_fraction: float = 1.0
    beta: float = 0.0
    drops: int = 200
    seed: int = 0
    dl_weights: object = 1.0
    ul_weights: object = 1.0
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis: unknown axis {self.axis!r}; choose from {AXES}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"schemes: unknown scheme {s!r}; choose from {SCHEMES}")
        if not self.schemes:
            raise ConfigError("schemes: at least one scheme is required")
        if self.axis == "convergence" and any(s not in ("FD", "FD-FD", "FD-HD") for s in self.schemes):
            raise ConfigError("schemes: convergence traces need a DC scheme (FD, FD-FD or FD-HD)")
        if self.drops < 1:
            raise ConfigError("drops: must be at least 1")
        if not self.values:
            raise ConfigError("values: at least one axis value is required")
        if self.num_users < 1:
            raise ConfigError("num_users: must be at least 1")
        if self.format not in FORMATS:
            raise ConfigError(f"format: expected one of {FORMATS}, got {self.format!r}")
        if not 0.0 <= self.fd_fraction <= 1.0:
            raise ConfigError("fd_fraction: must lie in [0, 1]")
        if self.axis == "fd_fraction" and any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ConfigError("values: fd_fraction values must lie in [0, 1]")
        if self.axis in ("user_count", "subchannel_count") and any(v < 1 for v in self.values):
            raise ConfigError(f"values: {self.axis} values must be positive integers")
        if self.axis == "beta_db" and any(v > 0 for v in self.values):
            raise ConfigError("values: beta_db values must be <= 0 dB")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta: must lie in [0, 1] (at most 0 dB)")
        counts = self.values if self.axis == "user_count" else (self.num_users,)
        for key in ("dl_weights", "ul_weights"):
            wts = np.asarray(getattr(self, key), float)
            if wts.ndim > 1 or np.any(wts < 0) or not np.all(np.isfinite(wts)):
                raise ConfigError(f"{key}: expected a nonnegative scalar or vector")
            if wts.ndim == 1 and any(wts.size != k for k in counts):
                raise ConfigError(f"{key}: needs one weight per user ({counts[0]})")


# ---------------------------------------------------------------- loading

_UNIT = re.compile(r"^\s*(-?[0-9.eE+-]+|-?inf)\s*([a-zA-Z]*)\s*$")


def _split_unit(key, raw):
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw), ""
    m = _UNIT.match(str(raw))
    if not m:
        raise ConfigError(f"{key}: cannot parse {raw!r}")
    return float(m.group(1)), m.group(2).lower()


def parse_beta(raw) -> float:
    """``"-90 dB"`` -> 1e-9; a bare number is already linear."""
    value, unit = _split_unit("beta", raw)
    if unit == "db":
        if value > 0:
            raise ConfigError("beta: must be at most 0 dB")
        return float(10.0 ** (value / 10.0))
    if unit:
        raise ConfigError(f"beta: unknown unit {unit!r}")
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"beta: linear value {value} outside [0, 1]")
    return value


def parse_power_dbm(key, raw) -> float:
    """``"43 dBm"``, ``"20 W"`` or a bare number in dBm."""
    value, unit = _split_unit(key, raw)
    if unit in ("", "dbm"):
        return value
    if unit == "w":
        if value <= 0:
            raise ConfigError(f"{key}: power must be positive")
        return float(10.0 * np.log10(value) + 30.0)
    raise ConfigError(f"{key}: unknown unit {unit!r}")


def builtin_configs() -> list[str]:
    files = resources.files("fdofdma") / "configs"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def _read(source) -> tuple[dict, str]:
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in builtin_configs():
        text = (resources.files("fdofdma") / "configs" / f"{source}.yaml").read_text()
    else:
        raise ConfigError(f"config {source!r} is neither a file nor a built-in "
                          f"({', '.join(builtin_configs())})")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {source!r} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {source!r} must be a key-value mapping")
    return data, str(source)


def _template(data) -> ScenarioTemplate:
    name = data.get("template", "outdoor")
    if name not in TEMPLATES:
        raise ConfigError(f"template: unknown template {name!r}; choose from {sorted(TEMPLATES)}")
    tmpl = TEMPLATES[name]
    over = data.get("overrides") or {}
    if not isinstance(over, dict):
        raise ConfigError("overrides: expected a mapping")
    unknown = set(over) - OVERRIDES
    if unknown:
        raise ConfigError(f"overrides: unknown key {sorted(unknown)[0]!r}")
    changes = {}
    if "bs_power" in over:
        changes["bs_power_dbm"] = parse_power_dbm("bs_power", over["bs_power"])
    if "ue_power" in over:
        changes["ue_power_dbm"] = parse_power_dbm("ue_power", over["ue_power"])
    if "cell_radius" in over:
        changes["cell_radius"] = _number("cell_radius", over["cell_radius"])
    if "num_subchannels" in over:
        changes["num_subchannels"] = _integer("num_subchannels", over["num_subchannels"])
        if changes["num_subchannels"] < 1:
            raise ConfigError("num_subchannels: must be positive")
    try:
        return tmpl.replace(**changes)
    except ValueError as exc:
        raise ConfigError(f"overrides: {exc}") from None


def _number(key, raw) -> float:
    if isinstance(raw, bool):
        raise ConfigError(f"{key}: expected a number, got {raw!r}")
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _integer(key, raw) -> int:
    value = _number(key, raw)
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(value)


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
    if "axis" not in data:
        raise ConfigError("axis: missing required key")
    axis = data["axis"]
    if axis != "convergence" and "values" not in data:
        raise ConfigError("values: missing required key")
    raw_values = data.get("values", [None]) if axis != "convergence" else [None]
    if not isinstance(raw_values, list):
        raise ConfigError("values: expected a list")
    if axis in ("user_count", "subchannel_count"):
        values = tuple(_integer("values", v) for v in raw_values)
    elif axis == "convergence":
        values = (None,)
    else:
        values = tuple(_number("values", v) for v in raw_values)
    schemes = data.get("schemes", ["FD"])
    if isinstance(schemes, str):
        schemes = [schemes]
    if not isinstance(schemes, list):
        raise ConfigError("schemes: expected a list")
    out = data.get("output")
    return ExperimentConfig(
        template=_template(data),
        axis=axis,
        values=values,
        schemes=tuple(str(s) for s in schemes),
        num_users=_integer("num_users", data.get("num_users", 10)),
        fd_fraction=_number("fd_fraction", data.get("fd_fraction", 1.0)),
        beta=parse_beta(data.get("beta", 0.0)),
        drops=_integer("drops", data.get("drops", 200)),
        seed=_integer("seed", data.get("seed", 0)),
        dl_weights=_weights("dl_weights", data.get("dl_weights", 1.0)),
        ul_weights=_weights("ul_weights", data.get("ul_weights", 1.0)),
        output=None if out is None else str(out),
        format=str(data.get("format", "csv")),
    )


def _weights(key, raw):
    if isinstance(raw, list):
        return tuple(_number(key, x) for x in raw)
    return _number(key, raw)


def load_config(source) -> ExperimentConfig:
    """Parse a YAML config file, or a built-in config by name."""
    data, _ = _read(source)
    return config_from_dict(data)


# ---------------------------------------------------------------- running

def drop_seed(base: int, value, drop: int) -> int:
    """Per-drop seed: the base seed XOR a CRC of (axis value, drop index)."""
    return int(base) ^ zlib.crc32(f"{value!r}:{drop}".encode())


def _point(config: ExperimentConfig, value):
    """(template, K, fd_fraction, beta) at one axis value."""
    tmpl, K, frac, beta = config.template, config.num_users, config.fd_fraction, config.beta
    if config.axis == "user_count":
        K = value
    elif config.axis == "beta_db":
        beta = float(10.0 ** (value / 10.0))
    elif config.axis == "fd_fraction":
        frac = value
    elif config.axis == "subchannel_count":
        tmpl = tmpl.replace(num_subchannels=value)
    return tmpl, K, frac, beta


def _drop(config: ExperimentConfig, value, seed):
    tmpl, K, frac, beta = _point(config, value)
    positions = sample_topology(tmpl, K, seed)
    channels = sample_channels(tmpl, positions, seed)

    def scenario(full_duplex):
        return build_scenario(tmpl, positions, full_duplex, beta, config.dl_weights,
                              config.ul_weights)
    return scenario, channels, fd_mask(K, frac)


def _run_scheme(name, scenario, channels, mask):
    K = channels.num_users
    flags = {"FD": mask, "FD-FD": np.ones(K, bool)}.get(name, np.zeros(K, bool))
    sc = scenario(flags)
    if name == "UB":
        return scheme_upper_bound(sc, channels).sum_rate
    if name in ("FD", "FD-FD", "FD-HD"):
        res = scheme_fd(sc, channels)
    elif name == "OPT":
        res = exhaustive_oracle(sc, channels)
    else:
        res = {"HHD": scheme_hhd, "HD-D": scheme_hd_downlink,
               "HD-U": scheme_hd_uplink}[name](sc, channels)
    feas = check_feasible(sc, res.assignment, res.powers)
    if not feas.ok:
        raise RuntimeError(f"scheme {name} produced an infeasible allocation: {feas.violations}")
    return res.sum_rate


def _sweep_task(args):
    config, value, drop = args
    seed = drop_seed(config.seed, value, drop)
    scenario, channels, mask = _drop(config, value, seed)
    return seed, [_run_scheme(s, scenario, channels, mask) for s in config.schemes]


def _trace_task(args):
    config, value, drop = args
    seed = drop_seed(config.seed, value, drop)
    scenario, channels, mask = _drop(config, value, seed)
    name = config.schemes[0]
    K = channels.num_users
    flags = {"FD": mask, "FD-FD": np.ones(K, bool)}.get(name, np.zeros(K, bool))
    sc = scenario(flags)
    alloc = allocate(sc, channels)
    problem = DcProblem.from_assignment(sc, channels, alloc.assignment)
    res = dc_iterate(problem, DcSettings(), alloc.powers.vector)
    return seed, list(res.objective_trace)


def _map(fn, tasks, threads):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map keeps task order, so the reduction below is deterministic
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)        # one summary row per (value, scheme)
    drop_rows: list = field(default_factory=list)   # per-drop detail for replay


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Mean weighted sum-rate (and its standard error) per axis value and scheme."""
    if config.axis == "convergence":
        return run_convergence(config, threads)
    tasks = [(config, v, d) for v in config.values for d in range(config.drops)]
    outputs = _map(_sweep_task, tasks, threads)
    result = ExperimentResult(config)
    for i, v in enumerate(config.values):
        chunk = outputs[i * config.drops:(i + 1) * config.drops]
        rates = np.array([r for _, r in chunk])          # (drops, schemes)
        for s, name in enumerate(config.schemes):
            x = rates[:, s]
            err = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
            result.rows.append({"axis_value": v, "scheme": name, "mean_sum_rate": float(x.mean()),
                                "stderr": err, "drops": int(x.size)})
        for d, (seed, r) in enumerate(chunk):
            for name, rate in zip(config.schemes, r):
                result.drop_rows.append({"axis_value": v, "scheme": name, "drop": d,
                                         "seed": seed, "sum_rate": float(rate)})
    return result


def run_convergence(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Objective trace of the DC power step, one row per (drop, iteration)."""
    if config.axis != "convergence":
        raise ConfigError("axis: run_convergence needs axis 'convergence'")
    tasks = [(config, None, d) for d in range(config.drops)]
    result = ExperimentResult(config)
    for d, (seed, trace) in enumerate(_map(_trace_task, tasks, threads)):
        for it, val in enumerate(trace):
            result.rows.append({"drop": d, "seed": seed, "iteration": it, "objective": float(val)})
    return result


# ---------------------------------------------------------------- output

def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv(rows, columns):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def render(result: ExperimentResult, fmt: str = "csv") -> str:
    cfg = result.config
    if fmt == "json":
        payload = {"axis": cfg.axis, "template": cfg.template.name, "seed": cfg.seed,
                   "rows": result.rows}
        if result.drop_rows:
            payload["drops"] = result.drop_rows
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"
    columns = tuple(result.rows[0]) if result.rows else CSV_COLUMNS
    return _csv(result.rows, columns)


def render_drops(result: ExperimentResult) -> str:
    return _csv(result.drop_rows, ("axis_value", "scheme", "drop", "seed", "sum_rate"))


def write_result(result: ExperimentResult, out: str | None, fmt: str) -> None:
    text = render(result, fmt)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    if fmt == "csv" and result.drop_rows:
        path.with_name(path.stem + ".drops.csv").write_text(render_drops(result))


# ---------------------------------------------------------------- entry point

def _templates_text() -> str:
    lines = []
    for t in TEMPLATES.values():
        lines.append(f"{t.name}: radius {t.cell_radius:g} m, BS {t.bs_power_dbm:g} dBm, "
                     f"UE {t.ue_power_dbm:g} dBm, N={t.num_subchannels}, "
                     f"noise {t.noise_power_dbm:.2f} dBm per sub-channel")
    lines.append("configs: " + ", ".join(builtin_configs()))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fdofdma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a sweep or convergence experiment")
    run.add_argument("config", help="YAML config path or built-in config name")
    run.add_argument("--out", help="output file (stdout when omitted)")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--threads", type=int, default=1)
    sub.add_parser("templates", help="list scenario templates and built-in configs")
    args = parser.parse_args(argv)

    if args.command == "templates":
        sys.stdout.write(_templates_text())
        return 0
    try:
        config = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        result = run_experiment(config, args.threads)
        write_result(result, args.out or config.output, args.format or config.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InnerSolverError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
