"""Experiment configuration: a single YAML file drives runs and verification.

Top-level keys:

  dataset:   synthetic: {rows, features, seed} | csv: path
  schemes:   list of {kind, K, r, [m, orders, clusters, n_poly, tolerance]}
  timing:    model: {mu, alpha} | constant: unit_time | trace: path
  scenario:  {p_delay, initial_delay, comm_base, comm_exp_mu, correlated}
  congestion, iterations, master_seed, output, closed_form
  sweep:     {param: r|p_delay|initial_delay|comm_exp_mu|comm_base, values: [...]}
  verify:    {iterations}

`initial_delay` may itself be a list as a shorthand sweep.  All parameter
combinations are validated against the scheme constructors before anything
runs.
"""

import dataclasses

import yaml

from .errors import ConfigError
from .gradient import load_csv, synthetic_dataset
from .schemes import make_scheme
from .sim import ConstantSource, DelayScenario, ShiftedExpSource, TraceSource, load_trace_csv
from .timing import ShiftedExp

_SWEEPABLE = ("r", "p_delay", "initial_delay", "comm_exp_mu", "comm_base")


@dataclasses.dataclass
class ExperimentConfig:
    scheme_specs: list
    timing_spec: dict
    scenario_base: dict
    congestion: bool
    iterations: int
    master_seed: int
    output: str
    closed_form: bool
    dataset_spec: dict
    sweep_param: str
    sweep_values: list
    verify_iterations: int

    @property
    def has_sweep(self):
        return len(self.sweep_values) > 1 or self.sweep_param != ""


def _require(cond, path, msg):
    if not cond:
        raise ConfigError(f"config key '{path}': {msg}")


def load_config(path):
    """Parse and validate a YAML experiment file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else path
        raise ConfigError(f"{where}: invalid YAML ({exc})")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(raw)


def parse_config(raw):
    schemes = raw.get("schemes")
    _require(isinstance(schemes, list) and len(schemes) > 0, "schemes",
             "at least one scheme is required")
    specs = []
    for i, entry in enumerate(schemes):
        _require(isinstance(entry, dict), f"schemes[{i}]", "must be a mapping")
        _require("kind" in entry, f"schemes[{i}]", "missing 'kind'")
        _require("K" in entry and "r" in entry, f"schemes[{i}]",
                 "missing K or r")
        specs.append(dict(entry))

    timing = raw.get("timing", {"model": {"mu": 10.0, "alpha": 0.01}})
    _require(isinstance(timing, dict) and len(timing) == 1, "timing",
             "must contain exactly one of model/constant/trace")
    kind = next(iter(timing))
    _require(kind in ("model", "constant", "trace"), "timing",
             f"unknown timing source {kind!r}")

    scenario = dict(raw.get("scenario", {}))
    for key in scenario:
        _require(key in ("p_delay", "initial_delay", "comm_base", "comm_exp_mu",
                         "correlated"), f"scenario.{key}", "unknown field")

    sweep_param, sweep_values = "", [None]
    sweep = raw.get("sweep")
    if sweep is not None:
        _require(isinstance(sweep, dict) and "param" in sweep and "values" in sweep,
                 "sweep", "needs 'param' and 'values'")
        _require(sweep["param"] in _SWEEPABLE, "sweep.param",
                 f"must be one of {_SWEEPABLE}")
        _require(isinstance(sweep["values"], list) and sweep["values"],
                 "sweep.values", "must be a nonempty list")
        sweep_param, sweep_values = sweep["param"], list(sweep["values"])
    elif isinstance(scenario.get("initial_delay"), list):
        sweep_param = "initial_delay"
        sweep_values = list(scenario["initial_delay"])
        scenario["initial_delay"] = 0.0

    iterations = raw.get("iterations", 1000)
    _require(isinstance(iterations, int) and iterations >= 1, "iterations",
             "must be a positive integer")
    master_seed = raw.get("master_seed", 0)
    _require(isinstance(master_seed, int), "master_seed", "must be an integer")

    verify = raw.get("verify", {})
    verify_iters = verify.get("iterations", 20) if isinstance(verify, dict) else 20

    cfg = ExperimentConfig(
        scheme_specs=specs,
        timing_spec=timing,
        scenario_base=scenario,
        congestion=bool(raw.get("congestion", False)),
        iterations=iterations,
        master_seed=master_seed,
        output=str(raw.get("output", "out")),
        closed_form=bool(raw.get("closed_form", True)),
        dataset_spec=raw.get("dataset", {"synthetic": {"rows": 64, "features": 8, "seed": 7}}),
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        verify_iterations=int(verify_iters),
    )
    # force early validation of every grid point
    for value in cfg.sweep_values:
        build_point(cfg, value)
    build_source(cfg)
    return cfg


def build_scheme_from_spec(spec, r_override=None):
    kind = spec["kind"]
    try:
        return make_scheme(
            kind,
            int(spec["K"]),
            int(r_override if r_override is not None else spec["r"]),
            m=spec.get("m"),
            orders=spec.get("orders"),
            clusters=int(spec.get("clusters", 1)),
            n_poly=spec.get("n_poly"),
            tolerance=float(spec.get("tolerance", 0.05)),
        )
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"scheme '{kind}': {exc}")


def build_point(cfg, value):
    """Schemes and scenario at one grid point of the sweep."""
    scn = dict(cfg.scenario_base)
    r_override = None
    if cfg.sweep_param == "r":
        r_override = value
    elif cfg.sweep_param:
        scn[cfg.sweep_param] = value
    try:
        scenario = DelayScenario(
            p_delay=float(scn.get("p_delay", 0.0)),
            initial_delay=float(scn.get("initial_delay", 0.0)),
            comm_base=float(scn.get("comm_base", 0.0)),
            comm_exp_mu=(None if scn.get("comm_exp_mu") is None
                         else float(scn["comm_exp_mu"])),
            correlated=bool(scn.get("correlated", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}")
    plans = [build_scheme_from_spec(spec, r_override) for spec in cfg.scheme_specs]
    return plans, scenario


def build_source(cfg):
    kind, value = next(iter(cfg.timing_spec.items()))
    if kind == "model":
        _require(isinstance(value, dict) and "mu" in value and "alpha" in value,
                 "timing.model", "needs mu and alpha")
        return ShiftedExpSource(ShiftedExp(float(value["mu"]), float(value["alpha"])))
    if kind == "constant":
        return ConstantSource(float(value))
    return load_trace_csv(str(value))


def timing_model(cfg):
    """The ShiftedExp model when configured, else None (no closed forms)."""
    if "model" in cfg.timing_spec:
        value = cfg.timing_spec["model"]
        return ShiftedExp(float(value["mu"]), float(value["alpha"]))
    return None


def build_dataset(cfg):
    spec = cfg.dataset_spec
    _require(isinstance(spec, dict) and len(spec) == 1, "dataset",
             "must contain exactly one of synthetic/csv")
    kind, value = next(iter(spec.items()))
    if kind == "synthetic":
        _require(isinstance(value, dict), "dataset.synthetic", "must be a mapping")
        return synthetic_dataset(int(value.get("rows", 64)),
                                 int(value.get("features", 8)),
                                 int(value.get("seed", 0)))
    if kind == "csv":
        return load_csv(str(value))
    raise ConfigError(f"dataset: unknown source {kind!r}")
