"""
Run configuration and input loading.

A run is described by a YAML file::

    parameters: parameters.yaml   # model parameters, CHP corners, day weights
    demand: demand.csv            # day,hour,electric_MW,heat_MW (or with a weight column)
    wind: wind.csv                # scenario,day,hour,plant,MW
    mode: DRCC                    # or GaussianCC
    epsilon: 0.05
    enable_p2hh: true
    enable_boiler: true
    seed: 0
    samples: 1000
    output: out
    solver: {rel_gap: 1.0e-6, node_limit: 20000, time_limit: 900}

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from . import __version__
from .conic import BranchBoundParams
from .electrolyser import CellParameters, build_cell_region
from .exceptions import ConfigurationError, IngestionError
from .ies_model import ChpRegion, IesParameters, build_instance
from .reformulate import MODES, ReformulationMode
from .scenarios import RepresentativeDaySet, estimate_moments, ingest_demand, ingest_scenarios

_SOLVER_KEYS = {f.name for f in fields(BranchBoundParams)}


@dataclass(frozen=True)
class RunConfig:
    parameters: str
    demand: str
    wind: str
    mode: str = "DRCC"
    epsilon: float | None = None  # None: value from the parameter file
    enable_p2hh: bool = True
    enable_boiler: bool = True
    seed: int = 0
    samples: int = 1000
    output: str = "out"
    solver: dict = field(default_factory=dict)
    source: str = ""  # path of the YAML file, if any

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}, expected one of {MODES}", "mode")
        if self.epsilon is not None and not (isinstance(self.epsilon, (int, float))
                                             and 0 < self.epsilon < 1):
            raise ConfigurationError(f"epsilon={self.epsilon} must lie in (0, 1)", "epsilon")
        for name in ("enable_p2hh", "enable_boiler"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigurationError("must be true or false", name)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("must be a non-negative integer", "seed")
        if not isinstance(self.samples, int) or self.samples <= 0:
            raise ConfigurationError(f"samples={self.samples} must be a positive integer", "samples")
        unknown = set(self.solver) - _SOLVER_KEYS
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", "solver")
        for name in ("parameters", "demand", "wind"):
            path = getattr(self, name)
            if not path or not os.path.isfile(path):
                raise ConfigurationError(f"file not found: {path!r}", name)

    @property
    def scenario_label(self):
        """Name of the technology mix: CHP only, +EB, +P2HH or both."""
        return {(False, False): "chp", (False, True): "chp_eb", (True, False): "chp_p2hh",
                (True, True): "chp_eb_p2hh"}[(self.enable_p2hh, self.enable_boiler)]

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def bb_params(self):
        return BranchBoundParams(**{**self.solver, "seed": self.seed})

    def to_dict(self):
        d = asdict(self)
        d.pop("source")
        return d

    def digest(self):
        """sha256 over the resolved settings and the bytes of every input file.

        File locations and the output directory are left out, so a copied
        run directory keeps its digest."""
        h = hashlib.sha256()
        settings = {k: v for k, v in self.to_dict().items()
                    if k not in ("parameters", "demand", "wind", "output")}
        h.update(json.dumps(settings, sort_keys=True, default=str).encode())
        for name in ("parameters", "demand", "wind"):
            with open(getattr(self, name), "rb") as fh:
                h.update(fh.read())
        return h.hexdigest()

    def provenance(self):
        return f"iesflex {__version__} config_sha256={self.digest()} seed={self.seed}"


def load_run_config(path, **overrides):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}", "config") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed YAML: {exc}", "config") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a mapping", "config")
    known = {f.name for f in fields(RunConfig)} - {"source"}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", "config")
    for name in ("parameters", "demand", "wind"):
        if name not in data:
            raise ConfigurationError("missing", name)
    base = os.path.dirname(os.path.abspath(path))
    for name in ("parameters", "demand", "wind", "output"):
        if name in data and data[name] is not None and not os.path.isabs(str(data[name])):
            data[name] = os.path.join(base, str(data[name]))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data, source=os.path.abspath(path))


def read_parameter_file(path):
    """Model parameters, CHP corners, day weights, initial temperature and
    optional cell coefficients from YAML."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read parameter file: {exc}", "parameters") from exc
    if "chp" not in data:
        raise ConfigurationError("CHP corner points are mandatory", "chp")
    params = IesParameters.from_dict(data.get("parameters", {}))
    chp = ChpRegion.from_dict(data["chp"])
    cell = CellParameters.from_dict(data.get("cell", {}))
    weights = data.get("day_weights")
    t0 = float(data.get("initial_temperature", 80.0))
    return params, chp, cell, weights, t0


def read_days(path, weights=None):
    """Representative days from a demand CSV.

    A file with a ``weight`` column carries its own weights; otherwise
    ``weights`` must list one value per day.
    """
    with open(path, newline="") as fh:
        header = None
        for line in fh:
            if line.strip() and not line.startswith("#"):
                header = [c.strip() for c in line.split(",")]
                break
    if header == ["day", "weight", "hour", "electric_MW", "heat_MW"]:
        rows = []
        with open(path, newline="") as fh:
            body = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
        for lineno, row in enumerate(csv.reader(body[1:]), start=2):
            try:
                rows.append((int(row[0]), float(row[1]), int(row[2]), float(row[3]), float(row[4])))
            except (ValueError, IndexError) as exc:
                raise IngestionError(f"{path}: bad row {lineno}: {exc}") from None
        days = sorted({r[0] for r in rows})
        hours = sorted({r[2] for r in rows})
        if days != list(range(len(days))) or hours != list(range(len(hours))) or \
                len(rows) != len(days) * len(hours):
            raise IngestionError(f"{path}: days and hours must form a full 0-based grid")
        e = np.zeros((len(days), len(hours)))
        q = np.zeros_like(e)
        w = np.zeros(len(days))
        for d, wt, h, el, ht in rows:
            e[d, h], q[d, h], w[d] = el, ht, wt
        return RepresentativeDaySet(e, q, w)
    electric, heat = ingest_demand(path)
    if weights is None:
        weights = [365.0 / electric.shape[0]] * electric.shape[0]
    if len(weights) != electric.shape[0]:
        raise ConfigurationError(
            f"{len(weights)} day weights for {electric.shape[0]} demand days", "day_weights")
    return RepresentativeDaySet(electric, heat, np.asarray(weights, dtype=float))


def load_inputs(cfg):
    """Build ``(instance, scenarios, mode)`` from a run configuration."""
    params, chp, cell, weights, t0 = read_parameter_file(cfg.parameters)
    if cfg.epsilon is not None:
        params = replace(params, epsilon=float(cfg.epsilon))
    days = read_days(cfg.demand, weights)
    scen = ingest_scenarios(cfg.wind)
    moments = estimate_moments(scen)
    region = build_cell_region(cell)
    inst = build_instance(params, chp, region, days, moments, t0, cell)
    return inst, scen, ReformulationMode(cfg.mode, params.epsilon)


def write_run_config(path, **entries):
    with open(path, "w") as fh:
        yaml.safe_dump(entries, fh, sort_keys=True)
    return path
