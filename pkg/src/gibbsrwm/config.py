"""Experiment configuration document: schema, validation, construction.

One JSON document describes a run completely; the CLI loads it, validates it
strictly (unknown keys are errors), and builds the model/window/run objects.
The canonical serialization of the document is hashed into every manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .estimators import CYLINDER_FUNCTIONS
from .lattice import Neighborhood, Window, build_box, build_line, nearest_neighbor
from .models import InteractionModel, gaussian_product, gff, phi4
from .sampler import INCREMENT_FAMILIES


class ConfigError(ValueError):
    pass


MODEL_FAMILIES = ("gaussian_product", "gff", "phi4")
INIT_MODES = ("exact_gaussian", "burn_in")
_FAMILY_PARAMS = {
    "gaussian_product": {"variance"},
    "gff": {"beta", "m2"},
    "phi4": {"a", "b", "coupling"},
}


def _check_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _number(obj, key, where, lo=None, hi=None, integer=False):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number")
    if integer and int(v) != v:
        raise ConfigError(f"{where}.{key}: expected an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: must be finite")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}.{key}: must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{where}.{key}: must be <= {hi}")
    return int(v) if integer else float(v)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict
    neighborhood: str | list = "default"


@dataclass(frozen=True)
class GraphSpec:
    d: int
    L: int | None = None
    vertex_list: list | None = None
    boundary_mode: str = "zero"
    boundary_constant: float = 0.0


@dataclass(frozen=True)
class RunSpec:
    steps: int
    tau: float | None = None
    tau_grid: list[float] | None = None
    n_list: list[int] | None = None
    replicas: int = 8
    thin: int = 10
    init: str = "exact_gaussian"
    burn_steps: int | None = None
    increment_family: str = "standard_normal"
    cylinder: str | None = None
    battery: list[str] | None = None
    corrupt_determinism: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    graph: GraphSpec
    run: RunSpec
    seed: int
    output_dir: str
    raw: dict = field(repr=False)


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, {"model", "graph", "run", "seed", "output_dir"},
                {"model", "graph", "run", "seed"}, "config")

    m = doc["model"]
    _check_keys(m, {"family", "parameters", "neighborhood"}, {"family"}, "model")
    family = m["family"]
    if family not in MODEL_FAMILIES:
        raise ConfigError(f"model.family: unknown family {family!r}")
    parameters = m.get("parameters", {})
    _check_keys(parameters, _FAMILY_PARAMS[family], set(), "model.parameters")
    for key in parameters:
        _number(parameters, key, "model.parameters")
    if family == "gaussian_product" and parameters.get("variance", 1.0) <= 0:
        raise ConfigError("model.parameters.variance: must be > 0")
    if family == "phi4" and parameters.get("a", 0.0) <= 0:
        raise ConfigError("model.parameters.a: must be > 0 (normalizable density)")
    nb = m.get("neighborhood", "default")
    if not (nb == "default" or nb == "nearest_neighbor" or isinstance(nb, list)):
        raise ConfigError("model.neighborhood: 'default', 'nearest_neighbor', "
                          "or a list of offsets")
    if family == "gaussian_product" and nb != "default":
        raise ConfigError("model.neighborhood: the product model is on-site only")
    model = ModelSpec(family, dict(parameters), nb if isinstance(nb, str) else list(nb))

    g = doc["graph"]
    _check_keys(g, {"d", "L", "vertex_list", "boundary_mode", "boundary_constant"},
                {"d"}, "graph")
    d = _number(g, "d", "graph", lo=1, integer=True)
    L = _number(g, "L", "graph", lo=0, integer=True) if "L" in g else None
    vl = g.get("vertex_list")
    if vl is not None and L is not None:
        raise ConfigError("graph: give either L or vertex_list, not both")
    mode = g.get("boundary_mode", "zero")
    if mode not in ("zero", "constant", "free"):
        raise ConfigError(f"graph.boundary_mode: unknown mode {mode!r}")
    const = (_number(g, "boundary_constant", "graph")
             if "boundary_constant" in g else 0.0)
    graph = GraphSpec(d, L, vl, mode, const)

    r = doc["run"]
    _check_keys(r, {"steps", "tau", "tau_grid", "n_list", "replicas", "thin",
                    "init", "burn_steps", "increment_family", "cylinder",
                    "battery", "corrupt_determinism"},
                {"steps"}, "run")
    steps = _number(r, "steps", "run", lo=1, integer=True)
    tau = _number(r, "tau", "run", lo=0) if "tau" in r else None
    grid = None
    if "tau_grid" in r:
        if not isinstance(r["tau_grid"], list) or not r["tau_grid"]:
            raise ConfigError("run.tau_grid: expected a nonempty list")
        grid = [_number({"t": t}, "t", "run.tau_grid", lo=0) for t in r["tau_grid"]]
        if grid != sorted(grid) or len(set(grid)) != len(grid):
            raise ConfigError("run.tau_grid: must be strictly increasing")
    n_list = None
    if "n_list" in r:
        if not isinstance(r["n_list"], list) or not r["n_list"]:
            raise ConfigError("run.n_list: expected a nonempty list")
        n_list = [_number({"n": n}, "n", "run.n_list", lo=1, integer=True)
                  for n in r["n_list"]]
        if n_list != sorted(set(n_list)):
            raise ConfigError("run.n_list: must be strictly increasing")
    replicas = _number(r, "replicas", "run", lo=1, integer=True) if "replicas" in r else 8
    thin = _number(r, "thin", "run", lo=1, integer=True) if "thin" in r else 10
    init = r.get("init", "exact_gaussian")
    if init not in INIT_MODES:
        raise ConfigError(f"run.init: unknown mode {init!r}")
    burn = (_number(r, "burn_steps", "run", lo=1, integer=True)
            if "burn_steps" in r else None)
    fam = r.get("increment_family", "standard_normal")
    if fam not in INCREMENT_FAMILIES:
        raise ConfigError(f"run.increment_family: unknown family {fam!r}")
    cyl = r.get("cylinder")
    if cyl is not None and cyl not in CYLINDER_FUNCTIONS:
        raise ConfigError(f"run.cylinder: unknown function {cyl!r}; built-ins: "
                          f"{', '.join(sorted(CYLINDER_FUNCTIONS))}")
    battery = r.get("battery")
    if battery is not None:
        if not isinstance(battery, list):
            raise ConfigError("run.battery: expected a list of check names")
        if not battery:
            raise ConfigError("run.battery: empty battery")
    corrupt = r.get("corrupt_determinism", False)
    if not isinstance(corrupt, bool):
        raise ConfigError("run.corrupt_determinism: expected a boolean")
    run = RunSpec(steps, tau, grid, n_list, replicas, thin, init, burn, fam,
                  cyl, battery, corrupt)

    seed = _number(doc, "seed", "config", lo=0, integer=True)
    out = doc.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("config.output_dir: expected a nonempty string")
    return ExperimentConfig(model, graph, run, seed, out, raw=doc)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}")
    return parse_config(doc)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def build_neighborhood(cfg: ExperimentConfig) -> Neighborhood:
    nb = cfg.model.neighborhood
    d = cfg.graph.d
    if isinstance(nb, list):
        got = Neighborhood.from_offsets(nb)
        if got.d != d:
            raise ConfigError("model.neighborhood: offset dimension != graph.d")
        return got
    if nb == "nearest_neighbor":
        return nearest_neighbor(d)
    # family defaults: on-site for the product model, nearest-neighbor else
    if cfg.model.family == "gaussian_product":
        from .lattice import self_neighborhood

        return self_neighborhood(d)
    return nearest_neighbor(d)


def build_model(cfg: ExperimentConfig) -> InteractionModel:
    nb = build_neighborhood(cfg)
    fam = cfg.model.family
    p = cfg.model.params
    if fam == "gaussian_product":
        return gaussian_product(p.get("variance", 1.0), d=cfg.graph.d)
    if fam == "gff":
        return gff(p.get("beta", 1.0), p.get("m2", 1.0), neighborhood=nb)
    if fam == "phi4":
        return phi4(p.get("a", 1.0), p.get("b", 0.0), p.get("coupling", 1.0),
                    neighborhood=nb)
    raise ConfigError(f"unhandled family {fam}")


def build_window(cfg: ExperimentConfig, model: InteractionModel,
                 n_override: int | None = None) -> Window:
    g = cfg.graph
    if cfg.graph.boundary_mode == "free" and not model.supports_free_boundary:
        raise ConfigError(f"graph.boundary_mode: {model.family} does not support "
                          "free boundaries")
    if n_override is not None:
        if cfg.model.family == "gaussian_product":
            return build_line(n_override, model.neighborhood, g.boundary_mode,
                              g.boundary_constant)
        side = round(n_override ** (1.0 / g.d))
        if side % 2 != 1 or side**g.d != n_override:
            raise ConfigError(f"run.n_list: n={n_override} is not (2L+1)^{g.d}; "
                              "only the product family supports arbitrary n")
        return build_box(g.d, (side - 1) // 2, model.neighborhood,
                         g.boundary_mode, g.boundary_constant)
    if g.vertex_list is not None:
        return Window(g.vertex_list, model.neighborhood, g.boundary_mode,
                      g.boundary_constant)
    if g.L is None:
        raise ConfigError("graph: need L, vertex_list, or run.n_list")
    return build_box(g.d, g.L, model.neighborhood, g.boundary_mode,
                     g.boundary_constant)
