"""Experiment configuration: TOML schema, validation and object builders.

A configuration file looks like::

    name = "ac2-heterogeneous"
    seed = 0

    [nonlinearity]
    shape = "logistic"            # or "concave" with b in (-1, 0]
    profile = { kind = "tanh", minus = 1.0, plus = 2.0, width = 2.0 }

    [diffusivity]                 # optional
    kind = "tanh"                 # or "constant" (value = ...)
    minus = 0.5
    plus = 2.0

    [recipe]
    name = "Supercritical"        # Glued, Critical, BcSegment, TwoSpeedHomogeneous,
    kappa = 0.5                   # Spreading, Speedset, Comparison, Region
    T = 60

    [solver]
    dx = 0.05
    dt = 0.01
    width = 600

    [[diagnostics]]
    kind = "speed"
    criterion = "AC2"
    window = [20, 60]
    expect = 4.5
    rel_tol = 0.02

Time profiles: ``constant`` (value), ``tanh`` (minus, plus, width, center),
``flat`` (minus, plus, t_start, t_stop), ``bump`` (base, amplitude, rate).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import model
from .constructors import RECIPES, RunParams
from .solver import SchemeParams

EXTRA_RECIPES = ("Speedset", "Comparison", "Region", "Sandwich")
DIAGNOSTIC_KINDS = (
    "speed", "pointwise_speed", "nr1_speed", "position_ratio", "decay", "profile_distance",
    "steepness", "umu", "global_mean", "sandwich", "interface_width", "monotone",
    "refinement", "start_time", "speedset_sweep", "speedset_examples", "comparison",
    "exp_lower_bound", "tail_normalization", "glued_sandwich", "acceleration",
)
PRESET_DIR = Path(__file__).with_name("presets")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    nonlinearity: dict
    recipe: dict
    solver: dict = field(default_factory=dict)
    diagnostics: tuple = ()
    diffusivity: Optional[dict] = None
    sensitivity: dict = field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None
    description: str = ""
    source: Optional[str] = None
    raw: str = ""

    @property
    def recipe_name(self) -> str:
        return self.recipe["name"]


def _num(d: dict, key: str, where: str, default=None, positive=False, lo=None, hi=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {v}")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}.{key}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{where}.{key}: must be <= {hi}, got {v}")
    return v


def build_profile(d: dict, where: str = "nonlinearity.profile") -> model.TimeProfile:
    kind = d.get("kind", "constant")
    try:
        if kind == "constant":
            return model.constant_profile(_num(d, "value", where, positive=True))
        if kind == "tanh":
            return model.tanh_profile(_num(d, "minus", where, positive=True),
                                      _num(d, "plus", where, positive=True),
                                      _num(d, "width", where, 1.0, positive=True),
                                      _num(d, "center", where, 0.0))
        if kind == "flat":
            return model.flat_profile(_num(d, "minus", where, positive=True),
                                      _num(d, "plus", where, positive=True),
                                      _num(d, "t_start", where, -1.0), _num(d, "t_stop", where, 1.0))
        if kind == "bump":
            return model.bump_profile(_num(d, "base", where, positive=True),
                                      _num(d, "amplitude", where, lo=-0.999999),
                                      _num(d, "rate", where, 1.0, positive=True))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown time profile {kind!r}")


def _shape_b(d: dict) -> float:
    shape = d.get("shape", "logistic")
    if shape == "logistic":
        return 0.0
    if shape == "concave":
        b = _num(d, "b", "nonlinearity", 0.0)
        if not -1.0 < b <= 0.0:
            raise ConfigError(f"nonlinearity.b: must lie in (-1, 0], got {b}")
        return b
    raise ConfigError(f"nonlinearity.shape: unknown family {shape!r}")


def build_nonlinearity(cfg: ExperimentConfig) -> model.KppNonlinearity:
    d = cfg.nonlinearity
    prof = d.get("profile", {"kind": "constant", "value": 1.0})
    if not isinstance(prof, dict):
        raise ConfigError("nonlinearity.profile: expected a table")
    return model.separable(build_profile(prof), _shape_b(d))


def build_homogeneous(cfg: ExperimentConfig) -> model.HomogeneousKpp:
    f = build_nonlinearity(cfg)
    if f.mu_minus != f.mu_plus or cfg.nonlinearity.get("profile", {}).get("kind",
                                                                          "constant") != "constant":
        raise ConfigError("nonlinearity.profile: this recipe needs a constant profile")
    return model.homogeneous(f.mu_minus, _shape_b(cfg.nonlinearity))


def build_diffusivity(cfg: ExperimentConfig) -> Optional[model.DiffusivityProfile]:
    d = cfg.diffusivity
    if not d:
        return None
    kind = d.get("kind", "constant")
    if kind == "constant":
        return model.constant_diffusivity(_num(d, "value", "diffusivity", positive=True))
    if kind == "tanh":
        return model.tanh_diffusivity(_num(d, "minus", "diffusivity", positive=True),
                                      _num(d, "plus", "diffusivity", positive=True),
                                      _num(d, "width", "diffusivity", 1.0, positive=True))
    raise ConfigError(f"diffusivity.kind: unknown diffusivity {kind!r}")


def build_run(cfg: ExperimentConfig, refine: int = 1) -> RunParams:
    s = dict(cfg.solver)
    w = "solver"
    recipe = cfg.recipe_name
    spreading = recipe == "Spreading"
    try:
        scheme = SchemeParams(
            dt=_num(s, "dt", w, 0.01, positive=True) / refine,
            diffusion_weight=_num(s, "diffusion_weight", w, 1.0, lo=0.5, hi=1.0),
            boundary_left=_num(s, "boundary_left", w, 0.0 if spreading else 1.0, lo=0.0, hi=1.0),
            boundary_right=_num(s, "boundary_right", w, 0.0, lo=0.0, hi=1.0),
            recenter_margin=_num(s, "recenter_margin", w, 50.0 if spreading else 100.0,
                                 positive=True),
            recenter_anchor=_num(s, "recenter_anchor", w, 0.5 if spreading else 0.25,
                                 lo=1e-6, hi=1 - 1e-6),
            max_drift=(None if s.get("max_drift", None if spreading else 10.0) in (None, 0, 0.0)
                       else _num(s, "max_drift", w, 10.0, positive=True)),
        )
        every = s.get("snapshot_every", 5.0)
        return RunParams(
            dx=_num(s, "dx", w, 0.05, positive=True) / refine,
            width=_num(s, "width", w, 1000.0 if spreading else 600.0, positive=True),
            scheme=scheme,
            snapshot_every=None if not every else _num(s, "snapshot_every", w, 5.0, positive=True),
            snapshot_from=None if "snapshot_from" not in s else _num(s, "snapshot_from", w),
            snapshot_times=tuple(float(v) for v in s.get("snapshot_times", ())),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc


def _check_recipe(cfg: ExperimentConfig) -> None:
    r = cfg.recipe
    name = r.get("name")
    if name not in RECIPES + EXTRA_RECIPES:
        raise ConfigError(f"recipe.name: unknown recipe {name!r}")
    if name in ("Speedset", "Region", "Comparison"):
        return
    T = _num(r, "T", "recipe", 60.0, positive=True)
    f = build_nonlinearity(cfg)
    d = build_diffusivity(cfg)
    mm, mp = f.mu_minus, f.mu_plus
    if d is not None:
        mm, mp = mm / d.sigma_minus, mp / d.sigma_plus
    if name in ("Supercritical", "Sandwich"):
        k = _num(r, "kappa", "recipe", positive=True)
        if not k < math.sqrt(min(mm, mp)):
            raise ConfigError(f"recipe.kappa: must lie in (0, {math.sqrt(min(mm, mp)):.6g})")
    elif name == "Glued":
        km = _num(r, "kappa_minus", "recipe", positive=True)
        kp = _num(r, "kappa_plus", "recipe", positive=True)
        if not (kp <= km < math.sqrt(mm) and kp < math.sqrt(mp)):
            raise ConfigError("recipe.kappa_plus/kappa_minus: need kappa_plus <= kappa_minus < "
                              "sqrt(mu_-) and kappa_plus < sqrt(mu_+)")
    elif name == "BcSegment":
        k = _num(r, "kappa_minus", "recipe", positive=True)
        if not (mp < mm and math.sqrt(mp) <= k < math.sqrt(mm)):
            raise ConfigError("recipe.kappa_minus: need mu_+ < mu_- and "
                              "sqrt(mu_+) <= kappa_minus < sqrt(mu_-)")
    elif name == "TwoSpeedHomogeneous":
        build_homogeneous(cfg)
        c1 = _num(r, "c1", "recipe", positive=True)
        c2 = _num(r, "c2", "recipe", positive=True)
        if not 2.0 * math.sqrt(mm) * (1 - 1e-12) <= c1 < c2:
            raise ConfigError("recipe.c1/c2: need 2 sqrt(mu) <= c1 < c2")
    elif name == "Spreading":
        _num(r, "width", "recipe", 10.0, positive=True)
    del T


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if not cfg.name:
        raise ConfigError("name: missing")
    build_nonlinearity(cfg)
    build_diffusivity(cfg)
    _check_recipe(cfg)
    build_run(cfg)
    for i, d in enumerate(cfg.diagnostics):
        kind = d.get("kind")
        if kind not in DIAGNOSTIC_KINDS:
            raise ConfigError(f"diagnostics[{i}].kind: unknown diagnostic {kind!r}")
        if "window" in d:
            w = d["window"]
            if not (isinstance(w, list) and len(w) == 2 and w[0] < w[1]):
                raise ConfigError(f"diagnostics[{i}].window: expected [t_a, t_b] with t_a < t_b")
    return cfg


def parse_config(text: str, source: Optional[str] = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source or '<config>'}: {exc}") from exc
    known = {"name", "nonlinearity", "recipe", "solver", "diagnostics", "diffusivity",
             "sensitivity", "seed", "output", "description"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown top-level field")
    for key in ("nonlinearity", "recipe"):
        if key not in data:
            raise ConfigError(f"{key}: missing section")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    diags = data.get("diagnostics", [])
    if not isinstance(diags, list):
        raise ConfigError("diagnostics: expected an array of tables")
    cfg = ExperimentConfig(
        name=str(data.get("name", "")), nonlinearity=data["nonlinearity"],
        recipe=data["recipe"], solver=data.get("solver", {}), diagnostics=tuple(diags),
        diffusivity=data.get("diffusivity"), sensitivity=data.get("sensitivity", {}),
        seed=seed, output=data.get("output"), description=str(data.get("description", "")),
        source=source, raw=text)
    return validate_config(cfg)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists() and not path.suffix:
        candidate = PRESET_DIR / f"{path.name}.toml"
        if candidate.exists():
            path = candidate
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    return parse_config(text, str(path))


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.toml") if not p.stem.startswith("suite"))


def load_suite(path) -> list[Path]:
    """Scenario paths of a suite file (``scenarios = [...]``, relative to the file
    or bare preset names)."""
    path = Path(path)
    if not path.exists() and not path.suffix:
        path = PRESET_DIR / f"{path.name}.toml"
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    items = data.get("scenarios", [])
    if not isinstance(items, list):
        raise ConfigError("scenarios: expected an array of paths")
    out = []
    for item in items:
        p = Path(item)
        if not p.is_absolute():
            p = path.parent / p
        if not p.exists() and not p.suffix and (PRESET_DIR / f"{item}.toml").exists():
            p = PRESET_DIR / f"{item}.toml"
        out.append(p)
    return out


def with_recipe(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    r = dict(cfg.recipe)
    r.update(changes)
    return replace(cfg, recipe=r)
