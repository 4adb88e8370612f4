"""Project directory layout, ``project.ini`` config and run manifests.

Example ``project.ini``::

    [project]
    name = smart-charging
    features = features
    scenarios = scenarios
    bindings = bindings
    output = out

    [stakeholder:evu]
    name = Electric vehicle user
    weight = 0.5

    [estimation]
    alpha = 5
    beta = 1
    gamma = 3
    value_unit = 1

    [cost_overrides]
    umc = 12

    [value_overrides]
    umc.evu = 7

    [search]
    population = 100
    generations = 250
    crossover_rate = 0.9
    seed = 42

    [engine]
    strategy = priority
    budget = 100

Stakeholder sections keep their file order. Keys are case-sensitive and
only ``=`` separates key from value.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .estimation import EstimationParams
from .features import Stakeholder, load_feature_file
from .monrp import SearchParams
from .scenarios import PRIORITY, load_scenario_file

CONFIG_NAME = "project.ini"


class ConfigError(Exception):
    pass


@dataclass
class ProjectConfig:
    root: Path
    name: str = "project"
    stakeholders: list[Stakeholder] = field(default_factory=list)
    features_dir: Path | None = None
    scenarios_dir: Path | None = None
    bindings_dir: Path | None = None
    output_dir: Path | None = None
    estimation: EstimationParams = field(default_factory=EstimationParams)
    search: SearchParams = field(default_factory=SearchParams)
    strategy: str = PRIORITY
    budget: int = 100

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_NAME


def _num(section, key, default, cast=float):
    raw = section.get(key, "").strip() if section is not None else ""
    if not raw:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a valid {cast.__name__}") from None


def load_config(root) -> ProjectConfig:
    root = Path(root)
    path = root / CONFIG_NAME
    if not path.is_file():
        raise ConfigError(f"no {CONFIG_NAME} in {root}")
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    proj = cp["project"] if cp.has_section("project") else {}
    cfg = ProjectConfig(root=root, name=proj.get("name", root.name))
    cfg.features_dir = root / proj.get("features", "features")
    cfg.scenarios_dir = root / proj.get("scenarios", "scenarios")
    cfg.bindings_dir = root / proj.get("bindings", "bindings")
    cfg.output_dir = root / proj.get("output", "out")

    for sec in cp.sections():
        if sec.startswith("stakeholder:"):
            sid = sec.split(":", 1)[1].strip()
            s = cp[sec]
            cfg.stakeholders.append(Stakeholder(sid, s.get("name", sid), _num(s, "weight", 0.0)))

    est = cp["estimation"] if cp.has_section("estimation") else None
    costs = {}
    if cp.has_section("cost_overrides"):
        costs = {k: _num(cp["cost_overrides"], k, 0.0) for k in cp["cost_overrides"]}
    values = {}
    if cp.has_section("value_overrides"):
        for k in cp["value_overrides"]:
            fid, dot, sid = k.partition(".")
            if not dot:
                raise ConfigError(f"value override key {k!r} must be <feature>.<stakeholder>")
            values[(fid, sid)] = _num(cp["value_overrides"], k, 0.0)
    try:
        cfg.estimation = EstimationParams(
            _num(est, "alpha", 5.0), _num(est, "beta", 1.0), _num(est, "gamma", 3.0),
            _num(est, "value_unit", 1.0), costs, values,
        )
        srch = cp["search"] if cp.has_section("search") else None
        cfg.search = SearchParams(
            _num(srch, "population", 100, int), _num(srch, "generations", 250, int),
            _num(srch, "crossover_rate", 0.9), _num(srch, "mutation_rate", None),
            _num(srch, "seed", 0, int),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    eng = cp["engine"] if cp.has_section("engine") else None
    cfg.strategy = eng.get("strategy", PRIORITY).strip() if eng is not None else PRIORITY
    cfg.budget = _num(eng, "budget", 100, int)
    return cfg


def feature_files(cfg: ProjectConfig) -> list[Path]:
    return sorted(cfg.features_dir.glob("*.feature"))


def load_features(cfg: ProjectConfig):
    return [load_feature_file(p) for p in feature_files(cfg)]


def scenario_files(cfg: ProjectConfig) -> list[Path]:
    return sorted(cfg.scenarios_dir.glob("*.scn"))


def load_programs(cfg: ProjectConfig):
    """Feature programs (``<feature>.scn``) and CS-internal programs (``<cs>.internal.scn``)."""
    programs, internal = {}, {}
    for p in scenario_files(cfg):
        prog = load_scenario_file(p)
        if p.name.endswith(".internal.scn"):
            internal[p.name[: -len(".internal.scn")]] = prog
        else:
            programs[p.stem] = prog
    return programs, internal


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str]
    seed: int | None
    outputs: list[str]
    tool_version: str = __version__
    timestamp: str = ""

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "outputs": self.outputs,
        }
        return json.dumps(doc, indent=2) + "\n"


def write_manifest(out_dir, manifest: RunManifest) -> Path:
    path = Path(out_dir) / f"manifest-{manifest.command}.json"
    write_atomic(path, manifest.to_json())
    return path


def digests(paths, base) -> dict[str, str]:
    base = Path(base)
    out = {}
    for p in paths:
        p = Path(p)
        try:
            key = str(p.resolve().relative_to(base.resolve()))
        except ValueError:
            key = str(p)
        out[key] = sha256_file(p)
    return out
