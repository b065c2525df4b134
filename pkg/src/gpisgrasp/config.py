"""Run configuration: flat key=value text with [section] headers.

The format is deliberately minimal and diff-friendly: blank lines and
'#' comments are ignored, values are parsed by the declared field type,
and emit/parse round-trips exactly.  This module stays importable without
numpy so the command-line entry point can cap thread counts before any
numeric library loads.
"""

import math
from dataclasses import dataclass, field, fields

from .errors import ConfigError


@dataclass
class ObjectConfig:
    name: str = "sphere"          # builtin object, ignored when mesh_path is set
    mesh_path: str = ""           # OBJ file path; empty means builtin
    scale: float = 1.0


@dataclass
class CameraConfig:
    distance: float = 0.45
    azimuth_deg: float = 40.0
    elevation_deg: float = 20.0
    fov_deg: float = 60.0
    resolution: int = 64
    depth_noise: float = 0.002


@dataclass
class HandConfig:
    reach_radius: float = 0.25
    finger_travel: float = 0.15
    knuckle_offset: float = 0.05
    tip_radius: float = 0.01
    standoff: float = 0.02
    contact_pos_noise: float = 0.001
    contact_normal_noise: float = 0.01


@dataclass
class GpisConfig:
    max_cloud_points: int = 800
    vision_noise: float = 1e-4
    tactile_noise: float = 1e-5
    anchor_noise: float = 1e-6
    domain_inflate: float = 0.2
    com_grid: int = 32
    com_var_cells: int = 256
    metrics_grid: int = 32
    surface_grid: int = 48


@dataclass
class UncertaintyConfig:
    sigma_n2: float = math.pi / 8.0
    sigma_c2: float = 0.0025
    sigma_mu2: float = 0.1250
    mu_hat: float = 1.5
    n_samples: int = 10
    delta: float = 0.01
    cone_edges: int = 8


@dataclass
class ExploreConfig:
    lambda_: float = 1.0
    n_stop: int = 60
    prior_min_grasps: int = 5
    prior_pfc_min: float = 0.4
    prior_attempt_cap: int = 200
    stable_pfc_min: float = 0.5
    acq_budget: int = 2000
    sigma_thumb: float = 0.05
    prior_sigma: float = 0.015
    prior_squeeze: float = 0.035
    surrogate_sigma_se: float = 0.001
    surrogate_length_scale: float = 0.2
    surrogate_noise: float = 1e-7
    surrogate_input: str = "commanded"
    offset_min: float = -0.05
    offset_max: float = 0.05
    stop_grasp_count: int = 0
    stop_grasp_pfc: float = 0.8


@dataclass
class RunSection:
    seed: int = 0
    out: str = "runs/out"
    metrics_every: int = 10
    hausdorff_samples: int = 10000
    deterministic_log: bool = True


@dataclass
class RunConfig:
    """Everything one exploration or baseline run depends on."""

    object: ObjectConfig = field(default_factory=ObjectConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    hand: HandConfig = field(default_factory=HandConfig)
    gpis: GpisConfig = field(default_factory=GpisConfig)
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    explore: ExploreConfig = field(default_factory=ExploreConfig)
    run: RunSection = field(default_factory=RunSection)


_SECTIONS = {f.name: f.type for f in fields(RunConfig)}


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(text: str, target_type, line: int):
    text = text.strip()
    try:
        if target_type is bool:
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as {target_type.__name__}", line) from exc


def emit(config: RunConfig) -> str:
    """Serialize to the key=value text format (stable field order)."""
    lines = []
    for section_field in fields(RunConfig):
        section = getattr(config, section_field.name)
        lines.append(f"[{section_field.name}]")
        for f in fields(section):
            lines.append(f"{f.name} = {_format_value(getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)


def parse(text: str) -> RunConfig:
    """Parse the key=value format; unknown sections or keys are errors
    with 1-based line numbers."""
    config = RunConfig()
    section = None
    section_name = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section_name = line[1:-1].strip()
            if section_name not in _SECTIONS:
                raise ConfigError(f"unknown section [{section_name}]", lineno)
            section = getattr(config, section_name)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        matching = [f for f in fields(section) if f.name == key]
        if not matching:
            raise ConfigError(f"unknown key {key!r} in [{section_name}]", lineno)
        setattr(section, key, _parse_value(value, matching[0].type, lineno))
    return config


def load(path) -> RunConfig:
    try:
        with open(path) as f:
            return parse(f.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def save(config: RunConfig, path):
    with open(path, "w") as f:
        f.write(emit(config))
