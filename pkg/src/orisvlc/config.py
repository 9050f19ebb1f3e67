"""Run configuration: JSON document <-> scene, radio, solver and campaign settings.

The document uses degrees, W, Hz and meters; conversion to radians happens
once inside the scene. Serialization is canonical (sorted keys, two-space
indent, ``repr`` floats) so parse/serialize round trips are byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import jsonschema

from .channel import RadioConfig
from .geometry import GeometryError, RoomSpec, SceneConfig, build_scene
from .milp import SolverConfig


class ConfigParseError(ValueError):
    """The document is not valid JSON."""


class SchemaViolation(ValueError):
    """The document is JSON but breaks the schema or a semantic rule."""


@dataclass(frozen=True)
class CampaignSettings:
    trials: int = 1000
    trials_by_grid: tuple = (((90, 20), 100),)
    node_limit: int = 20  # branch-and-bound nodes per solve inside campaigns
    master_seed: int = 0
    workers: int = 1
    output_dir: str = "results"


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiment: CampaignSettings = field(default_factory=CampaignSettings)

    def campaign_solver(self) -> SolverConfig:
        return replace(self.solver, node_limit=self.experiment.node_limit)


def schema() -> dict:
    return json.loads(resources.files("orisvlc").joinpath("data/config_schema.json").read_text())


def to_dict(cfg: RunConfig) -> dict:
    s, r, v, e = cfg.scene, cfg.radio, cfg.solver, cfg.experiment
    return {
        "scene": {
            "room": {"width": s.room.width, "depth": s.room.depth, "height": s.room.height},
            "led_positions_xy": [list(p) for p in s.led_positions_xy],
            "half_power_semiangle_deg": s.half_power_semiangle_deg,
            "pd": {"area_m2": s.pd_area, "fov_deg": s.pd_fov_deg,
                   "responsivity_a_per_w": s.pd_responsivity},
            "oris_grid": list(s.oris_grid),
            "wall_grid": None if s.wall_grid is None else list(s.wall_grid),
            "reflectance_oris": s.reflectance_oris,
            "reflectance_wall": s.reflectance_wall,
            "user": {"body_radius": s.body_radius, "body_height": s.body_height,
                     "device_offset": s.device_offset, "device_height": s.device_height},
        },
        "radio": {
            "total_power_w": r.total_power,
            "subcarriers": r.subcarriers,
            "noise_psd_w_per_hz": r.noise_psd,
            "bandwidth_hz": r.bandwidth,
            "noise_bandwidth": r.noise_bandwidth,
        },
        "solver": {
            "epsilon": v.epsilon,
            "node_limit": v.node_limit,
            "gap_rel": v.gap_rel,
            "integrality_tol": v.integrality_tol,
            "feasibility_tol": v.feasibility_tol,
            "tie_break": v.tie_break,
            "max_lp_cells": v.max_lp_cells,
            "heuristic_every": v.heuristic_every,
        },
        "experiment": {
            "trials": e.trials,
            "trials_by_grid": [{"grid": list(g), "trials": t} for g, t in e.trials_by_grid],
            "node_limit": e.node_limit,
            "master_seed": e.master_seed,
            "workers": e.workers,
            "output_dir": e.output_dir,
        },
    }


def _pick(section: dict, mapping: dict) -> dict:
    return {attr: section[key] for key, attr in mapping.items() if key in section}


def from_dict(doc: dict) -> RunConfig:
    """Validate ``doc`` and build a :class:`RunConfig`; missing keys take defaults."""
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaViolation(f"{where}: {exc.message}") from None

    sc = doc["scene"]
    scene_kw = _pick(sc, {
        "half_power_semiangle_deg": "half_power_semiangle_deg",
        "reflectance_oris": "reflectance_oris",
        "reflectance_wall": "reflectance_wall",
    })
    if "room" in sc:
        scene_kw["room"] = RoomSpec(**sc["room"])
    if "led_positions_xy" in sc:
        scene_kw["led_positions_xy"] = tuple(tuple(float(x) for x in p) for p in sc["led_positions_xy"])
    if "oris_grid" in sc:
        scene_kw["oris_grid"] = tuple(sc["oris_grid"])
    if "wall_grid" in sc:
        scene_kw["wall_grid"] = None if sc["wall_grid"] is None else tuple(sc["wall_grid"])
    scene_kw.update(_pick(sc.get("pd", {}), {
        "area_m2": "pd_area", "fov_deg": "pd_fov_deg", "responsivity_a_per_w": "pd_responsivity"}))
    scene_kw.update(_pick(sc.get("user", {}), {
        "body_radius": "body_radius", "body_height": "body_height",
        "device_offset": "device_offset", "device_height": "device_height"}))

    radio_kw = _pick(doc["radio"], {
        "total_power_w": "total_power", "subcarriers": "subcarriers",
        "noise_psd_w_per_hz": "noise_psd", "bandwidth_hz": "bandwidth",
        "noise_bandwidth": "noise_bandwidth"})
    solver_kw = _pick(doc["solver"], {k: k for k in (
        "epsilon", "node_limit", "gap_rel", "integrality_tol", "feasibility_tol",
        "tie_break", "max_lp_cells", "heuristic_every")})
    ex = doc["experiment"]
    exp_kw = _pick(ex, {k: k for k in ("trials", "node_limit", "master_seed", "workers", "output_dir")})
    if "trials_by_grid" in ex:
        exp_kw["trials_by_grid"] = tuple((tuple(d["grid"]), d["trials"]) for d in ex["trials_by_grid"])

    try:
        scene = SceneConfig(**scene_kw)
        # the PD responsivity is a single physical quantity shared with the radio model
        radio = RadioConfig(responsivity=scene.pd_responsivity, **radio_kw)
        cfg = RunConfig(scene, radio, SolverConfig(**solver_kw), CampaignSettings(**exp_kw))
        build_scene(scene)  # grids must tile their bands, LEDs must sit on the ceiling
    except (GeometryError, ValueError) as exc:
        raise SchemaViolation(str(exc)) from None
    return cfg


def dumps(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def load(path) -> RunConfig:
    """Read a config file; ``OSError`` propagates for unreadable paths."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads(text)


def default_config_text() -> str:
    return resources.files("orisvlc").joinpath("data/default_config.json").read_text()


def default_config() -> RunConfig:
    return loads(default_config_text())
