"""Scene construction, trials, sweeps and the command-line interface."""

from .config import (
    PRESETS,
    ConfigError,
    ObjectConfig,
    RodConfig,
    SceneConfig,
    SweepSpec,
    apply_preset,
    load_scene,
    load_sweep,
    parse_scene,
    parse_sweep,
    save_scene,
    scene_to_ini,
)
