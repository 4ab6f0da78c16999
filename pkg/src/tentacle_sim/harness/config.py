"""Scene and sweep configuration files.

Files are INI documents with SI lengths and angles in degrees. Every value
has a default, so a file naming only a design and a seed is complete; the
resolved configuration is echoed into the header of every output.

Sections of a scene file: ``[scene]``, ``[design]`` (shared by all
tentacles), optional ``[design.K]`` blocks overriding fields for tentacle
``K``, ``[rod]``, ``[contact]``, ``[actuation]`` and ``[object]``.
"""

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace

from ..actuation import ActuationSchedule
from ..interaction import ContactParams
from ..origami import DesignError, RibbonDesign, design_from_mapping, design_to_mapping


class ConfigError(ValueError):
    """Parse or validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class RodConfig:
    n_elements: int = 100
    base_radius: float = 0.02
    density: float = 100.0
    youngs_modulus: float = 1.0e5
    shear_modulus: float = None
    damping: float = 5.0


@dataclass(frozen=True)
class ObjectConfig:
    """Fixed target cylinder, horizontal below the base ring by default."""

    radius: float = 0.0225
    length: float = 0.4
    center: tuple = (0.0, 0.0, -0.15)
    axis: tuple = (0.9238795325112867, 0.3826834323650898, 0.0)  # 22.5 deg, between base vertices


@dataclass(frozen=True)
class SceneConfig:
    design: RibbonDesign = field(default_factory=RibbonDesign)
    overrides: tuple = ()  # ((index, {field: value}), ...) per-tentacle design edits
    n_tentacles: int = 8
    circumradius: float = 0.12
    tilt: float = math.radians(2.0)
    alternate_chirality: bool = True
    base_height: float = 0.0
    rod: RodConfig = field(default_factory=RodConfig)
    contact: ContactParams = field(default_factory=ContactParams)
    schedule: ActuationSchedule = field(default_factory=ActuationSchedule)
    object: ObjectConfig = field(default_factory=ObjectConfig)
    gravity: bool = True
    g: float = 9.81
    duration: float = 10.0
    dt: float = 2e-5
    seed: int = 0
    decimation: float = 0.01
    table_levels: int = 64
    smoothing_sigma: float = 2.0
    base_remap: str = "mean"  # mean | per_tentacle | off
    self_link_offset: float = 0.5  # multiple of the local element radius
    extension_factor: float = 50.0

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def decimation_steps(self):
        return max(1, int(round(self.decimation / self.dt)))

    def designs(self):
        """Design of every tentacle, before chirality mirroring."""
        out = [self.design] * self.n_tentacles
        for index, edits in self.overrides:
            out[index] = replace(self.design, **dict(edits))
        return out

    def violations(self):
        errs = []
        if self.n_tentacles < 1:
            errs.append(f"scene.n_tentacles must be >= 1 (got {self.n_tentacles})")
        if not self.circumradius >= 0:
            errs.append("scene.circumradius must be >= 0")
        if not self.dt > 0:
            errs.append("scene.dt must be > 0")
        if not self.duration >= 0:
            errs.append("scene.duration must be >= 0")
        elif self.dt > 0 and abs(self.duration / self.dt - self.n_steps) > 1e-6 * max(1.0, self.n_steps):
            errs.append(f"scene.duration / scene.dt must be an integer step count (got {self.duration / self.dt})")
        if not self.decimation > 0:
            errs.append("scene.decimation must be > 0")
        if self.table_levels < 2:
            errs.append("scene.table_levels must be >= 2")
        if self.base_remap not in ("mean", "per_tentacle", "off"):
            errs.append(f"scene.base_remap must be mean, per_tentacle or off (got {self.base_remap!r})")
        if not self.self_link_offset > 0:
            errs.append("scene.self_link_offset must be > 0")
        if self.rod.n_elements < 3:
            errs.append("rod.n_elements must be >= 3")
        if not self.rod.base_radius > 0:
            errs.append("rod.base_radius must be > 0")
        if not (self.rod.density > 0 and self.rod.youngs_modulus > 0):
            errs.append("rod.density and rod.youngs_modulus must be > 0")
        if self.rod.damping < 0:
            errs.append("rod.damping must be >= 0")
        if not self.object.radius > 0 or not self.object.length > 0:
            errs.append("object.radius and object.length must be > 0")
        for index, _ in self.overrides:
            if not 0 <= index < self.n_tentacles:
                errs.append(f"design.{index}: no such tentacle")
        return errs

    def validate(self):
        errs = self.violations()
        if errs:
            raise ConfigError(errs)
        return self


PRESETS = {
    "paper": dict(duration=10.0, dt=2e-5, rod=dict(n_elements=100), schedule=dict(rate=0.03)),
    "desk": dict(duration=4.0, dt=1e-4, rod=dict(n_elements=25), schedule=dict(rate=0.075)),
}


def apply_preset(config, name):
    """Overlay one of :data:`PRESETS` on ``config``."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {', '.join(sorted(PRESETS))})")
    p = dict(PRESETS[name])
    rod = replace(config.rod, **p.pop("rod", {}))
    schedule = replace(config.schedule, **p.pop("schedule", {}))
    return replace(config, rod=rod, schedule=schedule, **p)


# -- text form -----------------------------------------------------------

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}
_SCENE_ANGLES = {"tilt"}


def _to_bool(raw):
    key = str(raw).strip().lower()
    if key not in _BOOL:
        raise ValueError(f"not a boolean: {raw!r}")
    return _BOOL[key]


def _to_vector(raw):
    parts = [float(x) for x in str(raw).replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError(f"expected three numbers, got {raw!r}")
    return tuple(parts)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return " ".join(repr(float(v)) for v in value)
    if value is None:
        return "none"
    if isinstance(value, str):
        return value
    return repr(value)


def _convert(template, key, raw):
    """Parse ``raw`` like the default ``template`` of a field."""
    if isinstance(template, bool):
        return _to_bool(raw)
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, tuple):
        return _to_vector(raw)
    if isinstance(template, str):
        return str(raw).strip()
    if template is None:
        return None if str(raw).strip().lower() == "none" else float(raw)
    raise ValueError(f"unsupported field {key}")


def _parse_section(cls, section, name, problems, angles=(), exclude=()):
    defaults = cls()
    known = {f.name for f in fields(cls)} - set(exclude)
    kwargs = {}
    for key, raw in section.items():
        if key not in known:
            problems.append(f"[{name}] unknown field {key!r}")
            continue
        try:
            val = _convert(getattr(defaults, key), key, raw)
            if key in angles:
                val = math.radians(val)
            kwargs[key] = val
        except ValueError as exc:
            problems.append(f"[{name}] field {key!r}: {exc}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        problems.append(f"[{name}] {exc}")
        return defaults


_SCENE_SKIP = {"design", "overrides", "rod", "contact", "schedule", "object"}


def parse_scene(text, source="<scene>"):
    """Parse scene text; raises :class:`ConfigError` with every problem found."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    problems = []
    allowed = {"scene", "design", "rod", "contact", "actuation", "object"}
    for sec in parser.sections():
        if sec not in allowed and not sec.startswith("design."):
            problems.append(f"{source}: unknown section [{sec}]")

    design = RibbonDesign()
    if parser.has_section("design"):
        try:
            design = design_from_mapping(dict(parser["design"]))
        except DesignError as exc:
            problems.append(f"[design] {exc}")
    overrides = []
    base = design_to_mapping(design)
    for sec in parser.sections():
        if sec.startswith("design."):
            try:
                index = int(sec.split(".", 1)[1])
                edits = dict(parser[sec])
                full = design_from_mapping({**base, **edits}, sec)
                overrides.append((index, tuple(sorted((k, getattr(full, k)) for k in edits))))
            except (ValueError, DesignError) as exc:
                problems.append(f"[{sec}] {exc}")

    rod = _parse_section(RodConfig, parser["rod"] if parser.has_section("rod") else {}, "rod", problems)
    contact = _parse_section(ContactParams, parser["contact"] if parser.has_section("contact") else {}, "contact", problems)
    schedule = _parse_section(
        ActuationSchedule, parser["actuation"] if parser.has_section("actuation") else {}, "actuation", problems, exclude=("seed",)
    )
    obj = _parse_section(ObjectConfig, parser["object"] if parser.has_section("object") else {}, "object", problems)

    scene_kwargs = {}
    defaults = SceneConfig()
    if parser.has_section("scene"):
        for key, raw in parser["scene"].items():
            if key in _SCENE_SKIP or not hasattr(defaults, key) or key.startswith("_"):
                problems.append(f"[scene] unknown field {key!r}")
                continue
            try:
                val = _convert(getattr(defaults, key), key, raw)
                scene_kwargs[key] = math.radians(val) if key in _SCENE_ANGLES else val
            except ValueError as exc:
                problems.append(f"[scene] field {key!r}: {exc}")
    config = SceneConfig(
        design=design,
        overrides=tuple(sorted(overrides)),
        rod=rod,
        contact=contact,
        schedule=schedule,
        object=obj,
        **scene_kwargs,
    )
    problems += config.violations()
    if problems:
        raise ConfigError(problems)
    return config


def load_scene(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_scene(text, source=str(path))


def scene_to_ini(config):
    """INI text that :func:`parse_scene` maps back to ``config``."""
    parser = configparser.ConfigParser()
    scene = {}
    for f in fields(SceneConfig):
        if f.name in _SCENE_SKIP:
            continue
        val = getattr(config, f.name)
        scene[f.name] = _fmt(round(math.degrees(val), 12)) if f.name in _SCENE_ANGLES else _fmt(val)
    parser["scene"] = scene
    parser["design"] = design_to_mapping(config.design)
    for index, edits in config.overrides:
        full = design_to_mapping(replace(config.design, **dict(edits)))
        parser[f"design.{index}"] = {k: full[k] for k, _ in edits}
    parser["rod"] = {k: _fmt(v) for k, v in asdict(config.rod).items()}
    parser["contact"] = {k: _fmt(v) for k, v in asdict(config.contact).items()}
    parser["actuation"] = {k: _fmt(v) for k, v in asdict(config.schedule).items() if k != "seed"}
    parser["object"] = {k: _fmt(v) for k, v in asdict(config.object).items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_scene(config, path):
    with open(path, "w") as fh:
        fh.write(scene_to_ini(config))


def echo_lines(config):
    """The resolved configuration as ``# section.key = value`` header lines."""
    out = []
    section = None
    for line in scene_to_ini(config).splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        key, _, value = line.partition("=")
        out.append(f"# {section}.{key.strip()} = {value.strip()}")
    return out


# -- sweeps --------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """Grid over crease angles, taper and spacing ratios (angles in radians).

    ``mode`` is ``noise`` (fixed object, schedule noise only, one seed per
    trial) or ``object`` (object pose and radius also varied per trial,
    drawn from ``object_offsets``/``object_tilts``/``object_radii``).
    """

    alpha: tuple = (math.radians(90.0),)
    beta: tuple = (math.radians(90.0),)
    taper_ratio: tuple = (0.5,)
    spacing_ratio: tuple = (0.5,)
    trials: int = 5
    mode: str = "noise"
    gravity: bool = True
    seed: int = 0
    object_offsets: tuple = (0.0, 0.02, -0.02)
    object_tilts: tuple = (0.0, math.radians(15.0), math.radians(-15.0))
    object_radii: tuple = (0.0225, 0.015, 0.02)

    def violations(self):
        errs = []
        for name in ("alpha", "beta", "taper_ratio", "spacing_ratio"):
            if len(getattr(self, name)) == 0:
                errs.append(f"sweep.{name} grid is empty")
        if self.trials < 1:
            errs.append("sweep.trials must be >= 1")
        if self.mode not in ("noise", "object"):
            errs.append(f"sweep.mode must be noise or object (got {self.mode!r})")
        return errs

    def validate(self):
        errs = self.violations()
        if errs:
            raise ConfigError(errs)
        return self

    def cells(self):
        """Design cells in row-major order over (alpha, beta, taper, spacing)."""
        out = []
        for a in self.alpha:
            for b in self.beta:
                for rt in self.taper_ratio:
                    for rs in self.spacing_ratio:
                        out.append(dict(crease_angle_alpha=a, crease_angle_beta=b, taper_ratio=rt, spacing_ratio=rs))
        return out


_SWEEP_ANGLES = {"alpha", "beta", "object_tilts"}


def parse_sweep(text, source="<sweep>"):
    """Sweep file: a ``[sweep]`` section plus the scene template sections."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    problems = []
    kwargs = {}
    defaults = SweepSpec()
    if parser.has_section("sweep"):
        for key, raw in parser["sweep"].items():
            if not hasattr(defaults, key):
                problems.append(f"[sweep] unknown field {key!r}")
                continue
            try:
                template = getattr(defaults, key)
                if isinstance(template, tuple):
                    vals = tuple(float(x) for x in str(raw).replace(",", " ").split())
                    kwargs[key] = tuple(math.radians(v) for v in vals) if key in _SWEEP_ANGLES else vals
                else:
                    kwargs[key] = _convert(template, key, raw)
            except ValueError as exc:
                problems.append(f"[sweep] field {key!r}: {exc}")
        parser.remove_section("sweep")
    if problems:
        raise ConfigError(problems)
    spec = SweepSpec(**kwargs).validate()
    buf = io.StringIO()
    parser.write(buf)
    return spec, parse_scene(buf.getvalue(), source)


def load_sweep(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_sweep(text, source=str(path))


def sweep_to_ini(spec):
    lines = ["[sweep]"]
    for f in fields(SweepSpec):
        val = getattr(spec, f.name)
        if isinstance(val, tuple):
            vals = [round(math.degrees(v), 12) if f.name in _SWEEP_ANGLES else v for v in val]
            lines.append(f"{f.name} = " + " ".join(repr(float(v)) for v in vals))
        else:
            lines.append(f"{f.name} = {_fmt(val)}")
    return "\n".join(lines) + "\n"
