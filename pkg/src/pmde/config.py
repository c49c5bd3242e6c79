"""Run configuration files (TOML) with explicit physical units.

Every physical quantity is a string ``"<number> <unit>"``; bare numbers are
rejected for physical fields. Accepted units:

=============  ==============================================
quantity       units
=============  ==============================================
DGD / delay    fs, ps, ns, s          (stored in ps)
time           ps, ns, us, ms, s      (stored in s)
frequency      Hz, kHz, MHz, GHz, THz (stored in Hz)
angular rate   rad/s, krad/s, Mrad/s  (stored in rad/s)
angle          rad, mrad, deg         (stored in rad)
=============  ==============================================

Grammar (all tables optional except as noted)::

    seed = 1                         # integer, default 0
    [emulator]
    preset = "highend-100"           # or give sections explicitly
    sections = ["50 ps", "50 ps"]
    section_axes = [[1, 0, 0], [1, 0, 0]]
    carrier = "193.4 THz"            # default 193.4 THz
    max_speed = "20 Mrad/s"          # scrambler ceiling used by defaults
    mean_dgd_ratio = 3.0             # "zr" only: max / mean DGD
    [[emulator.scramblers]]          # N+1 entries, or none for defaults
    type = "static"                  # static | stack | seven-plate
    axis = [0, 0, 1]
    retardation = "1.2 rad"
    [[emulator.scramblers]]
    type = "stack"
    time_origin = "0 s"
    plates = [{kind = "HWP", orientation = "0 rad", rate = "5 Mrad/s"}]
    # a plate may carry burst = {start, duration, peak, envelope, axis}
    [[emulator.scramblers]]
    type = "seven-plate"
    index = 2
    [grid]
    center = "193.4 THz"             # default: the carrier
    step = "1 MHz"                   # default 1 MHz
    points = 5                       # default 5
    [time]
    start = "0 s"
    step = "1 us"
    count = 1
    [options]                        # command-specific, see the CLI docs
"""

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np
import tomli
import tomli_w

from .emulator import EmulatorConfig, default_scramblers, preset as make_preset
from .errors import InvalidConfig, ParseError, ValidationError
from .pmd import DEFAULT_STEP_HZ, FrequencyGrid
from .polarization import PlateKind, Retarder
from .scrambler import (
    MAX_SPEED_RADPS,
    BurstProgram,
    Envelope,
    Plate,
    ScramblerTrajectory,
    WaveplateStack,
    seven_plate_stack,
)

UNITS = {
    "dgd": {"fs": 1e-3, "ps": 1.0, "ns": 1e3, "s": 1e12},
    "time": {"ps": 1e-12, "ns": 1e-9, "us": 1e-6, "µs": 1e-6, "ms": 1e-3, "s": 1.0},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "rate": {"rad/s": 1.0, "krad/s": 1e3, "Mrad/s": 1e6},
    "angle": {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180},
}
BASE_UNIT = {"dgd": "ps", "time": "s", "frequency": "Hz", "rate": "rad/s", "angle": "rad"}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ/]+)\s*$")


def parse_quantity(value, kind, where):
    """Parse ``"26 ps"``-style strings into the base unit of ``kind``."""
    if isinstance(value, bool) or not isinstance(value, str):
        raise ValidationError(f"{where}: physical quantity needs an explicit unit, e.g. '1 {BASE_UNIT[kind]}' (got {value!r})")
    m = _QUANTITY.match(value)
    if not m:
        raise ValidationError(f"{where}: cannot read quantity {value!r}")
    number, unit = m.groups()
    scale = UNITS[kind].get(unit)
    if scale is None:
        raise ValidationError(f"{where}: unit {unit!r} is not a {kind} unit ({', '.join(UNITS[kind])})")
    x = float(number) * scale
    if not math.isfinite(x):
        raise ValidationError(f"{where}: value must be finite")
    return x


def format_quantity(x, kind):
    return f"{float(x)!r} {BASE_UNIT[kind]}"


@dataclass(frozen=True)
class GridSpec:
    center_hz: float
    step_hz: float = DEFAULT_STEP_HZ
    points: int = 5

    def grid(self):
        return FrequencyGrid.from_step(2 * math.pi * self.center_hz, 2 * math.pi * self.step_hz, self.points)


@dataclass(frozen=True)
class TimeGrid:
    start: float = 0.0
    step: float = 1e-6
    count: int = 1

    @property
    def times(self):
        return self.start + self.step * np.arange(self.count)


@dataclass(frozen=True)
class RunConfig:
    emulator: EmulatorConfig
    grid: GridSpec
    time: TimeGrid = TimeGrid()
    seed: int = 0
    out_dir: str = None
    options: dict = field(default_factory=dict)
    mean_dgd_ratio: float = 3.0


def _check_keys(table, allowed, where):
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(extra)}")


def _axis(value, where):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: axis must be a list of 3 numbers") from None
    if a.shape != (3,) or not np.all(np.isfinite(a)) or np.linalg.norm(a) == 0:
        raise ValidationError(f"{where}: axis must be a nonzero finite 3-vector")
    return tuple(float(x) for x in a)


def _int(value, where, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValidationError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def _burst(table, where):
    _check_keys(table, {"start", "duration", "peak", "envelope", "axis"}, where)
    try:
        return BurstProgram(
            parse_quantity(table.get("start", "0 s"), "time", f"{where}.start"),
            parse_quantity(table["duration"], "time", f"{where}.duration"),
            parse_quantity(table["peak"], "rate", f"{where}.peak"),
            Envelope(table.get("envelope", "triangular")),
            _axis(table.get("axis", [0, 0, 1]), f"{where}.axis"),
        )
    except KeyError as exc:
        raise ValidationError(f"{where}: missing {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{where}: {exc}") from None


def _scrambler(table, where, ceiling):
    kind = table.get("type")
    if kind == "static":
        _check_keys(table, {"type", "axis", "retardation"}, where)
        return Retarder(_axis(table.get("axis", [1, 0, 0]), f"{where}.axis"), parse_quantity(table.get("retardation", "0 rad"), "angle", f"{where}.retardation"))
    if kind == "seven-plate":
        _check_keys(table, {"type", "index"}, where)
        return ScramblerTrajectory(seven_plate_stack(ceiling, index=_int(table.get("index", 0), f"{where}.index")))
    if kind == "stack":
        _check_keys(table, {"type", "time_origin", "plates"}, where)
        plates = []
        for i, p in enumerate(table.get("plates", [])):
            pw = f"{where}.plates[{i}]"
            _check_keys(p, {"kind", "orientation", "rate", "burst"}, pw)
            if p.get("kind") not in ("QWP", "HWP"):
                raise ValidationError(f"{pw}.kind: expected 'QWP' or 'HWP'")
            plates.append(
                Plate(
                    PlateKind(p["kind"]),
                    parse_quantity(p.get("orientation", "0 rad"), "angle", f"{pw}.orientation"),
                    parse_quantity(p.get("rate", "0 rad/s"), "rate", f"{pw}.rate"),
                    _burst(p["burst"], f"{pw}.burst") if "burst" in p else None,
                )
            )
        if not plates:
            raise ValidationError(f"{where}.plates: a stack needs at least one plate")
        origin = parse_quantity(table.get("time_origin", "0 s"), "time", f"{where}.time_origin")
        return ScramblerTrajectory(WaveplateStack(tuple(plates)), origin)
    raise ValidationError(f"{where}.type: expected 'static', 'stack' or 'seven-plate', got {kind!r}")


def _emulator(table):
    where = "emulator"
    _check_keys(table, {"preset", "sections", "section_axes", "carrier", "max_speed", "mean_dgd_ratio", "scramblers"}, where)
    carrier = parse_quantity(table.get("carrier", "193.4 THz"), "frequency", f"{where}.carrier")
    ratio = table.get("mean_dgd_ratio", 3.0)
    if isinstance(ratio, bool) or not isinstance(ratio, (int, float)) or not ratio > 0:
        raise ValidationError(f"{where}.mean_dgd_ratio: expected a positive number")
    tag = table.get("preset")
    base = None
    if tag is not None:
        try:
            base = make_preset(tag, float(ratio))
        except InvalidConfig as exc:
            raise ValidationError(f"{where}.preset: {exc}") from None
    if "max_speed" in table:
        ceiling = parse_quantity(table["max_speed"], "rate", f"{where}.max_speed")
    else:
        ceiling = base.max_speed if base else MAX_SPEED_RADPS
    if "sections" in table:
        if not isinstance(table["sections"], list):
            raise ValidationError(f"{where}.sections: expected a list")
        dgds = tuple(parse_quantity(v, "dgd", f"{where}.sections[{i}]") for i, v in enumerate(table["sections"]))
        for i, d in enumerate(dgds):
            if d < 0:
                raise ValidationError(f"{where}.sections[{i}]: DGD must be >= 0 ps, got {d}")
    elif base is not None:
        dgds = base.section_dgds
    else:
        raise ValidationError(f"{where}: give either 'preset' or 'sections'")
    axes = None
    if "section_axes" in table:
        axes = tuple(_axis(a, f"{where}.section_axes[{i}]") for i, a in enumerate(table["section_axes"]))
    if "scramblers" in table:
        scr = tuple(_scrambler(s, f"{where}.scramblers[{i}]", ceiling) for i, s in enumerate(table["scramblers"]))
    elif base is not None and len(base.scramblers) == len(dgds) + 1 and ceiling == base.max_speed:
        scr = base.scramblers
    else:
        scr = default_scramblers(len(dgds), ceiling)
    try:
        cfg = EmulatorConfig(dgds, scr, carrier_hz=carrier, section_axes=axes, max_speed=ceiling, preset=tag)
    except InvalidConfig as exc:
        raise ValidationError(f"{where}: {exc}") from None
    return cfg, float(ratio)


def config_from_dict(data):
    _check_keys(data, {"seed", "out", "emulator", "grid", "time", "options"}, "config")
    if "emulator" not in data:
        raise ValidationError("config: missing [emulator] table")
    emu, ratio = _emulator(data["emulator"])
    g = data.get("grid", {})
    _check_keys(g, {"center", "step", "points"}, "grid")
    center = parse_quantity(g["center"], "frequency", "grid.center") if "center" in g else emu.carrier_hz
    step = parse_quantity(g.get("step", "1 MHz"), "frequency", "grid.step")
    points = _int(g.get("points", 5), "grid.points", 2)
    if not step > 0 or not center > 0:
        raise ValidationError("grid: center and step must be positive")
    t = data.get("time", {})
    _check_keys(t, {"start", "step", "count"}, "time")
    tg = TimeGrid(
        parse_quantity(t.get("start", "0 s"), "time", "time.start"),
        parse_quantity(t.get("step", "1 us"), "time", "time.step"),
        _int(t.get("count", 1), "time.count", 1),
    )
    seed = _int(data.get("seed", 0), "seed")
    if seed >= 2**64:
        raise ValidationError("seed: must fit in 64 bits")
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ValidationError("out: expected a path string")
    options = data.get("options", {})
    if not isinstance(options, dict):
        raise ValidationError("options: expected a table")
    return RunConfig(emu, GridSpec(center, step, points), tg, seed, out, dict(options), ratio)


def parse_config(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        msg = exc.msg if hasattr(exc, "msg") else str(exc)
        raise ParseError(msg, getattr(exc, "lineno", None), getattr(exc, "colno", None)) from None
    return config_from_dict(data)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------- serialise


def _burst_dict(b):
    return {
        "start": format_quantity(b.start, "time"),
        "duration": format_quantity(b.duration, "time"),
        "peak": format_quantity(b.peak_rate, "rate"),
        "envelope": b.envelope.value,
        "axis": list(b.axis),
    }


def _scrambler_dict(s):
    if isinstance(s, Retarder):
        return {"type": "static", "axis": list(s.axis), "retardation": format_quantity(s.retardation, "angle")}
    plates = []
    for p in s.stack.plates:
        d = {"kind": p.kind.value, "orientation": format_quantity(p.orientation, "angle"), "rate": format_quantity(p.rate, "rate")}
        if p.burst is not None:
            d["burst"] = _burst_dict(p.burst)
        plates.append(d)
    return {"type": "stack", "time_origin": format_quantity(s.time_origin, "time"), "plates": plates}


def config_to_dict(cfg, include_out=True):
    emu = cfg.emulator
    e = {}
    if emu.preset is not None:
        e["preset"] = emu.preset
    e.update(
        sections=[format_quantity(d, "dgd") for d in emu.section_dgds],
        section_axes=[list(a) for a in emu.section_axes],
        carrier=format_quantity(emu.carrier_hz, "frequency"),
        max_speed=format_quantity(emu.max_speed, "rate"),
        mean_dgd_ratio=float(cfg.mean_dgd_ratio),
        scramblers=[_scrambler_dict(s) for s in emu.scramblers],
    )
    data = {"seed": cfg.seed}
    if include_out and cfg.out_dir is not None:
        data["out"] = cfg.out_dir
    data["emulator"] = e
    data["grid"] = {
        "center": format_quantity(cfg.grid.center_hz, "frequency"),
        "step": format_quantity(cfg.grid.step_hz, "frequency"),
        "points": cfg.grid.points,
    }
    data["time"] = {
        "start": format_quantity(cfg.time.start, "time"),
        "step": format_quantity(cfg.time.step, "time"),
        "count": cfg.time.count,
    }
    if cfg.options:
        data["options"] = dict(cfg.options)
    return data


def serialize(cfg, include_out=True):
    return tomli_w.dumps(config_to_dict(cfg, include_out))


def config_hash(cfg):
    """SHA-256 of the canonical serialisation (output directory excluded)."""
    return hashlib.sha256(serialize(cfg, include_out=False).encode()).hexdigest()
