import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmde.cli import COMMANDS, main, read_export_header, rerun_from_export, run_command
from pmde.config import config_from_dict, config_hash, load_config, parse_config, parse_quantity, serialize
from pmde.errors import ParseError, ValidationError
from pmde.polarization import Retarder
from pmde.scrambler import ScramblerTrajectory

MINIMAL = """
seed = 7
[emulator]
preset = "highend-100"
"""

# small option sizes keep every command quick
FAST_OPTIONS = """
[options]
samples = 3000
points = 41
band = "20 GHz"
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- parsing


def test_preset_materialises_sections_and_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.emulator.section_dgds == (50.0, 50.0)
    assert cfg.emulator.carrier_hz == 193.4e12
    assert cfg.grid.center_hz == 193.4e12
    assert cfg.grid.step_hz == 1e6
    assert cfg.seed == 7
    assert len(cfg.emulator.scramblers) == 3


def test_negative_dgd_rejected():
    with pytest.raises(ValidationError, match="sections"):
        parse_config('[emulator]\nsections = ["10 ps", "-1 ps"]\n')


def test_unitless_physical_field_rejected():
    with pytest.raises(ValidationError, match="unit"):
        parse_config("[emulator]\nsections = [26]\n")
    with pytest.raises(ValidationError):
        parse_config('[emulator]\nsections = ["26 THz"]\n')


@pytest.mark.parametrize(
    "text, kind, value",
    [
        ("26 ps", "dgd", 26.0),
        ("26000 fs", "dgd", 26.0),
        ("193.4 THz", "frequency", 193.4e12),
        ("20 Mrad/s", "rate", 20e6),
        ("1 us", "time", 1e-6),
        ("90 deg", "angle", np.pi / 2),
        ("-1.5e-3 s", "time", -1.5e-3),
    ],
)
def test_parse_quantity(text, kind, value):
    assert parse_quantity(text, kind, "x") == pytest.approx(value, rel=1e-15)


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="unknown"):
        parse_config('[emulator]\npreset = "zr"\ncolour = "red"\n')
    with pytest.raises(ValidationError):
        parse_config('[emulator]\npreset = "zr"\n[[emulator.scramblers]]\ntype = "spinning"\n')


def test_parse_error_reports_line_and_column():
    with pytest.raises(ParseError) as info:
        parse_config('seed = 1\n[emulator]\npreset = "zr\n')
    assert info.value.line == 3
    assert info.value.column is not None


def test_explicit_scramblers():
    text = """
[emulator]
sections = ["10 ps"]
[[emulator.scramblers]]
type = "static"
axis = [0, 0, 1]
retardation = "1.2 rad"
[[emulator.scramblers]]
type = "stack"
plates = [{kind = "HWP", orientation = "0 rad", rate = "5 Mrad/s", burst = {start = "1 us", duration = "2 us", peak = "5.1 Mrad/s"}}]
"""
    cfg = parse_config(text)
    first, second = cfg.emulator.scramblers
    assert first == Retarder((0, 0, 1), 1.2)
    assert isinstance(second, ScramblerTrajectory)
    assert second.stack.plates[0].burst.peak_rate == 5.1e6


def test_scrambler_count_checked():
    text = '[emulator]\nsections = ["10 ps"]\n[[emulator.scramblers]]\ntype = "seven-plate"\n'
    with pytest.raises(ValidationError, match="scramblers"):
        parse_config(text)


# ---------------------------------------------------------------- round trip

quantity = st.floats(0, 200, allow_nan=False).map(lambda x: f"{x!r} ps")
static_scrambler = st.fixed_dictionaries(
    {
        "type": st.just("static"),
        "axis": st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda a: np.linalg.norm(a) > 1e-3),
        "retardation": st.floats(-10, 10).map(lambda x: f"{x!r} rad"),
    }
)
plate = st.fixed_dictionaries(
    {
        "kind": st.sampled_from(["QWP", "HWP"]),
        "orientation": st.floats(-5, 5).map(lambda x: f"{x!r} rad"),
        "rate": st.floats(-5e6, 5e6).map(lambda x: f"{x!r} rad/s"),
    }
)
stack_scrambler = st.fixed_dictionaries({"type": st.just("stack"), "plates": st.lists(plate, min_size=1, max_size=4)})


@st.composite
def config_dicts(draw):
    n = draw(st.integers(0, 4))
    emu = {"sections": draw(st.lists(quantity, min_size=n, max_size=n))}
    if draw(st.booleans()):
        emu["scramblers"] = draw(st.lists(st.one_of(static_scrambler, stack_scrambler), min_size=n + 1, max_size=n + 1))
    if draw(st.booleans()):
        emu["carrier"] = f"{draw(st.floats(180, 200))!r} THz"
    return {
        "seed": draw(st.integers(0, 2**63)),
        "emulator": emu,
        "grid": {"step": f"{draw(st.floats(1, 1e3))!r} kHz", "points": draw(st.integers(3, 9))},
        "time": {"start": f"{draw(st.floats(0, 1))!r} s", "count": draw(st.integers(1, 5))},
        "options": {"samples": draw(st.integers(1, 100))},
    }


@settings(max_examples=60, deadline=None)
@given(config_dicts())
def test_round_trip(data):
    cfg = config_from_dict(data)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)
    assert config_hash(again) == config_hash(cfg)


def test_round_trip_presets():
    for name in ["highend-20", "highend-200", "zr"]:
        cfg = parse_config(f'[emulator]\npreset = "{name}"\n')
        assert parse_config(serialize(cfg)) == cfg


def test_hash_ignores_output_directory():
    cfg = parse_config(MINIMAL)
    a = parse_config('out = "a"\n' + MINIMAL)
    b = parse_config('out = "b"\n' + MINIMAL)
    assert config_hash(a) == config_hash(b) == config_hash(cfg)


# ---------------------------------------------------------------- CLI


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, MINIMAL + '[options]\npoints = 3\n')
    assert main(["sweep-fig4", "--config", good, "--out", str(tmp_path / "o")]) == 0
    bad_value = write(tmp_path, '[emulator]\nsections = ["-3 ps"]\n', "bad.toml")
    assert main(["profile", "--config", bad_value]) == 1
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["exit_code"] == 1 and record["kind"] == "ValidationError"
    broken = write(tmp_path, "[emulator\n", "broken.toml")
    assert main(["profile", "--config", broken]) == 1
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["line"] == 1
    odd = write(tmp_path, '[emulator]\nsections = ["10 ps", "10 ps", "10 ps"]\n', "odd.toml")
    assert main(["neutral", "--config", odd, "--out", str(tmp_path / "n")]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["kind"] == "NeutralUnavailable"
    assert main(["dance", "--config", good]) == 1
    assert main(["profile", "--config", str(tmp_path / "missing.toml")]) == 2


def test_seed_override(tmp_path):
    path = write(tmp_path, MINIMAL + FAST_OPTIONS)
    assert main(["stats", "--config", path, "--out", str(tmp_path / "a"), "--seed", "99"]) == 0
    command, cfg = read_export_header(str(tmp_path / "a" / "dgd_histogram.csv"))
    assert command == "stats" and cfg.seed == 99
    assert main(["stats", "--config", path, "--seed", str(2**64)]) == 1


def _read(folder):
    return {name: (folder / name).read_bytes() for name in sorted(os.listdir(folder))}


def test_stats_byte_identical_and_rerunnable(tmp_path):
    path = write(tmp_path, MINIMAL + FAST_OPTIONS)
    assert main(["stats", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["stats", "--config", path, "--out", str(tmp_path / "b")]) == 0
    first = _read(tmp_path / "a")
    assert first == _read(tmp_path / "b")
    rerun_from_export(str(tmp_path / "a" / "dgd_histogram.csv"), str(tmp_path / "c"))
    assert _read(tmp_path / "c") == first
    rerun_from_export(str(tmp_path / "a" / "stats_summary.json"), str(tmp_path / "d"))
    assert _read(tmp_path / "d") == first


def test_headers_carry_units_hash_and_seed(tmp_path):
    cfg = parse_config(MINIMAL + FAST_OPTIONS)
    for name in COMMANDS:
        for f in run_command(name, cfg, str(tmp_path / name)):
            text = open(f).read()
            if f.endswith(".csv"):
                lines = text.splitlines()
                assert f"config_sha256={config_hash(cfg)}" in lines[0]
                assert "seed=7" in lines[0]
                for col in lines[2].split(","):
                    assert col.rsplit("_", 1)[-1] in {"ps", "radps", "thz", "s", "ghz", "rad", "re", "im", "count", "scrambler"} or col in {"count", "scrambler"}, col
            else:
                meta = json.loads(text)["meta"]
                assert meta["config_sha256"] == config_hash(cfg)
                assert meta["seed"] == 7


def test_sweep_fig4_endpoints(tmp_path):
    cfg = parse_config(MINIMAL + "[options]\npoints = 181\n")
    (path,) = run_command("sweep-fig4", cfg, str(tmp_path))
    rows = np.loadtxt(path, delimiter=",", comments="#", skiprows=3)
    assert rows[0, 0] == 0.0 and rows[0, 1] == pytest.approx(52.0, abs=1e-6)
    assert rows[-1, 0] == pytest.approx(np.pi) and abs(rows[-1, 1]) < 1e-6
    np.testing.assert_allclose(rows[:, 1], rows[:, 2], atol=1e-6)


def test_emulate_zero_sections_exports_identity(tmp_path):
    text = """
[emulator]
sections = []
[[emulator.scramblers]]
type = "static"
[time]
count = 3
"""
    cfg = parse_config(text)
    files = run_command("emulate", cfg, str(tmp_path))
    jones = np.loadtxt(files[0], delimiter=",", comments="#", skiprows=3)
    assert jones.shape == (15, 10)
    np.testing.assert_array_equal(jones[:, 2:], np.tile([1, 0, 0, 0, 0, 0, 1, 0], (15, 1)))
    pmd = np.loadtxt(files[1], delimiter=",", comments="#", skiprows=3)
    np.testing.assert_array_equal(pmd[:, 1:], 0.0)


def test_load_config_from_file(tmp_path):
    assert load_config(write(tmp_path, MINIMAL)) == parse_config(MINIMAL)
