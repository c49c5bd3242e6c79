"""Command-line front end: ``pmde <command> --config <file> [--out <dir>] [--seed <u64>]``.

Each command writes CSV (tabular series) and/or JSON (structured objects).
Floats use 9 significant digits and rows come in a fixed order, so equal
inputs give byte-identical files. Every file starts with a header carrying
the command, seed, config hash and the full canonical config, from which
the run can be reproduced (:func:`rerun_from_export`).

Exit status: 0 success, 1 configuration/validation error, 2 runtime error.
Errors are also reported as one JSON object on stderr.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import config_hash, load_config, parse_config, parse_quantity, serialize
from .emulator import (
    build,
    frozen_retarders,
    law_of_cosines_dgd,
    neutral_state,
    pmd_at,
    response_at,
    sweep_mode_converter,
)
from .errors import DegeneratePmd, InvalidConfig, ParseError, PmdeError, ValidationError
from .pmd import FrequencyGrid, build_profile, pmd_spectrum, psp_pair
from .polarization import fibonacci_sphere, great_circle
from .scrambler import (
    Envelope,
    ScramblerTrajectory,
    make_lightning_burst,
    max_sop_speed,
    scrambler_rotation,
    with_burst,
)
from .statistics import (
    MAXWELL_MEAN_OVER_RMS,
    hinge_vs_uniform,
    sample_dgd,
    taylor_accuracy,
)

COMMANDS = ("emulate", "profile", "stats", "taylor", "lightning", "neutral", "sweep-fig4")


def fmt(x):
    return f"{float(x):.9g}"


def _meta(command, cfg):
    return {
        "tool": f"pmde {__version__}",
        "command": command,
        "seed": cfg.seed,
        "config_sha256": config_hash(cfg),
        "config": serialize(cfg, include_out=False),
    }


def write_csv(path, command, cfg, header, rows):
    meta = _meta(command, cfg)
    lines = [
        f"# {meta['tool']} command={command} seed={cfg.seed} config_sha256={meta['config_sha256']}",
        "# config=" + json.dumps(meta["config"]),
        ",".join(header),
    ]
    lines += [",".join(v if isinstance(v, str) else fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return float(fmt(obj))


def write_json(path, command, cfg, body):
    doc = {"meta": _meta(command, cfg), **_jsonable(body)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


def read_export_header(path):
    """``(command, RunConfig)`` embedded in a CSV or JSON file written by pmde."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith("#"):
        first, second = text.split("\n", 2)[:2]
        command = first.split("command=", 1)[1].split()[0]
        return command, parse_config(json.loads(second[len("# config=") :]))
    meta = json.loads(text)["meta"]
    return meta["command"], parse_config(meta["config"])


def rerun_from_export(path, out_dir):
    command, cfg = read_export_header(path)
    return run_command(command, cfg, out_dir)


def _opt(cfg, key, default, kind=None):
    value = cfg.options.get(key, default)
    if kind is None:
        return value
    return parse_quantity(value, kind, f"options.{key}")


def _opt_int(cfg, key, default, minimum=1):
    value = cfg.options.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ValidationError(f"options.{key}: expected an integer >= {minimum}")
    return value


# ---------------------------------------------------------------- commands


def cmd_emulate(cfg, out):
    state = build(cfg.emulator)
    grid = cfg.grid.grid()
    freqs = grid.omegas / (2 * np.pi) / 1e12
    dt = _opt(cfg, "speed_dt", "1 ns", "time")
    jones_rows, pmd_rows, speed_rows = [], [], []
    for t in cfg.time.times:
        resp = response_at(state, t, grid)
        for f, j in zip(freqs, resp):
            jones_rows.append([t, f] + [p for z in j.ravel() for p in (z.real, z.imag)])
        pmd = pmd_at(state, t)
        pmd_rows.append([t, *pmd, np.linalg.norm(pmd)])
        for i, s in enumerate(cfg.emulator.scramblers):
            speed = max_sop_speed(s, t, dt) if isinstance(s, ScramblerTrajectory) else 0.0
            speed_rows.append([t, str(i), speed])
    jhead = ["time_s", "freq_thz"] + [f"j{a}{b}_{p}" for a in (1, 2) for b in (1, 2) for p in ("re", "im")]
    return [
        write_csv(os.path.join(out, "jones.csv"), "emulate", cfg, jhead, jones_rows),
        write_csv(os.path.join(out, "pmd_trace.csv"), "emulate", cfg, ["time_s", "omega1_ps", "omega2_ps", "omega3_ps", "dgd_ps"], pmd_rows),
        write_csv(os.path.join(out, "speed_trace.csv"), "emulate", cfg, ["time_s", "scrambler", "speed_radps"], speed_rows),
    ]


def cmd_profile(cfg, out):
    state = build(cfg.emulator)
    t = float(cfg.time.start)
    prof = build_profile(cfg.emulator.sections, frozen_retarders(state, t), cfg.emulator.omega0)
    total = prof.total
    body = {
        "time_s": t,
        "carrier_hz": cfg.emulator.carrier_hz,
        "segments_ps": prof.segments,
        "vertices_ps": prof.vertices,
        "total_ps": total,
        "dgd_ps": np.linalg.norm(total),
    }
    try:
        slow, fast, _ = psp_pair(total)
        body["psp_slow"], body["psp_fast"] = slow, fast
    except DegeneratePmd:
        body["psp_slow"] = body["psp_fast"] = None
    return [write_json(os.path.join(out, "profile.json"), "profile", cfg, body)]


def _hist_rows(h):
    width = np.diff(h.edges)
    return [[lo, hi, str(int(c)), c / (h.n_samples * w)] for lo, hi, c, w in zip(h.edges[:-1], h.edges[1:], h.counts, width)]


def cmd_stats(cfg, out):
    n = _opt_int(cfg, "samples", 100_000)
    bins = _opt_int(cfg, "bins", 100)
    header = ["bin_lo_ps", "bin_hi_ps", "count", "density_per_ps"]
    h = sample_dgd(cfg.emulator, n, cfg.seed, bins)
    files = [write_csv(os.path.join(out, "dgd_histogram.csv"), "stats", cfg, header, _hist_rows(h))]
    summary = {
        "samples": n,
        "total_dgd_ps": cfg.emulator.max_total_dgd,
        "mean_ps": h.mean,
        "rms_ps": h.rms,
        "max_ps": float(np.max(h.samples)),
        "mean_over_rms": h.mean / h.rms if h.rms else 0.0,
        "maxwell_mean_over_rms": MAXWELL_MEAN_OVER_RMS,
        "maxwell_ks": h.maxwell_ks() if h.rms else 1.0,
    }
    if "compare_sections" in cfg.options:
        m = _opt_int(cfg, "compare_sections", 32)
        other = [cfg.emulator.max_total_dgd / m] * m
        _, b, ks = hinge_vs_uniform((cfg.emulator, other), n, cfg.seed, bins)
        files.append(write_csv(os.path.join(out, "dgd_histogram_compare.csv"), "stats", cfg, header, _hist_rows(b)))
        summary["compare_sections"] = m
        summary["two_sample_ks"] = ks
    files.append(write_json(os.path.join(out, "stats_summary.json"), "stats", cfg, summary))
    return files


def cmd_taylor(cfg, out):
    band = 2 * np.pi * _opt(cfg, "band", "500 GHz", "frequency")
    orders = cfg.options.get("orders", [0, 1, 2, 3])
    if not isinstance(orders, list) or not all(isinstance(k, int) and k >= 0 for k in orders):
        raise ValidationError("options.orders: expected a list of non-negative integers")
    points = _opt_int(cfg, "points", 1001, 3)
    rep = taylor_accuracy(cfg.emulator, band, orders, t=float(cfg.time.start), count=points)
    header = ["offset_ghz"] + [f"error_order{k}_ps" for k in rep.orders] + ["exact_error_ps"]
    rows = [[off / (2 * np.pi) / 1e9, *rep.errors[:, i], rep.exact_error[i]] for i, off in enumerate(rep.offsets)]
    body = {
        "band_ghz": band / (2 * np.pi) / 1e9,
        "orders": list(rep.orders),
        "worst_error_ps": rep.worst(),
        "exact_model_worst_error_ps": float(np.max(rep.exact_error)),
        "taylor_dof": list(rep.taylor_dof),
        "section_model_dof": rep.section_dof,
    }
    return [
        write_csv(os.path.join(out, "taylor_error.csv"), "taylor", cfg, header, rows),
        write_json(os.path.join(out, "taylor_report.json"), "taylor", cfg, body),
    ]


def cmd_lightning(cfg, out):
    idx = _opt_int(cfg, "scrambler", 0, 0)
    if idx >= len(cfg.emulator.scramblers):
        raise ValidationError(f"options.scrambler: index {idx} out of range")
    base = cfg.emulator.scramblers[idx]
    if not isinstance(base, ScramblerTrajectory):
        raise ValidationError("options.scrambler: lightning needs a waveplate-stack scrambler")
    peak = _opt(cfg, "peak", "20 Mrad/s", "rate")
    duration = _opt(cfg, "duration", "10 us", "time")
    start = _opt(cfg, "start", "1 us", "time")
    envelope = Envelope(cfg.options.get("envelope", "triangular"))
    points = _opt_int(cfg, "points", 201, 2)
    dt = _opt(cfg, "speed_dt", "1 ns", "time")
    try:
        burst = make_lightning_burst(peak, duration, start, envelope)
    except ValueError as exc:
        raise ValidationError(f"options: {exc}") from None
    traj = ScramblerTrajectory(with_burst(base.stack, burst), base.time_origin)
    probe = fibonacci_sphere(1)[0]
    times = np.linspace(start - 0.1 * duration, start + 1.1 * duration, points)
    rows = []
    for t in times:
        dev = great_circle(scrambler_rotation(traj, t) @ probe, scrambler_rotation(base, t) @ probe)
        rows.append([t, burst.rate(t), max_sop_speed(traj, t, dt), dev])
    end = start + duration
    final_dev = great_circle(scrambler_rotation(traj, end) @ probe, scrambler_rotation(base, end) @ probe)
    body = {
        "peak_radps": peak,
        "duration_s": duration,
        "start_s": start,
        "envelope": envelope.value,
        "scrambler": idx,
        "max_measured_speed_radps": max(r[2] for r in rows),
        "final_sop_deviation_rad": final_dev,
    }
    return [
        write_csv(os.path.join(out, "lightning_trace.csv"), "lightning", cfg, ["time_s", "burst_rate_radps", "max_speed_radps", "sop_deviation_rad"], rows),
        write_json(os.path.join(out, "lightning_summary.json"), "lightning", cfg, body),
    ]


def cmd_neutral(cfg, out):
    t = float(cfg.time.start)
    rets = neutral_state(cfg.emulator, t)
    half = 2 * np.pi * _opt(cfg, "band", "1 THz", "frequency")
    points = _opt_int(cfg, "points", 2001, 2)
    grid = FrequencyGrid(cfg.emulator.omega0, 2 * half, points)
    dgd = np.linalg.norm(pmd_spectrum(cfg.emulator.sections, rets, grid), axis=1)
    freqs = grid.omegas / (2 * np.pi) / 1e12
    settings = [{"axis": list(r.axis), "retardation_rad": r.canonical().retardation} for r in rets]
    body = {"time_s": t, "retarders": settings, "max_dgd_ps": float(np.max(dgd))}
    return [
        write_json(os.path.join(out, "neutral_settings.json"), "neutral", cfg, body),
        write_csv(os.path.join(out, "neutral_check.csv"), "neutral", cfg, ["freq_thz", "dgd_ps"], list(zip(freqs, dgd))),
    ]


def cmd_sweep_fig4(cfg, out):
    points = _opt_int(cfg, "points", 181, 2)
    dgd = _opt(cfg, "dgd", "26 ps", "dgd")
    deltas = np.linspace(0.0, np.pi, points)
    measured = sweep_mode_converter(deltas, dgd, carrier_hz=cfg.emulator.carrier_hz)
    rows = list(zip(deltas, measured, law_of_cosines_dgd(deltas, dgd)))
    return [write_csv(os.path.join(out, "mode_converter_sweep.csv"), "sweep-fig4", cfg, ["delta_rad", "dgd_ps", "law_of_cosines_ps"], rows)]


HANDLERS = {
    "emulate": cmd_emulate,
    "profile": cmd_profile,
    "stats": cmd_stats,
    "taylor": cmd_taylor,
    "lightning": cmd_lightning,
    "neutral": cmd_neutral,
    "sweep-fig4": cmd_sweep_fig4,
}


def run_command(name, cfg, out_dir=None):
    """Run one command and return the list of files written."""
    if name not in HANDLERS:
        raise InvalidConfig(f"unknown command {name!r}; choose one of {', '.join(COMMANDS)}")
    out = out_dir or cfg.out_dir or "."
    os.makedirs(out, exist_ok=True)
    return HANDLERS[name](cfg, out)


def _error_record(exc, status):
    rec = {"status": "error", "exit_code": status, "kind": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        rec["line"], rec["column"] = exc.line, exc.column
    return rec


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pmde", description="PMD emulator simulator")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="random seed, unsigned 64-bit (overrides the config)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors count as validation failures; --help exits 0
        return 0 if exc.code == 0 else 1
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ValidationError("--seed must be an unsigned 64-bit integer")
            cfg = replace(cfg, seed=args.seed)
        files = run_command(args.command, cfg, args.out)
    except (InvalidConfig, ParseError) as exc:
        print(json.dumps(_error_record(exc, 1)), file=sys.stderr)
        return 1
    except (PmdeError, OSError, ValueError, ArithmeticError) as exc:
        print(json.dumps(_error_record(exc, 2)), file=sys.stderr)
        return 2
    print(json.dumps({"status": "ok", "command": args.command, "files": files}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
