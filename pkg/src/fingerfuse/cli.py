"""fingerfuse command line.

Exit codes: 0 success, 2 usage error, 3 data or validation error, 4 internal
error. Failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, evalstats, fusion, geom, gestures, interact, optical, protocol, simtrace
from .errors import FingerFuseError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("FINGERFUSE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"FINGERFUSE_SEED must be an integer, got {env!r}") from None


def _sensor(args) -> optical.SensorConfig:
    return optical.SensorConfig(resolution=args.resolution, frame_rate=args.frame_rate,
                                report_rate=args.report_rate)


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise OSError(f"output directory {p} is not writable")
    return p


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file or directory: {p}")
    return p


def _dump_json(obj, path: Optional[str]):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _distortion_model(choice: str, cfg: optical.SensorConfig):
    if choice == "none":
        return None
    model = optical.STOCK_MODELS[int(choice)]
    if model.resolution != cfg.resolution:
        raise UsageError(f"--distortion {choice} needs --resolution {choice}")
    return model


# -------------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    out = _out_dir(args.output)
    cfg = _sensor(args)
    seed = _seed(args.seed)
    ff = fusion.FormFactor.parse(args.form_factor)
    dist = _distortion_model(args.distortion, cfg)
    ext = ".jsonl.gz" if args.gzip else ".jsonl"
    common = dict(cfg=cfg, distortion=dist, noise=args.noise, form_factor=ff,
                  leading_tap=args.leading_tap)
    written = []
    if args.matrix == "paper":
        for name, spec, tex, tseed in simtrace.design_matrix(seed, args.reps):
            spec = simtrace.ShapeSpec(spec.kind, spec.size, args.tilt, args.speed_profile,
                                      args.peak_speed)
            tr = simtrace.generate_trace(spec, tex, seed=tseed, trace_id=name, **common)
            simtrace.write_trace(tr, out / (name + ext))
            written.append(name + ext)
    else:
        if args.shape is None or args.size is None:
            raise UsageError("give --matrix paper, or both --shape and --size")
        spec = simtrace.ShapeSpec(args.shape, args.size, args.tilt, args.speed_profile,
                                  args.peak_speed, custom_size=args.size not in simtrace.SIZES)
        tex = simtrace.TEXTURES[args.texture]
        name = f"{tex.name}_{args.size:g}mm_{args.shape}_s{seed}"
        tr = simtrace.generate_trace(spec, tex, seed=seed, trace_id=name, **common)
        simtrace.write_trace(tr, out / (name + ext))
        written.append(name + ext)
    _dump_json({"output": str(out), "seed": seed, "traces": len(written)}, None)
    return EXIT_OK


# -------------------------------------------------------------------- evaluate

def _trace_files(path: Path) -> List[Path]:
    if path.is_file():
        return [path]
    files = sorted(p for p in path.iterdir() if p.name.endswith((".jsonl", ".jsonl.gz")))
    if not files:
        raise UsageError(f"no trace files in {path}")
    return files


def evaluate_trace(path, correction: bool = False):
    """Fuse one trace and return ``(metadata keys, ErrorSeries)``."""
    tr = simtrace.read_trace(path)
    m = tr.metadata
    cfg = optical.SensorConfig(**m["sensor"])
    model = optical.STOCK_MODELS.get(cfg.resolution) if correction else None
    ff = fusion.FormFactor.parse(m["form_factor"])
    est = fusion.run_pipeline(tr.imu, tr.optical, cfg, ff, correction=model)
    est = evalstats.align_start(est, tr.truth)
    return simtrace.trace_keys(tr), evalstats.error_series(est, tr.truth)


def _eval_job(job):
    return evaluate_trace(*job)


def cmd_evaluate(args) -> int:
    files = _trace_files(_existing(args.traces))
    out = _out_dir(args.output)
    jobs = [(str(f), args.correction == "on") for f in files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_eval_job, jobs, chunksize=8))
    else:
        records = [_eval_job(j) for j in jobs]
    report = evalstats.aggregate(records, group_keys=args.group_by)
    if len({r[0]["texture"] for r in records}) >= 2:
        try:
            report.anova["texture"] = evalstats.cell_anova(records, "texture",
                                                           ("texture", "size", "shape"))
        except FingerFuseError:
            pass   # not enough replicated cells
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.csv").write_text(report.to_csv())
    _dump_json({"traces": len(records), "pooled": report.to_dict()["pooled"],
                "output": str(out)}, None)
    return EXIT_OK


# ---------------------------------------------------------------------- replay

def cmd_replay(args) -> int:
    path = _existing(args.log)
    cfg = _sensor(args)
    ff = fusion.FormFactor.parse(args.form_factor)
    correction = optical.STOCK_MODELS.get(cfg.resolution) if args.correction == "on" else None
    with open(path, encoding="ascii") as fh:
        frames = [f for _, f in protocol.read_frames(fh)]
    times = protocol.frame_times(len(frames), cfg.report_rate)
    state = fusion.FusionState(config=cfg, form_factor=ff, correction=correction)
    rows = []
    for k, (t, fr) in enumerate(zip(times, frames)):
        q = geom.quat_normalize(fr.q)
        if k == 0:
            pose = fusion.PosePoint(t, state.position.copy(), q)
            state.orientation, state.last_t = q, t
        else:
            pose = fusion.fusion_step(state, t, fr.dx, fr.dy, q)
        rows.append([f"{t:.4f}", *(f"{v:.6f}" for v in pose.position),
                     *(f"{v:.6f}" for v in pose.orientation), fr.gesture or ""])
    header = ["t", "x_mm", "y_mm", "z_mm", "qw", "qx", "qy", "qz", "gesture"]
    fh = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# ------------------------------------------------------------------- calibrate

def cmd_calibrate(args) -> int:
    samples = optical.read_calibration_csv(_existing(args.csv))
    degree = args.degree or (2 if args.resolution == 400 else 3)
    poly = optical.fit_polynomial(samples, degree, resolution=args.resolution)
    lin = optical.fit_linear(samples, max_speed=args.linear_max_speed)
    _dump_json({"resolution": args.resolution, "polynomial": poly.to_dict(),
                "linear": lin.to_dict()}, args.output)
    if args.plot_csv:
        with open(args.plot_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["speed_ips", "counts", "fitted_counts"])
            for s in sorted(samples, key=lambda s: s.speed):
                w.writerow([f"{s.speed:.6g}", f"{s.counts:.6g}",
                            f"{optical.model_counts(poly.model, s.speed):.6f}"])
    return EXIT_OK


def cmd_gen_calibration(args) -> int:
    model = optical.STOCK_MODELS[args.resolution]
    rng = np.random.default_rng(_seed(args.seed))
    samples = optical.simulate_calibration(model, args.n, args.noise, rng)
    optical.write_calibration_csv(args.output, samples)
    return EXIT_OK


# ----------------------------------------------------------------------- parse

def cmd_parse(args) -> int:
    if args.file:
        with open(_existing(args.file), encoding="ascii") as fh:
            items = list(protocol.read_frames(fh))
    elif args.line:
        items = [(1, protocol.parse_line(" ".join(args.line)))]
    else:
        raise UsageError("give a line or --file")
    out = [{"line": n, "q": list(f.q), "dx": f.dx, "dy": f.dy, "gesture": f.gesture}
           for n, f in items]
    _dump_json(out[0] if args.line else out, None)
    return EXIT_OK


# ------------------------------------------------------------------------ demo

def run_demo(scene: Sequence[interact.SceneObject], trace: simtrace.Trace,
             gain: interact.RotationGain = interact.RotationGain(),
             gesture_config: Optional[gestures.GestureConfig] = None) -> List[dict]:
    """Tap selects the object under the pointing ray; a later stroke rotates it."""
    m = trace.metadata
    cfg = optical.SensorConfig(**m["sensor"])
    ff = fusion.FormFactor.parse(m["form_factor"])
    poses = fusion.run_pipeline(trace.imu, trace.optical, cfg, ff)
    tex = simtrace.TextureProfile(m["texture"]["name"], tuple(m["texture"]["contact_squal_range"]),
                                  m["texture"]["noise_sd"])
    state = gestures.GestureState(gesture_config or simtrace.gesture_config_for(tex))
    times = np.array([p.t for p in poses])
    log: List[dict] = []
    selected: Optional[str] = None
    stroke_start = None

    def pose_at(t):
        return poses[max(0, int(np.searchsorted(times, t, side="right")) - 1)]

    def handle(ev):
        nonlocal selected, stroke_start
        pose = pose_at(ev.t)
        if ev.kind is gestures.EventKind.TAP:
            ray = interact.pointing_ray(pose.orientation)
            selected = interact.select(ray, scene)
            log.append({"t": round(ev.t, 6), "event": "select", "target": selected})
        elif ev.kind is gestures.EventKind.CONTACT_BEGIN:
            stroke_start = pose.position.copy()
        elif ev.kind is gestures.EventKind.CONTACT_END and selected is not None and stroke_start is not None:
            plane = fusion.plane_orientation(pose.orientation, ff)
            world = pose.position - stroke_start
            local = geom.rotate(geom.quat_conjugate(plane), world)
            if np.hypot(local[0], local[1]) < optical.counts_to_mm(1, cfg):
                return   # below one count: a lift, not a stroke
            cmd = interact.rotation_from_stroke(local[:2], plane, gain, selected)
            if not cmd.is_noop:
                log.append({"t": round(ev.t, 6), "event": "rotate", "target": selected,
                            "axis": [round(float(v), 9) + 0.0 for v in cmd.axis],
                            "angle_rad": round(cmd.angle, 9)})

    for s in trace.optical:
        state, events = gestures.gesture_update(state, s)
        for ev in events:
            handle(ev)
    for ev in gestures.gesture_flush(state)[1]:
        handle(ev)
    return log


def cmd_demo(args) -> int:
    scene = interact.load_scene(_existing(args.scene))
    trace = simtrace.read_trace(_existing(args.trace))
    gcfg = gestures.load_config(_existing(args.gesture_config)) if args.gesture_config else None
    log = run_demo(scene, trace, interact.RotationGain(args.gain), gcfg)
    text = "".join(json.dumps(e, sort_keys=True) + "\n" for e in log)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK


# ---------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_sensor(p):
    p.add_argument("--resolution", type=int, choices=(400, 800), default=400,
                   help="sensor resolution in counts per inch (default 400)")
    p.add_argument("--frame-rate", type=int, default=1500, help="sensor frame rate, fps (default 1500)")
    p.add_argument("--report-rate", type=float, default=50.0, help="report rate, Hz (default 50)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fingerfuse", description="Finger-worn IMU + optical sensor fusion toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic traces")
    g.add_argument("--matrix", choices=("paper",), help="full texture x size x shape x rep design")
    g.add_argument("--reps", type=int, default=5, help="repetitions per matrix cell (default 5)")
    g.add_argument("--shape", choices=simtrace.SHAPES, help="shape for a single trace")
    g.add_argument("--size", type=float, help="shape size in mm (12, 21, 42, 84 or custom)")
    g.add_argument("--texture", choices=simtrace.TEXTURE_NAMES, default="mousepad",
                   help="surface texture for a single trace (default mousepad)")
    g.add_argument("--tilt", type=float, help="plane tilt in degrees; default drawn from the seed")
    g.add_argument("--speed-profile", choices=("constant", "trapezoid"), default="constant",
                   help="drawing speed profile (default constant)")
    g.add_argument("--peak-speed", type=float, default=1.0, help="peak speed, inch/s (default 1)")
    g.add_argument("--seed", type=int, help="base seed; falls back to $FINGERFUSE_SEED, then 0")
    g.add_argument("--noise", action="store_true", help="add sensor noise")
    g.add_argument("--distortion", choices=("none", "400", "800"), default="none",
                   help="inject the speed-dependent count gain of this resolution's model")
    g.add_argument("--form-factor", default="fingernail",
                   help="fingernail, pad or ring (or 1, 2, 3); default fingernail")
    g.add_argument("--leading-tap", action="store_true", help="start with a tap before drawing")
    g.add_argument("--gzip", action="store_true", help="write .jsonl.gz")
    g.add_argument("-o", "--output", required=True, help="output directory")
    _add_sensor(g)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="fuse traces and report error against ground truth")
    e.add_argument("traces", help="trace file or directory of traces")
    e.add_argument("-o", "--output", required=True, help="directory for report.json and report.csv")
    e.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    e.add_argument("--correction", choices=("on", "off"), default="off",
                   help="undo the speed-dependent count gain (default off)")
    e.add_argument("--group-by", nargs="+", default=["texture", "size", "shape"],
                   choices=("texture", "size", "shape"), help="grouping factors for the breakdown")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("replay", help="fuse a recorded wire log into a pose stream (CSV)")
    r.add_argument("log", help="text file with one wire frame per line")
    r.add_argument("-o", "--output", help="CSV path (default stdout)")
    r.add_argument("--form-factor", default="fingernail", help="fingernail, pad or ring")
    r.add_argument("--correction", choices=("on", "off"), default="off",
                   help="undo the speed-dependent count gain (default off)")
    _add_sensor(r)
    r.set_defaults(func=cmd_replay)

    c = sub.add_parser("calibrate", help="fit the speed/counts model to a calibration CSV")
    c.add_argument("csv", help="CSV with columns speed_ips,counts")
    c.add_argument("--resolution", type=int, choices=(400, 800), default=400,
                   help="resolution the samples were taken at (default 400)")
    c.add_argument("--degree", type=int, choices=(2, 3),
                   help="polynomial degree (default 2 at 400 cpi, 3 at 800 cpi)")
    c.add_argument("--linear-max-speed", type=float, default=3.0,
                   help="upper speed for the linear fit, inch/s (default 3)")
    c.add_argument("-o", "--output", help="JSON path (default stdout)")
    c.add_argument("--plot-csv", help="write speed, counts and fitted counts for plotting")
    c.set_defaults(func=cmd_calibrate)

    gc = sub.add_parser("gen-calibration", help="simulate a calibration CSV from a stock model")
    gc.add_argument("--resolution", type=int, choices=(400, 800), default=400,
                    help="which stock model to sample (default 400)")
    gc.add_argument("--n", type=int, default=500, help="number of samples (default 500)")
    gc.add_argument("--noise", type=float, default=5.0, help="count noise sd (default 5)")
    gc.add_argument("--seed", type=int, help="seed; falls back to $FINGERFUSE_SEED, then 0")
    gc.add_argument("-o", "--output", required=True, help="CSV path")
    gc.set_defaults(func=cmd_gen_calibration)

    p = sub.add_parser("parse", help="parse wire-format lines and print them as JSON")
    p.add_argument("line", nargs="*", help="one wire line (quote it)")
    p.add_argument("--file", help="parse every line of this file instead")
    p.set_defaults(func=cmd_parse)

    d = sub.add_parser("demo", help="selection and rotation commands from a scene and a trace")
    d.add_argument("--scene", required=True, help="scene JSON: [{id, center, radius}, ...]")
    d.add_argument("--trace", required=True, help="trace file (a leading tap selects)")
    d.add_argument("--gain", type=float, default=interact.DEFAULT_GAIN,
                   help=f"rotation gain, rad per mm (default {interact.DEFAULT_GAIN})")
    d.add_argument("--gesture-config",
                   help="recognizer settings file (key = value lines); default derived from the trace texture")
    d.add_argument("-o", "--output", help="JSON-lines log path (default stdout)")
    d.set_defaults(func=cmd_demo)
    return ap


def _fail(code: int, kind: str, exc: BaseException) -> int:
    info = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    here = Path(__file__).parent
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if Path(f.filename).parent == here]
    if frames:
        info["module"] = Path(frames[-1].filename).stem
    for attr in ("field", "line"):
        if getattr(exc, attr, None) is not None:
            info[attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps(info, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (FingerFuseError, ValueError, OSError) as exc:
        return _fail(EXIT_DATA, "data", exc)
    except Exception as exc:   # pragma: no cover - invariant breach
        return _fail(EXIT_INTERNAL, "internal", exc)


if __name__ == "__main__":
    sys.exit(main())
