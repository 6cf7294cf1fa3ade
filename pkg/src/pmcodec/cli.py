"""Command-line front end: ``pmcodec <command> ...``.

Reports are ``key=value`` lines. Numeric options fall back to ``VRPM_*``
environment variables, then to built-in defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import codec
from .decoder import DecoderState, check_stream, decode_stream, sample_sequence
from .errors import MeshError, StreamFormatError
from .halfedge import GridSpec, load_obj, normalize_quantize, save_obj
from .metrics import all_metrics, normalize_unit_cube, sample_points
from .simplify import decimate_to_pm

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


@dataclass
class Config:
    n_bins: int = 128
    seed: int = 0
    points: int = 2048
    jsd_grid: int = 28
    jobs: int = 1
    stop_at_k: int | None = None

    def __post_init__(self):
        for name in ("n_bins", "points", "jsd_grid", "jobs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if self.stop_at_k is not None and self.stop_at_k < 0:
            raise ValueError("stop_at_k must be non-negative")


def resolve_config(args: argparse.Namespace, env=None) -> Config:
    env = os.environ if env is None else env
    values = {}
    for name, default in Config.__dataclass_fields__.items():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
            continue
        raw = env.get(f"VRPM_{name.upper()}")
        if raw is not None:
            values[name] = int(raw)
    return Config(**values)


def _emit(**kv):
    for k, v in kv.items():
        if isinstance(v, float):
            v = f"{v:.6f}"
        print(f"{k}={v}")


def _encode_file(path, n_bins):
    raw = load_obj(Path(path).read_bytes())
    mesh, grid = normalize_quantize(raw, n_bins)
    pm = decimate_to_pm(mesh, grid)
    return pm


def cmd_encode(args, cfg):
    try:
        pm = _encode_file(args.input, cfg.n_bins)
    except (MeshError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    stream = codec.encode_pm(pm)
    if args.text:
        Path(args.output).write_text(codec.dumps_text(stream))
    else:
        codec.write_stream(stream, args.output)
    rep = codec.compression_report(pm)
    _emit(
        tokens=len(stream),
        ratio=rep.ratio,
        ratio_with_specials=rep.ratio_with_specials,
        f0=rep.f0,
        faces=rep.faces,
        n_int=rep.n_interior,
        n_bnd=rep.n_boundary,
        n_bins=cfg.n_bins,
    )
    return EXIT_OK


def _read_any(path):
    data = Path(path).read_bytes()
    if data[:4] == codec.MAGIC:
        return codec.loads_stream(data)
    if data[:1] == b"#":
        return codec.loads_text(data.decode("ascii"))
    return codec.loads_stream(data)


def cmd_decode(args, cfg):
    try:
        stream = _read_any(args.input)
    except (StreamFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    grid = GridSpec(stream.n_bins)
    state = DecoderState(stream.n_bins)
    written = []
    stop = cfg.stop_at_k

    def dump(name):
        p = out_dir / name
        p.write_bytes(save_obj(state.mesh, grid))
        written.append(p)

    try:
        for tok in stream.tokens:
            event = state.step(tok)
            if event == "sep" or event == "record":
                if args.emit_all_levels:
                    dump(f"{stem}_k{state.level:05d}.obj")
                if stop is not None and state.level == stop:
                    break
    except MeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if stop is not None and state.level != stop:
        print(f"error: stream has only {state.level} records, cannot stop at {stop}", file=sys.stderr)
        return EXIT_INPUT
    if stop is None and not state.done:
        print("error: stream ended before <eos>", file=sys.stderr)
        return EXIT_INPUT
    if not args.emit_all_levels:
        dump(f"{stem}.obj" if stop is None else f"{stem}_k{stop:05d}.obj")
    _emit(level=state.level, faces=state.mesh.n_faces, vertices=state.mesh.n_vertices, files=len(written))
    return EXIT_OK


def cmd_validate(args, cfg):
    try:
        stream = _read_any(args.input)
    except (StreamFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        state = decode_stream(stream)
    except MeshError as exc:
        _emit(valid="false", reason=str(exc))
        return EXIT_INPUT
    if not state.done:
        _emit(valid="false", reason="stream ended before <eos>")
        return EXIT_INPUT
    _emit(valid="true", tokens=len(stream), levels=state.level, faces=state.mesh.n_faces,
          vertices=state.mesh.n_vertices, n_bins=stream.n_bins)
    return EXIT_OK


def _stats_one(job):
    path, n_bins, no_he = job
    try:
        pm = _encode_file(path, n_bins)
    except (MeshError, ValueError) as exc:
        return path, None, str(exc)
    rep = codec.compression_report(pm).as_dict()
    if no_he:
        he = len(codec.encode_pm(pm))
        rep["no_he_tokens"] = len(codec.encode_pm_no_halfedge(pm))
        rep["no_he_overhead"] = rep["no_he_tokens"] / he - 1.0
        rep["no_he_ratio"] = (rep["no_he_tokens"] - 3) / (9 * rep["faces"])
    return path, rep, None


def _map(fn, jobs, n):
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_stats(args, cfg):
    files = sorted(Path(args.directory).glob("*.obj"))
    if not files:
        print(f"error: no .obj files in {args.directory}", file=sys.stderr)
        return EXIT_INPUT
    results = _map(_stats_one, [(str(f), cfg.n_bins, args.no_half_edge) for f in files], cfg.jobs)
    good = [r for _, r, e in results if r is not None]
    for path, _, e in results:
        if e is not None:
            print(f"skipped {Path(path).name}: {e}", file=sys.stderr)
    if not good:
        return EXIT_INPUT

    def mean(key):
        return float(np.mean([r[key] for r in good]))

    summary = dict(
        meshes=len(good),
        skipped=len(results) - len(good),
        mean_ratio=mean("ratio"),
        mean_ratio_with_specials=mean("ratio_with_specials"),
        mean_m0_fraction=mean("m0_fraction"),
        mean_boundary_fraction=mean("boundary_fraction"),
        mean_f0=mean("f0"),
        mean_faces=mean("faces"),
        mean_f0_over_f=float(np.mean([r["f0"] / r["faces"] for r in good])),
    )
    if args.no_half_edge:
        summary["mean_no_he_ratio"] = mean("no_he_ratio")
        summary["mean_no_he_overhead"] = mean("no_he_overhead")
    _emit(**summary)
    return EXIT_OK if len(good) == len(results) else EXIT_INPUT


def _cloud_one(job):
    path, n, seed = job
    raw = load_obj(Path(path).read_bytes())
    return sample_points(normalize_unit_cube(raw.vertices), raw.faces, n, seed)


def cmd_metrics(args, cfg):
    sets = []
    for d in (args.generated, args.reference):
        files = sorted(Path(d).glob("*.obj"))
        if not files:
            print(f"error: no .obj files in {d}", file=sys.stderr)
            return EXIT_INPUT
        try:
            sets.append(_map(_cloud_one, [(str(f), cfg.points, cfg.seed + i) for i, f in enumerate(files)], cfg.jobs))
        except (MeshError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    res = all_metrics(sets[0], sets[1], cfg.jsd_grid)
    kv = dict(n_gen=len(sets[0]), n_ref=len(sets[1]), cov=res["cov"], mmd=res["mmd"], mmd_x1e3=1e3 * res["mmd"])
    if "one_nna" in res:
        kv["one_nna"] = res["one_nna"]
    kv["jsd"] = res["jsd"]
    _emit(**kv)
    return EXIT_OK


def cmd_fuzz(args, cfg):
    valid = 0
    faces = []
    levels = []
    for i in range(args.count):
        stream = sample_sequence(cfg.seed + i, args.max_tokens, args.stop_probability, cfg.n_bins)
        try:
            state = decode_stream(stream)
        except MeshError as exc:
            print(f"sample {i}: {exc}", file=sys.stderr)
            continue
        if state.done:
            valid += 1
            faces.append(state.mesh.n_faces)
            levels.append(state.level)
    print(f"{valid}/{args.count} valid", file=sys.stdout)
    _emit(masked_valid=valid, mean_faces=float(np.mean(faces)) if faces else 0.0,
          mean_records=float(np.mean(levels)) if levels else 0.0)
    if args.control:
        ok = sum(
            check_stream(sample_sequence(cfg.seed + i, args.max_tokens, args.stop_probability, cfg.n_bins, masked=False))[0]
            for i in range(args.count)
        )
        _emit(control_valid=ok)
    return EXIT_OK if valid == args.count else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmcodec", description="Progressive mesh token codec.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        if "n_bins" in names:
            sp.add_argument("--n-bins", dest="n_bins", type=int, default=None, help="grid bins per axis (128)")
        if "seed" in names:
            sp.add_argument("--seed", type=int, default=None)
        if "jobs" in names:
            sp.add_argument("--jobs", type=int, default=None, help="worker processes")

    sp = sub.add_parser("encode", help="OBJ -> token stream")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--text", action="store_true", help="write the text debug format")
    common(sp, "n_bins")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="token stream -> OBJ")
    sp.add_argument("input")
    sp.add_argument("output", help="output directory")
    sp.add_argument("--stop-at-k", dest="stop_at_k", type=int, default=None)
    sp.add_argument("--emit-all-levels", action="store_true")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("validate", help="check a token stream with the guided decoder")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("stats", help="compression statistics over a directory of OBJ files")
    sp.add_argument("directory")
    sp.add_argument("--no-half-edge", action="store_true", help="also count the variant without ring ordering")
    common(sp, "n_bins", "jobs")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("metrics", help="COV / MMD / 1-NNA / JSD between two OBJ directories")
    sp.add_argument("generated")
    sp.add_argument("reference")
    sp.add_argument("--points", type=int, default=None, help="points per mesh (2048)")
    sp.add_argument("--jsd-grid", dest="jsd_grid", type=int, default=None, help="voxels per axis (28)")
    common(sp, "seed", "jobs")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("fuzz", help="decode random masked samples")
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--max-tokens", type=int, default=512)
    sp.add_argument("--stop-probability", type=float, default=0.1)
    sp.add_argument("--control", action="store_true", help="also run the unmasked control arm")
    common(sp, "n_bins", "seed")
    sp.set_defaults(func=cmd_fuzz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ValueError as exc:
        parser.error(str(exc))
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
