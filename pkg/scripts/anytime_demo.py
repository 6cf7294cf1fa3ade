"""Decode one mesh level by level and write every level as OBJ.

    python3 scripts/anytime_demo.py out/levels --kind torus
"""

import argparse
from pathlib import Path

from pmcodec.codec import encode_pm
from pmcodec.corpus import build_corpus
from pmcodec.decoder import decode_stream
from pmcodec.halfedge import GridSpec, normalize_quantize, save_obj, validate_manifold
from pmcodec.simplify import decimate_to_pm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--kind", default="torus", choices=["icosphere", "torus", "cube", "strip"])
    ap.add_argument("--every", type=int, default=10, help="write every n-th level")
    args = ap.parse_args()
    name, raw = next((n, r) for n, r in build_corpus(0, 8) if n.startswith(args.kind))
    mesh, grid = normalize_quantize(raw, 128)
    stream = encode_pm(decimate_to_pm(mesh, grid))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def hook(state, event):
        if event in ("sep", "record", "eos") and (state.level % args.every == 0 or event == "eos"):
            ok = validate_manifold(state.mesh).ok
            path = out / f"{name}_k{state.level:05d}.obj"
            path.write_bytes(save_obj(state.mesh, GridSpec(128)))
            print(f"level={state.level} faces={state.mesh.n_faces} manifold={ok} file={path.name}")

    decode_stream(stream, hook)


if __name__ == "__main__":
    main()
