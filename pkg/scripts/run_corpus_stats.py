"""Compression statistics over the synthetic corpus, with and without ring ordering.

    python3 scripts/run_corpus_stats.py --seed 0 --size 100
"""

import argparse
import time

import numpy as np

from pmcodec.codec import compression_report, encode_pm, encode_pm_no_halfedge
from pmcodec.corpus import build_corpus
from pmcodec.halfedge import normalize_quantize
from pmcodec.simplify import decimate_to_pm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=100)
    ap.add_argument("--n-bins", type=int, default=128)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rows = []
    for name, raw in build_corpus(args.seed, args.size):
        mesh, grid = normalize_quantize(raw, args.n_bins)
        pm = decimate_to_pm(mesh, grid)
        rep = compression_report(pm)
        he = len(encode_pm(pm))
        rows.append((name.split("_")[0], rep, len(encode_pm_no_halfedge(pm)) / he - 1))
    for kind in sorted({k for k, *_ in rows}) + ["all"]:
        sel = [r for r in rows if kind in ("all", r[0])]
        print(
            f"kind={kind} meshes={len(sel)}"
            f" ratio={np.mean([r.ratio for _, r, _ in sel]):.4f}"
            f" m0_fraction={np.mean([r.m0_fraction for _, r, _ in sel]):.4f}"
            f" boundary_fraction={np.mean([r.boundary_fraction for _, r, _ in sel]):.4f}"
            f" f0={np.mean([r.f0 for _, r, _ in sel]):.1f}"
            f" faces={np.mean([r.faces for _, r, _ in sel]):.1f}"
            f" no_he_overhead={np.mean([o for *_, o in sel]):.4f}"
        )
    print(f"seconds={time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main()
