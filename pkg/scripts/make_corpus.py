"""Write the synthetic evaluation corpus as OBJ files.

    python3 scripts/make_corpus.py out/corpus --seed 0 --size 100
"""

import argparse
from pathlib import Path

from pmcodec.corpus import build_corpus


def write_raw_obj(raw, path):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in raw.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in raw.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=100)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, raw in build_corpus(args.seed, args.size):
        write_raw_obj(raw, out / f"{name}.obj")
    print(f"wrote={args.size} dir={out}")


if __name__ == "__main__":
    main()
