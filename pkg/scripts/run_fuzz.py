"""Masked vs unmasked random decoding: validity rate and output size.

    python3 scripts/run_fuzz.py --count 1000 --max-tokens 512
"""

import argparse
import time

import numpy as np

from pmcodec.decoder import check_stream, decode_stream, sample_sequence


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-tokens", type=int, default=512)
    ap.add_argument("--stop-probability", type=float, default=0.1)
    args = ap.parse_args()
    for masked in (True, False):
        t0 = time.perf_counter()
        valid, faces, lengths = 0, [], []
        for i in range(args.count):
            s = sample_sequence(args.seed + i, args.max_tokens, args.stop_probability, masked=masked)
            lengths.append(len(s))
            if check_stream(s)[0]:
                valid += 1
                faces.append(decode_stream(s).mesh.n_faces)
        print(
            f"masked={masked} valid={valid}/{args.count}"
            f" mean_tokens={np.mean(lengths):.1f}"
            f" mean_faces={np.mean(faces) if faces else 0:.1f}"
            f" seconds={time.perf_counter() - t0:.1f}"
        )


if __name__ == "__main__":
    main()
