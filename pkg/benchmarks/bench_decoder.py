"""Compare the compiled and pure-numpy belief-propagation kernels.

Runs both backends on identical frames of the long rate-4/5 code at a
near-threshold operating point (so the decoder actually iterates) and
reports per-frame decode time plus the speedup.  Also cross-checks that
the two kernels return the same decisions on every frame.

Usage: python benchmarks/bench_decoder.py [--frames N] [--snr-like SIGMA]
"""

import argparse
import time

import numpy as np

from bitlink import _core_py, fec

try:
    from bitlink import _core
except ImportError:
    _core = None


def make_frames(code, n_frames, sigma, seed):
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n_frames):
        info = rng.integers(0, 2, size=code.k).astype(np.uint8)
        cw = fec.ldpc_encode(info, code)
        llrs = np.where(cw == 0, 1.0, -1.0) * sigma * sigma / 2.0
        llrs += rng.normal(0.0, sigma, size=code.n)
        frames.append((cw, llrs))
    return frames


def run(kernel, frames, arrs, mode):
    min_sum = 1 if mode == "min-sum" else 0
    results = []
    start = time.perf_counter()
    for _, llrs in frames:
        results.append(kernel(
            llrs, arrs["row_ptr"], arrs["edge_col"], 20, min_sum, 0.3,
            arrs["max_check_degree"],
        ))
    elapsed = time.perf_counter() - start
    return elapsed, results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=8)
    ap.add_argument("--sigma", type=float, default=3.1,
                    help="consistent-Gaussian L-value sigma (smaller = "
                         "noisier, more iterations)")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    code = fec.long_code()
    arrs = code.arrays()
    frames = make_frames(code, args.frames, args.sigma, args.seed)
    print(f"code n={code.n} k={code.k}, {args.frames} frames, "
          f"sigma={args.sigma}")

    for mode in ("sum-product", "min-sum"):
        t_py, res_py = run(_core_py.bp_decode, frames, arrs, mode)
        line = (f"{mode:12s} python {t_py / args.frames * 1e3:8.1f} ms/frame")
        if _core is not None:
            t_c, res_c = run(_core.bp_decode, frames, arrs, mode)
            agree = all(
                np.array_equal(np.asarray(a[0]), np.asarray(b[0]))
                for a, b in zip(res_c, res_py)
            )
            line += (f"   compiled {t_c / args.frames * 1e3:8.1f} ms/frame"
                     f"   speedup {t_py / t_c:5.1f}x"
                     f"   decisions {'agree' if agree else 'DIFFER'}")
        else:
            line += "   (compiled kernel not built)"
        iters = [r[1] for r in (res_c if _core is not None else res_py)]
        line += f"   iterations {min(iters)}..{max(iters)}"
        print(line)


if __name__ == "__main__":
    main()
