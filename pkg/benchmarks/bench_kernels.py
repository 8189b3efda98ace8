"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--frames 200] [--repeat 3]

Both backends decode the same inputs; the script checks that their decisions
agree before reporting per-frame times and the speedup.
"""

import argparse
import timeit

import numpy as np

from umpcodes._kernels import _pykernels
from umpcodes.polar import PolarSpec
from umpcodes.ztcc import ZtccSpec, _sections

try:
    from umpcodes._kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(frames: int, rng: np.random.Generator):
    ztcc = ZtccSpec.from_octal("117,127,155,171", 6, 32, 128)
    sec = _sections(ztcc, rng.standard_normal((frames, 128)) + 0.5, 0.8)
    labels = ztcc.trellis.labels
    yield "viterbi  ZTCC nu=6 (128,32)", lambda m: m.viterbi(sec, labels, ztcc.k), lambda out: out[0]
    yield "forward  ZTCC nu=6 (128,32)", lambda m: m.forward(sec, labels, ztcc.k), lambda out: out
    polar = PolarSpec(128, 32, 0x61, 32)
    # the numpy SCL handles one frame at a time, so keep this workload smaller
    llr = rng.normal(1.5, 2.0, (max(frames // 10, 1), 128))
    yield ("scl      polar (128,32) L=32",
           lambda m: m.scl(llr, polar.frozen_mask, polar.syndrome_masks, 32), lambda out: out[0])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--frames", type=int, default=200, help="frames per trellis workload")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions (best is reported)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels are not built; only the numpy backend can be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'python ms/frame':>16s} {'cython ms/frame':>16s} {'speedup':>8s}")
    for name, run, key in cases(args.frames, rng):
        frames = len(key(run(_pykernels)))
        t_py = min(timeit.repeat(lambda: run(_pykernels), number=1, repeat=args.repeat)) / frames
        if _ckernels is None:
            print(f"{name:32s} {1e3 * t_py:16.3f} {'-':>16s} {'-':>8s}")
            continue
        ref, fast = key(run(_pykernels)), key(run(_ckernels))
        if not np.allclose(ref, fast, rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        t_c = min(timeit.repeat(lambda: run(_ckernels), number=1, repeat=args.repeat)) / frames
        print(f"{name:32s} {1e3 * t_py:16.3f} {1e3 * t_c:16.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
