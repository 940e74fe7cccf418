"""Compare the compiled and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--templates N] [--blocks N] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from papertex import _kernels_py, kernels

try:
    from papertex import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--templates", type=int, default=500, help="rows on each side of cross_counts")
    parser.add_argument("--blocks", type=int, default=20000, help="64-bit blocks for hadamard_decode")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    bits = kernels.pack_bits(rng.integers(0, 2, (args.templates, 2048), dtype=np.uint8))
    masks = kernels.pack_bits((rng.random((args.templates, 2048)) < 0.95).astype(np.uint8))
    blocks = rng.integers(0, 2, (args.blocks, 64), dtype=np.uint8)

    backends = [("python", _kernels_py)]
    if _kernels_c is not None:
        backends.append(("cython", _kernels_c))
    else:
        print("compiled extension not available; timing the numpy backend only")

    reference = None
    for name, impl in backends:
        cc = min(timeit.repeat(lambda: impl.cross_counts(bits, masks, bits, masks), number=1, repeat=args.repeat))
        hd = min(timeit.repeat(lambda: impl.hadamard_decode(blocks), number=1, repeat=args.repeat))
        out = (impl.cross_counts(bits, masks, bits, masks), impl.hadamard_decode(blocks))
        if reference is None:
            reference = out
        else:
            same = all(np.array_equal(a, b) for pa, pb in zip(reference, out) for a, b in zip(pa, pb))
            print(f"{name} matches python: {same}")
        pairs = args.templates**2
        print(
            f"{name:7s} cross_counts {args.templates}x{args.templates}: {cc * 1e3:8.1f} ms "
            f"({pairs / cc / 1e6:.1f} M pairs/s)   hadamard_decode {args.blocks}: {hd * 1e3:8.1f} ms"
        )


if __name__ == "__main__":
    main()
