"""Wall-clock comparison of the numba and numpy kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
from pathlib import Path

from metldpc import _kernels
from metldpc.ensemble import instantiate, load_spec
from metldpc.oracle import oracle_spectrum
from metldpc.spectrum import average_weight_distribution

SPECS = Path(__file__).resolve().parent.parent / "specs"


def _cases():
    five_type = load_spec(SPECS / "five_type.met")
    reg24 = load_spec(SPECS / "reg24.met")
    two_type = load_spec(SPECS / "two_type.met")
    return [
        ("spectrum five_type n=80", lambda: average_weight_distribution(instantiate(five_type, 80))),
        ("exhaustive reg24 n=4", lambda: oracle_spectrum(instantiate(reg24, 4), "exhaustive")),
        ("exhaustive two_type n=4", lambda: oracle_spectrum(instantiate(two_type, 4), "exhaustive")),
        ("sampled five_type n=40, 2e4 graphs", lambda: oracle_spectrum(instantiate(five_type, 40), "sampled", samples=20_000, max_weight=3)),
        ("sampled two_type n=4, 2e4 graphs", lambda: oracle_spectrum(instantiate(two_type, 4), "sampled", samples=20_000)),
    ]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    saved = _kernels.get_backend()
    print(f"{'case':36s}" + "".join(f"{b:>12s}" for b in backends))
    try:
        for label, fn in _cases():
            row = []
            for b in backends:
                _kernels.set_backend(b)
                fn()  # warm-up, includes JIT compilation
                row.append(best_of(fn, args.repeat))
            print(f"{label:36s}" + "".join(f"{t:11.3f}s" for t in row))
    finally:
        _kernels.set_backend(saved)


if __name__ == "__main__":
    main()
