"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--samples 2000] [--horizon 64] [--repeat 3]

Prints one line per kernel with the best wall time of each backend and the
speed-up, after checking that both backends return identical verdicts.
"""
import argparse
import math
import time

import numpy as np

from csbilliard import _backend, ellipse
from csbilliard.phasemap import incidence_to_chart_arrays


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--horizon", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if "cython" not in _backend.available():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    fast, slow = _backend.get("cython"), _backend.get("python")
    table = ellipse(1.25, 1.0)
    rng = np.random.default_rng(args.seed)
    psi = rng.uniform(0, 2 * math.pi, args.samples)
    delta = rng.uniform(0.05, math.pi - 0.05, args.samples)
    p, phi = (np.ascontiguousarray(v) for v in incidence_to_chart_arrays(table, psi, delta))
    c, s = table.cos_even, table.sin_even
    hz = np.array([args.horizon // 2, args.horizon], dtype=np.int64)

    jobs = {
        "reflect": lambda k: k.reflect(c, s, p, phi),
        f"orbit n={args.horizon}": lambda k: k.orbit(c, s, p, phi, args.horizon),
        f"classify N={args.horizon}": lambda k: k.classify(c, s, p, phi, args.horizon, hz, 1e-14),
    }
    print(f"{args.samples} lines, ellipse a=1.25 b=1, best of {args.repeat}")
    print(f"{'kernel':<16}{'cython [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for name, job in jobs.items():
        tf, out_f = best_of(args.repeat, lambda: job(fast))
        ts, out_s = best_of(args.repeat, lambda: job(slow))
        if name.startswith("classify"):
            assert np.array_equal(out_f[0], out_s[0]), "backends disagree"
        print(f"{name:<16}{tf:>12.4f}{ts:>12.4f}{ts / tf:>10.1f}")


if __name__ == "__main__":
    main()
