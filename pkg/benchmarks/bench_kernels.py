"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the density/CDF batch evaluation and the recursive max-autoregressive
path simulation under both backends; the fallback is exercised in a
subprocess with STABLESUMS_NO_NUMBA=1.

Usage: python benchmarks/bench_kernels.py [--n 20000] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap
import time

_WORK = textwrap.dedent("""
    import json, sys, time
    import numpy as np
    import stablesums
    from stablesums import dist
    from stablesums._kernels import armax_path

    n = int(sys.argv[1])
    repeat = int(sys.argv[2])

    rng = np.random.default_rng(0)
    z = rng.uniform(-20.0, 20.0, n)
    p = dist.StableParams(a=1.3, sigma=1.0, beta=1.0, mu=0.0)
    innov = rng.exponential(1.0, 50 * n) ** -0.25

    dist.pdf(p, z[:8])               # warm up (jit compilation)
    armax_path(1.0, innov[:8], 0.7, 0.9)

    best_pdf = min(_timeit(lambda: dist.pdf(p, z)) for _ in range(repeat))
    best_path = min(_timeit(lambda: armax_path(1.0, innov, 0.7, 0.9))
                    for _ in range(repeat))
    print(json.dumps({"backend": "numba" if stablesums.USE_NUMBA else "numpy",
                      "pdf_batch_s": best_pdf, "armax_path_s": best_path}))
""")

_TIMER = textwrap.dedent("""
    def _timeit(fn):
        t0 = time.perf_counter()
        fn()
        return time.perf_counter() - t0
""")


def run_backend(no_numba: bool, n: int, repeat: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["STABLESUMS_NO_NUMBA"] = "1"
    else:
        env.pop("STABLESUMS_NO_NUMBA", None)
    code = _TIMER + _WORK
    out = subprocess.run([sys.executable, "-c", code, str(n), str(repeat)],
                         check=True, env=env, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20000,
                        help="batch size for the density benchmark")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    results = [run_backend(False, args.n, args.repeat),
               run_backend(True, args.n, args.repeat)]
    print(f"{'backend':<8} {'pdf batch':>12} {'armax path':>12}")
    for r in results:
        print(f"{r['backend']:<8} {r['pdf_batch_s']:>11.4f}s "
              f"{r['armax_path_s']:>11.4f}s")
    numba, numpy_ = results
    print(f"speedup: pdf x{numpy_['pdf_batch_s'] / numba['pdf_batch_s']:.1f}, "
          f"path x{numpy_['armax_path_s'] / numba['armax_path_s']:.1f}")


if __name__ == "__main__":
    main()
