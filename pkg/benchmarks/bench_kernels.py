"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeats 5] [--json out.json]

Times the residual-product moment matrix at several sample sizes and the
Imhof survival function on random weight sets, for each available backend.
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from rcit import _kernels, wchi2


def bench_pi(backend: str, n: int, repeats: int) -> float:
    pi_moment, _ = _kernels.get_backend(backend)
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, 5))
    b = rng.standard_normal((n, 5))
    return min(timeit.repeat(lambda: pi_moment(a, b), number=1, repeat=repeats))


def bench_imhof(backend: str, repeats: int) -> float:
    sets = [np.random.default_rng(s).uniform(0, 1, L) for s, L in enumerate((1, 3, 10, 25))]

    def run():
        for w in sets:
            q = w.sum() + 2 * np.sqrt(2 * np.sum(w**2))
            wchi2.imhof_survival(w, q, backend=backend)

    return min(timeit.repeat(run, number=1, repeat=repeats))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--sizes", default="10000,100000,1000000")
    parser.add_argument("--json")
    args = parser.parse_args(argv)
    backends = ["python"] + (["cython"] if _kernels._ext is not None else [])
    rows = []
    for n in (int(s) for s in args.sizes.split(",")):
        rows.append({"kernel": "pi_moment", "n": n,
                     **{b: bench_pi(b, n, args.repeats) for b in backends}})
    rows.append({"kernel": "imhof_survival", "n": 4,
                 **{b: bench_imhof(b, args.repeats) for b in backends}})
    print(f"{'kernel':<16}{'size':>10}" + "".join(f"{b:>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for r in rows:
        line = f"{r['kernel']:<16}{r['n']:>10}" + "".join(f"{r[b]:>11.4f}s" for b in backends)
        if len(backends) == 2:
            line += f"{r['python'] / r['cython']:>11.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
