"""Compare the compiled and pure-Python kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--sizes 20 50 100] [--repeat 5]

For each kernel and size the best of ``repeat`` timings is reported for
every available backend, together with the speedup of the compiled one and
the largest difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from glag import _backend


def _cases(p, rng):
    X = rng.standard_normal((p, p))
    C = rng.random((p, p))
    a, b = rng.standard_normal((2, p, p))
    return {
        "ds_project": lambda k: k.ds_project(X, np.zeros((p, p)), 1e-9, 100000)[0],
        "lap_min": lambda k: np.asarray(k.lap_min(C)[0], dtype=float),
        "group_shrink": lambda k: np.concatenate(k.group_shrink(a, b, 0.7)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 100])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    names = _backend.available()
    print(f"backends: {', '.join(names)}")
    header = f"{'kernel':<14}{'p':>5}" + "".join(f"{n + ' [ms]':>16}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}{'max |diff|':>13}"
    print(header)
    rng = np.random.default_rng(0)
    for p in args.sizes:
        for kernel, fn in _cases(p, rng).items():
            times, outs = [], []
            for n in names:
                mod = _backend.get(n)
                outs.append(fn(mod))
                number = 3
                t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
                times.append(1e3 * t / number)
            line = f"{kernel:<14}{p:>5}" + "".join(f"{t:>16.3f}" for t in times)
            if len(names) > 1:
                diff = float(np.abs(outs[0] - outs[1]).max())
                line += f"{times[1] / times[0]:>10.1f}{diff:>13.2e}"
            print(line)


if __name__ == "__main__":
    main()
