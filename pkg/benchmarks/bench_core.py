"""Compiled vs numpy kernels: timings and a parity check on the same inputs.

    python benchmarks/bench_core.py [--repeat 5] [--json out.json]

Each case runs on both backends, reports the best wall time, the speed-up,
and the largest absolute difference between the two outputs.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from paravolt._core import available, backend
from paravolt.gridfn import GridSpec
from paravolt.spectral import block_stack, build_partition, synthetic_field


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o, dtype=float)) for o in out])
    return np.ravel(np.asarray(out, dtype=float))


def cases(N: int):
    spec = GridSpec(N, 2.0)
    part = build_partition(spec)
    rng = np.random.default_rng(0)
    F = np.ascontiguousarray(block_stack(synthetic_field(spec, 0.4, rng, channels=2), part))
    G = np.ascontiguousarray(block_stack(synthetic_field(spec, -0.2, rng, channels=2), part))
    yield f"bony_blocks N={N} d=2", lambda m: m.bony_blocks(F, G)

    n = N // 4
    g = np.full(n, 0.5)
    kbar = np.ascontiguousarray(np.vstack([np.linspace(1.0, 0.5, n), np.ones(n)]))
    dtheta = np.ascontiguousarray(rng.normal(0.0, np.sqrt(1.0 / n), (2, n)))
    kinds = np.array([1, 3], dtype=np.intc)
    eps = np.array([0.5, 0.3])
    yield f"volterra_midpoint n={n} terms=2", lambda m: m.volterra_midpoint(g, kbar, dtheta, kinds, eps, n)

    yield "bessel_zeros nu=-0.3 count=2000", lambda m: m.bessel_zeros(-0.3, 2000)
    x = np.linspace(0.1, 200.0, 20000)
    yield "bessel_j nu=0.7 20000 points", lambda m: m.bessel_j(0.7, x)


def run(N: int = 4096, repeat: int = 5) -> list[dict]:
    names = available()
    if "compiled" not in names:
        print("compiled backend not built; timing the numpy fallback only")
    rows = []
    for label, call in cases(N):
        row = {"case": label}
        outs = {}
        for name in names:
            row[name], outs[name] = _best(lambda: call(backend(name)), repeat)
        if len(outs) == 2:
            row["speedup"] = row["python"] / row["compiled"]
            row["max_diff"] = float(np.max(np.abs(_flat(outs["compiled"]) - _flat(outs["python"]))))
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    rows = run(args.N, args.repeat)
    print(f"{'case':36s} {'compiled':>10s} {'python':>10s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        comp = f"{r['compiled'] * 1e3:8.2f}ms" if "compiled" in r else "-"
        print(f"{r['case']:36s} {comp:>10s} {r['python'] * 1e3:8.2f}ms "
              f"{r.get('speedup', float('nan')):8.1f} {r.get('max_diff', float('nan')):10.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
