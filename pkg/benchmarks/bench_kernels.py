"""Compare the compiled jet kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--train-iters 20]

Part 1 times ``chain_forward`` / ``chain_backward`` directly.  Part 2 times
whole training iterations in a subprocess per backend (the backend is chosen
at import time through ``RECONN_KERNELS``).
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from reconn import kernels

TRAIN_SNIPPET = """
import json, time
from reconn import experiments as E, kernels
cfg = E.default_config({exp!r}, iterations={iters}, grid_n=8)
t0 = time.perf_counter()
E.train(cfg)
print(json.dumps({{"backend": kernels.BACKEND, "ms_per_iter": 1e3 * (time.perf_counter() - t0) / {iters}}}))
"""


def bench_kernels(repeat: int) -> list[dict]:
    rows = []
    rng = np.random.default_rng(0)
    for dim, m in ((1, 2500 * 20), (2, 1000 * 30)):
        k = kernels.layout_size(dim, 2)
        z = rng.normal(size=(k, m))
        h = [rng.normal(size=m) for _ in range(4)]
        g = rng.normal(size=(k, m))
        impls = {"python": (kernels.chain_forward_py, kernels.chain_backward_py)}
        if kernels.BACKEND == "cython":
            impls["cython"] = (kernels.chain_forward, kernels.chain_backward)
        for name, (fwd, bwd) in impls.items():
            tf = min(timeit.repeat(lambda: fwd(z, h[0], h[1], h[2], dim, 2), number=1, repeat=repeat))
            tb = min(timeit.repeat(lambda: bwd(z, h[1], h[2], h[3], g, dim, 2), number=1, repeat=repeat))
            rows.append({"dim": dim, "width": m, "backend": name, "forward_ms": 1e3 * tf, "backward_ms": 1e3 * tb})
    return rows


def bench_training(exp: str, iters: int) -> list[dict]:
    rows = []
    for backend in ("auto", "python"):
        env = dict(os.environ, RECONN_KERNELS=backend)
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET.format(exp=exp, iters=iters)],
                             env=env, capture_output=True, text=True, check=True)
        rows.append({"experiment": exp, **json.loads(out.stdout.strip().splitlines()[-1])})
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--train-iters", type=int, default=20)
    ap.add_argument("--experiments", default="1d-pinns,interface-2d,material-pinns")
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args(argv)

    kern = bench_kernels(args.repeat)
    train = []
    for exp in args.experiments.split(","):
        if exp:
            train += bench_training(exp, args.train_iters)
    if args.json:
        print(json.dumps({"kernels": kern, "training": train}, indent=2))
        return 0
    print(f"compiled backend available: {kernels.BACKEND == 'cython'}")
    print(f"{'dim':>3} {'width':>7} {'backend':>8} {'fwd ms':>8} {'bwd ms':>8}")
    for r in kern:
        print(f"{r['dim']:>3} {r['width']:>7} {r['backend']:>8} {r['forward_ms']:8.3f} {r['backward_ms']:8.3f}")
    print()
    print(f"{'experiment':>16} {'backend':>8} {'ms/iter':>8}")
    for r in train:
        print(f"{r['experiment']:>16} {r['backend']:>8} {r['ms_per_iter']:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
