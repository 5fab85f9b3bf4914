"""Compare the numba and numpy kernel backends on the hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The backend is fixed at import time, so each one runs in its own
subprocess with ``GMLIGHT_DISABLE_NUMBA`` set accordingly.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from gmlight import _kernels
from gmlight.decompose import IlluminationParams
from gmlight.ot import SinkhornConfig, geometric_cost, sinkhorn_gml
from gmlight.projection import ProjectionConfig, gaussian_map
from gmlight.sphere import assign_pixels, generate_anchors

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
anchors = generate_anchors(128)
u, v = rng.dirichlet(np.ones(128)), rng.dirichlet(np.ones(128))
cost = geometric_cost(anchors, rng.uniform(0.5, 5, 128), rng.uniform(0.5, 5, 128))
params = IlluminationParams(u, [5, 5, 5], [0.1, 0.1, 0.1], np.ones(128))

cases = {
    "sinkhorn n=128 eps=1e-4": lambda: sinkhorn_gml(u, v, cost, SinkhornConfig()),
    "gaussian_map 128x256 n=128": lambda: gaussian_map(params, anchors, ProjectionConfig.single()),
    "assign_pixels 512x1024 n=128": lambda: assign_pixels(512, 1024, anchors),
}
out = {"backend": _kernels.BACKEND}
for name, fn in cases.items():
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out[name] = min(times)
print(json.dumps(out))
"""


def measure(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, GMLIGHT_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast = measure(False, args.repeat)
    slow = measure(True, args.repeat)
    if fast["backend"] != "numba":
        print("numba is not installed; both columns use numpy", file=sys.stderr)
    width = max(len(k) for k in slow if k != "backend")
    print(f"{'case':<{width}}  {'numba s':>9}  {'numpy s':>9}  {'speed-up':>8}")
    for key in slow:
        if key == "backend":
            continue
        print(f"{key:<{width}}  {fast[key]:>9.4f}  {slow[key]:>9.4f}  {slow[key] / fast[key]:>7.1f}x")


if __name__ == "__main__":
    main()
