"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at
import time::

    python benchmarks/bench_kernels.py            # both backends, table on stdout
    python benchmarks/bench_kernels.py --quick    # smaller sizes
"""

import argparse
import json
import os
import subprocess
import sys
import time

CASES = ("delta_phi_batch", "symmetric_sweep", "heapsort")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def measure(quick, repeat):
    import numpy as np

    import multipass
    from multipass import PairingHeap, PotentialConfig
    from multipass.analysis import sweep_symmetric_f_bound
    from multipass.potential import delta_phi_batch

    cfg = PotentialConfig.exp2()
    jit = multipass.HAVE_NUMBA
    rng = np.random.default_rng(0)
    m = 200_000 if quick else 2_000_000
    a, b, c = (rng.integers(0, 10**9, m) for _ in range(3))
    side = 300 if quick else 1500
    n = 20_000 if quick else 200_000
    keys = rng.permutation(n)

    def heapsort():
        h = PairingHeap.from_keys(keys)
        while h:
            h.delete_min()

    # warm up so compilation is not timed
    delta_phi_batch(a[:10], b[:10], c[:10], cfg, use_numba=jit)
    sweep_symmetric_f_bound(cfg, amax=5, bmax=5, use_numba=jit)
    PairingHeap.from_keys(range(10)).drain()

    return {
        "backend": multipass.backend(),
        "delta_phi_batch": best_of(lambda: delta_phi_batch(a, b, c, cfg, use_numba=jit), repeat),
        "symmetric_sweep": best_of(lambda: sweep_symmetric_f_bound(cfg, amax=side, bmax=side, use_numba=jit),
                                   repeat),
        "heapsort": best_of(heapsort, 1),
        "sizes": {"delta_phi_batch": m, "symmetric_sweep": side * side, "heapsort": n},
    }


def run_backend(disable, quick, repeat):
    env = dict(os.environ)
    env.pop("MULTIPASS_DISABLE_NUMBA", None)
    if disable:
        env["MULTIPASS_DISABLE_NUMBA"] = "1"
    cmd = [sys.executable, __file__, "--worker", "--repeat", str(repeat)] + (["--quick"] if quick else [])
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    ns = ap.parse_args(argv)
    if ns.worker:
        print(json.dumps(measure(ns.quick, ns.repeat)))
        return 0
    fast = run_backend(False, ns.quick, ns.repeat)
    slow = run_backend(True, ns.quick, ns.repeat)
    print(f"{'kernel':<18}{'size':>12}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for case in CASES:
        print(f"{case:<18}{fast['sizes'][case]:>12}{fast[case]:>11.3f}s{slow[case]:>11.3f}s"
              f"{slow[case] / fast[case]:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
