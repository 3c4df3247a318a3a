import json
import os
import subprocess
import sys

import numpy as np

import multipass
from multipass import PairingHeap, PotentialConfig
from multipass.analysis import sweep_symmetric_f_bound
from multipass.potential import delta_phi_batch

PROBE = """
import json
import numpy as np
import multipass
from multipass import PairingHeap, PotentialConfig
from multipass.analysis import sweep_symmetric_f_bound
from multipass.potential import delta_phi_batch

cfg = PotentialConfig.exp2()
rng = np.random.default_rng(0)
a, b, c = (rng.integers(0, 10**6, 500) for _ in range(3))
h = PairingHeap.from_keys(rng.permutation(2000))
_, ev = h.delete_min(record=True)
out = h.drain()
rep = sweep_symmetric_f_bound(cfg, amax=60, bmax=60, use_numba=True)
print(json.dumps({
    "backend": multipass.backend(),
    "dphi": delta_phi_batch(a, b, c, cfg, use_numba=True).tolist(),
    "pairs": ev.pairs(),
    "sorted": out == sorted(out),
    "sym": rep.extremum_value,
}))
"""


def run_probe(disable):
    env = dict(os.environ)
    env.pop("MULTIPASS_DISABLE_NUMBA", None)
    if disable:
        env["MULTIPASS_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def test_fallback_matches_compiled():
    slow, fast = run_probe(True), run_probe(False)
    assert slow["backend"] == "numpy"
    assert fast["backend"] == ("numba" if multipass.HAVE_NUMBA else "numpy")
    assert np.allclose(slow["dphi"], fast["dphi"], rtol=0, atol=1e-10)
    assert slow["pairs"] == fast["pairs"]
    assert slow["sorted"] and fast["sorted"]
    assert abs(slow["sym"] - fast["sym"]) < 1e-12


def test_in_process_dispatch_flags():
    cfg = PotentialConfig.exp3()
    a = np.arange(1, 200)
    assert np.allclose(delta_phi_batch(a, a, a * 7, cfg, use_numba=False),
                       delta_phi_batch(a, a, a * 7, cfg, use_numba=True), atol=1e-12)
    r1 = sweep_symmetric_f_bound(cfg, amax=40, bmax=40, use_numba=False)
    assert r1.extremum_location == (1, 1)
    h = PairingHeap.from_keys(range(100, 0, -1))
    assert h.drain() == list(range(1, 101))
