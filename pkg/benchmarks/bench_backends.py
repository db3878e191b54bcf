"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the switch is read at
import time:

    python benchmarks/bench_backends.py [--repeat 5]

Reported times exclude the first (compiling) call.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from klrisk import _jit
from klrisk.distributions import NoncentralChiSq, noncentral_chisq_cdf, noncentral_chisq_isf
from klrisk.comparison import nested_intervals
from klrisk.regression import fit_logistic
from klrisk.simulation import generate_nonnested_sample

repeat = int(sys.argv[1])
xs = np.linspace(0.01, 60.0, 2000)
data = generate_nonnested_sample(5000, np.random.default_rng(1))

cases = {
    "ncx2_cdf x2000": lambda: noncentral_chisq_cdf(xs, NoncentralChiSq(3, 12.0)),
    "ncx2_isf": lambda: noncentral_chisq_isf(1e-6, NoncentralChiSq(1, 40.0)),
    "nested_intervals": lambda: nested_intervals(6.6, 1, 3484),
    "fit tercile n=5000": lambda: fit_logistic(data, ["x1", "x2"], {"x1": "tercile"}),
}
out = {"backend": _jit.BACKEND, "times": {}}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(no_jit, repeat):
    env = dict(os.environ, KLRISK_NO_JIT="1" if no_jit else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    jitted = run_backend(False, args.repeat)
    plain = run_backend(True, args.repeat)
    print(f"{'kernel':<22}{jitted['backend']:>12}{plain['backend']:>12}{'speedup':>10}")
    for name, t_jit in jitted["times"].items():
        t_np = plain["times"][name]
        print(f"{name:<22}{t_jit * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
