#!/usr/bin/env python3
"""Side-by-side timing of the numba kernels vs the interpreted fallback.

Runs the full coupled pipeline (simulate, prune over a coverage grid,
duration quantiles) at a few replicate counts in two subprocesses, one
per backend, checks the outputs match exactly, and prints a table.

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

WORKLOAD = r"""
import json, sys, time
import numpy as np
from cmjvax import SimCaps, StepCoverage, bhbp
from cmjvax.estimate import CoupledBatch
from cmjvax.functionals import parse_functional
from cmjvax._backend import backend_name

n = int(sys.argv[1])
law = bhbp(0.3163, 17.0, 50.0)
caps = SimCaps(700.0, 100_000)

t0 = time.perf_counter()
coupled = CoupledBatch(law, 1, caps, n, 20250808, threads=1)
batch = coupled.tree_batch()
t_sim = time.perf_counter() - t0

functional = parse_functional("Ttilde")
t0 = time.perf_counter()
quantiles = []
for c in np.arange(0.0, 1.001, 0.1):
    values = np.sort(coupled.evaluate(StepCoverage(float(c)), functional))
    quantiles.append(float(values[int(0.95 * (n - 1))]))
t_eval = time.perf_counter() - t0

json.dump({"backend": backend_name(), "t_sim": t_sim, "t_eval": t_eval,
           "individuals": int(batch.offsets[-1]),
           "quantiles": quantiles}, open(sys.argv[2], "w"))
"""


def run_case(n, disable_numba, script, out):
    env = dict(os.environ)
    env["CMJVAX_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    subprocess.run([sys.executable, script, str(n), out], check=True, env=env)
    return json.loads(Path(out).read_text())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller replicate counts")
    args = parser.parse_args()
    sizes = [2_000, 10_000] if args.quick else [2_000, 10_000, 50_000, 200_000]

    with tempfile.TemporaryDirectory() as tmp:
        script = Path(tmp) / "workload.py"
        script.write_text(WORKLOAD)

        # one warmup run so numba JIT compilation is not billed to the benchmark
        run_case(500, False, str(script), str(Path(tmp) / "warm.json"))

        print(f"{'n':>8}  {'numba sim/eval (s)':>20}  "
              f"{'python sim/eval (s)':>20}  {'speedup':>8}  {'match':>6}")
        print("-" * 72)
        for n in sizes:
            nb = run_case(n, False, str(script), str(Path(tmp) / "nb.json"))
            py = run_case(n, True, str(script), str(Path(tmp) / "py.json"))
            assert nb["backend"] == "numba", "numba backend unavailable"
            assert py["backend"] == "python"
            match = (nb["quantiles"] == py["quantiles"]
                     and nb["individuals"] == py["individuals"])
            total_nb = nb["t_sim"] + nb["t_eval"]
            total_py = py["t_sim"] + py["t_eval"]
            print(f"{n:>8}  {nb['t_sim']:>9.3f}/{nb['t_eval']:>9.3f}  "
                  f"{py['t_sim']:>9.3f}/{py['t_eval']:>9.3f}  "
                  f"{total_py / total_nb:>7.1f}x  {'ok' if match else 'FAIL':>6}")
            if not match:
                raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
