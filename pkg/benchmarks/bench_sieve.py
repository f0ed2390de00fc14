"""Benchmark: compiled sweep kernel vs the pure-Python fallback.

Runs the same sieve fit on planted synthetic labels with both backends and
reports wall time and speedup, verifying the outputs agree exactly.

    python3 benchmarks/bench_sieve.py [--records 5000] [--layers 3] [--restarts 10]
"""

import argparse
import time

import numpy as np

import driftbench.sieve as sieve_mod
from driftbench import backend
from driftbench.infotheory import DiscreteMatrix
from driftbench.sieve import fit_sieve
from driftbench.synth import SynthConfig, generate


def run(matrix, args):
    t0 = time.perf_counter()
    model = fit_sieve(matrix, k=args.layers, seed=args.seed, restarts=args.restarts)
    return time.perf_counter() - t0, model


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=5000)
    parser.add_argument("--layers", type=int, default=3)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    dataset, _ = generate(SynthConfig(n_records=args.records, seed=args.seed))
    matrix = DiscreteMatrix(
        dataset.label_matrix().astype(np.int64),
        dataset.diseases,
        [2] * dataset.n_diseases,
    )
    print(f"fit_sieve on N={matrix.n}, d={matrix.d}, k={args.layers}, "
          f"restarts={args.restarts}")

    if not backend.have_extension():
        print("compiled extension not available; benchmarking python backend only")
        t_py, _ = run(matrix, args)
        print(f"  python : {t_py:8.3f} s")
        return

    sieve_mod.sweep = backend.compiled_sweep
    t_c, model_c = run(matrix, args)
    sieve_mod.sweep = backend.python_sweep
    t_py, model_py = run(matrix, args)
    sieve_mod.sweep = backend.sweep

    match = model_c.to_dict() == model_py.to_dict()
    print(f"  cython : {t_c:8.3f} s")
    print(f"  python : {t_py:8.3f} s")
    print(f"  speedup: {t_py / t_c:8.1f} x")
    print(f"  outputs identical: {match}")
    if not match:
        raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
