"""Compare the compiled engine kernels against the numpy fallback.

Run as: python benchmarks/bench_engine.py

Times the two hot kernels (segment propagation and segment-exact operator
averaging) on representative problem sizes, plus one end-to-end functional
evaluation through whichever backend is active. The compiled extension must
be built for the comparison; otherwise only the numpy rows print.
"""
from __future__ import annotations

import time

import numpy as np

from urcontrol import engine
from urcontrol.engine import numpy_backend
from urcontrol.functionals import Objective, UniversalSet, evaluate
from urcontrol.models import pauli_basis, single_qubit_model
from urcontrol.optimize import initial_pulse, preset

try:
    from urcontrol.engine import _kernels
except ImportError:
    _kernels = None


def _time(func, *args, repeat: int = 5, number: int = 20) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            func(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def _random_problem(rng, n_segments: int, dim: int, n_ops: int):
    a = rng.standard_normal((n_segments, dim, dim)) + 1j * rng.standard_normal(
        (n_segments, dim, dim)
    )
    h = np.ascontiguousarray((a + a.conj().transpose(0, 2, 1)) / 2)
    b = rng.standard_normal((n_ops, dim, dim)) + 1j * rng.standard_normal((n_ops, dim, dim))
    ops = np.ascontiguousarray((b + b.conj().transpose(0, 2, 1)) / 2)
    return h, ops


def main():
    rng = np.random.default_rng(0)
    cases = [
        ("qubit, 40 segments", 40, 2, 3),
        ("two-qubit collective, 50 segments", 50, 3, 8),
        ("four-qubit collective, 50 segments", 50, 5, 24),
        ("d=8, 100 segments", 100, 8, 32),
    ]
    print(f"active backend: {engine.BACKEND}")
    print(f"{'case':38} {'kernel':13} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for label, n_segments, dim, n_ops in cases:
        h, ops = _random_problem(rng, n_segments, dim, n_ops)
        for kernel, args in (("propagate", (h, 0.1)), ("averaged_ops", (h, 0.1, ops))):
            t_np = _time(getattr(numpy_backend, kernel), *args)
            if _kernels is None:
                print(f"{label:38} {kernel:13} {t_np * 1e6:9.1f}u {'-':>10} {'-':>8}")
                continue
            t_cy = _time(getattr(_kernels, kernel), *args)
            print(
                f"{label:38} {kernel:13} {t_np * 1e6:9.1f}u {t_cy * 1e6:9.1f}u "
                f"{t_np / t_cy:7.2f}x"
            )

    p = preset("single_qubit.universal")
    pulse = initial_pulse(p.objective.model, p.n_segments, p.dt, np.random.default_rng(1))
    t_eval = _time(evaluate, p.objective, pulse, repeat=3, number=10)
    print(f"\nend-to-end functional evaluation ({engine.BACKEND}): {t_eval * 1e6:.1f}us")


if __name__ == "__main__":
    main()
