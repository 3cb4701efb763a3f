"""Benchmark the lattice-sum kernel: numba JIT against the numpy fallback.

Run as ``python -m theta_forge.bench``.  The first numba call includes JIT
compilation and is excluded by a warmup pass.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _kernels
from .symplectic import sample_siegel_point
from .theta import _lattice


def _time_backend(fn, P, tau, y, want_grad, want_dtau, repeats):
    fn(P, tau, y, want_grad, want_dtau)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(P, tau, y, want_grad, want_dtau)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="theta kernel benchmark")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--radius", type=int, default=8)
    parser.add_argument("--genus", type=int, nargs="+", default=[1, 2, 3, 4])
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"numba available: {_kernels.has_numba()}")
    header = f"{'genus':>5} {'points':>8} {'mode':>10} {'numpy':>12} {'numba':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for g in args.genus:
        tau = sample_siegel_point(g, rng).tau
        P = np.asarray(_lattice(g, args.radius, (0,) * g))
        y = np.zeros(g, dtype=complex)
        for label, want_grad, want_dtau in (
            ("value", False, False),
            ("grad", True, False),
            ("full", True, True),
        ):
            t_np = _time_backend(
                _kernels.theta_sum_numpy, P, tau, y, want_grad, want_dtau, args.repeats
            )
            if _kernels.has_numba():
                t_nb = _time_backend(
                    _kernels.theta_sum_numba, P, tau, y, want_grad, want_dtau, args.repeats
                )
                ratio = f"{t_np / t_nb:7.1f}x"
                nb_ms = f"{t_nb * 1e3:9.3f} ms"
            else:
                ratio = "    n/a"
                nb_ms = "      n/a"
            print(
                f"{g:>5} {len(P):>8} {label:>10} {t_np * 1e3:9.3f} ms {nb_ms} {ratio}"
            )
        # agreement between the two implementations
        if _kernels.has_numba():
            v1 = _kernels.theta_sum_numpy(P, tau, y, True, True)
            v2 = _kernels.theta_sum_numba(P, tau, y, True, True)
            err = max(
                abs(v1[0] - v2[0]),
                float(np.max(np.abs(v1[1] - v2[1]))),
                float(np.max(np.abs(v1[2] - v2[2]))),
            )
            print(f"{'':>5} backend agreement: {err:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
