"""Compare the compiled and pure-Python see-saw kernels.

    python benchmarks/bench_kernels.py [--repeats N]

Each case runs identical restarts on both backends, checks that the values
agree and reports the mean time per restart (or per batch of planes).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from bentlab import kernels
from bentlab.canonical import CanonicalParams, build_rho_bc
from bentlab.distill import n_copy_pt
from bentlab.qmat import partial_transpose


def _planes(D: int, k: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z = rng.standard_normal((D, k)) + 1j * rng.standard_normal((D, k))
        out.append(np.linalg.qr(z)[0])
    return out


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--restarts", type=int, default=32)
    args = ap.parse_args()

    if kernels.compiled_backend is None:
        raise SystemExit("compiled backend unavailable; build with `pip install -e . --no-build-isolation`")
    backends = {"cython": kernels.compiled_backend, "python": kernels.python_backend}

    pt = partial_transpose(build_rho_bc(CanonicalParams(3, 0.18, 0.02))).mat
    cases = {
        "one copy  (3x3)": (pt.reshape(3, 3, 3, 3), 3),
        "two copies (9x9)": (n_copy_pt(pt, 3, 2).reshape(9, 9, 9, 9), 9),
    }
    print(f"{'case':<18} {'kernel':<9} {'cython':>12} {'python':>12} {'speedup':>8} {'max |diff|':>11}")
    for name, (M4, D) in cases.items():
        starts = _planes(D, 2, args.restarts, seed=1)
        results, times = {}, {}
        for label, mod in backends.items():
            results[label] = [mod.seesaw_restart(M4, V0, 500, 1e-12, 3)[0] for V0 in starts]
            times[label] = _time(lambda: [mod.seesaw_restart(M4, V0, 500, 1e-12, 3) for V0 in starts],
                                 args.repeats) / len(starts)
        diff = np.max(np.abs(np.subtract(results["cython"], results["python"])))
        print(f"{name:<18} {'seesaw':<9} {times['cython'] * 1e3:>10.3f}ms {times['python'] * 1e3:>10.3f}ms "
              f"{times['python'] / times['cython']:>7.2f}x {diff:>11.1e}")

        planes = np.array(_planes(D, 2, 2000, seed=2))
        vals = {label: mod.grid_plane_min(M4, planes) for label, mod in backends.items()}
        tg = {label: _time(lambda: mod.grid_plane_min(M4, planes), args.repeats) / len(planes)
              for label, mod in backends.items()}
        diff = np.max(np.abs(vals["cython"] - vals["python"]))
        print(f"{name:<18} {'grid':<9} {tg['cython'] * 1e6:>10.2f}us {tg['python'] * 1e6:>10.2f}us "
              f"{tg['python'] / tg['cython']:>7.2f}x {diff:>11.1e}")


if __name__ == "__main__":
    main()
