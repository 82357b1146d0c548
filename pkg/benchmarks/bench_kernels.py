"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--updates N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from fingerfuse.kernels import _pykernels

try:
    from fingerfuse.kernels import _ckernels
except ImportError:
    _ckernels = None

G = 9.80665


def workload(n, seed=0):
    rng = np.random.default_rng(seed)
    return dict(
        dts=np.full(n, 0.02),
        gyro=rng.normal(0, 1.0, (n, 3)),
        accel=np.tile([0.0, 0.0, G], (n, 1)) + rng.normal(0, 0.3, (n, 3)),
        mag=np.tile([0.5, 0.0, -0.85], (n, 1)) + rng.normal(0, 0.01, (n, 3)),
        counts=rng.normal(0, 6.0, n),
    )


def bench(mod, w, repeat):
    def run_filter():
        mod.dcm_run(np.eye(3), np.zeros(3), w["dts"], w["gyro"], w["accel"], w["mag"], 0.2, 0.005, G)

    def run_quant():
        mod.diffuse_quantize(w["counts"])

    return (min(timeit.repeat(run_filter, number=1, repeat=repeat)),
            min(timeit.repeat(run_quant, number=1, repeat=repeat)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--updates", type=int, default=100_000, help="samples per run (default 100000)")
    ap.add_argument("--repeat", type=int, default=3, help="best of R runs (default 3)")
    args = ap.parse_args()
    w = workload(args.updates)

    rows = [("python", *bench(_pykernels, w, args.repeat))]
    if _ckernels is not None:
        rows.append(("cython", *bench(_ckernels, w, args.repeat)))
        Rp, _ = _pykernels.dcm_run(np.eye(3), np.zeros(3), w["dts"], w["gyro"], w["accel"], w["mag"], 0.2, 0.005, G)
        Rc, _ = _ckernels.dcm_run(np.eye(3), np.zeros(3), w["dts"], w["gyro"], w["accel"], w["mag"], 0.2, 0.005, G)
        print(f"max |R_python - R_cython| = {np.abs(Rp - Rc).max():.2e}")
    else:
        print("compiled kernels not built; showing the fallback only")

    n = args.updates
    print(f"{'backend':<8} {'dcm_run':>12} {'per update':>12} {'quantize':>12}")
    for name, t_filter, t_quant in rows:
        print(f"{name:<8} {t_filter * 1e3:>10.1f}ms {t_filter / n * 1e9:>10.0f}ns {t_quant * 1e3:>10.1f}ms")
    if len(rows) == 2:
        print(f"speedup: filter x{rows[0][1] / rows[1][1]:.0f}, quantize x{rows[0][2] / rows[1][2]:.0f}")


if __name__ == "__main__":
    main()
