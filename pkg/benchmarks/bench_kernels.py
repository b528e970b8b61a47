"""Time the compiled and pure-Python kernel backends on icospheres.

    python3 benchmarks/bench_kernels.py [--levels 2 3 4] [--repeat 3]

Prints one row per (kernel, level) with the best wall time of each backend
and the speedup.  Backends that are not importable are skipped.
"""

import argparse
import timeit

import numpy as np

from willflow import kernels
from willflow.generators import gen_icosphere


def cases(mesh):
    pos = mesh.positions
    faces = mesh.faces
    centers = pos[:: max(1, len(pos) // 32)]
    radii = np.geomspace(0.05, 1.0, 8)
    h = 1e-5 * kernels.min_edge_length(pos, mesh.edges)
    return {
        "vertex_geometry": lambda: kernels.vertex_geometry(mesh),
        "energy": lambda: kernels.energy(pos, faces, 1.0),
        "enclosed_volume": lambda: kernels.enclosed_volume(mesh),
        "fd_gradient": lambda: kernels.fd_gradient(mesh, 1.0, h),
        "clipped_areas": lambda: kernels.clipped_areas(mesh, centers, radii),
        "max_pairwise_distance": lambda: kernels.max_pairwise_distance(pos),
    }


def best_time(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    previous = kernels.backend_name()
    print(f"{'kernel':<22}{'level':>6}{'V':>7}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    try:
        for level in args.levels:
            mesh = gen_icosphere(level)
            names = list(cases(mesh))
            for name in names:
                times = {}
                for b in backends:
                    kernels.use_backend(b)
                    times[b] = best_time(cases(mesh)[name], args.repeat)
                row = f"{name:<22}{level:>6}{mesh.n_vertices:>7}"
                row += "".join(f"{1e3 * times[b]:>16.3f}" for b in backends)
                if "compiled" in times:
                    row += f"{times['python'] / times['compiled']:>9.1f}x"
                print(row)
    finally:
        kernels.use_backend(previous)


if __name__ == "__main__":
    main()
