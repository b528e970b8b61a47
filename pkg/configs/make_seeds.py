"""Regenerate the seed meshes used by the flow configs in this directory."""

from pathlib import Path

from willflow import save_mesh
from willflow.generators import gen_ellipsoid, gen_geodesic_sphere
from willflow.rescaling import normalize

HERE = Path(__file__).resolve().parent

SEEDS = {
    # frequency-5 geodesic sphere scaled to area 4 pi, so the area radius is 1
    "sphere_geo5.obj": lambda: normalize(gen_geodesic_sphere(5)),
    "ellipsoid_1.2_1_0.9.obj": lambda: gen_ellipsoid(1.2, 1.0, 0.9, 3),
}


def main():
    for name, make in SEEDS.items():
        save_mesh(make(), HERE / "seeds" / name)
        print(HERE / "seeds" / name)


if __name__ == "__main__":
    main()
