"""Select the numerical kernel backend at import time.

The compiled extension is used when it was built; otherwise the numpy
implementation takes over.  :func:`use_backend` switches explicitly, which the
tests and the benchmark use to compare the two.
"""

from __future__ import annotations

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return sorted(_BACKENDS)


def backend_name() -> str:
    return _active.BACKEND


def get_backend(name: str | None = None):
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}") from None


def use_backend(name: str) -> None:
    global _active
    _active = get_backend(name)


def _arrays(mesh):
    return np.ascontiguousarray(mesh.positions), np.ascontiguousarray(mesh.faces)


def vertex_geometry(mesh):
    return _active.vertex_geometry(*_arrays(mesh))


def cot_laplacian(faces, cots, u):
    return _active.cot_laplacian(np.ascontiguousarray(faces), np.ascontiguousarray(cots), u)


def energy(pos, faces, lam):
    return _active.energy(np.ascontiguousarray(pos), np.ascontiguousarray(faces), float(lam))


def enclosed_volume(mesh):
    return _active.enclosed_volume(*_arrays(mesh))


def fd_gradient(mesh, lam, h):
    return _active.fd_gradient(*_arrays(mesh), float(lam), float(h))


def clipped_areas(mesh, centers, radii):
    return _active.clipped_areas(
        *_arrays(mesh),
        np.ascontiguousarray(centers, dtype=np.float64),
        np.ascontiguousarray(radii, dtype=np.float64),
    )


def max_pairwise_distance(pos):
    return _active.max_pairwise_distance(np.ascontiguousarray(pos, dtype=np.float64))


def min_edge_length(pos, edges):
    return _active.min_edge_length(
        np.ascontiguousarray(pos, dtype=np.float64), np.ascontiguousarray(edges)
    )
