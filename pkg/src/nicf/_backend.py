"""Select the compiled kernel backend, falling back to numpy.

Set ``NICF_BACKEND=python`` to force the pure-numpy kernels.
"""
import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("NICF_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py

map_step = kernels.map_step
iterate_map = kernels.iterate_map
barycentric_eval = kernels.barycentric_eval
accumulate_branches = kernels.accumulate_branches
