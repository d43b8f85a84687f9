"""Python bindings for the pcsketch point-cloud toolbox.

Clouds are exchanged as :class:`PointCloud` objects whose ``ids``,
``positions`` and ``colors`` properties are NumPy arrays. Tool records are
plain dicts in the same JSON shape as session script lines, e.g.
``{"tool": "downsample", "strength": "weak"}``.
"""

from ._core import (
    Client,
    EditSession,
    Error,
    PointCloud,
    Server,
    TriangleMesh,
    compute_edit,
    evaluate,
    make_box_mesh,
    point_to_mesh_distance,
    read_obj,
    read_ply,
    simulate_scan,
    write_ply,
)

__all__ = [
    "Client",
    "EditSession",
    "Error",
    "PointCloud",
    "Server",
    "TriangleMesh",
    "compute_edit",
    "evaluate",
    "make_box_mesh",
    "point_to_mesh_distance",
    "read_obj",
    "read_ply",
    "simulate_scan",
    "write_ply",
]

__version__ = "0.1.0"
