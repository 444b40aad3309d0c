"""Synthetic triangle meshes and ASCII OFF I/O.

Generators are deterministic in their parameters.  The cone generators put
the apex at the origin with the axis along +z, so dilation about the apex
maps the fan mesh onto itself and ball-clipped area ratios at the apex are
radius-independent to machine precision.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError, MeshError
from .varifold import DiscreteVarifold

__all__ = [
    "gen_plane",
    "gen_sphere",
    "gen_cone",
    "gen_double_cone",
    "gen_disc",
    "gen_bump",
    "gen_sheets",
    "write_off",
    "read_off",
    "write_multiplicity",
    "read_multiplicity",
]


def _grid_surface(xs: np.ndarray, ys: np.ndarray, height) -> DiscreteVarifold:
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    Z = height(X, Y)
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    faces = []
    for i in range(ny - 1):
        for j in range(nx - 1):
            v00 = i * nx + j
            v01 = v00 + 1
            v10 = v00 + nx
            v11 = v10 + 1
            faces.append((v00, v01, v11))
            faces.append((v00, v11, v10))
    return DiscreteVarifold(vertices=verts, faces=np.asarray(faces))


def gen_plane(pitch: float, extent_x: float = 1.0, extent_y: float = 1.0) -> DiscreteVarifold:
    """Flat triangulated rectangle [-ex, ex] x [-ey, ey] at z = 0."""
    if pitch <= 0:
        raise InvalidInputError("pitch must be positive")
    nx = max(2, int(math.ceil(2 * extent_x / pitch)) + 1)
    ny = max(2, int(math.ceil(2 * extent_y / pitch)) + 1)
    xs = np.linspace(-extent_x, extent_x, nx)
    ys = np.linspace(-extent_y, extent_y, ny)
    return _grid_surface(xs, ys, lambda X, Y: np.zeros_like(X))


def gen_bump(amplitude: float, sigma: float = 0.2, pitch: float = 0.02, extent: float = 1.0) -> DiscreteVarifold:
    """Plane with a Gaussian bump of the given amplitude at the origin."""
    if pitch <= 0 or sigma <= 0:
        raise InvalidInputError("pitch and sigma must be positive")
    n = max(2, int(math.ceil(2 * extent / pitch)) + 1)
    xs = np.linspace(-extent, extent, n)
    return _grid_surface(
        xs, xs, lambda X, Y: amplitude * np.exp(-(X**2 + Y**2) / (2.0 * sigma**2))
    )


_ICO_VERTS = None
_ICO_FACES = None


def _icosahedron():
    global _ICO_VERTS, _ICO_FACES
    if _ICO_VERTS is None:
        phi = (1.0 + math.sqrt(5.0)) / 2.0
        raw = []
        for a, b in ((1.0, phi), (-1.0, phi), (1.0, -phi), (-1.0, -phi)):
            raw.append((a, b, 0.0))
            raw.append((0.0, a, b))
            raw.append((b, 0.0, a))
        verts = np.asarray(raw)
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
        # faces by nearest-neighbor edges of the icosahedron
        edge_len = np.min(
            np.linalg.norm(verts[0] - verts[1:], axis=1)
        )
        faces = []
        n = len(verts)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(np.linalg.norm(verts[i] - verts[j]) - edge_len) > 1e-9:
                    continue
                for k in range(j + 1, n):
                    if (
                        abs(np.linalg.norm(verts[i] - verts[k]) - edge_len) <= 1e-9
                        and abs(np.linalg.norm(verts[j] - verts[k]) - edge_len) <= 1e-9
                    ):
                        # orient outward
                        nrm = np.cross(verts[j] - verts[i], verts[k] - verts[i])
                        cen = (verts[i] + verts[j] + verts[k]) / 3.0
                        faces.append((i, j, k) if nrm @ cen > 0 else (i, k, j))
        _ICO_VERTS = verts
        _ICO_FACES = np.asarray(faces, dtype=np.int64)
    return _ICO_VERTS.copy(), _ICO_FACES.copy()


def gen_sphere(pitch: float, radius: float = 1.0) -> DiscreteVarifold:
    """Subdivided icosahedron projected to the sphere, edge length <= pitch."""
    if pitch <= 0 or radius <= 0:
        raise InvalidInputError("pitch and radius must be positive")
    verts, faces = _icosahedron()
    edge0 = float(np.linalg.norm(verts[faces[0, 0]] - verts[faces[0, 1]])) * radius
    levels = max(0, int(math.ceil(math.log2(edge0 / pitch))) if edge0 > pitch else 0)
    verts = [tuple(v) for v in verts]
    for _ in range(levels):
        cache: dict[tuple[int, int], int] = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = np.asarray(verts[i]) + np.asarray(verts[j])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for (i, j, k) in faces:
            a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, a, c), (a, j, b), (c, b, k), (a, b, c)]
        faces = np.asarray(new_faces, dtype=np.int64)
    v = np.asarray(verts) * radius
    return DiscreteVarifold(vertices=v, faces=faces)


def _ring(nseg: int, slant: float, theta: float) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(nseg) / nseg
    s, c = math.sin(theta), math.cos(theta)
    return np.stack(
        [slant * s * np.cos(ang), slant * s * np.sin(ang), np.full(nseg, slant * c)], axis=1
    )


def gen_cone(theta0: float, pitch: float, slant: float = 1.0) -> DiscreteVarifold:
    """Single-nappe polyhedral cone: apex fan from the origin to one ring at the given slant."""
    if not (0 < theta0 < math.pi / 2):
        raise InvalidInputError("theta0 must lie in (0, pi/2)")
    if pitch <= 0:
        raise InvalidInputError("pitch must be positive")
    nseg = max(8, int(math.ceil(2.0 * math.pi * math.sin(theta0) * slant / pitch)))
    verts = np.vstack([np.zeros(3), _ring(nseg, slant, theta0)])
    faces = [(0, 1 + k, 1 + (k + 1) % nseg) for k in range(nseg)]
    return DiscreteVarifold(vertices=verts, faces=np.asarray(faces))


def _nappe(theta: float, nseg: int, slants: np.ndarray, apex_index: int | None, offset: int):
    """Vertices and faces of one nappe made of rings; fan to the apex when given."""
    verts = [
        _ring(nseg, s, theta) for s in slants
    ]
    faces = []
    if apex_index is not None:
        for k in range(nseg):
            faces.append((apex_index, offset + k, offset + (k + 1) % nseg))
    for r in range(len(slants) - 1):
        base0 = offset + r * nseg
        base1 = base0 + nseg
        for k in range(nseg):
            k1 = (k + 1) % nseg
            faces.append((base0 + k, base1 + k, base1 + k1))
            faces.append((base0 + k, base1 + k1, base0 + k1))
    return np.vstack(verts), faces


def gen_double_cone(
    theta0: float, pitch: float, r_min: float = 0.0, r_max: float = 1.0
) -> DiscreteVarifold:
    """Both nappes of the double cone, ring-graded in slant distance.

    With r_min = 0 the nappes share an apex vertex at the origin (fan
    triangles inside the first ring); with r_min > 0 the mesh is the annulus
    r_min < rho < r_max on each nappe.
    """
    if not (0 < theta0 < math.pi / 2):
        raise InvalidInputError("theta0 must lie in (0, pi/2)")
    if not (0 <= r_min < r_max):
        raise InvalidInputError("need 0 <= r_min < r_max")
    nseg = max(8, int(math.ceil(2.0 * math.pi * math.sin(theta0) * r_max / pitch)))
    start = r_min if r_min > 0 else min(pitch, r_max / 2.0)
    n_r = max(2, int(math.ceil((r_max - start) / pitch)) + 1)
    slants = np.linspace(start, r_max, n_r)

    all_verts = []
    all_faces = []
    apex = None
    if r_min == 0.0:
        all_verts.append(np.zeros((1, 3)))
        apex = 0
    offset = 1 if apex is not None else 0
    for theta in (theta0, math.pi - theta0):
        v, f = _nappe(theta, nseg, slants, apex, offset)
        all_verts.append(v)
        all_faces.extend(f)
        offset += len(v)
    return DiscreteVarifold(vertices=np.vstack(all_verts), faces=np.asarray(all_faces))


def gen_disc(pitch: float, radius: float = 1.0, z: float = 0.0) -> DiscreteVarifold:
    """Flat disc in the plane {z = const}: center fan plus rings."""
    if pitch <= 0 or radius <= 0:
        raise InvalidInputError("pitch and radius must be positive")
    nseg = max(8, int(math.ceil(2.0 * math.pi * radius / pitch)))
    n_r = max(2, int(math.ceil(radius / pitch)) + 1)
    rads = np.linspace(radius / n_r, radius, n_r)
    verts = [np.array([[0.0, 0.0, z]])]
    for r in rads:
        ang = 2.0 * math.pi * np.arange(nseg) / nseg
        verts.append(np.stack([r * np.cos(ang), r * np.sin(ang), np.full(nseg, z)], axis=1))
    faces = [(0, 1 + k, 1 + (k + 1) % nseg) for k in range(nseg)]
    for rr in range(n_r - 1):
        b0 = 1 + rr * nseg
        b1 = b0 + nseg
        for k in range(nseg):
            k1 = (k + 1) % nseg
            faces.append((b0 + k, b1 + k, b1 + k1))
            faces.append((b0 + k, b1 + k1, b0 + k1))
    return DiscreteVarifold(vertices=np.vstack(verts), faces=np.asarray(faces))


def gen_sheets(n_sheets: int, pitch: float, spacing: float = 0.1, radius: float = 1.0) -> DiscreteVarifold:
    """Stack of parallel discs over the unit disc (multigraph test fixture)."""
    if n_sheets < 1:
        raise InvalidInputError("need at least one sheet")
    verts = []
    faces = []
    offset = 0
    for k in range(n_sheets):
        sheet = gen_disc(pitch, radius=radius, z=k * spacing)
        verts.append(sheet.vertices)
        faces.append(sheet.faces + offset)
        offset += len(sheet.vertices)
    return DiscreteVarifold(vertices=np.vstack(verts), faces=np.vstack(faces))


def write_off(path, V: DiscreteVarifold) -> None:
    """ASCII OFF: 'OFF', counts line, vertex lines, face lines '3 i j k'."""
    lines = ["OFF", f"{len(V.vertices)} {len(V.faces)} 0"]
    for v in V.vertices:
        lines.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in V.faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_off(path, multiplicity=None) -> DiscreteVarifold:
    """Read an ASCII OFF mesh; optional per-face multiplicity array attaches as-is."""
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file (missing header)")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.asarray(tokens[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        if cnt != 3:
            raise MeshError("only triangle faces are supported")
        faces.append(tuple(int(t) for t in tokens[pos + 1 : pos + 4]))
        pos += 4
    return DiscreteVarifold(
        vertices=verts, faces=np.asarray(faces, dtype=np.int64), multiplicity=multiplicity
    )


def write_multiplicity(path, multiplicity) -> None:
    """Sidecar CSV: one multiplicity per line, row i for face i."""
    with open(path, "w") as fh:
        for m in np.asarray(multiplicity, dtype=float):
            fh.write(f"{m:.17g}\n")


def read_multiplicity(path) -> np.ndarray:
    with open(path) as fh:
        return np.asarray([float(line) for line in fh if line.strip()], dtype=float)
