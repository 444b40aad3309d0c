"""Discrete varifold diagnostics on triangle meshes.

A mesh with per-face multiplicity carries the weight measure used throughout:
first variation against vertex-sampled vector fields, the conormal-jump
curvature measure on interior edges, ball-clipped area ratios for the
monotonicity ladder, curvature-density classification, and slab/Hausdorff
flatness reports.  Ball clipping of planar faces is exact (closed-form
triangle-disc intersection areas), which is what keeps cone ratios
radius-independent to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.neighbors import KDTree

from .errors import DomainError, InvalidInputError, MeshError

__all__ = [
    "DiscreteVarifold",
    "CurvatureMeasure",
    "MonotonicityProfile",
    "FlatnessReport",
    "CurvatureCheckResult",
    "first_variation",
    "mean_curvature_measure",
    "monotonicity_profile",
    "density_classify",
    "measured_lambda",
    "flatness",
    "hausdorff_distance",
    "variational_curvature_check",
    "connected_face_components",
    "triangle_disc_area",
]

_AREA_FLOOR = 1e-14


@dataclass
class DiscreteVarifold:
    """Triangle mesh with per-face positive multiplicity (default 1)."""

    vertices: np.ndarray
    faces: np.ndarray
    multiplicity: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.multiplicity is None:
            self.multiplicity = np.ones(len(self.faces))
        else:
            self.multiplicity = np.asarray(self.multiplicity, dtype=float).reshape(-1)
        if len(self.multiplicity) != len(self.faces):
            raise MeshError("multiplicity must have one entry per face")
        if np.any(self.multiplicity <= 0):
            raise MeshError("multiplicities must be positive")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError("face index out of range")
        if np.any(self.face_areas() <= _AREA_FLOOR):
            raise MeshError("degenerate face (area below 1e-14)")

    def face_corners(self):
        v = self.vertices
        f = self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_areas(self) -> np.ndarray:
        a, b, c = self.face_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_normals(self) -> np.ndarray:
        a, b, c = self.face_corners()
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def face_centroids(self) -> np.ndarray:
        a, b, c = self.face_corners()
        return (a + b + c) / 3.0

    def total_area(self) -> float:
        return float(np.sum(self.multiplicity * self.face_areas()))

    def transformed(self, rotation: np.ndarray, translation=(0.0, 0.0, 0.0)) -> "DiscreteVarifold":
        """Rigidly moved copy (isometry-invariance testing)."""
        rot = np.asarray(rotation, dtype=float)
        return DiscreteVarifold(
            vertices=self.vertices @ rot.T + np.asarray(translation, dtype=float),
            faces=self.faces.copy(),
            multiplicity=self.multiplicity.copy(),
        )


def first_variation(V: DiscreteVarifold, X) -> float:
    """Integral of the tangential divergence of X against the weight measure.

    X is sampled at the vertices ((nv, 3) array or a callable on positions)
    and extended affinely on each face; the tangential divergence of an
    affine field is exact per face.
    """
    Xv = np.asarray(X(V.vertices) if callable(X) else X, dtype=float)
    if Xv.shape != V.vertices.shape:
        raise InvalidInputError("X must supply one 3-vector per vertex")
    if not np.all(np.isfinite(Xv)):
        raise InvalidInputError("X must be finite at all vertices")
    a, b, c = V.face_corners()
    e1, e2 = b - a, c - a
    xa, xb, xc = Xv[V.faces[:, 0]], Xv[V.faces[:, 1]], Xv[V.faces[:, 2]]
    d1, d2 = xb - xa, xc - xa
    # Gram matrix and its inverse per face
    m11 = np.einsum("ij,ij->i", e1, e1)
    m12 = np.einsum("ij,ij->i", e1, e2)
    m22 = np.einsum("ij,ij->i", e2, e2)
    det = m11 * m22 - m12 * m12
    # B = E^T D (2x2); div_S X = tr(M^{-1} B)
    b11 = np.einsum("ij,ij->i", e1, d1)
    b12 = np.einsum("ij,ij->i", e1, d2)
    b21 = np.einsum("ij,ij->i", e2, d1)
    b22 = np.einsum("ij,ij->i", e2, d2)
    div = (m22 * b11 - m12 * b21 + m11 * b22 - m12 * b12) / det
    return float(np.sum(V.multiplicity * V.face_areas() * div))


@dataclass
class CurvatureMeasure:
    """Edge-supported vector curvature measure.

    vectors[k] pairs with the interior edge edges[k]; the adjointness
    sum(vectors . X(midpoint)) approximates -first_variation(V, X).  Boundary
    edges (single incident face) carry no weight and are listed separately.
    """

    edges: np.ndarray
    vectors: np.ndarray
    midpoints: np.ndarray
    lengths: np.ndarray
    total_mass: float
    boundary_edges: np.ndarray

    def pair_with(self, V: DiscreteVarifold, X) -> float:
        """sum_e H_e . X(midpoint) for vertex-sampled X (affine edge midpoint values)."""
        Xv = np.asarray(X(V.vertices) if callable(X) else X, dtype=float)
        xm = 0.5 * (Xv[self.edges[:, 0]] + Xv[self.edges[:, 1]])
        return float(np.einsum("ij,ij->", self.vectors, xm))


def _edge_table(V: DiscreteVarifold) -> dict:
    table: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for fi, (i, j, k) in enumerate(V.faces):
        for a, b, opp in ((i, j, k), (j, k, i), (k, i, j)):
            key = (a, b) if a < b else (b, a)
            table.setdefault(key, []).append((fi, opp))
    return table


def mean_curvature_measure(V: DiscreteVarifold) -> CurvatureMeasure:
    """First-variation density of the weighted area as an edge measure.

    Each interior edge receives minus the multiplicity-weighted sum over its
    two incident faces of (edge length) x (in-face outward conormal); the sign
    makes the measure adjoint to first_variation, and for polyhedra the
    representation is exact.
    """
    table = _edge_table(V)
    verts = V.vertices
    edges, vectors, boundary = [], [], []
    for (i, j), incident in table.items():
        if len(incident) > 2:
            raise MeshError(f"non-manifold edge {(i, j)} shared by {len(incident)} faces")
        if len(incident) == 1:
            boundary.append((i, j))
            continue
        a, b = verts[i], verts[j]
        t = b - a
        elen = float(np.linalg.norm(t))
        t = t / elen
        acc = np.zeros(3)
        for fi, opp in incident:
            m = verts[opp] - a
            conormal = m - (m @ t) * t
            conormal = -conormal / np.linalg.norm(conormal)  # points away from the face
            acc += V.multiplicity[fi] * conormal
        edges.append((i, j))
        vectors.append(-elen * acc)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    vectors = np.asarray(vectors, dtype=float).reshape(-1, 3)
    mids = 0.5 * (verts[edges[:, 0]] + verts[edges[:, 1]]) if len(edges) else np.zeros((0, 3))
    lengths = (
        np.linalg.norm(verts[edges[:, 1]] - verts[edges[:, 0]], axis=1)
        if len(edges)
        else np.zeros(0)
    )
    mass = float(np.sum(np.linalg.norm(vectors, axis=1))) if len(vectors) else 0.0
    return CurvatureMeasure(
        edges=edges,
        vectors=vectors,
        midpoints=mids,
        lengths=lengths,
        total_mass=mass,
        boundary_edges=np.asarray(boundary, dtype=np.int64).reshape(-1, 2),
    )


# ---------------------------------------------------------------------------
# exact triangle-disc clipping


def _arc_wrap(a2: np.ndarray, b2: np.ndarray) -> float:
    """Signed sweep angle from a2 to b2 wrapped to (-pi, pi]."""
    return math.atan2(a2[0] * b2[1] - a2[1] * b2[0], a2 @ b2)


def _edge_disc_area(p: np.ndarray, q: np.ndarray, R: float) -> float:
    """Signed area of disc(0, R) intersected with triangle (0, p, q) in 2-d.

    Oriented by the sign of cross(p, q); exact decomposition of the oriented
    edge p->q into inside (chord triangle) and outside (circular sector)
    pieces.
    """
    R2 = R * R
    d = q - p
    a = d @ d
    if a == 0.0:
        return 0.0
    b = 2.0 * (p @ d)
    c = p @ p - R2
    ts = []
    disc = b * b - 4.0 * a * c
    if disc > 0.0:
        s = math.sqrt(disc)
        for t in ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a)):
            if 0.0 < t < 1.0:
                ts.append(t)
    pts = [p] + [p + t * d for t in sorted(ts)] + [q]
    area = 0.0
    for u, v in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (u + v)
        if mid @ mid <= R2:
            area += 0.5 * (u[0] * v[1] - u[1] * v[0])
        else:
            area += 0.5 * R2 * _arc_wrap(u, v)
    return area


def triangle_disc_area(verts2d: np.ndarray, R: float) -> float:
    """Exact area of a 2-d triangle intersected with the disc of radius R at the origin."""
    if R <= 0.0:
        return 0.0
    v = np.asarray(verts2d, dtype=float)
    total = 0.0
    for i in range(3):
        total += _edge_disc_area(v[i], v[(i + 1) % 3], R)
    return abs(total)


def _faces_in_plane_frames(V: DiscreteVarifold, xi: np.ndarray):
    """Per-face signed plane distance from xi and 2-d vertex coordinates around the foot."""
    a, b, c = V.face_corners()
    n = V.face_normals()
    d = np.einsum("ij,ij->i", a - xi[None, :], n)  # signed distance of the plane from xi
    e1 = b - a
    e1 = e1 / np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(n, e1)
    foot = xi[None, :] + d[:, None] * n
    coords = np.empty((len(V.faces), 3, 2))
    for k, corner in enumerate((a, b, c)):
        rel = corner - foot
        coords[:, k, 0] = np.einsum("ij,ij->i", rel, e1)
        coords[:, k, 1] = np.einsum("ij,ij->i", rel, e2)
    return d, coords


def ball_clipped_mass(V: DiscreteVarifold, xi, radius: float) -> float:
    """Weighted area of the mesh inside the ball B_radius(xi), exactly clipped."""
    xi = np.asarray(xi, dtype=float)
    d, coords = _faces_in_plane_frames(V, xi)
    r_in2 = radius * radius - d * d
    active = r_in2 > 0.0
    # cheap reject: in-plane disc cannot reach the triangle's bounding circle
    cen = coords.mean(axis=1)
    circ = np.max(np.linalg.norm(coords - cen[:, None, :], axis=2), axis=1)
    reach = np.linalg.norm(cen, axis=1) - circ
    active &= reach < np.sqrt(np.maximum(r_in2, 0.0))
    total = 0.0
    for fi in np.nonzero(active)[0]:
        area = triangle_disc_area(coords[fi], math.sqrt(r_in2[fi]))
        total += V.multiplicity[fi] * area
    return float(total)


_BARY_CACHE: dict[int, np.ndarray] = {}


def _bary_centroids(k: int) -> np.ndarray:
    """Centroid barycentric coordinates of the k^2 congruent subtriangles."""
    if k not in _BARY_CACHE:
        cents = []
        for i in range(k):
            for j in range(k - i):
                cents.append(((3 * i + 1) / (3 * k), (3 * j + 1) / (3 * k)))
                if i + j <= k - 2:
                    cents.append(((3 * i + 2) / (3 * k), (3 * j + 2) / (3 * k)))
        _BARY_CACHE[k] = np.asarray(cents)
    return _BARY_CACHE[k]


def face_sample_points(V: DiscreteVarifold, pitch: float, face_ids=None):
    """Midpoint-rule samples: (points, weights, face_of_sample) at the given pitch."""
    if face_ids is None:
        face_ids = np.arange(len(V.faces))
    a, b, c = V.face_corners()
    areas = V.face_areas()
    pts_out, w_out, f_out = [], [], []
    diam = np.maximum(
        np.linalg.norm(b - a, axis=1),
        np.maximum(np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)),
    )
    ks = np.maximum(1, np.ceil(diam / pitch).astype(int))
    for k in np.unique(ks[face_ids]):
        sel = face_ids[ks[face_ids] == k]
        bary = _bary_centroids(int(k))
        l1, l2 = bary[:, 0], bary[:, 1]
        for fi_group in (sel,):
            A, B, C = a[fi_group], b[fi_group], c[fi_group]
            pts = (
                A[:, None, :]
                + l1[None, :, None] * (B - A)[:, None, :]
                + l2[None, :, None] * (C - A)[:, None, :]
            )
            w = np.repeat(areas[fi_group][:, None] / (k * k), bary.shape[0], axis=1)
            pts_out.append(pts.reshape(-1, 3))
            w_out.append(w.reshape(-1))
            f_out.append(np.repeat(fi_group, bary.shape[0]))
    return np.concatenate(pts_out), np.concatenate(w_out), np.concatenate(f_out)


@dataclass
class MonotonicityProfile:
    """Area ratios, Allard-weighted ratios, and the angular-deficit integrals.

    deficit[k] integrates |normal part of grad r|^2 / r^2 over the annulus
    between radii[0] and radii[k] (so deficit[0] = 0).
    """

    xi: np.ndarray
    alpha: float
    Lambda: float
    R: float
    radii: np.ndarray
    ratio: np.ndarray
    weighted: np.ndarray
    deficit: np.ndarray


def _check_xi(V: DiscreteVarifold, xi: np.ndarray, reach: float) -> None:
    lo = V.vertices.min(axis=0) - reach
    hi = V.vertices.max(axis=0) + reach
    if np.any(xi < lo) or np.any(xi > hi):
        raise DomainError("base point lies outside the mesh bounding region")


def monotonicity_profile(
    V: DiscreteVarifold,
    xi,
    alpha: float,
    Lambda: float,
    R: float,
    radii,
    deficit_pitch: float | None = None,
) -> MonotonicityProfile:
    """Fill the monotonicity ladder at the given radii.

    ratio(rho) = mu(B_rho(xi)) / rho^2 with exact ball clipping; weighted
    multiplies by exp(Lambda R^{1-alpha} rho^alpha).  The deficit integrals
    use midpoint sampling at ``deficit_pitch`` (default max radius / 100);
    faces whose plane passes through xi contribute exactly zero.
    """
    xi = np.asarray(xi, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise InvalidInputError("radii must be strictly increasing and positive")
    if not (0 < alpha <= 1):
        raise InvalidInputError("alpha must lie in (0, 1]")
    if radii[-1] > R:
        raise InvalidInputError("radii must not exceed R")
    _check_xi(V, xi, R)

    mu = np.array([ball_clipped_mass(V, xi, r) for r in radii])
    ratio = mu / radii**2
    weighted = np.exp(Lambda * R ** (1.0 - alpha) * radii**alpha) * ratio

    d_signed, _ = _faces_in_plane_frames(V, xi)
    deficit = np.zeros_like(radii)
    through = np.abs(d_signed) < 1e-14
    if not np.all(through):
        pitch = deficit_pitch if deficit_pitch is not None else float(radii[-1]) / 100.0
        face_ids = np.nonzero(~through)[0]
        pts, w, fo = face_sample_points(V, pitch, face_ids=face_ids)
        r = np.linalg.norm(pts - xi[None, :], axis=1)
        d_at = np.abs(d_signed[fo])
        integrand = w * V.multiplicity[fo] * d_at**2 / np.maximum(r, 1e-300) ** 4
        r0 = radii[0]
        for k, rk in enumerate(radii):
            mask = (r > r0) & (r <= rk)
            deficit[k] = float(np.sum(integrand[mask]))
    return MonotonicityProfile(
        xi=xi,
        alpha=float(alpha),
        Lambda=float(Lambda),
        R=float(R),
        radii=radii,
        ratio=ratio,
        weighted=weighted,
        deficit=deficit,
    )


def _curvature_mass_in_balls(V: DiscreteVarifold, xi: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """|H| mass inside each ball, distributing each edge weight uniformly along the edge."""
    cm = mean_curvature_measure(V)
    if len(cm.edges) == 0:
        return np.zeros_like(radii)
    a = V.vertices[cm.edges[:, 0]] - xi[None, :]
    b = V.vertices[cm.edges[:, 1]] - xi[None, :]
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    ad = np.einsum("ij,ij->i", a, d)
    aa = np.einsum("ij,ij->i", a, a)
    norms = np.linalg.norm(cm.vectors, axis=1)
    out = np.empty_like(radii)
    for k, r in enumerate(radii):
        # |a + t d|^2 <= r^2 for t in [t1, t2] intersect [0, 1]
        disc = ad**2 - dd * (aa - r * r)
        t1 = np.where(disc > 0, (-ad - np.sqrt(np.maximum(disc, 0.0))) / dd, np.inf)
        t2 = np.where(disc > 0, (-ad + np.sqrt(np.maximum(disc, 0.0))) / dd, -np.inf)
        frac = np.clip(np.minimum(t2, 1.0) - np.maximum(t1, 0.0), 0.0, 1.0)
        out[k] = float(np.sum(norms * frac))
    return out


@dataclass
class DensityReport:
    radii: np.ndarray
    density: np.ndarray
    in_E: np.ndarray


def density_classify(V: DiscreteVarifold, xi, alpha: float, eps_star: float, radii) -> DensityReport:
    """Curvature-mass density r^{-2} int_{B_r} |H| and the decay classification.

    in_E(r) flags densities at or above eps_star * r^{alpha - 1}.
    """
    xi = np.asarray(xi, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise InvalidInputError("radii must be positive")
    _check_xi(V, xi, float(radii.max()))
    mass = _curvature_mass_in_balls(V, xi, radii)
    density = mass / radii**2
    in_e = density >= eps_star * radii ** (alpha - 1.0)
    return DensityReport(radii=radii, density=density, in_E=in_e)


def measured_lambda(V: DiscreteVarifold, xi, alpha: float, R: float, radii) -> float:
    """Smallest Lambda for which the curvature-mass hypothesis of the
    monotonicity statement holds at the sampled radii."""
    xi = np.asarray(xi, dtype=float)
    radii = np.asarray(radii, dtype=float)
    mass = _curvature_mass_in_balls(V, xi, radii)
    mu = np.array([ball_clipped_mass(V, xi, r) for r in radii])
    ok = mu > 0
    if not np.any(ok):
        return 0.0
    vals = mass[ok] / (alpha * (radii[ok] / R) ** (alpha - 1.0) * mu[ok])
    return float(np.max(vals))


# ---------------------------------------------------------------------------
# flatness


@dataclass
class FlatnessReport:
    """Slab and Hausdorff flatness of the mesh in B_r(xi) against a plane through xi."""

    xi: np.ndarray
    r: float
    plane_normal: np.ndarray
    slab_half_height: float
    hausdorff_to_plane: float
    eps_flat: float


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance of two finite point sets (exact for finite sets)."""
    A = np.asarray(A, dtype=float).reshape(-1, 3)
    B = np.asarray(B, dtype=float).reshape(-1, 3)
    if len(A) == 0 or len(B) == 0:
        raise DomainError("hausdorff_distance requires nonempty sets")
    d_ab = KDTree(B).query(A, k=1)[0].max()
    d_ba = KDTree(A).query(B, k=1)[0].max()
    return float(max(d_ab, d_ba))


def _slab_height(pts_rel: np.ndarray, normal: np.ndarray) -> float:
    return float(np.max(np.abs(pts_rel @ normal)))


def _weighted_pca(pts_rel: np.ndarray, weights: np.ndarray) -> np.ndarray:
    cov = np.einsum("i,ij,ik->jk", weights, pts_rel, pts_rel)
    _, vecs = np.linalg.eigh(cov)
    return vecs


def _min_slab_normal(pts_rel: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """PCA seed refined by a direct search on the sphere of normals.

    PCA alone minimizes the weighted quadratic spread, not the slab height;
    the direct search walks the 8 tangent directions with a shrinking step
    and only accepts strict improvements (deterministic).
    """
    normal = _weighted_pca(pts_rel, weights)[:, 0]
    best = _slab_height(pts_rel, normal)
    step = 0.25
    dirs = [
        (1, 0), (-1, 0), (0, 1), (0, -1),
        (1, 1), (1, -1), (-1, 1), (-1, -1),
    ]
    while step > 1e-7:
        # tangent frame at the current normal
        helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        t1 = np.cross(normal, helper)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(normal, t1)
        improved = False
        for da, db in dirs:
            cand = normal + step * (da * t1 + db * t2)
            cand /= np.linalg.norm(cand)
            h = _slab_height(pts_rel, cand)
            if h < best - 1e-12 * (1.0 + best):
                best, normal, improved = h, cand, True
                break
        if not improved:
            step *= 0.5
    return normal


def flatness(V: DiscreteVarifold, xi, r: float, pitch_factor: int = 200) -> FlatnessReport:
    """Best slab plane through xi and the Hausdorff distance to its disc in B_r(xi).

    Mesh and disc are sampled at pitch <= r / pitch_factor; the mesh-to-disc
    direction uses the exact point-to-disc distance.  The disc frame follows
    the in-plane major principal axis of the in-ball samples, so the report
    is equivariant under rigid motions whenever that axis is nondegenerate
    (anisotropic in-ball geometry); symmetric meshes still get a
    deterministic, if arbitrary, in-plane phase.
    """
    xi = np.asarray(xi, dtype=float)
    if r <= 0:
        raise InvalidInputError("r must be positive")
    pitch = r / pitch_factor
    cen = V.face_centroids()
    a, b, c = V.face_corners()
    diam = np.maximum(
        np.linalg.norm(b - a, axis=1),
        np.maximum(np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)),
    )
    near = np.nonzero(np.linalg.norm(cen - xi[None, :], axis=1) <= r + diam)[0]
    if len(near) == 0:
        raise DomainError("ball does not intersect the mesh")
    pts, w, _ = face_sample_points(V, pitch, face_ids=near)
    rel = pts - xi[None, :]
    dist = np.linalg.norm(rel, axis=1)
    inside = dist <= r
    if not np.any(inside):
        raise DomainError("ball does not intersect the mesh")
    rel = rel[inside]
    w = w[inside]
    dist = dist[inside]

    # search on a decimated subset, final height on everything (deterministic)
    stride = max(1, len(rel) // 50_000)
    normal = _min_slab_normal(rel[::stride], w[::stride])
    slab = _slab_height(rel, normal)

    # disc frame from the in-plane major principal axis: equivariant for
    # anisotropic meshes; even ring counts make the eigenvector sign moot
    major = _weighted_pca(rel, w)[:, 2]
    e1 = major - (major @ normal) * normal
    n1 = np.linalg.norm(e1)
    if n1 < 1e-12:
        helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(normal, helper)
        n1 = np.linalg.norm(e1)
    e1 /= n1
    e2 = np.cross(normal, e1)
    m = max(1, int(math.ceil(r / pitch)))
    disc_pts = [np.zeros(3)]
    for jr in range(1, m + 1):
        rj = r * jr / m
        nj = 2 * max(4, int(math.ceil(math.pi * rj / pitch)))
        ang = 2.0 * math.pi * np.arange(nj) / nj
        ring = rj * (np.cos(ang)[:, None] * e1[None, :] + np.sin(ang)[:, None] * e2[None, :])
        disc_pts.append(ring)
    disc = np.vstack([np.atleast_2d(p) for p in disc_pts])
    # mesh -> disc direction is an exact point-to-disc distance (no sampling)
    z = rel @ normal
    rho_in = np.linalg.norm(rel - z[:, None] * normal[None, :], axis=1)
    d_mesh = np.where(rho_in <= r, np.abs(z), np.hypot(z, rho_in - r))
    d_disc = KDTree(rel).query(disc, k=1)[0]
    hd = float(max(d_mesh.max(), d_disc.max()))
    return FlatnessReport(
        xi=xi,
        r=float(r),
        plane_normal=normal,
        slab_half_height=slab,
        hausdorff_to_plane=hd,
        eps_flat=hd / r,
    )


# ---------------------------------------------------------------------------
# pixel-grid variational mean curvature


@dataclass
class CurvatureCheckResult:
    is_local_min: bool
    best_improvement: float


def _pixel_energy(E: np.ndarray, H: np.ndarray, pixel_size: float) -> float:
    interfaces = int(np.sum(E[1:, :] != E[:-1, :])) + int(np.sum(E[:, 1:] != E[:, :-1]))
    return pixel_size * interfaces + pixel_size**2 * float(np.sum(H[E]))


def variational_curvature_check(
    E, H, window, pixel_size: float = 1.0
) -> CurvatureCheckResult:
    """Local-minimality of Per(E) + int_E H under single-pixel and 2x2 flips.

    Perimeter is the 4-neighbor interface count times the pixel size; the
    curvature integral is a Riemann sum.  ``window`` = (i0, i1, j0, j1)
    (half-open) restricts the flipped pixels and must lie compactly inside
    the grid.  A flip counts as an improvement only when it lowers the
    functional by more than 1e-12.
    """
    E = np.asarray(E, dtype=bool)
    H = np.asarray(H, dtype=float)
    if E.shape != H.shape:
        raise InvalidInputError("E and H must have the same shape")
    i0, i1, j0, j1 = window
    if not (0 < i0 < i1 < E.shape[0] and 0 < j0 < j1 < E.shape[1]):
        raise InvalidInputError("window must lie compactly inside the grid")
    base = _pixel_energy(E, H, pixel_size)
    best = -np.inf
    work = E.copy()
    for i in range(i0, i1):
        for j in range(j0, j1):
            work[i, j] = not work[i, j]
            best = max(best, base - _pixel_energy(work, H, pixel_size))
            work[i, j] = not work[i, j]
    for i in range(i0, i1 - 1):
        for j in range(j0, j1 - 1):
            blk = work[i : i + 2, j : j + 2].copy()
            work[i : i + 2, j : j + 2] = ~blk
            best = max(best, base - _pixel_energy(work, H, pixel_size))
            work[i : i + 2, j : j + 2] = blk
    return CurvatureCheckResult(is_local_min=bool(best <= 1e-12), best_improvement=float(best))


def connected_face_components(V: DiscreteVarifold) -> int:
    """Number of edge-connected face components (multigraph sheet counting)."""
    parent = list(range(len(V.faces)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    table = _edge_table(V)
    for incident in table.values():
        root = find(incident[0][0])
        for fi, _ in incident[1:]:
            parent[find(fi)] = root
    return len({find(i) for i in range(len(V.faces))})
