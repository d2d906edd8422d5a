"""P1 finite elements for the Robin Laplacian on planar polygons.

The discrete pencil is (K + alpha B) u = lambda M u with K the stiffness, M
the consistent mass and B the boundary mass.  Meshes come from Shewchuk's
Triangle (constrained conforming Delaunay with a minimum-angle bound).
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import triangle
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .ball_spectrum import SpectrumResult, lambda2_ball, theorem_interval

__all__ = [
    "BracketError",
    "MeshError",
    "PlanarDomain",
    "PolygonError",
    "SolverError",
    "TheoremRecord",
    "TheoremReport",
    "assemble",
    "disk_polygon",
    "domain_from_polygon",
    "load_polygon",
    "mesh_disk",
    "mesh_polygon",
    "neumann_mu1",
    "polygon_area",
    "regular_polygon",
    "robin_spectrum_fem",
    "save_polygon",
    "standard_corpus",
    "steklov_sigma1",
    "validate_polygon",
    "verify_theorem",
]

MIN_ANGLE = 20.0


class PolygonError(ValueError):
    """Input polygon is not simple (or is degenerate)."""


class MeshError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


def polygon_area(vertices) -> float:
    """Signed shoelace area (positive for counterclockwise loops)."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, q1, q2):
    d1, d2 = _cross(q1, q2, p1), _cross(q1, q2, p2)
    d3, d4 = _cross(p1, p2, q1), _cross(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 != 0 and d3 * d4 != 0:
        return True
    # touching / collinear overlap

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    return ((d1 == 0 and on_seg(q1, q2, p1)) or (d2 == 0 and on_seg(q1, q2, p2))
            or (d3 == 0 and on_seg(p1, p2, q1)) or (d4 == 0 and on_seg(p1, p2, q2)))


def validate_polygon(vertices, rel_tol: float = 1e-12) -> np.ndarray:
    """Return the loop as a counterclockwise (N, 2) array, or raise PolygonError.

    Rejects fewer than three vertices, repeated points, collinear consecutive
    vertices and self-intersections.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise PolygonError("need at least three (x, y) vertices")
    if not np.all(np.isfinite(v)):
        raise PolygonError("non-finite vertex coordinates")
    if np.allclose(v[0], v[-1]):
        v = v[:-1]
    n = len(v)
    scale = float(np.ptp(v, axis=0).max())
    if scale == 0:
        raise PolygonError("all vertices coincide")
    for i in range(n):
        a, b, c = v[i - 1], v[i], v[(i + 1) % n]
        if np.allclose(a, b, atol=rel_tol * scale, rtol=0):
            raise PolygonError(f"repeated vertex at index {i}")
        if abs(_cross(a, b, c)) <= rel_tol * scale * scale:
            raise PolygonError(f"collinear vertices around index {i}")
    for i in range(n):
        p1, p2 = v[i], v[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(p1, p2, v[j], v[(j + 1) % n]):
                raise PolygonError(f"edges {i} and {j} intersect")
    if polygon_area(v) < 0:
        v = v[::-1].copy()
    return v


@dataclass(frozen=True)
class PlanarDomain:
    """Polygon plus a conforming triangulation of it."""

    vertices: np.ndarray
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray  # (B, 2), domain on the left: outward normal to the right
    area: float
    perimeter: float
    mesh_h: float
    min_angle: float
    name: str = ""
    seed: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def centroid(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        a = _tri_areas(p)
        return (a[:, None] * p.mean(axis=1)).sum(axis=0) / a.sum()

    def translated(self, shift) -> "PlanarDomain":
        shift = np.asarray(shift, dtype=float)
        return _replace(self, vertices=self.vertices + shift, nodes=self.nodes + shift)

    def scaled(self, t: float) -> "PlanarDomain":
        return _replace(self, vertices=self.vertices * t, nodes=self.nodes * t,
                        area=self.area * t * t, perimeter=self.perimeter * t,
                        mesh_h=self.mesh_h * t)


def _replace(dom, **kw):
    d = dict(dom.__dict__)
    d.update(kw)
    return PlanarDomain(**d)


def _tri_areas(p):
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _edges(tris):
    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    return e


def _mesh_stats(nodes, tris):
    p = nodes[tris]
    lens = np.stack([np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], axis=1)
    a, b, c = lens[:, 1], lens[:, 2], lens[:, 0]  # opposite vertices 0, 1, 2
    cos0 = (b * b + c * c - a * a) / (2 * b * c)
    cos1 = (a * a + c * c - b * b) / (2 * a * c)
    cos2 = (a * a + b * b - c * c) / (2 * a * b)
    ang = np.degrees(np.arccos(np.clip(np.stack([cos0, cos1, cos2]), -1, 1)))
    return float(lens.max()), float(ang.min())


def _input_min_angle(v):
    n = len(v)
    worst = 180.0
    for i in range(n):
        a, b = v[i - 1] - v[i], v[(i + 1) % n] - v[i]
        cosang = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        ang = math.degrees(math.acos(max(-1.0, min(1.0, cosang))))
        if _cross(v[i - 1], v[i], v[(i + 1) % n]) < 0:
            ang = 360.0 - ang  # reflex corner
        worst = min(worst, ang)
    return worst


def mesh_polygon(vertices, target_h: float, seed: int = 0, name: str = "",
                 max_rounds: int = 12) -> PlanarDomain:
    """Quality triangulation with every edge no longer than target_h.

    Triangle is deterministic, so `seed` is only recorded; the area bound is
    tightened until the longest edge fits under target_h.
    """
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    v = validate_polygon(vertices)
    n = len(v)
    seg = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    area_bound = 0.5 * math.sqrt(3) / 4 * target_h**2
    for _ in range(max_rounds):
        # fixed-point area: Triangle's switch parser does not read exponents
        out = triangle.triangulate({"vertices": v, "segments": seg},
                                   f"pq{MIN_ANGLE:g}a{area_bound:.18f}Q")
        nodes = np.asarray(out["vertices"], dtype=float)
        tris = np.asarray(out["triangles"], dtype=np.int64)
        h, min_ang = _mesh_stats(nodes, tris)
        if h <= target_h:
            break
        area_bound *= 0.7
    else:
        raise MeshError(f"refinement budget exceeded: longest edge {h:.4g} > {target_h:.4g}")

    a = _tri_areas(nodes[tris])
    if np.any(a <= 0):
        # triangle returns counterclockwise elements; anything else is a bug upstream
        raise MeshError("mesh contains inverted or degenerate triangles")
    if min_ang < MIN_ANGLE - 1e-9 and _input_min_angle(v) >= MIN_ANGLE:
        raise MeshError(f"minimum angle {min_ang:.3f} below {MIN_ANGLE}")
    area = polygon_area(v)
    if abs(a.sum() - area) > 1e-12 * max(1.0, area):
        raise MeshError("mesh area does not match the polygon")

    edges = _edges(tris)
    key = np.sort(edges, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    bnd = edges[counts[inv] == 1]
    if np.any(counts > 2):
        raise MeshError("non-manifold edge in mesh")
    perimeter = float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
    blen = np.linalg.norm(nodes[bnd[:, 1]] - nodes[bnd[:, 0]], axis=1).sum()
    if abs(blen - perimeter) > 1e-9 * perimeter:
        raise MeshError("boundary edges do not cover the polygon")
    return PlanarDomain(vertices=v, nodes=nodes, triangles=tris, boundary_edges=bnd,
                        area=area, perimeter=perimeter, mesh_h=h, min_angle=min_ang,
                        name=name, seed=seed)


def regular_polygon(sides: int, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    t = 2 * np.pi * np.arange(sides) / sides
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def disk_polygon(h: float, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    """Regular polygon with side about h and the same area as the disk.

    Matching the area (rather than inscribing) keeps the geometric error
    O(h^2) with a smaller constant.
    """
    sides = max(16, int(math.ceil(2 * math.pi * radius / h)))
    inscribed = 0.5 * sides * math.sin(2 * math.pi / sides)
    r = radius * math.sqrt(math.pi / inscribed)
    return regular_polygon(sides, r, center)


def mesh_disk(h: float, radius: float = 1.0, center=(0.0, 0.0)) -> PlanarDomain:
    return mesh_polygon(disk_polygon(h, radius, center), h, name="disk")


def standard_corpus(seed: int = 2024) -> dict:
    """Unit-area test polygons centred at their centroids."""
    rng = np.random.default_rng(seed)
    polys = {
        "square": np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float),
        "rectangle_3x1": np.array([[0, 0], [3, 0], [3, 1], [0, 1]], dtype=float),
        "equilateral_triangle": np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]),
        "l_shape": np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float),
    }
    # points on a circle at sorted angles form a convex polygon; keep gaps sane
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, 6))
        gaps = np.diff(np.append(t, t[0] + 2 * np.pi))
        if gaps.min() > 0.35 and gaps.max() < np.pi * 0.9:
            break
    polys["random_hexagon"] = np.column_stack([np.cos(t), np.sin(t)])
    out = {}
    for name, v in polys.items():
        a = polygon_area(v)
        c = _polygon_centroid(v)
        out[name] = (v - c) / math.sqrt(a)
    return out


def _polygon_centroid(v):
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = cr.sum() / 2
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6 * a)


# -- polygon files ---------------------------------------------------------------

def load_polygon(path) -> tuple[np.ndarray, str]:
    """Read {"vertices": [[x, y], ...], "name": ...}; raises ValueError on bad input."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise ValueError(f"{path}: expected an object with a 'vertices' field")
    try:
        v = np.asarray(doc["vertices"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: vertices must be numeric [x, y] pairs") from exc
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValueError(f"{path}: vertices must be a list of [x, y] pairs")
    return v, str(doc.get("name", os.path.splitext(os.path.basename(str(path)))[0]))


def save_polygon(path, vertices, name: str = "") -> None:
    doc = {"name": name, "vertices": [[float(x), float(y)] for x, y in np.asarray(vertices)]}
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def domain_from_polygon(path, target_h: float, seed: int = 0) -> PlanarDomain:
    v, name = load_polygon(path)
    return mesh_polygon(v, target_h, seed=seed, name=name)


# -- assembly ---------------------------------------------------------------------

def assemble(domain: PlanarDomain):
    """Sparse (K, M, B): stiffness, consistent mass and boundary mass."""
    nodes, tris = domain.nodes, domain.triangles
    N = len(nodes)
    p = nodes[tris]
    area = _tri_areas(p)
    # gradients of barycentric coordinates: rotated opposite edges / (2 area)
    d = np.stack([p[:, 1] - p[:, 2], p[:, 2] - p[:, 0], p[:, 0] - p[:, 1]], axis=1)
    grad = np.stack([-d[:, :, 1], d[:, :, 0]], axis=2) / (2 * area[:, None, None])
    k_loc = np.einsum("tid,tjd->tij", grad, grad) * area[:, None, None]
    m_ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m_loc = area[:, None, None] * m_ref[None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    K = sparse.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    M = sparse.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    e = domain.boundary_edges
    L = np.linalg.norm(nodes[e[:, 1]] - nodes[e[:, 0]], axis=1)
    b_loc = L[:, None, None] * (np.ones((2, 2)) + np.eye(2))[None] / 6.0
    br = np.repeat(e, 2, axis=1).ravel()
    bc = np.tile(e, (1, 2)).ravel()
    B = sparse.coo_matrix((b_loc.ravel(), (br, bc)), shape=(N, N)).tocsr()
    return K, M, B, area


def _crude_shift(domain, M, B, tri_area, alpha):
    # lambda >= alpha lambda_max(B) / lambda_min(M): Gershgorin row sums for B,
    # element mass matrices (smallest eigenvalue area/12) for M
    bmax = float(np.abs(B).sum(axis=1).max())
    per_node = np.bincount(domain.triangles.ravel(), weights=np.repeat(tri_area, 3),
                           minlength=domain.n_nodes) / 12.0
    return alpha * bmax / float(per_node.min()) - 1.0


def _lower_bound_shift(domain, M, B, tri_area, alpha):
    """A number below every eigenvalue of the pencil.

    For alpha < 0 the Rayleigh quotient is at least alpha * beta with beta the
    largest eigenvalue of (B, M).  beta comes from a short Lanczos run, padded
    by 5% since Ritz values approach it from below; the crude Gershgorin bound
    is the fallback (it is far looser at acute corners, which slows ARPACK).
    """
    if alpha >= 0:
        return -1.0
    try:
        beta = splinalg.eigsh(B, k=1, M=M.tocsc(), which="LA", tol=1e-6,
                              return_eigenvectors=False)[0]
    except splinalg.ArpackNoConvergence:
        return _crude_shift(domain, M, B, tri_area, alpha)
    return alpha * 1.05 * float(beta) - 1.0


def robin_spectrum_fem(domain: PlanarDomain, alpha: float, k: int = 2,
                       return_vectors: bool = False, matrices=None):
    """Lowest k eigenvalues of the discrete Robin pencil, as a SpectrumResult.

    With return_vectors, returns (result, vectors) with M-orthonormal columns.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    K, M, B, tri_area = matrices if matrices is not None else assemble(domain)
    N = K.shape[0]
    if k >= N:
        raise ValueError(f"k={k} exceeds the {N} degrees of freedom of the mesh")
    A = (K + alpha * B).tocsc()
    if N <= 400:
        w, V = linalg.eigh(A.toarray(), M.toarray(), subset_by_index=(0, k - 1))
    else:
        sigma = _lower_bound_shift(domain, M, B, tri_area, alpha)
        try:
            w, V = splinalg.eigsh(A, k=k, M=M.tocsc(), sigma=sigma, which="LM",
                                  ncv=max(2 * k + 1, 20), tol=1e-12)
        except splinalg.ArpackNoConvergence as exc:
            raise SolverError(f"eigensolver did not converge at alpha={alpha}") from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    res = A @ V - (M @ V) * w[None, :]
    resid = np.linalg.norm(res, axis=0) / np.maximum(1.0, np.abs(w))
    out = SpectrumResult(eigenvalues=w, source="fem", mesh_h=domain.mesh_h,
                         diagnostics={"residuals": resid, "dof": N})
    if return_vectors:
        return out, V
    return out


def neumann_mu1(domain: PlanarDomain) -> float:
    """First nontrivial Neumann eigenvalue, lambda_2 at alpha = 0."""
    return float(robin_spectrum_fem(domain, 0.0, 2).eigenvalues[1])


def steklov_sigma1(domain: PlanarDomain, tol: float = 1e-4, alpha_start: float | None = None,
                   alpha_limit: float = -1e3) -> float:
    """First nontrivial Steklov eigenvalue as minus the largest alpha < 0 with lambda_2 = 0.

    lambda_2 is nondecreasing in alpha, so bisection on its sign is safe.
    """
    mats = assemble(domain)
    lam2 = lambda a: robin_spectrum_fem(domain, a, 2, matrices=mats).eigenvalues[1]
    hi = 0.0
    if lam2(hi) <= 0:
        raise BracketError("lambda_2 is not positive at alpha = 0 (disconnected domain?)")
    step = alpha_start if alpha_start is not None else -domain.perimeter / domain.area
    lo = step
    while lam2(lo) > 0:
        hi, lo = lo, 2 * lo
        if lo < alpha_limit:
            raise BracketError(f"lambda_2 stayed positive on [{alpha_limit}, 0]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        val = lam2(mid)
        if abs(val) <= 1e-8:
            return -mid
        if val > 0:
            hi = mid
        else:
            lo = mid
    return -0.5 * (lo + hi)


# -- Theorem check ---------------------------------------------------------------

@dataclass(frozen=True)
class TheoremRecord:
    alpha: float
    lambda2_fem: float
    lambda2_ball: float
    margin: float
    passed: bool
    error: str = ""


@dataclass
class TheoremReport:
    domain: str
    mesh_h: float
    area: float
    tolerance: float
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.records) and all(r.passed for r in self.records)

    @property
    def min_margin(self) -> float:
        ok = [r.margin for r in self.records if not r.error]
        return min(ok) if ok else math.nan


def verify_theorem(domain: PlanarDomain, alpha_grid, tolerance: float = 1e-2) -> TheoremReport:
    """Compare lambda_2 of the mesh with the equal-area disk at each alpha.

    margin = lambda_2(disk) - lambda_2(domain); an entry passes when
    margin >= -tolerance (the mesh tolerance).  Solver failures are recorded
    per alpha rather than raised.
    """
    R = math.sqrt(domain.area / math.pi)
    lo, _ = theorem_interval(2, R)
    report = TheoremReport(domain.name, domain.mesh_h, domain.area, tolerance)
    mats = assemble(domain)
    for a in alpha_grid:
        a = float(a)
        if not lo - 1e-12 <= a <= 0:
            report.records.append(TheoremRecord(a, math.nan, math.nan, math.nan, False,
                                                f"alpha outside [{lo:.6g}, 0]"))
            continue
        try:
            fem = float(robin_spectrum_fem(domain, a, 2, matrices=mats).eigenvalues[1])
        except (SolverError, ValueError) as exc:
            report.records.append(TheoremRecord(a, math.nan, math.nan, math.nan, False, str(exc)))
            continue
        ball = lambda2_ball(2, a, R)
        margin = ball - fem
        report.records.append(TheoremRecord(a, fem, ball, margin, margin >= -tolerance))
    return report
