"""Triangle meshes: structured generators, facet topology, geometric metrics.

Meshes are proper (face-to-face) triangulations of an axis-aligned rectangle,
stored as flat vertex/triangle arrays with counterclockwise orientation.
All arrays are frozen after construction; every query here is read-only.
"""

import math
from dataclasses import dataclass

import numpy as np


class TopologyError(ValueError):
    """Mesh is not a proper face-to-face triangulation."""


class DegenerateElementError(ValueError):
    """Triangle with nonpositive area."""


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (nv, 2) float
    triangles: np.ndarray  # (nt, 3) int, counterclockwise
    domain: tuple          # (xmin, ymin, xmax, ymax)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


@dataclass(frozen=True)
class FacetTopology:
    """Facets of a proper mesh with a fixed element numbering per facet.

    Interior facets carry the two adjacent elements as (elem1, elem2), fixed
    at construction; `normal` is the outward unit normal of elem1.  Boundary
    facets have elem2 = -1.  `elem_facets[t, l]` is the facet index of local
    edge l of triangle t (edge l joins local vertices (l+1)%3 and (l+2)%3).
    """

    vertex_pairs: np.ndarray  # (nf, 2) vertex ids, lexicographic by coordinate
    interior: np.ndarray     # (nf,) bool
    elems: np.ndarray        # (nf, 2) element ids, -1 for missing side
    local_edges: np.ndarray  # (nf, 2) local edge index per side, -1 if absent
    normals: np.ndarray      # (nf, 2) outward unit normal of side 1
    lengths: np.ndarray      # (nf,)
    elem_facets: np.ndarray  # (nt, 3)

    @property
    def n_facets(self) -> int:
        return self.vertex_pairs.shape[0]

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    @property
    def n_boundary(self) -> int:
        return int((~self.interior).sum())


@dataclass(frozen=True)
class ElementMetrics:
    area: float
    diameter: float            # h_T, the longest edge
    inradius_diameter: float   # rho_T
    circumradius: float        # R_T = l1*l2*h_T / (4|T|)
    max_angle: float           # largest inner angle, radians


@dataclass(frozen=True)
class FacetWeights:
    length: float
    h_f: float           # facet diameter (= length in 2D)
    penalty_weight: float  # |f|/|Ttilde_f^1| + |f|/|Ttilde_f^2|, with |Ttilde| = |T|/3


@dataclass(frozen=True)
class MeshQuality:
    n_vertices: int
    n_triangles: int
    max_diameter: float          # h
    max_circumradius: float      # R
    shape_regularity: float      # max h_T / rho_T
    max_angle: float
    max_circumradius_ratio: float  # max R_T / h_T


def _freeze(mesh: Mesh) -> Mesh:
    mesh.vertices.setflags(write=False)
    mesh.triangles.setflags(write=False)
    return mesh


def _quantize(values, decimals):
    # emulates storing coordinates in a text mesh file with fixed decimals
    if decimals is None:
        return np.asarray(values, dtype=float)
    return np.array([float(format(v, f".{decimals}f")) for v in values])


def signed_areas(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    u = p[:, 1] - p[:, 0]
    v = p[:, 2] - p[:, 0]
    return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _validate(mesh: Mesh) -> Mesh:
    areas = signed_areas(mesh)
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise DegenerateElementError(
            f"triangle {bad} has nonpositive signed area {areas[bad]:.3e}"
        )
    xmin, ymin, xmax, ymax = mesh.domain
    cover = (xmax - xmin) * (ymax - ymin)
    if abs(areas.sum() - cover) > 1e-12 * cover:
        raise TopologyError(
            f"triangle areas sum to {areas.sum()!r}, domain area is {cover!r}"
        )
    return _freeze(mesh)


def generate_rect_mesh(n, m, rect=(0.0, 0.0, 1.0, 1.0), coord_decimals=None) -> Mesh:
    """Uniform n-by-m grid of rectangle cells, each split by the bottom-left
    to top-right diagonal into two counterclockwise triangles.

    `coord_decimals` optionally rounds the grid coordinates to that many
    decimal places, reproducing meshes that went through a fixed-precision
    text file.
    """
    if n < 1 or m < 1:
        raise ValueError(f"grid sizes must be positive, got n={n}, m={m}")
    x0, y0, x1, y1 = rect
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"rectangle has nonpositive side: {rect}")
    xs = _quantize([x0 + (x1 - x0) * i / n for i in range(n + 1)], coord_decimals)
    ys = _quantize([y0 + (y1 - y0) * j / m for j in range(m + 1)], coord_decimals)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = np.empty((2 * n * m, 3), dtype=np.int64)
    t = 0
    for j in range(m):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris[t] = (v00, v10, v11)
            tris[t + 1] = (v00, v11, v01)
            t += 2
    return _validate(Mesh(vertices, tris, (x0, y0, x1, y1)))


def strip_row_count(N, alpha) -> int:
    """Number of horizontal strips, floor(2 / h^alpha) with h = 2/N.

    Evaluated as floor(2^(1-alpha) * N^alpha): algebraically identical but
    exact at integer boundaries (2/(2/N)**alpha rounds below e.g. 200 for
    N=20, alpha=2 in floating point).
    """
    return int(math.floor(2.0 ** (1.0 - alpha) * N**alpha))


def generate_schwarz_peano_mesh(N, alpha, coord_decimals=None) -> Mesh:
    """Schwarz-Peano-type triangulation of (-1,1)^2 by thin isosceles strips.

    Horizontal strips of height 2/floor(2/h^alpha) with h = 2/N; each strip is
    filled by alternating up/down isosceles triangles of base h whose apexes
    sit half a base off, plus two right-angle half-triangles closing the strip
    at x = +-1.  Consecutive strips share their full node line (apex lines
    alternate with base lines), so the mesh is proper.
    """
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    rows = strip_row_count(N, alpha)
    if rows < 1:
        raise ValueError(f"strip height exceeds the domain (N={N}, alpha={alpha})")
    h = 2.0 / N
    H = 2.0 / rows
    base_x = _quantize([-1.0 + i * h for i in range(N + 1)], coord_decimals)
    off_x = _quantize(
        [-1.0] + [-1.0 + i * h + h / 2 for i in range(N)] + [1.0], coord_decimals
    )
    line_y = _quantize([-1.0 + k * H for k in range(rows + 1)], coord_decimals)

    # vertex lines: even lines carry the N+1 base nodes, odd lines the N+2
    # offset nodes (corners + apexes)
    line_start = []
    coords = []
    start = 0
    for k in range(rows + 1):
        xs = base_x if k % 2 == 0 else off_x
        line_start.append(start)
        coords.append(np.column_stack([xs, np.full(len(xs), line_y[k])]))
        start += len(xs)
    vertices = np.vstack(coords)

    tris = []
    for k in range(rows):
        lo, hi = line_start[k], line_start[k + 1]
        if k % 2 == 0:
            B = lambda i: lo + i       # base nodes below
            O = lambda j: hi + j       # offset nodes above
            for i in range(N):         # apex-up isosceles
                tris.append((B(i), B(i + 1), O(i + 1)))
            for i in range(N - 1):     # apex-down isosceles
                tris.append((B(i + 1), O(i + 2), O(i + 1)))
            tris.append((B(0), O(1), O(0)))            # left half-triangle
            tris.append((B(N), O(N + 1), O(N)))        # right half-triangle
        else:
            Q = lambda j: lo + j       # offset nodes below
            X = lambda i: hi + i       # base nodes above
            for i in range(N - 1):
                tris.append((Q(i + 1), Q(i + 2), X(i + 1)))
            for i in range(N):
                tris.append((Q(i + 1), X(i + 1), X(i)))
            tris.append((Q(0), Q(1), X(0)))
            tris.append((Q(N), Q(N + 1), X(N)))
    tris = np.asarray(tris, dtype=np.int64)
    return _validate(Mesh(vertices, tris, (-1.0, -1.0, 1.0, 1.0)))


def build_facet_topology(mesh: Mesh) -> FacetTopology:
    """Enumerate facets, fix the (elem1, elem2) numbering and side-1 normals.

    Raises TopologyError for non-conforming input: an edge shared by more
    than two elements, or a single-sided edge that does not lie on the domain
    boundary (e.g. two triangles overlapping along half an edge).
    """
    nt = mesh.n_triangles
    edge_map = {}
    sides = []  # per facet: [(elem, local_edge), ...]
    keys = []
    for t in range(nt):
        tri = mesh.triangles[t]
        for l in range(3):
            a, b = int(tri[(l + 1) % 3]), int(tri[(l + 2) % 3])
            key = (a, b) if a < b else (b, a)
            f = edge_map.get(key)
            if f is None:
                edge_map[key] = len(keys)
                keys.append(key)
                sides.append([(t, l)])
            else:
                if len(sides[f]) == 2:
                    raise TopologyError(f"edge {key} is shared by more than two elements")
                sides[f].append((t, l))

    nf = len(keys)
    vertex_pairs = np.empty((nf, 2), dtype=np.int64)
    interior = np.zeros(nf, dtype=bool)
    elems = np.full((nf, 2), -1, dtype=np.int64)
    local_edges = np.full((nf, 2), -1, dtype=np.int64)
    normals = np.empty((nf, 2))
    lengths = np.empty(nf)
    elem_facets = np.full((nt, 3), -1, dtype=np.int64)

    xmin, ymin, xmax, ymax = mesh.domain
    scale = max(xmax - xmin, ymax - ymin)
    tol = 1e-12 * scale

    for f, key in enumerate(keys):
        a, b = key
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        if (pa[0], pa[1]) > (pb[0], pb[1]):
            a, b, pa, pb = b, a, pb, pa
        vertex_pairs[f] = (a, b)
        d = pb - pa
        lengths[f] = np.hypot(d[0], d[1])
        for s, (t, l) in enumerate(sides[f]):
            elems[f, s] = t
            local_edges[f, s] = l
            elem_facets[t, l] = f
        interior[f] = len(sides[f]) == 2
        if not interior[f]:
            on_side = (
                (abs(pa[0] - xmin) <= tol and abs(pb[0] - xmin) <= tol)
                or (abs(pa[0] - xmax) <= tol and abs(pb[0] - xmax) <= tol)
                or (abs(pa[1] - ymin) <= tol and abs(pb[1] - ymin) <= tol)
                or (abs(pa[1] - ymax) <= tol and abs(pb[1] - ymax) <= tol)
            )
            if not on_side:
                raise TopologyError(
                    f"edge {key} has a single element but does not lie on the boundary"
                )
        # outward normal of elem1: its local edge runs counterclockwise, so
        # rotating the traversal direction by -90 degrees points outward
        t1, l1 = sides[f][0]
        tri = mesh.triangles[t1]
        qa = mesh.vertices[tri[(l1 + 1) % 3]]
        qb = mesh.vertices[tri[(l1 + 2) % 3]]
        e = qb - qa
        normals[f] = (e[1], -e[0])
        normals[f] /= lengths[f]

    for arr in (vertex_pairs, interior, elems, local_edges, normals, lengths, elem_facets):
        arr.setflags(write=False)
    return FacetTopology(vertex_pairs, interior, elems, local_edges, normals, lengths, elem_facets)


def _edge_lengths(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_triangles, 3))
    for l in range(3):
        d = p[:, (l + 2) % 3] - p[:, (l + 1) % 3]
        out[:, l] = np.hypot(d[:, 0], d[:, 1])
    return out


def element_metrics_arrays(mesh: Mesh):
    """Vectorized per-element metrics: (areas, diameters, inradius_diameters,
    circumradii, max_angles)."""
    areas = signed_areas(mesh)
    if np.any(areas <= 0):
        raise DegenerateElementError("mesh contains a nonpositive-area triangle")
    L = _edge_lengths(mesh)
    diam = L.max(axis=1)
    rho = 4.0 * areas / L.sum(axis=1)
    circ = L.prod(axis=1) / (4.0 * areas)
    cosines = np.empty_like(L)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        cosines[:, i] = (L[:, j] ** 2 + L[:, k] ** 2 - L[:, i] ** 2) / (
            2.0 * L[:, j] * L[:, k]
        )
    max_angle = np.arccos(np.clip(cosines.min(axis=1), -1.0, 1.0))
    return areas, diam, rho, circ, max_angle


def element_metrics(mesh: Mesh, t: int) -> ElementMetrics:
    """Geometric metrics of one triangle; the circumradius follows
    l1*l2*h_T/(4|T|) with l1 <= l2 <= h_T the sorted edge lengths."""
    p = mesh.vertices[mesh.triangles[t]]
    u, v = p[1] - p[0], p[2] - p[0]
    area = 0.5 * (u[0] * v[1] - u[1] * v[0])
    if area <= 0:
        raise DegenerateElementError(f"triangle {t} has nonpositive area {area:.3e}")
    l = np.sort(
        [
            float(np.hypot(*(p[1] - p[0]))),
            float(np.hypot(*(p[2] - p[1]))),
            float(np.hypot(*(p[0] - p[2]))),
        ]
    )
    diam = l[2]
    rho = 4.0 * area / l.sum()
    circ = l[0] * l[1] * l[2] / (4.0 * area)
    cos_max = (l[0] ** 2 + l[1] ** 2 - l[2] ** 2) / (2.0 * l[0] * l[1])
    return ElementMetrics(
        area=float(area),
        diameter=diam,
        inradius_diameter=float(rho),
        circumradius=float(circ),
        max_angle=float(np.arccos(np.clip(cos_max, -1.0, 1.0))),
    )


def facet_weights(mesh: Mesh, topo: FacetTopology, f: int) -> FacetWeights:
    """Length, diameter and the barycenter-subtriangle penalty weight of one
    facet; only the measure |Ttilde| = |T|/3 enters, never the subtriangle."""
    length = float(topo.lengths[f])
    areas = signed_areas(mesh)
    t1 = topo.elems[f, 0]
    w = 3.0 * length / areas[t1]
    if topo.interior[f]:
        w += 3.0 * length / areas[topo.elems[f, 1]]
    return FacetWeights(length=length, h_f=length, penalty_weight=float(w))


def facet_weight_arrays(mesh: Mesh, topo: FacetTopology):
    """Vectorized (penalty_weights, h_f) over all facets."""
    areas = signed_areas(mesh)
    L = topo.lengths
    w = 3.0 * L / areas[topo.elems[:, 0]]
    ii = topo.interior
    w = w + np.where(ii, 3.0 * L / areas[np.where(ii, topo.elems[:, 1], 0)], 0.0)
    return w, L.copy()


def mesh_quality_report(mesh: Mesh) -> MeshQuality:
    if mesh.n_triangles == 0:
        raise ValueError("empty mesh")
    areas, diam, rho, circ, max_angle = element_metrics_arrays(mesh)
    return MeshQuality(
        n_vertices=mesh.n_vertices,
        n_triangles=mesh.n_triangles,
        max_diameter=float(diam.max()),
        max_circumradius=float(circ.max()),
        shape_regularity=float((diam / rho).max()),
        max_angle=float(max_angle.max()),
        max_circumradius_ratio=float((circ / diam).max()),
    )


def write_mesh(mesh: Mesh, path) -> None:
    """ASCII format: header `nv nt`, nv lines `x y`, nt lines `i j k`."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path) -> Mesh:
    """Read the ASCII format written by write_mesh; the domain rectangle is
    the bounding box of the vertices."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"mesh file {path} is truncated")
    nv, nt = int(tokens[0]), int(tokens[1])
    need = 2 + 2 * nv + 3 * nt
    if len(tokens) < need:
        raise ValueError(f"mesh file {path} is truncated ({len(tokens)} of {need} tokens)")
    vals = np.array(tokens[2 : 2 + 2 * nv], dtype=float).reshape(nv, 2)
    tris = np.array(tokens[2 + 2 * nv : need], dtype=np.int64).reshape(nt, 3)
    if tris.min() < 0 or tris.max() >= nv:
        raise ValueError(f"mesh file {path} has out-of-range vertex indices")
    domain = (vals[:, 0].min(), vals[:, 1].min(), vals[:, 0].max(), vals[:, 1].max())
    return _validate(Mesh(vals, tris, domain))
