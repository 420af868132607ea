"""Broken P_k space on a triangle mesh: nodal reference basis, per-element
DOF bookkeeping, and two-sided facet traces.

No DOF is shared between elements.  The nodal basis lives on the uniform
lattice of the reference triangle, so Lagrange interpolation is plain point
evaluation and interpolants of continuous functions have vanishing jumps.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import FacetTopology, Mesh

SUPPORTED_DEGREES = (1, 2, 3)
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class DofMap:
    degree: int
    n_elements: int
    dofs_per_element: int

    @property
    def total(self) -> int:
        return self.n_elements * self.dofs_per_element

    def element_dofs(self, e: int) -> np.ndarray:
        d = self.dofs_per_element
        return np.arange(e * d, (e + 1) * d)

    def element_slice(self, e: int) -> slice:
        d = self.dofs_per_element
        return slice(e * d, (e + 1) * d)


@dataclass(frozen=True)
class TraceFrame:
    """Two-sided parameterization of one facet.

    t in [0, 1] runs along the facet in the fixed lexicographic direction;
    `ref_origin[s] + t * ref_dir[s]` is the reference-coordinate pullback on
    side s.  Boundary facets only carry side 0.
    """

    facet: int
    endpoints: np.ndarray      # (2, 2) physical, lexicographic order
    elems: tuple               # (elem1, elem2 or -1)
    ref_origin: np.ndarray     # (2, 2)
    ref_dir: np.ndarray        # (2, 2)
    inv_jacobians: np.ndarray  # (2, 2, 2) per side
    normal: np.ndarray         # (2,) outward of side 1
    length: float
    interior: bool

    def point(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.endpoints[0] + t[:, None] * (self.endpoints[1] - self.endpoints[0])

    def ref_point(self, side, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.ref_origin[side] + t[:, None] * self.ref_dir[side]


@lru_cache(maxsize=None)
def _basis_data(k):
    exps = [(a, b) for b in range(k + 1) for a in range(k + 1 - b)]
    nodes = np.array([(a / k, b / k) for a, b in exps])
    V = np.column_stack([nodes[:, 0] ** a * nodes[:, 1] ** b for a, b in exps])
    coeffs = np.linalg.inv(V)
    nodes.setflags(write=False)
    coeffs.setflags(write=False)
    return tuple(exps), nodes, coeffs


def reference_nodes(k: int) -> np.ndarray:
    """Uniform lattice nodes of P_k on the reference triangle, row by row
    from the bottom edge; nodes on shared element edges coincide."""
    _check_degree(k)
    return _basis_data(k)[1]


def _check_degree(k):
    if k not in SUPPORTED_DEGREES:
        raise ValueError(f"unsupported polynomial degree {k}; supported: {SUPPORTED_DEGREES}")


def build_dof_map(mesh: Mesh, k: int) -> DofMap:
    _check_degree(k)
    return DofMap(degree=k, n_elements=mesh.n_triangles, dofs_per_element=(k + 1) * (k + 2) // 2)


def eval_basis(k: int, points):
    """Values and reference gradients of the nodal basis.

    points: (nq, 2) reference coordinates.  Returns (values, grads) of shapes
    (nq, D) and (nq, D, 2).
    """
    _check_degree(k)
    exps, _, coeffs = _basis_data(k)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nq, D = pts.shape[0], len(exps)
    M = np.empty((nq, D))
    Mx = np.zeros((nq, D))
    My = np.zeros((nq, D))
    x, y = pts[:, 0], pts[:, 1]
    for col, (a, b) in enumerate(exps):
        M[:, col] = x**a * y**b
        if a > 0:
            Mx[:, col] = a * x ** (a - 1) * y**b
        if b > 0:
            My[:, col] = b * x**a * y ** (b - 1)
    values = M @ coeffs
    grads = np.stack([Mx @ coeffs, My @ coeffs], axis=-1)
    return values, grads


def element_jacobians(mesh: Mesh):
    """Per-element affine map data: (B, detB, Binv) with x = p0 + B xi."""
    p = mesh.vertices[mesh.triangles]
    B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    inv = np.empty_like(B)
    inv[:, 0, 0] = B[:, 1, 1] / det
    inv[:, 0, 1] = -B[:, 0, 1] / det
    inv[:, 1, 0] = -B[:, 1, 0] / det
    inv[:, 1, 1] = B[:, 0, 0] / det
    return B, det, inv


def physical_nodes(mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    """Physical coordinates of all nodal points, shape (nt, D, 2)."""
    ref = reference_nodes(dofmap.degree)
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    B, _, _ = element_jacobians(mesh)
    return p0[:, None, :] + np.einsum("ecd,nd->enc", B, ref)


def interpolate_nodal(mesh: Mesh, dofmap: DofMap, f) -> np.ndarray:
    """Elementwise nodal interpolation of a callable f(x, y)."""
    xy = physical_nodes(mesh, dofmap)
    return np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float).ravel()


def eval_element(mesh: Mesh, dofmap: DofMap, coeffs, e: int, ref_points):
    """Evaluate a DG field on element e at reference points.

    Returns (values, physical_gradients) of shapes (nq,) and (nq, 2).
    """
    vals, grads = eval_basis(dofmap.degree, ref_points)
    _, _, Binv = element_jacobians(mesh)
    c = np.asarray(coeffs)[dofmap.element_slice(e)]
    v = vals @ c
    gref = np.einsum("qid,i->qd", grads, c)
    return v, gref @ Binv[e]


def facet_trace_frame(mesh: Mesh, topo: FacetTopology, f: int) -> TraceFrame:
    """Orientation-consistent trace frame: t increases along the facet in
    lexicographic endpoint order, identically from both sides."""
    a, b = topo.vertex_pairs[f]
    endpoints = mesh.vertices[[a, b]].copy()
    _, _, Binv = element_jacobians(mesh)
    interior = bool(topo.interior[f])
    nsides = 2 if interior else 1
    origin = np.zeros((2, 2))
    direction = np.zeros((2, 2))
    invj = np.zeros((2, 2, 2))
    elems = []
    for s in range(nsides):
        t = int(topo.elems[f, s])
        l = int(topo.local_edges[f, s])
        la, lb = (l + 1) % 3, (l + 2) % 3
        tri = mesh.triangles[t]
        if tri[la] == a:
            r0, r1 = _REF_VERTS[la], _REF_VERTS[lb]
        else:
            r0, r1 = _REF_VERTS[lb], _REF_VERTS[la]
        origin[s] = r0
        direction[s] = r1 - r0
        invj[s] = Binv[t]
        elems.append(t)
    if not interior:
        elems.append(-1)
    return TraceFrame(
        facet=f,
        endpoints=endpoints,
        elems=tuple(elems),
        ref_origin=origin,
        ref_dir=direction,
        inv_jacobians=invj,
        normal=topo.normals[f].copy(),
        length=float(topo.lengths[f]),
        interior=interior,
    )


def eval_jump_mean(dofmap: DofMap, coeffs, frame: TraceFrame, t):
    """Jump and mean of a DG field and of its normal flux on one facet.

    Returns ([v], {v}, [grad v . n_f], {grad v} . n_f) as arrays over t.
    On boundary facets all four reduce to the single trace quantities.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def side(s):
        e = frame.elems[s]
        ref = frame.ref_point(s, t)
        vals, grads = eval_basis(dofmap.degree, ref)
        c = coeffs[dofmap.element_slice(e)]
        v = vals @ c
        gref = np.einsum("qid,i->qd", grads, c)
        gn = (gref @ frame.inv_jacobians[s]) @ frame.normal
        return v, gn

    v1, gn1 = side(0)
    if not frame.interior:
        return v1, v1, gn1, gn1
    v2, gn2 = side(1)
    return v1 - v2, 0.5 * (v1 + v2), gn1 - gn2, 0.5 * (gn1 + gn2)
