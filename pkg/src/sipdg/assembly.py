"""SIP-DG assembly: volume stiffness, the symmetric facet jump form, the
penalty form (standard 1/h_f weight or the geometry-adaptive barycenter
weight), the load vector, and the combined system A = A0 - J + P.

Homogeneous Dirichlet data is imposed weakly: boundary facets enter the
jump and penalty sums with the single-trace convention, no rows are
eliminated.  Element and facet contributions are accumulated as triplets
in deterministic index order and compressed with duplicate summation.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .dg_space import DofMap, element_jacobians, eval_basis
from .mesh import FacetTopology, Mesh, facet_weight_arrays
from .quadrature import SegmentRule, TriangleRule, segment_rule, triangle_rule
from .sparse_linalg import SparseMatrix, csr_from_triplets, from_scipy

VARIANTS = ("standard", "new")
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class CoercivityWarning(UserWarning):
    """Penalty parameter below the trace-constant coercivity threshold."""


def coercivity_threshold(degree: int) -> float:
    """(C4tr)^2 for P_degree: gradients lie in P_{degree-1}, and the
    geometry-free trace bound for p in P_j carries (j+1)(j+2)/2."""
    return degree * (degree + 1) / 2.0


@dataclass
class SchemeConfig:
    variant: str = "new"
    eta: float = None  # defaults: 10 for standard, 0.8 for new
    degree: int = 1
    quad_volume: int = None  # triangle degree, default 2k
    quad_facet: int = None   # segment points, default k+1 (exact to 2k+1)
    quad_rhs: int = None     # triangle degree, default max(2k+2, 3)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if self.eta is None:
            self.eta = 10.0 if self.variant == "standard" else 0.8
        if self.eta <= 0:
            raise ValueError(f"penalty parameter must be positive, got {self.eta}")
        k = self.degree
        if self.quad_volume is None:
            self.quad_volume = max(2 * k, 1)
        if self.quad_facet is None:
            self.quad_facet = k + 1
        if self.quad_rhs is None:
            self.quad_rhs = max(2 * k + 2, 3)
        if self.variant == "new" and self.eta < coercivity_threshold(k):
            warnings.warn(
                f"eta={self.eta} is below the coercivity threshold "
                f"{coercivity_threshold(k)} for degree {k}; the trace-inequality "
                "coercivity guarantee does not apply",
                CoercivityWarning,
                stacklevel=2,
            )


@dataclass
class AssembledSystem:
    A: SparseMatrix
    A0: SparseMatrix
    J: SparseMatrix
    P: SparseMatrix
    b: np.ndarray
    ndof: int


def penalty_coefficients(mesh: Mesh, topo: FacetTopology, config: SchemeConfig) -> np.ndarray:
    """Full per-facet penalty coefficient: eta/h_f (standard) or
    eta * (|f|/|T1~| + |f|/|T2~|) (new).  Its reciprocal is the facet weight
    of the starred norm."""
    weights, h_f = facet_weight_arrays(mesh, topo)
    if config.variant == "standard":
        return config.eta / h_f
    return config.eta * weights


def assemble_volume(mesh: Mesh, dofmap: DofMap, rule: TriangleRule = None) -> SparseMatrix:
    """Block-diagonal broken stiffness matrix sum_T int_T grad u . grad v."""
    k = dofmap.degree
    if rule is None:
        rule = triangle_rule(max(2 * k, 1))
    _, grads = eval_basis(k, rule.xy)           # (nq, D, 2)
    D = dofmap.dofs_per_element
    # M1[i,j,c,d] = sum_q w_q dphi_i/dxi_c dphi_j/dxi_d
    M1 = np.einsum("q,qic,qjd->ijcd", rule.weights, grads, grads)
    _, det, Binv = element_jacobians(mesh)
    C = np.einsum("ecd,efd->ecf", Binv, Binv)   # Binv @ Binv^T per element
    K = np.einsum("ijcf,ecf,e->eij", M1, C, 0.5 * det)
    ne = mesh.n_triangles
    base = np.arange(ne, dtype=np.int32)[:, None, None] * D
    local = np.arange(D, dtype=np.int32)
    rows = np.broadcast_to(base + local[None, :, None], K.shape)
    cols = np.broadcast_to(base + local[None, None, :], K.shape)
    return csr_from_triplets(
        dofmap.total, (rows.ravel(), cols.ravel(), K.ravel()), symmetric=True
    )


def _trace_tables(k: int, seg: SegmentRule):
    """Basis values and reference gradients at the facet Gauss points for the
    six (local edge, direction) variants; variant = 2*edge + flipped."""
    tables = []
    for l in range(3):
        r0, r1 = _REF_VERTS[(l + 1) % 3], _REF_VERTS[(l + 2) % 3]
        for flip in (0, 1):
            a, b = (r1, r0) if flip else (r0, r1)
            pts = a[None, :] + seg.points[:, None] * (b - a)[None, :]
            tables.append(eval_basis(k, pts))
    return tables


def _side_variants(mesh: Mesh, topo: FacetTopology):
    """(nf, 2) variant index per facet side; -1 where the side is absent."""
    nf = topo.n_facets
    out = np.full((nf, 2), -1, dtype=np.int64)
    for s in range(2):
        present = topo.elems[:, s] >= 0
        l = topo.local_edges[present, s]
        e = topo.elems[present, s]
        first_local = mesh.triangles[e, (l + 1) % 3]
        flipped = (first_local != topo.vertex_pairs[present, 0]).astype(np.int64)
        out[present, s] = 2 * l + flipped
    return out


def _facet_groups(mesh: Mesh, topo: FacetTopology):
    """Yield (facet_indices, variants, interior) grouped by the side-variant
    pair, in deterministic key order."""
    var = _side_variants(mesh, topo)
    keys = var[:, 0] * 16 + (var[:, 1] + 1)  # unique small integers
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.nonzero(np.diff(sorted_keys))[0] + 1
    for chunk in np.split(order, boundaries):
        f0 = chunk[0]
        yield chunk, (int(var[f0, 0]), int(var[f0, 1])), bool(topo.interior[f0])


def _facet_matrix(mesh, topo, dofmap, seg, *, jump_term, coefs=None) -> SparseMatrix:
    """Shared facet assembly: the jump form J or the penalty form P."""
    k = dofmap.degree
    D = dofmap.dofs_per_element
    tables = _trace_tables(k, seg)
    _, _, Binv = element_jacobians(mesh)
    w = seg.weights
    rows_all, cols_all, vals_all = [], [], []
    for facets, (v1, v2), interior in _facet_groups(mesh, topo):
        lengths = topo.lengths[facets]
        normals = topo.normals[facets]
        sides = [(0, v1, topo.elems[facets, 0].astype(np.int32), 1.0)]
        if interior:
            sides.append((1, v2, topo.elems[facets, 1].astype(np.int32), -1.0))
        mean_c = 0.5 if interior else 1.0
        scale = coefs[facets] * lengths if coefs is not None else lengths
        dn = {}
        if jump_term:
            for s, v, elems, _sign in sides:
                m = np.einsum("ecd,ed->ec", Binv[elems], normals)  # (nf_g, 2)
                dn[s] = np.einsum("qic,fc->fqi", tables[v][1], m)
        for sa, va, ea, sign_a in sides:
            phi_a = tables[va][0]
            for sb, vb, eb, sign_b in sides:
                phi_b = tables[vb][0]
                if jump_term:
                    t1 = np.einsum("q,qi,fqj->fij", w, phi_a, dn[sb])
                    t2 = np.einsum("q,fqi,qj->fij", w, dn[sa], phi_b)
                    block = (mean_c * lengths)[:, None, None] * (sign_a * t1 + sign_b * t2)
                else:
                    base = np.einsum("q,qi,qj->ij", w, phi_a, phi_b)
                    block = (sign_a * sign_b) * scale[:, None, None] * base[None, :, :]
                local = np.arange(D, dtype=np.int32)
                r = ea[:, None, None] * D + local[None, :, None]
                c = eb[:, None, None] * D + local[None, None, :]
                rows_all.append(np.broadcast_to(r, block.shape).ravel())
                cols_all.append(np.broadcast_to(c, block.shape).ravel())
                vals_all.append(block.ravel())
    if rows_all:
        triplets = (
            np.concatenate(rows_all),
            np.concatenate(cols_all),
            np.concatenate(vals_all),
        )
    else:
        triplets = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))
    return csr_from_triplets(dofmap.total, triplets, symmetric=True)


def assemble_jump(mesh: Mesh, topo: FacetTopology, dofmap: DofMap,
                  seg: SegmentRule = None) -> SparseMatrix:
    """Symmetric jump form sum_f int_f [w]{grad v}.n + [v]{grad w}.n over all
    facets, boundary facets with the single-trace convention."""
    if seg is None:
        seg = segment_rule(dofmap.degree + 1)
    return _facet_matrix(mesh, topo, dofmap, seg, jump_term=True)


def assemble_penalty(mesh: Mesh, topo: FacetTopology, dofmap: DofMap,
                     config: SchemeConfig, seg: SegmentRule = None) -> SparseMatrix:
    """Penalty form with the variant's facet coefficient."""
    if seg is None:
        seg = segment_rule(config.quad_facet)
    coefs = penalty_coefficients(mesh, topo, config)
    return _facet_matrix(mesh, topo, dofmap, seg, jump_term=False, coefs=coefs)


def assemble_rhs(mesh: Mesh, dofmap: DofMap, phi, rule: TriangleRule = None,
                 chunk: int = 65536) -> np.ndarray:
    """Load vector b_i = sum_T int_T phi * basis_i; phi must accept arrays."""
    if rule is None:
        rule = triangle_rule(max(2 * dofmap.degree + 2, 3))
    vals, _ = eval_basis(dofmap.degree, rule.xy)  # (nq, D)
    B, det, _ = element_jacobians(mesh)
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    ne = mesh.n_triangles
    b = np.empty((ne, dofmap.dofs_per_element))
    for lo in range(0, ne, chunk):
        hi = min(lo + chunk, ne)
        pts = p0[lo:hi, None, :] + np.einsum("ecd,qd->eqc", B[lo:hi], rule.xy)
        f = np.asarray(phi(pts[..., 0], pts[..., 1]), dtype=float)
        b[lo:hi] = np.einsum("q,eq,qi,e->ei", rule.weights, f, vals, 0.5 * det[lo:hi])
    return b.ravel()


def assemble_system(mesh: Mesh, topo: FacetTopology, dofmap: DofMap,
                    config: SchemeConfig, phi) -> AssembledSystem:
    """Full SIP-DG system A = A0 - J + P and load vector."""
    if config.degree != dofmap.degree:
        raise ValueError("config.degree does not match the DOF map")
    A0 = assemble_volume(mesh, dofmap, triangle_rule(config.quad_volume))
    seg = segment_rule(config.quad_facet)
    J = assemble_jump(mesh, topo, dofmap, seg)
    P = assemble_penalty(mesh, topo, dofmap, config, seg)
    A = from_scipy(A0.to_scipy() - J.to_scipy() + P.to_scipy(), symmetric=True)
    b = assemble_rhs(mesh, dofmap, phi, triangle_rule(config.quad_rhs))
    return AssembledSystem(A=A, A0=A0, J=J, P=P, b=b, ndof=dofmap.total)
