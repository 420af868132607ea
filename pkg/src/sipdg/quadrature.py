"""Quadrature rules on the reference triangle and the unit segment.

Conventions: a TriangleRule integrates as ``|T| * sum(w_q * f(p_q))`` with
barycentric points and weights summing to 1; a SegmentRule integrates as
``|f| * sum(w_q * g(t_q))`` with nodes in [0, 1].
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_TRIANGLE_DEGREE = 10
MAX_SEGMENT_POINTS = 10


@dataclass(frozen=True)
class TriangleRule:
    """Rule on the reference triangle (0,0)-(1,0)-(0,1), exact to `degree`."""

    degree: int
    points: np.ndarray   # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sum to 1

    @property
    def xy(self) -> np.ndarray:
        """Cartesian reference coordinates, shape (nq, 2)."""
        return self.points[:, 1:]


@dataclass(frozen=True)
class SegmentRule:
    """Gauss-Legendre rule on [0, 1]; n points are exact to degree 2n-1."""

    npoints: int
    points: np.ndarray
    weights: np.ndarray


def _bary(xy):
    xy = np.asarray(xy, dtype=float)
    lam0 = 1.0 - xy[:, 0] - xy[:, 1]
    return np.column_stack([lam0, xy[:, 0], xy[:, 1]])


def _collapsed_rule(degree):
    # Duffy transform x = xi, y = eta*(1-xi); the (1-xi) Jacobian is absorbed
    # exactly by the Gauss-Jacobi(1,0) weight, so the rule is exact for any
    # requested degree without tabulated points.
    npts = (degree + 2) // 2
    xj, wj = roots_jacobi(npts, 1.0, 0.0)
    xl, wl = roots_legendre(npts)
    xi = 0.5 * (xj + 1.0)
    eta = 0.5 * (xl + 1.0)
    X, E = np.meshgrid(xi, eta, indexing="ij")
    pts = np.column_stack([X.ravel(), (E * (1.0 - X)).ravel()])
    W = np.outer(wj, wl).ravel() / 4.0
    return _bary(pts), W


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> TriangleRule:
    """Return a triangle rule exact for polynomials up to `degree`.

    Degree 3 is the classical symmetric 4-point rule (centroid weight -27/48,
    three points at barycentric (3/5, 1/5, 1/5) with weight 25/48).
    """
    if not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    if degree == 1:
        pts = np.array([[1 / 3, 1 / 3, 1 / 3]])
        w = np.array([1.0])
    elif degree == 2:
        pts = np.array([[2 / 3, 1 / 6, 1 / 6],
                        [1 / 6, 2 / 3, 1 / 6],
                        [1 / 6, 1 / 6, 2 / 3]])
        w = np.full(3, 1 / 3)
    elif degree == 3:
        pts = np.array([[1 / 3, 1 / 3, 1 / 3],
                        [3 / 5, 1 / 5, 1 / 5],
                        [1 / 5, 3 / 5, 1 / 5],
                        [1 / 5, 1 / 5, 3 / 5]])
        w = np.array([-27 / 48, 25 / 48, 25 / 48, 25 / 48])
    else:
        pts, w = _collapsed_rule(degree)
    pts.setflags(write=False)
    w.setflags(write=False)
    return TriangleRule(degree, pts, w)


@lru_cache(maxsize=None)
def segment_rule(npoints: int) -> SegmentRule:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    if not 1 <= npoints <= MAX_SEGMENT_POINTS:
        raise ValueError(f"unsupported segment rule size {npoints}")
    x, w = roots_legendre(npoints)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return SegmentRule(npoints, pts, wts)


def integrate_triangle(rule: TriangleRule, f, verts) -> float:
    """Integrate f(x, y) over the physical triangle with the given rule."""
    verts = np.asarray(verts, dtype=float)
    pts = rule.points @ verts
    u, v = verts[1] - verts[0], verts[2] - verts[0]
    area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
    return area * float(np.dot(rule.weights, f(pts[:, 0], pts[:, 1])))


def integrate_segment(rule: SegmentRule, g, a, b) -> float:
    """Integrate g(x, y) along the segment from point a to point b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pts = a[None, :] + rule.points[:, None] * (b - a)[None, :]
    length = float(np.hypot(*(b - a)))
    return length * float(np.dot(rule.weights, g(pts[:, 0], pts[:, 1])))
