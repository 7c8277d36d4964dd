"""Linking numbers of closed polylines, two independent ways.

The quadrature route integrates the Gauss kernel

    L(V, W) = <V, W x (x - y)> / (4 pi |x - y|^3),
    V at x on the first curve, W at y on the second,

over all segment pairs.  On a straight segment pair the numerator
det[da, db, x - y] is constant (shear invariance of the determinant), so each
cell reduces to a 1/r^3 scalar integral, evaluated by Gauss-Legendre with
recursive subdivision wherever the inter-segment distance is smaller than the
longer segment.

The combinatorial route projects both curves along a generic direction and
takes half the signed sum of inter-component crossings.  It is exact and
serves as the integer oracle for the quadrature route.

Orientation convention used throughout: right-handed ambient frame; curves
are oriented by their vertex order (flow direction for closed-up flow arcs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import Trajectory

# Pointwise kernel evaluations refuse below this separation.
KERNEL_FLOOR = 1e-14
# Curve-level quadrature refuses when the curves come closer than this.
SINGULAR_FLOOR = 1e-12
# Consecutive vertices of a non-degenerate curve must be farther apart.
VERTEX_TOL = 1e-12

_CHUNK_ROWS = 131072
_MAX_DEPTH = 60


class SingularKernelError(ValueError):
    """Kernel evaluated (or integrated) at effectively coincident points."""


class ProximityError(RuntimeError):
    """Curves too close for the requested quadrature."""


class GenericityError(RuntimeError):
    """Projection direction fails the genericity requirements; retry with
    another direction."""


def kernel(x, V, y, W) -> float | np.ndarray:
    """Gauss linking kernel (1/4pi) <V, W x (x-y)> / |x-y|^3.

    Accepts broadcasting batches in the leading dimensions.  Symmetric under
    the simultaneous swap (V, x) <-> (W, y).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    d = x - y
    r = np.linalg.norm(d, axis=-1)
    if np.any(r < KERNEL_FLOOR):
        raise SingularKernelError(f"kernel evaluated at separation < {KERNEL_FLOOR}")
    num = np.einsum("...i,...i->...", V, np.cross(W, d))
    out = num / (4.0 * np.pi * r ** 3)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# closed curves


@dataclass(eq=False)
class ClosedCurve:
    """Oriented closed polyline.

    `vertices` has shape (m, 3) and is implicitly closed (last connects back
    to first).  Segment i joins vertices[i] to vertices[(i+1) % m].
    `closure_range` = (k, m) marks the segment indices forming the straight
    closing path of a closed-up flow arc; it is (m, m) (empty) for curves
    without one.  A degenerate curve is a single point and links nothing.
    """

    vertices: np.ndarray
    closure_range: tuple[int, int] = (0, 0)
    degenerate: bool = False

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (m, 3)")
        m = len(self.vertices)
        if self.degenerate:
            return
        if m < 3:
            raise ValueError("a closed curve needs >= 3 vertices (or the degenerate flag)")
        gaps = np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)
        if np.any(gaps <= VERTEX_TOL):
            raise ValueError(f"consecutive vertices closer than {VERTEX_TOL}")
        k0, k1 = self.closure_range
        if not (0 <= k0 <= k1 <= m):
            raise ValueError(f"closure_range {self.closure_range} out of bounds for m = {m}")

    def __len__(self) -> int:
        return len(self.vertices)

    def segment_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(starts, deltas) for all m segments including the wrap-around."""
        v = self.vertices
        return v, np.roll(v, -1, axis=0) - v

    def length(self) -> float:
        if self.degenerate:
            return 0.0
        _, d = self.segment_arrays()
        return float(np.linalg.norm(d, axis=1).sum())

    def closure_length(self) -> float:
        k0, k1 = self.closure_range
        if self.degenerate or k0 == k1:
            return 0.0
        _, d = self.segment_arrays()
        return float(np.linalg.norm(d[k0:k1], axis=1).sum())

    def reversed(self) -> "ClosedCurve":
        """Orientation-reversed copy."""
        if self.degenerate:
            return ClosedCurve(self.vertices.copy(), degenerate=True)
        m = len(self.vertices)
        k0, k1 = self.closure_range
        verts = np.vstack([self.vertices[:1], self.vertices[:0:-1]])
        if k0 == k1:
            rng = (m, m)
        else:
            rng = (m - k1, m - k0)
        return ClosedCurve(verts, closure_range=rng)

    def bounding_box_diagonal(self) -> float:
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(ext))

    def to_csv(self, path) -> None:
        k0, k1 = self.closure_range
        header = (f"# closure_range: {k0},{k1}\n"
                  f"# degenerate: {int(self.degenerate)}\n"
                  "x,y,z")
        np.savetxt(path, self.vertices, delimiter=",", header=header,
                   comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "ClosedCurve":
        closure = (0, 0)
        degenerate = False
        with open(path) as fh:
            lines = fh.readlines()
        data_lines = []
        for ln in lines:
            s = ln.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if body.startswith("closure_range:"):
                    k0, k1 = body.split(":", 1)[1].split(",")
                    closure = (int(k0), int(k1))
                elif body.startswith("degenerate:"):
                    degenerate = bool(int(body.split(":", 1)[1]))
                continue
            if s.lower().startswith("x,"):
                continue
            data_lines.append(s)
        verts = np.array([[float(v) for v in ln.split(",")] for ln in data_lines])
        return cls(verts, closure_range=closure, degenerate=degenerate)


def polyline_circle(center, normal, radius: float, n: int = 256) -> ClosedCurve:
    """Regular n-gon approximation of a circle, oriented right-handed about
    `normal` (counterclockwise seen from the +normal side)."""
    if n < 3:
        raise ValueError("need at least 3 vertices")
    center = np.asarray(center, dtype=float)
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    k = int(np.argmin(np.abs(normal)))
    e1 = np.zeros(3)
    e1[k] = 1.0
    e1 -= normal * normal[k]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    phi = 2.0 * np.pi * np.arange(n) / n
    verts = center + radius * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
    return ClosedCurve(verts, closure_range=(n, n))


def close_curve(traj: Trajectory, max_seglen: float | None = None) -> ClosedCurve:
    """Close a flow arc with the straight segment from its endpoint back to
    its start (the minimal geodesic of R^3), subdivided to the polyline's
    segment scale.  A constant trajectory yields a degenerate point curve."""
    pts = np.atleast_2d(traj.points)
    # drop consecutive duplicates below the vertex tolerance
    if len(pts) > 1:
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > VERTEX_TOL
        pts = pts[keep]
    if len(pts) == 1 or np.all(np.linalg.norm(pts - pts[0], axis=1) <= VERTEX_TOL):
        return ClosedCurve(pts[:1].copy(), closure_range=(0, 0), degenerate=True)

    gap = float(np.linalg.norm(pts[-1] - pts[0]))
    if gap <= VERTEX_TOL:
        verts = pts[:-1]
        m = len(verts)
        return ClosedCurve(verts.copy(), closure_range=(m, m))

    if max_seglen is None:
        max_seglen = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).max())
    nseg = max(1, int(np.ceil(gap / max_seglen)))
    # guarantee >= 3 vertices overall
    while len(pts) + nseg - 1 < 3:
        nseg += 1
    frac = np.arange(1, nseg) / nseg
    interior = pts[-1] + frac[:, None] * (pts[0] - pts[-1])
    verts = np.vstack([pts, interior])
    m = len(verts)
    return ClosedCurve(verts, closure_range=(len(pts) - 1, m))


# ---------------------------------------------------------------------------
# segment-segment distance (vectorized closest-point clamping)


def segment_pairs_distance(p1, d1, p2, d2) -> np.ndarray:
    """Distance between segments [p1, p1+d1] and [p2, p2+d2], elementwise
    over matching leading shapes.  Handles degenerate (point) segments."""
    p1 = np.asarray(p1, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    r = p1 - p2
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    b = np.einsum("...i,...i->...", d1, d2)
    c = np.einsum("...i,...i->...", d1, r)
    f = np.einsum("...i,...i->...", d2, r)

    tiny = 1e-28
    point1 = a <= tiny
    point2 = e <= tiny
    a_safe = np.where(point1, 1.0, a)
    e_safe = np.where(point2, 1.0, e)

    denom = a * e - b * b
    s = np.where(denom > tiny, np.clip((b * f - c * e) / np.where(denom > tiny, denom, 1.0),
                                       0.0, 1.0), 0.0)
    t = (b * s + f) / e_safe
    t_cl = np.clip(t, 0.0, 1.0)
    recompute = t_cl != t
    s = np.where(recompute, np.clip((b * t_cl - c) / a_safe, 0.0, 1.0), s)
    s = np.where(point1, 0.0, s)
    t_cl = np.where(point2, 0.0, t_cl)
    # degenerate first segment: closest point on segment 2 to the point p1
    t_cl = np.where(point1 & ~point2, np.clip(f / e_safe, 0.0, 1.0), t_cl)

    diff = (p1 + s[..., None] * d1) - (p2 + t_cl[..., None] * d2)
    return np.linalg.norm(diff, axis=-1)


def _pairs_min_distance(sa, da, sb, db) -> float:
    """Minimum distance over the full cartesian set of segment pairs."""
    n, m = len(sa), len(sb)
    if n == 0 or m == 0:
        return np.inf
    best = np.inf
    block = max(1, _CHUNK_ROWS // max(m, 1))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        d = segment_pairs_distance(sa[i0:i1, None, :], da[i0:i1, None, :],
                                   sb[None, :, :], db[None, :, :])
        best = min(best, float(d.min()))
    return best


def min_distance(A: ClosedCurve, B: ClosedCurve) -> float:
    """Minimum distance between two closed polylines over all segment pairs."""
    if A.degenerate or B.degenerate:
        pa = A.vertices
        pb = B.vertices
        if A.degenerate and B.degenerate:
            return float(np.linalg.norm(pa[0] - pb[0]))
        curve, pt = (B, pa[0]) if A.degenerate else (A, pb[0])
        s, d = curve.segment_arrays()
        dist = segment_pairs_distance(np.broadcast_to(pt, s.shape), np.zeros_like(s), s, d)
        return float(dist.min())
    sa, da = A.segment_arrays()
    sb, db = B.segment_arrays()
    return _pairs_min_distance(sa, da, sb, db)


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature over segment pairs

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss-Legendre nodes on [0,1]^2, flattened."""
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        s = np.repeat(x, order)
        t = np.tile(x, order)
        ww = np.repeat(w, order) * np.tile(w, order)
        _GL_CACHE[order] = (np.stack([s, t]), ww)
    return _GL_CACHE[order]


def _cell_r3_integral(a0, da, b0, db, order: int) -> np.ndarray:
    """Per-cell integral of |x(s) - y(t)|^-3 over the unit square."""
    (s, t), w = _gl_nodes(order)
    w0 = a0 - b0
    A = np.einsum("ni,ni->n", w0, w0)
    B = np.einsum("ni,ni->n", w0, da)
    C = np.einsum("ni,ni->n", w0, db)
    D = np.einsum("ni,ni->n", da, da)
    E = np.einsum("ni,ni->n", da, db)
    F = np.einsum("ni,ni->n", db, db)
    r2 = (A[:, None] + 2.0 * B[:, None] * s - 2.0 * C[:, None] * t
          + D[:, None] * s ** 2 - 2.0 * E[:, None] * s * t + F[:, None] * t ** 2)
    np.maximum(r2, 1e-300, out=r2)
    return (w / (r2 * np.sqrt(r2))).sum(axis=1)


def _l_integral(sa, da_, sb, db_, tol: float, absolute: bool = False,
                min_sep: float | None = None) -> tuple[float, float]:
    """Integral of the Gauss kernel (or its absolute value) over two
    polylines given as segment arrays.  Returns (value, error_estimate).

    Per-cell error budget is the tolerance split uniformly over the base
    segment pairs; a cell is subdivided (longer segment halved) while the
    inter-segment distance is below the longer segment length or the
    embedded GL4-vs-GL8 difference exceeds its budget.
    """
    n, m = len(sa), len(sb)
    if n == 0 or m == 0:
        return 0.0, 0.0
    if min_sep is None:
        min_sep = _pairs_min_distance(sa, da_, sb, db_)
    if min_sep < SINGULAR_FLOOR:
        raise ProximityError(f"curves {min_sep:.3g} apart, below the "
                             f"singular-evaluation floor {SINGULAR_FLOOR}")
    budget0 = tol / (n * m)

    total = 0.0
    err_total = 0.0
    ablock = max(1, _CHUNK_ROWS // m)
    for i0 in range(0, n, ablock):
        i1 = min(n, i0 + ablock)
        na = i1 - i0
        a0 = np.repeat(sa[i0:i1], m, axis=0)
        da = np.repeat(da_[i0:i1], m, axis=0)
        b0 = np.tile(sb, (na, 1))
        db = np.tile(db_, (na, 1))
        budget = np.full(na * m, budget0)
        depth = np.zeros(na * m, dtype=np.int32)

        while len(a0):
            det = np.einsum("ni,ni->n", np.cross(da, db), a0 - b0)
            la2 = np.einsum("ni,ni->n", da, da)
            lb2 = np.einsum("ni,ni->n", db, db)
            dist = segment_pairs_distance(a0, da, b0, db)
            lmax2 = np.maximum(la2, lb2)
            # zero-determinant cells integrate to exactly zero
            live = det != 0.0
            too_close = live & (dist * dist < lmax2) & (depth < _MAX_DEPTH)

            # GL8 on separated cells is accurate to ~1e-17 relative beyond
            # five segment lengths; skip the embedded error estimate there
            far = live & ~too_close & (dist * dist > 25.0 * lmax2)
            if np.any(far):
                i3 = _cell_r3_integral(a0[far], da[far], b0[far], db[far], 8)
                scale = det[far] / (4.0 * np.pi)
                if absolute:
                    scale = np.abs(scale)
                v8 = scale * i3
                total += v8.sum()
                err_total += 1e-15 * np.abs(v8).sum()

            ev = live & ~too_close & ~far
            split_err = np.zeros(len(a0), dtype=bool)
            if np.any(ev):
                i3 = _cell_r3_integral(a0[ev], da[ev], b0[ev], db[ev], 8)
                i3_lo = _cell_r3_integral(a0[ev], da[ev], b0[ev], db[ev], 4)
                scale = det[ev] / (4.0 * np.pi)
                if absolute:
                    scale = np.abs(scale)
                v8 = scale * i3
                err = np.abs(scale) * np.abs(i3 - i3_lo)
                ok = (err <= np.maximum(budget[ev], 1e-15 * np.abs(v8))) | (depth[ev] >= _MAX_DEPTH)
                total += v8[ok].sum()
                err_total += err[ok].sum()
                idx_ev = np.flatnonzero(ev)
                split_err[idx_ev[~ok]] = True

            split = too_close | split_err
            if not np.any(split):
                break
            a0s, das = a0[split], da[split]
            b0s, dbs = b0[split], db[split]
            halve_a = np.einsum("ni,ni->n", das, das) >= np.einsum("ni,ni->n", dbs, dbs)
            ha = halve_a[:, None]
            # child 1: first half of the longer segment; child 2: second half
            da1 = np.where(ha, 0.5 * das, das)
            db1 = np.where(ha, dbs, 0.5 * dbs)
            a0_2 = np.where(ha, a0s + 0.5 * das, a0s)
            b0_2 = np.where(ha, b0s, b0s + 0.5 * dbs)
            a0 = np.vstack([a0s, a0_2])
            da = np.vstack([da1, da1])
            b0 = np.vstack([b0s, b0_2])
            db = np.vstack([db1, db1])
            budget = np.concatenate([budget[split], budget[split]]) * 0.5
            depth = np.concatenate([depth[split], depth[split]]) + 1
    return total, err_total


def gauss_linking(A: ClosedCurve, B: ClosedCurve, tol: float = 1e-6) -> float:
    """Double line integral of the Gauss kernel over two disjoint closed
    polylines; equals their linking number exactly, up to quadrature error
    <= tol.  Raises ProximityError when the curves come closer than the
    singular-evaluation floor."""
    if A.degenerate or B.degenerate:
        raise ValueError("gauss_linking requires non-degenerate curves")
    sa, da = A.segment_arrays()
    sb, db = B.segment_arrays()
    value, _ = _l_integral(sa, da, sb, db, tol, absolute=False)
    return value


# ---------------------------------------------------------------------------
# signed-crossing oracle

_GOLDEN = np.pi * (3.0 - np.sqrt(5.0))


def projection_directions(n: int = 32) -> np.ndarray:
    """Deterministic spread of unit directions (spherical Fibonacci spiral,
    rotated off the coordinate axes so axis-aligned curve planes are not
    systematically degenerate)."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = _GOLDEN * k
    dirs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    # fixed rotation by 0.6 rad about (1, 2, 3)/sqrt(14)
    ax = np.array([1.0, 2.0, 3.0]) / np.sqrt(14.0)
    ca, sa_ = np.cos(0.6), np.sin(0.6)
    dirs = (ca * dirs + sa_ * np.cross(ax, dirs)
            + (1.0 - ca) * np.outer(dirs @ ax, ax))
    return dirs


def _projection_basis(direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0.0:
        raise ValueError("projection direction must be nonzero")
    d = d / nd
    k = int(np.argmin(np.abs(d)))
    e1 = np.zeros(3)
    e1[k] = 1.0
    e1 -= d * d[k]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2, d


def crossing_linking(A: ClosedCurve, B: ClosedCurve, direction) -> int:
    """Exact linking number as half the signed inter-component crossing sum
    in the planar projection along `direction`.

    Sign rule: at a crossing with projected tangents (ta, tb) and projection
    direction d, the strand of A passing in front (larger depth along d)
    contributes +sign(det[ta, tb, d]); passing behind contributes
    -sign(det[ta, tb, d]).  The rule is normalized so that the result equals
    the Gauss-kernel integral.  Raises GenericityError for non-generic
    projections (crossing too close to a vertex, near-parallel overlap, or
    a non-integer signed sum)."""
    if A.degenerate or B.degenerate:
        return 0
    e1, e2, d = _projection_basis(direction)
    va, dda = A.segment_arrays()
    vb, ddb = B.segment_arrays()

    pa = np.stack([va @ e1, va @ e2], axis=1)
    ra = np.stack([dda @ e1, dda @ e2], axis=1)
    za = va @ d
    dza = dda @ d
    pb = np.stack([vb @ e1, vb @ e2], axis=1)
    rb = np.stack([ddb @ e1, ddb @ e2], axis=1)
    zb = vb @ d
    dzb = ddb @ d

    n, m = len(pa), len(pb)
    signed_sum = 0.0
    block = max(1, _CHUNK_ROWS // m)
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        PA = pa[i0:i1, None, :]
        RA = ra[i0:i1, None, :]
        denom = RA[..., 0] * rb[None, :, 1] - RA[..., 1] * rb[None, :, 0]
        qp = pb[None, :, :] - PA
        num_a = qp[..., 0] * rb[None, :, 1] - qp[..., 1] * rb[None, :, 0]
        num_b = qp[..., 0] * RA[..., 1] - qp[..., 1] * RA[..., 0]
        len_a = np.linalg.norm(ra[i0:i1], axis=1)[:, None]
        len_b = np.linalg.norm(rb, axis=1)[None, :]
        par_floor = 1e-12 * len_a * len_b

        # near-parallel pairs are non-generic only when the 2D segments
        # nearly overlap
        near_par = np.abs(denom) <= par_floor
        if np.any(near_par):
            ii, jj = np.nonzero(near_par)
            p3a = np.concatenate([pa[i0 + ii], np.zeros((len(ii), 1))], axis=1)
            r3a = np.concatenate([ra[i0 + ii], np.zeros((len(ii), 1))], axis=1)
            p3b = np.concatenate([pb[jj], np.zeros((len(jj), 1))], axis=1)
            r3b = np.concatenate([rb[jj], np.zeros((len(jj), 1))], axis=1)
            d2 = segment_pairs_distance(p3a, r3a, p3b, r3b)
            if np.any(d2 < 1e-9):
                raise GenericityError("near-parallel segment overlap in projection")

        safe = np.where(np.abs(denom) > par_floor, denom, 1.0)
        tA = num_a / safe
        tB = num_b / safe
        # widen the parameter window by the 1e-9 euclidean vertex margin so
        # crossings at or just beyond a vertex are flagged, not dropped
        ma = 1e-9 / np.maximum(len_a, 1e-30)
        mb = 1e-9 / np.maximum(len_b, 1e-30)
        candidate = ((~near_par) & (tA > -ma) & (tA < 1.0 + ma)
                     & (tB > -mb) & (tB < 1.0 + mb))
        crossing = (candidate & (tA > ma) & (tA < 1.0 - ma)
                    & (tB > mb) & (tB < 1.0 - mb))
        if np.any(candidate & ~crossing):
            raise GenericityError("crossing within 1e-9 of a vertex")
        if not np.any(crossing):
            continue
        depth_a = za[i0:i1, None] + tA * dza[i0:i1, None]
        depth_b = zb[None, :] + tB * dzb[None, :]
        ddz = depth_a - depth_b
        if np.any(crossing & (np.abs(ddz) < 1e-12)):
            raise GenericityError("coincident depths at a crossing")
        eps = np.sign(denom)
        contrib = np.where(ddz > 0.0, eps, -eps)
        signed_sum += contrib[crossing].sum()

    lk = 0.5 * signed_sum
    if abs(lk - round(lk)) > 1e-9:
        raise GenericityError(f"signed crossing sum {signed_sum} is odd; "
                              "projection missed a crossing")
    return int(round(lk))


def crossing_linking_any(A: ClosedCurve, B: ClosedCurve,
                         tries: int = 32) -> tuple[int, np.ndarray]:
    """crossing_linking over a deterministic direction sequence; returns
    (linking number, direction used).  Raises GenericityError if every
    direction in the budget fails."""
    last = None
    for d in projection_directions(tries):
        try:
            return crossing_linking(A, B, d), d
        except GenericityError as exc:
            last = exc
    raise GenericityError(f"no generic projection in {tries} tries: {last}")


# ---------------------------------------------------------------------------
# short-path contributions


def _open_segments(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.atleast_2d(points)
    return pts[:-1], np.diff(pts, axis=0)


def _subdivided_chord(p_from: np.ndarray, p_to: np.ndarray, max_seglen: float) -> np.ndarray:
    gap = np.linalg.norm(p_to - p_from)
    nseg = max(1, int(np.ceil(gap / max_seglen)))
    frac = np.arange(nseg + 1) / nseg
    return p_from + frac[:, None] * (p_to - p_from)


def short_path_terms(X, Y, x, y, T: float, S: float, ctrl=None,
                     tol: float = 1e-9) -> tuple[float, float, float]:
    """The three normalized |kernel| integrals coupling flow arcs and their
    straight closing paths:

        term1 = (1/TS) * int_{arc_X} int_{sigma_S} |L|
        term2 = (1/TS) * int_{sigma_T} int_{arc_Y} |L|
        term3 = (1/TS) * int_{sigma_T} int_{sigma_S} |L|

    where sigma_T closes the X-arc (endpoint back to seed) and sigma_S the
    Y-arc.  Whole-period arcs have zero-length closures and zero terms.
    """
    from .flow import StepControl, integrate

    if not (T > 0 and S > 0):
        raise ValueError("T and S must be positive")
    ctrl = ctrl or StepControl()
    arc_x = integrate(X, x, T, ctrl)
    arc_y = integrate(Y, y, S, ctrl)
    return short_path_terms_from_arcs(arc_x, arc_y, tol=tol)


def short_path_terms_from_arcs(arc_x: Trajectory, arc_y: Trajectory,
                               tol: float = 1e-9) -> tuple[float, float, float]:
    """short_path_terms for already-integrated arcs (T, S taken from them)."""
    T, S = arc_x.T, arc_y.T
    if not (T > 0 and S > 0):
        raise ValueError("arcs must span positive time")
    ax_s, ax_d = _open_segments(arc_x.points)
    ay_s, ay_d = _open_segments(arc_y.points)

    def closure(points):
        gap = np.linalg.norm(points[-1] - points[0])
        if gap <= VERTEX_TOL:
            return None
        chords = np.linalg.norm(np.diff(points, axis=0), axis=1)
        h = float(chords.max()) if len(chords) else gap
        return _open_segments(_subdivided_chord(points[-1], points[0], h))

    sig_t = closure(arc_x.points)
    sig_s = closure(arc_y.points)

    norm = 1.0 / (T * S)
    t1 = t2 = t3 = 0.0
    if sig_s is not None and len(ax_s):
        v, _ = _l_integral(ax_s, ax_d, sig_s[0], sig_s[1], tol, absolute=True)
        t1 = norm * v
    if sig_t is not None and len(ay_s):
        v, _ = _l_integral(sig_t[0], sig_t[1], ay_s, ay_d, tol, absolute=True)
        t2 = norm * v
    if sig_t is not None and sig_s is not None:
        v, _ = _l_integral(sig_t[0], sig_t[1], sig_s[0], sig_s[1], tol, absolute=True)
        t3 = norm * v
    return t1, t2, t3


# ---------------------------------------------------------------------------
# combined linking record


@dataclass
class LinkingResult:
    """Gauss-integral estimate paired with the combinatorial oracle."""

    gauss_value: float
    oracle_value: int | None
    min_distance: float
    generic: bool
    discarded: bool

    def to_dict(self) -> dict:
        return {
            "gauss": self.gauss_value,
            "oracle": self.oracle_value,
            "min_distance": self.min_distance,
            "generic": self.generic,
            "discarded": self.discarded,
        }


def link_curves(A: ClosedCurve, B: ClosedCurve, tol: float = 1e-6,
                eps_sep: float | None = None) -> LinkingResult:
    """Full linking record for two closed curves.

    `eps_sep` defaults to 1e-6 times the diagonal of the pair's joint
    bounding box; pairs closer than that are flagged discarded (the caller
    resamples them)."""
    if A.degenerate or B.degenerate:
        return LinkingResult(0.0, 0, min_distance(A, B), True, False)
    mind = min_distance(A, B)
    if eps_sep is None:
        lo = np.minimum(A.vertices.min(axis=0), B.vertices.min(axis=0))
        hi = np.maximum(A.vertices.max(axis=0), B.vertices.max(axis=0))
        eps_sep = 1e-6 * float(np.linalg.norm(hi - lo))
    if mind < eps_sep:
        return LinkingResult(np.nan, None, mind, False, True)
    gauss = gauss_linking(A, B, tol)
    try:
        oracle, _ = crossing_linking_any(A, B)
        generic = True
    except GenericityError:
        oracle, generic = None, False
    return LinkingResult(gauss, oracle, mind, generic, False)
