"""Exactly divergence-free vector fields on R^3 built from circular flux tubes.

A tube is a solid torus around a circular core.  Inside the torus the field
points in the azimuthal direction about the tube axis with a quartic bump
profile in the distance to the core circle,

    F(r) = F0 * (1 - (r/a)^2)^2   for r < a,   0 otherwise,

which is C^1 at the tube boundary and has the closed-form cross-sectional
flux  Phi = sign * pi * F0 * a^2 / 3.  Because the profile depends only on
the distance to the core circle and the direction is azimuthal, the field is
divergence-free in exact arithmetic.  Fields are superpositions of tubes and
evaluate to zero outside every tube support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FIELD_SCHEMA_VERSION = 1

_AXIS_UNIT_TOL = 1e-12


def as_vec3(p) -> np.ndarray:
    """Coerce to a finite float vector of shape (3,)."""
    v = np.asarray(p, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector has non-finite components: {v}")
    return v


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AABB:
    """Axis-aligned bounding box, min_corner <= max_corner componentwise."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min_corner", _readonly(as_vec3(self.min_corner)))
        object.__setattr__(self, "max_corner", _readonly(as_vec3(self.max_corner)))
        if np.any(self.min_corner > self.max_corner):
            raise ValueError("AABB min_corner exceeds max_corner")

    @classmethod
    def degenerate(cls) -> "AABB":
        return cls(np.zeros(3), np.zeros(3))

    def union(self, other: "AABB") -> "AABB":
        return AABB(np.minimum(self.min_corner, other.min_corner),
                    np.maximum(self.max_corner, other.max_corner))

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.all((p >= self.min_corner) & (p <= self.max_corner), axis=-1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n uniform points in the box, shape (n, 3)."""
        u = rng.random((n, 3))
        return self.min_corner + u * self.extent


def _orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing `axis` to a right-handed frame (e1, e2, axis)."""
    k = int(np.argmin(np.abs(axis)))
    e1 = np.zeros(3)
    e1[k] = 1.0
    e1 -= axis * axis[k]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


@dataclass(frozen=True, eq=False)
class TubeSpec:
    """One circular flux tube: solid torus of minor radius a around a core
    circle of radius R centered at `center` in the plane normal to `axis`."""

    center: np.ndarray
    axis: np.ndarray
    major_radius: float
    minor_radius: float
    amplitude: float
    orientation_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", _readonly(as_vec3(self.center)))
        object.__setattr__(self, "axis", _readonly(as_vec3(self.axis)))
        object.__setattr__(self, "major_radius", float(self.major_radius))
        object.__setattr__(self, "minor_radius", float(self.minor_radius))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "orientation_sign", int(self.orientation_sign))
        if abs(np.linalg.norm(self.axis) - 1.0) > _AXIS_UNIT_TOL:
            raise ValueError(f"tube axis must be a unit vector, |axis| = "
                             f"{np.linalg.norm(self.axis):.17g}")
        if not (self.major_radius > 0.0):
            raise ValueError("major_radius must be positive")
        if not (0.0 < self.minor_radius < self.major_radius):
            raise ValueError("minor_radius must satisfy 0 < a < R")
        if self.orientation_sign not in (1, -1):
            raise ValueError("orientation_sign must be +1 or -1")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    def _tube_coords(self, p: np.ndarray):
        """Axial offset z, axis distance rho, and squared core distance r^2 = (rho-R)^2 + z^2."""
        d = p - self.center
        z = d @ self.axis
        d_perp = d - z[..., None] * self.axis
        rho = np.linalg.norm(d_perp, axis=-1)
        rr = (rho - self.major_radius) ** 2 + z ** 2
        return z, rho, d_perp, rr

    def eval(self, p) -> np.ndarray:
        """Field value at p (shape (3,) or (..., 3))."""
        p = np.asarray(p, dtype=float)
        _, rho, d_perp, rr = self._tube_coords(p)
        a2 = self.minor_radius ** 2
        bump = np.where(rr < a2, (1.0 - rr / a2) ** 2, 0.0)
        # rho >= R - a > 0 on the support, so the azimuthal direction is
        # well defined wherever bump != 0.
        safe_rho = np.where(rho > 0.0, rho, 1.0)
        e_phi = np.cross(np.broadcast_to(self.axis, d_perp.shape), d_perp) / safe_rho[..., None]
        return (self.orientation_sign * self.amplitude) * bump[..., None] * e_phi

    def angular_speed(self, p) -> np.ndarray:
        """|F(r)| / rho: magnitude of the angular velocity of the circular
        orbit through p about the tube axis; zero outside the support."""
        p = np.asarray(p, dtype=float)
        _, rho, _, rr = self._tube_coords(p)
        a2 = self.minor_radius ** 2
        bump = np.where(rr < a2, (1.0 - rr / a2) ** 2, 0.0)
        safe_rho = np.where(rho > 0.0, rho, 1.0)
        return abs(self.amplitude) * bump / safe_rho

    def flux(self) -> float:
        """Cross-sectional flux Phi = sign * pi * F0 * a^2 / 3."""
        return self.orientation_sign * np.pi * self.amplitude * self.minor_radius ** 2 / 3.0

    def support_box(self) -> AABB:
        # Tight box of the cylinder |z| <= a, rho <= R + a enclosing the torus:
        # half extent along world axis i is a*|n_i| + (R+a)*sqrt(1-n_i^2).
        n = self.axis
        outer = self.major_radius + self.minor_radius
        half = self.minor_radius * np.abs(n) + outer * np.sqrt(np.maximum(0.0, 1.0 - n ** 2))
        return AABB(self.center - half, self.center + half)

    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Right-handed orthonormal frame (e1, e2, axis) of the tube."""
        e1, e2 = _orthonormal_frame(self.axis)
        return e1, e2, self.axis

    def core_point(self, phi: float | np.ndarray) -> np.ndarray:
        """Point(s) on the core circle at toroidal angle phi, oriented so the
        positive-sign field advances phi."""
        e1, e2, _ = self.frame()
        phi = np.asarray(phi, dtype=float)
        return (self.center
                + self.major_radius * (np.cos(phi)[..., None] * e1
                                       + np.sin(phi)[..., None] * e2))

    def core_polyline(self, n: int = 256) -> np.ndarray:
        """Core circle as (n, 3) vertices, oriented with the field flow."""
        phi = 2.0 * np.pi * np.arange(n) / n
        pts = self.core_point(phi)
        if self.orientation_sign * self.amplitude < 0:
            pts = pts[::-1]
        return pts

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "axis": self.axis.tolist(),
            "major_radius": self.major_radius,
            "minor_radius": self.minor_radius,
            "amplitude": self.amplitude,
            "sign": self.orientation_sign,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TubeSpec":
        return cls(center=d["center"], axis=d["axis"],
                   major_radius=d["major_radius"], minor_radius=d["minor_radius"],
                   amplitude=d["amplitude"], orientation_sign=d.get("sign", 1))


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """Superposition of flux tubes; the empty field is the zero field."""

    tubes: tuple[TubeSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tubes", tuple(self.tubes))
        for t in self.tubes:
            if not isinstance(t, TubeSpec):
                raise TypeError(f"tubes must be TubeSpec, got {type(t).__name__}")

    def eval(self, p) -> np.ndarray:
        """Field value at p; sum over tubes, zero for the empty field."""
        p = np.asarray(p, dtype=float)
        out = np.zeros(np.broadcast_shapes(p.shape, (3,)), dtype=float)
        for t in self.tubes:
            out += t.eval(p)
        return out

    def divergence(self, p, h: float = 1e-4) -> np.ndarray:
        """Central-difference divergence with step h; O(h^2) + rounding."""
        if not h > 0:
            raise ValueError("finite-difference step h must be positive")
        p = np.asarray(p, dtype=float)
        div = np.zeros(p.shape[:-1], dtype=float)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            div += (self.eval(p + e)[..., i] - self.eval(p - e)[..., i]) / (2.0 * h)
        return div if div.shape else float(div)

    def angular_speed(self, p) -> np.ndarray:
        """Sum of per-tube orbit angular speeds |F|/rho (the tube supports of
        a well-formed field are disjoint, so at most one term is nonzero)."""
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1], dtype=float)
        for t in self.tubes:
            out += t.angular_speed(p)
        return out

    def support_box(self) -> AABB:
        if not self.tubes:
            return AABB.degenerate()
        box = self.tubes[0].support_box()
        for t in self.tubes[1:]:
            box = box.union(t.support_box())
        return box

    def total_abs_flux(self) -> float:
        return float(sum(abs(t.flux()) for t in self.tubes))

    def __add__(self, other: "FieldSpec") -> "FieldSpec":
        if not isinstance(other, FieldSpec):
            return NotImplemented
        return FieldSpec(self.tubes + other.tubes)

    def to_dict(self) -> dict:
        return {"tubes": [t.to_dict() for t in self.tubes]}

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSpec":
        return cls(tuple(TubeSpec.from_dict(td) for td in d["tubes"]))


def canonical_tube(minor_radius: float = 0.5, amplitude: float = 1.0,
                   orientation_sign: int = 1) -> TubeSpec:
    """Unit-radius tube centered at the origin with axis +z."""
    return TubeSpec(center=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0),
                    major_radius=1.0, minor_radius=minor_radius,
                    amplitude=amplitude, orientation_sign=orientation_sign)


def make_hopf_pair(a: float, F0: float = 1.0) -> tuple[FieldSpec, FieldSpec]:
    """Two singly-linked flux tubes.

    X sits on the unit circle in the xy-plane about the origin (axis +z);
    Y sits on the unit circle in the xz-plane about (1, 0, 0) (axis +y), which
    threads through X's core.  The two cores keep distance 1 from each other,
    so the supports are disjoint exactly when a < 1/2.
    """
    if not (0.0 < a < 0.5):
        raise ValueError("hopf pair requires 0 < a < 1/2 so the tube supports are disjoint")
    x = FieldSpec((TubeSpec(center=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0),
                            major_radius=1.0, minor_radius=a, amplitude=F0),))
    y = FieldSpec((TubeSpec(center=(1.0, 0.0, 0.0), axis=(0.0, 1.0, 0.0),
                            major_radius=1.0, minor_radius=a, amplitude=F0),))
    return x, y
