"""Jones, Stokes and Mueller-rotation calculus for lossless retarders.

Conventions used throughout the package:

* Stokes vector of a Jones vector ``(ex, ey)``::

      s1 = |ex|^2 - |ey|^2          horizontal (+) / vertical (-)
      s2 = 2 Re(ex ey*)             +45 deg (+) / -45 deg (-)
      s3 = -2 Im(ex ey*)            circular; (1, i)/sqrt(2) -> s3 = +1

  i.e. ``s_k = v^H sigma_k v`` with ``sigma_1 = diag(1, -1)``,
  ``sigma_2 = [[0, 1], [1, 0]]`` and ``sigma_3 = [[0, -i], [i, 0]]``. These
  obey ``sigma_1 sigma_2 = i sigma_3`` so the Stokes frame is right-handed.
* A retarder with unit Stokes axis ``a`` and retardation ``delta`` has Jones
  matrix ``cos(delta/2) I - i sin(delta/2) (a . sigma)`` and rotates Stokes
  vectors counterclockwise by ``delta`` about ``a`` (seen from the tip of a).
* Elements compose in propagation order: the later element multiplies
  from the left.
* Jones matrices carry a global phase that is never compared; equality is
  tested in SO(3) or up to phase.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NonUnitaryInput

PAULI = np.array(
    [
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=complex,
)

UNITARITY_TOL = 1e-8


def _unit(v, tol=1e-12):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalise vector {v!r}")
    if abs(n - 1.0) > tol:
        v = v / n
    return v


@dataclass(frozen=True)
class Retarder:
    """Elliptical retarder: eigenmode ``axis`` on the sphere, ``retardation`` in rad.

    The axis is normalised on construction. Retardation is kept as given
    (unbounded); use :meth:`canonical` for the [0, 2pi) presentation form.
    """

    axis: tuple
    retardation: float

    def __post_init__(self):
        a = _unit(self.axis)
        if not np.isfinite(self.retardation):
            raise ValueError("retardation must be finite")
        object.__setattr__(self, "axis", tuple(float(x) for x in a))
        object.__setattr__(self, "retardation", float(self.retardation))

    @property
    def axis_array(self):
        return np.array(self.axis)

    def canonical(self):
        return Retarder(self.axis, float(np.mod(self.retardation, 2 * np.pi)))

    @classmethod
    def identity(cls):
        return cls((1.0, 0.0, 0.0), 0.0)

    @classmethod
    def from_rotation(cls, rot):
        vec = rotation_vector(rot)
        angle = float(np.linalg.norm(vec))
        if angle == 0.0:
            return cls.identity()
        return cls(vec / angle, angle)


class PlateKind(str, Enum):
    QWP = "QWP"
    HWP = "HWP"

    @property
    def retardation(self):
        return np.pi / 2 if self is PlateKind.QWP else np.pi


@dataclass(frozen=True)
class Waveplate:
    """Linear waveplate with its slow axis at physical azimuth ``orientation`` (rad)."""

    kind: PlateKind
    orientation: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PlateKind(self.kind))

    def as_retarder(self):
        two = 2.0 * self.orientation
        return Retarder((np.cos(two), np.sin(two), 0.0), self.kind.retardation)


# ---------------------------------------------------------------- vectors


def normalize_jones(v):
    v = np.asarray(v, dtype=complex)
    return v / np.sqrt(np.vdot(v, v).real)


def stokes_of(v):
    """Normalised Stokes vector of a Jones vector (or stack ``(..., 2)``)."""
    v = np.asarray(v, dtype=complex)
    ex, ey = v[..., 0], v[..., 1]
    p = np.abs(ex) ** 2 + np.abs(ey) ** 2
    cross = ex * np.conj(ey)
    s = np.stack([np.abs(ex) ** 2 - np.abs(ey) ** 2, 2 * cross.real, -2 * cross.imag], axis=-1)
    return s / p[..., None]


def jones_of(s):
    """A Jones vector with Stokes vector ``s`` (phase chosen so ex is real, >= 0)."""
    s = _unit(s, tol=0.0)
    theta = np.arctan2(np.hypot(s[1], s[2]), s[0])
    phi = np.arctan2(s[2], s[1])
    return np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)])


def great_circle(u, v):
    """Angle in rad between two Stokes directions (stable at 0 and pi)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


def fibonacci_sphere(n):
    """``n`` quasi-uniform unit vectors (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


# ---------------------------------------------------------------- rotations


def _skew(a):
    a = np.asarray(a, dtype=float)
    z = np.zeros(a.shape[:-1])
    return np.stack(
        [
            np.stack([z, -a[..., 2], a[..., 1]], axis=-1),
            np.stack([a[..., 2], z, -a[..., 0]], axis=-1),
            np.stack([-a[..., 1], a[..., 0], z], axis=-1),
        ],
        axis=-2,
    )


def axis_rotation(axis, angle):
    """Rodrigues rotation; ``angle`` may be an array, giving a stack ``(n, 3, 3)``."""
    a = _unit(axis)
    angle = np.asarray(angle, dtype=float)
    k = _skew(a)
    k2 = k @ k
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * k + (1.0 - c) * k2


def retarder_to_rotation(r):
    """Stokes-space rotation of a retarder (angle = retardation about its axis)."""
    return axis_rotation(r.axis, r.retardation)


def retarder_to_jones(r, global_phase=0.0):
    half = 0.5 * r.retardation
    a = np.asarray(r.axis)
    j = np.cos(half) * np.eye(2) - 1j * np.sin(half) * np.einsum("k,kij->ij", a, PAULI)
    return np.exp(1j * global_phase) * j


def unitarity_residual(j):
    j = np.asarray(j, dtype=complex)
    prod = j @ np.conj(np.swapaxes(j, -1, -2))
    return np.max(np.abs(prod - np.eye(2)), axis=(-2, -1))


def jones_to_rotation(j):
    """SO(3) image of a unitary Jones matrix (or stack ``(..., 2, 2)``).

    ``R[k, l] = tr(sigma_k J sigma_l J^H) / 2`` so that
    ``stokes_of(J v) == R @ stokes_of(v)``. Independent of global phase.
    """
    j = np.asarray(j, dtype=complex)
    res = unitarity_residual(j)
    if np.any(res > UNITARITY_TOL):
        raise NonUnitaryInput(f"unitarity residual {np.max(res):.3g} exceeds {UNITARITY_TOL:g}")
    jh = np.conj(np.swapaxes(j, -1, -2))
    # sigma_l J^H, then J (.), then trace against sigma_k
    inner = np.einsum("...ab,lbc,...cd->...lad", j, PAULI, jh)
    rot = 0.5 * np.einsum("kda,...lad->...kl", PAULI, inner).real
    return rot


def waveplate_jones(p):
    """Waveplate matrix ``Rot(-theta) diag(e^{-i d/2}, e^{i d/2}) Rot(theta)``."""
    c, s = np.cos(p.orientation), np.sin(p.orientation)
    frame = np.array([[c, s], [-s, c]])
    half = 0.5 * p.kind.retardation
    core = np.diag([np.exp(-1j * half), np.exp(1j * half)])
    return frame.T @ core @ frame


def rotation_quaternion(rot):
    """Unit quaternion ``(w, x, y, z)``, ``w >= 0``, of a rotation matrix (Shepperd)."""
    m = np.asarray(rot, dtype=float)
    tr = np.trace(m)
    diag = np.array([tr, m[0, 0], m[1, 1], m[2, 2]])
    i = int(np.argmax(diag))
    if i == 0:
        w = 0.5 * np.sqrt(1.0 + tr)
        q = np.array([w, (m[2, 1] - m[1, 2]) / (4 * w), (m[0, 2] - m[2, 0]) / (4 * w), (m[1, 0] - m[0, 1]) / (4 * w)])
    elif i == 1:
        x = 0.5 * np.sqrt(1.0 + 2 * m[0, 0] - tr)
        q = np.array([(m[2, 1] - m[1, 2]) / (4 * x), x, (m[0, 1] + m[1, 0]) / (4 * x), (m[0, 2] + m[2, 0]) / (4 * x)])
    elif i == 2:
        y = 0.5 * np.sqrt(1.0 + 2 * m[1, 1] - tr)
        q = np.array([(m[0, 2] - m[2, 0]) / (4 * y), (m[0, 1] + m[1, 0]) / (4 * y), y, (m[1, 2] + m[2, 1]) / (4 * y)])
    else:
        z = 0.5 * np.sqrt(1.0 + 2 * m[2, 2] - tr)
        q = np.array([(m[1, 0] - m[0, 1]) / (4 * z), (m[0, 2] + m[2, 0]) / (4 * z), (m[1, 2] + m[2, 1]) / (4 * z), z])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def rotation_vector(rot):
    """Axis times angle, angle in [0, pi]."""
    q = rotation_quaternion(rot)
    vn = np.linalg.norm(q[1:])
    if vn == 0.0:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(vn, q[0])
    return q[1:] / vn * angle


def rotation_between(u, v):
    """Minimal rotation taking direction ``u`` onto ``v``; antiparallel case uses any normal axis."""
    u = _unit(u, tol=0.0)
    v = _unit(v, tol=0.0)
    axis = np.cross(u, v)
    sin = np.linalg.norm(axis)
    cos = float(np.dot(u, v))
    if sin < 1e-12:
        if cos > 0:
            return np.eye(3)
        trial = np.eye(3)[np.argmin(np.abs(u))]
        axis = np.cross(u, trial)
        return axis_rotation(axis, np.pi)
    return axis_rotation(axis / sin, np.arctan2(sin, cos))


def is_rotation(rot, tol=1e-10):
    rot = np.asarray(rot, dtype=float)
    ortho = np.max(np.abs(rot @ rot.T - np.eye(3)))
    return ortho < tol and abs(np.linalg.det(rot) - 1.0) < tol


def haar_rotations(rng, n):
    """``n`` Haar-uniform SO(3) matrices from normalised Gaussian quaternions."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], axis=-1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], axis=-1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], axis=-1),
        ],
        axis=-2,
    )


def rotation_to_jones(rot):
    """An SU(2) lift of a rotation (the sign ambiguity is a global phase)."""
    return retarder_to_jones(Retarder.from_rotation(rot))
