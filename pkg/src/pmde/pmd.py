"""DGD sections, cascaded frequency responses and PMD vectors.

Units: DGDs and PMD vectors in ps, angular frequencies in rad/s. Taylor
coefficients use rad/ps for the frequency offset, so the k-th derivative
vector is in ps^(k+1).

PMD vectors are input-referred unless ``referred="output"`` is requested:
for a channel ``T(w)`` with Stokes rotation ``R(w)``, the output-referred
vector satisfies ``dR/dw R^T = [Omega_out x]`` and the input-referred one is
``R^T Omega_out``. Only differential delay is modelled; the common-mode
propagation delay of every section is zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArityMismatch, DegeneratePmd, GridTooCoarse
from .polarization import (
    PAULI,
    Retarder,
    _unit,
    axis_rotation,
    jones_of,
    jones_to_rotation,
    retarder_to_jones,
    retarder_to_rotation,
    rotation_vector,
    stokes_of,
)

PS = 1e-12
CARRIER_HZ = 193.4e12
DEFAULT_STEP_HZ = 1e6
# Largest allowed rotation of R between the outer points of a 3-point stencil.
MAX_STENCIL_ANGLE = 0.4
DEGENERATE_PS = 1e-9


@dataclass(frozen=True)
class DgdSection:
    """Ideal DGD section (PMF-like): fixed slow PSP ``psp_axis``, delay ``dgd`` in ps."""

    dgd: float
    psp_axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.dgd) or self.dgd < 0:
            raise ValueError(f"section DGD must be finite and >= 0, got {self.dgd}")
        object.__setattr__(self, "dgd", float(self.dgd))
        object.__setattr__(self, "psp_axis", tuple(float(x) for x in _unit(self.psp_axis)))

    @property
    def pmd_vector(self):
        return self.dgd * np.asarray(self.psp_axis)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency grid ``center +- span/2`` with ``count`` points (rad/s)."""

    center: float
    span: float
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 2:
            raise ValueError("grid needs at least 2 points")
        if not self.span > 0:
            raise ValueError("grid span must be positive")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_step(cls, center, step, count):
        return cls(center, step * (count - 1), count)

    @classmethod
    def around(cls, center_hz=CARRIER_HZ, step_hz=DEFAULT_STEP_HZ, half=2):
        """Odd-sized grid of ``2*half+1`` points, step given in Hz."""
        return cls.from_step(2 * np.pi * center_hz, 2 * np.pi * step_hz, 2 * half + 1)

    @property
    def step(self):
        return self.span / (self.count - 1)

    @property
    def omegas(self):
        return self.center + self.step * (np.arange(self.count) - (self.count - 1) / 2)

    @property
    def center_index(self):
        return (self.count - 1) // 2


@dataclass(frozen=True)
class DgdProfile:
    """Ordered input-referred PMD vectors of the sections, in ps, at ``omega0``."""

    segments: np.ndarray
    omega0: float

    @property
    def total(self):
        return self.segments.sum(axis=0)

    @property
    def vertices(self):
        """Polyline through the profile, starting at the origin."""
        return np.vstack([np.zeros(3), np.cumsum(self.segments, axis=0)])


@dataclass(frozen=True)
class TaylorCoefficients:
    """Derivatives ``Omega^(k)(omega0)`` for k = 0..order, frequency offset in rad/ps."""

    order: int
    coefficients: np.ndarray = field(repr=False)
    omega0: float = 0.0

    def __post_init__(self):
        if self.coefficients.shape != (self.order + 1, 3):
            raise ValueError("need exactly order+1 coefficient vectors")


def _omegas(grid):
    return grid.omegas if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)


def _check_arity(sections, retarders):
    if len(retarders) != len(sections) + 1:
        raise ArityMismatch(f"{len(sections)} sections need {len(sections) + 1} retarders, got {len(retarders)}")


def element_jones(element):
    """Jones matrix of a static element given as a Retarder or a 2x2 array."""
    if isinstance(element, Retarder):
        return retarder_to_jones(element)
    j = np.asarray(element, dtype=complex)
    if j.shape != (2, 2):
        raise ValueError(f"expected a Retarder or a 2x2 Jones matrix, got shape {j.shape}")
    return j


def element_rotation(element):
    if isinstance(element, Retarder):
        return retarder_to_rotation(element)
    return jones_to_rotation(element_jones(element))


def section_retardation(section, omega):
    """Retardation ``omega * tau`` in rad, unreduced."""
    return np.asarray(omega, dtype=float) * (section.dgd * PS)


def section_jones(section, omega):
    """Jones matrix of a section; a stack ``(n, 2, 2)`` if ``omega`` is an array."""
    half = 0.5 * section_retardation(section, omega)
    gen = np.einsum("k,kij->ij", np.asarray(section.psp_axis), PAULI)
    return np.cos(half)[..., None, None] * np.eye(2) - 1j * np.sin(half)[..., None, None] * gen


def section_rotation(section, omega):
    return axis_rotation(section.psp_axis, section_retardation(section, omega))


def cascade_response(sections, retarders, grid):
    """Jones matrices of ``retarder_0, section_1, retarder_1, ..., retarder_N`` per grid point."""
    _check_arity(sections, retarders)
    w = _omegas(grid)
    out = np.broadcast_to(element_jones(retarders[0]), (len(w), 2, 2)).copy()
    for sec, ret in zip(sections, retarders[1:]):
        out = element_jones(ret) @ section_jones(sec, w) @ out
    return out


def pmd_segments(sections, retarders, omega=None, carrier_hz=CARRIER_HZ):
    """Input-referred per-section PMD vectors ``(N, 3)`` in ps at ``omega``.

    Each section vector is rotated back through the transposed rotations of
    every element in front of it, sections included.
    """
    _check_arity(sections, retarders)
    omega = 2 * np.pi * carrier_hz if omega is None else float(omega)
    before = element_rotation(retarders[0])
    segs = np.zeros((len(sections), 3))
    for i, (sec, ret) in enumerate(zip(sections, retarders[1:])):
        segs[i] = before.T @ sec.pmd_vector
        before = element_rotation(ret) @ section_rotation(sec, omega) @ before
    return segs


def total_pmd_analytic(sections, retarders, omega=None, carrier_hz=CARRIER_HZ, referred="input"):
    """Total PMD vector in ps by vector addition of the back-rotated section vectors."""
    total = pmd_segments(sections, retarders, omega, carrier_hz).sum(axis=0)
    if referred == "input":
        return total
    omega = 2 * np.pi * carrier_hz if omega is None else float(omega)
    return cascade_rotation(sections, retarders, omega) @ total


def cascade_rotation(sections, retarders, omega):
    rot = element_rotation(retarders[0])
    for sec, ret in zip(sections, retarders[1:]):
        rot = element_rotation(ret) @ section_rotation(sec, omega) @ rot
    return rot


def pmd_spectrum(sections, retarders, grid):
    """Analytic input-referred PMD vector at every grid frequency, shape ``(n, 3)``."""
    _check_arity(sections, retarders)
    w = _omegas(grid)
    rots = [element_rotation(r) for r in retarders]
    before = np.broadcast_to(rots[0], (len(w), 3, 3))
    total = np.zeros((len(w), 3))
    for sec, rot in zip(sections, rots[1:]):
        total += np.einsum("nji,j->ni", before, sec.pmd_vector)
        before = rot @ section_rotation(sec, w) @ before
    return total


def build_profile(sections, retarders, omega0=None, carrier_hz=CARRIER_HZ):
    omega0 = 2 * np.pi * carrier_hz if omega0 is None else float(omega0)
    return DgdProfile(pmd_segments(sections, retarders, omega0), omega0)


# ------------------------------------------------------------ numerical oracle


def _step(w, k, reach):
    if k - reach < 0 or k + reach >= len(w):
        raise GridTooCoarse(f"index {k} needs {reach} neighbours on each side")
    return 0.5 * (w[k + 1] - w[k - 1])


def _stencil_reach(w, k):
    return 2 if k >= 2 and k + 2 < len(w) else 1


def extract_pmd_fd(responses, grid, k, referred="input"):
    """PMD vector in ps at grid index ``k`` from Jones responses by central differences.

    The rotation ``R(w+h) R(w-h)^T`` is read as an axis-angle vector and
    divided by ``2h``. With two neighbours on each side the h and 2h
    estimates are Richardson-combined (error O(h^4)); otherwise the plain
    3-point estimate is returned.
    """
    w = _omegas(grid)
    responses = np.asarray(responses)
    if len(w) < 3 or len(responses) != len(w):
        raise GridTooCoarse("need at least 3 grid points with matching responses")
    h = _step(w, k, 1)
    reach = _stencil_reach(w, k)
    idx = [k + j for j in range(-reach, reach + 1)]
    rots = dict(zip(idx, jones_to_rotation(responses[idx])))

    inc1 = rots[k + 1] @ rots[k - 1].T
    v1 = rotation_vector(inc1)
    if np.linalg.norm(v1) > MAX_STENCIL_ANGLE:
        raise GridTooCoarse(f"rotation across stencil is {np.linalg.norm(v1):.3g} rad; reduce the frequency step")
    omega_out = v1 / (2 * h)
    if reach == 2:
        v2 = rotation_vector(rots[k + 2] @ rots[k - 2].T)
        if np.linalg.norm(v2) > 2 * MAX_STENCIL_ANGLE:
            raise GridTooCoarse("rotation across wide stencil too large")
        omega_out = (4 * omega_out - v2 / (4 * h)) / 3
    omega_out = omega_out / PS
    if referred == "output":
        return omega_out
    return rots[k].T @ omega_out


def psp_pair(pmd):
    """``(slow, fast, dgd)`` for a PMD vector; slow PSP is along the vector."""
    pmd = np.asarray(pmd, dtype=float)
    dgd = float(np.linalg.norm(pmd))
    if dgd < DEGENERATE_PS:
        raise DegeneratePmd(f"|Omega| = {dgd:.3g} ps: every SOP is principal")
    slow = pmd / dgd
    return slow, -slow, dgd


def psp_jones(pmd):
    """Jones vectors ``(slow, fast)`` of the PSPs of an input-referred PMD vector."""
    slow, fast, _ = psp_pair(pmd)
    return jones_of(slow), jones_of(fast)


def _central(values, w, k):
    """d/dw of ``values`` (indexed like the grid) at k, Richardson-combined when possible."""
    h = _step(w, k, 1)
    d1 = (values(k + 1) - values(k - 1)) / (2 * h)
    if _stencil_reach(w, k) == 2:
        d2 = (values(k + 2) - values(k - 2)) / (4 * h)
        return (4 * d1 - d2) / 3
    return d1


def launch_group_delay(responses, grid, v_in, k):
    """Group delay in ps of the field launched as ``v_in``.

    Phase is the projection ``arg <v_out(w_k), v_out(w)>``; delay is ``-dphase/dw``.
    """
    w = _omegas(grid)
    responses = np.asarray(responses)
    if len(w) < 3:
        raise GridTooCoarse("need at least 3 grid points")
    v_in = np.asarray(v_in, dtype=complex)
    v_in = v_in / np.linalg.norm(v_in)
    ref = responses[k] @ v_in

    def phase(i):
        return np.angle(np.vdot(ref, responses[i] @ v_in))

    _step(w, k, 1)  # bounds check
    if abs(phase(k + 1) - phase(k - 1)) > MAX_STENCIL_ANGLE:
        raise GridTooCoarse("launch phase changes too fast across the stencil")
    return -_central(phase, w, k) / PS


def output_sop_derivative(responses, grid, v_in, k):
    """``|d s_out / dw|`` at index k in ps (rad of arc per rad/ps)."""
    w = _omegas(grid)
    responses = np.asarray(responses)
    v_in = np.asarray(v_in, dtype=complex)

    def sop(i):
        return stokes_of(responses[i] @ v_in)

    return float(np.linalg.norm(_central(sop, w, k))) / PS


# ------------------------------------------------------------------- Taylor


def fd_weights(offsets, derivative):
    """Weights ``c`` with ``sum c_j f(x_j) ~ f^(d)(0)`` for integer-spaced offsets."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    if derivative >= n:
        raise GridTooCoarse(f"{n}-point stencil cannot give derivative {derivative}")
    vander = np.vander(x, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[derivative] = float(np.prod(np.arange(1, derivative + 1)))
    return np.linalg.solve(vander, rhs)


def taylor_reach(order):
    return order // 2 + 2


def taylor_fit_samples(samples, grid, k, order):
    """Taylor coefficients from PMD samples ``(n, 3)`` in ps on a uniform grid."""
    w = _omegas(grid)
    samples = np.asarray(samples, dtype=float)
    m = taylor_reach(order)
    if k - m < 0 or k + m >= len(w):
        raise GridTooCoarse(f"order {order} needs {m} points on each side of index {k}")
    h_ps = _step(w, k, 1) * PS
    offsets = np.arange(-m, m + 1)
    window = samples[k - m : k + m + 1]
    coefs = np.zeros((order + 1, 3))
    coefs[0] = samples[k]
    for d in range(1, order + 1):
        coefs[d] = fd_weights(offsets, d) @ window / h_ps**d
    return TaylorCoefficients(order, coefs, float(w[k]))


def taylor_fit(responses, grid, k, order):
    """Taylor coefficients at ``w_k`` of the PMD vector extracted from the responses."""
    w = _omegas(grid)
    m = taylor_reach(order)
    if k - m - 1 < 0 or k + m + 1 >= len(w):
        raise GridTooCoarse(f"order {order} needs {m + 1} points on each side of index {k}")
    samples = np.zeros((len(w), 3))
    for i in range(k - m, k + m + 1):
        samples[i] = extract_pmd_fd(responses, w, i)
    return taylor_fit_samples(samples, w, k, order)


def taylor_eval(coefs, omega):
    """Truncated Taylor series at ``omega`` (rad/s, scalar or array) -> ``(..., 3)`` ps."""
    x = (np.asarray(omega, dtype=float) - coefs.omega0) * PS
    out = np.zeros(x.shape + (3,))
    term = np.ones_like(x)
    for d in range(coefs.order + 1):
        if d:
            term = term * x / d
        out = out + term[..., None] * coefs.coefficients[d]
    return out
