"""Time-variable retarders built from rotating waveplates.

A scrambler is a stack of QWPs/HWPs whose physical orientations advance
linearly in time, ``theta_i(t) = theta_i0 + rate_i * t``. Orientations are
never wrapped, so arbitrarily long rotation accumulates without resets.

Bursts (lightning-like SOP transients) are extra retardation about a fixed
Stokes axis placed right behind the plate they are attached to. For a HWP
and the circular axis this is the same as advancing the plate orientation
by a quarter of the burst phase.

Scrambling speed is the worst case, over input SOPs, of the great-circle
rate of the output SOP.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import stats

from .errors import StepTooLarge
from .polarization import (
    PAULI,
    PlateKind,
    _unit,
    fibonacci_sphere,
    great_circle,
    jones_to_rotation,
    rotation_vector,
)

MAX_STEP_ARC = 0.1
MAX_SPEED_RADPS = 20e6
BURST_HEADROOM = 0.25
_SQRT_PRIMES = np.sqrt([2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0])
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class Envelope(str, Enum):
    TRIANGULAR = "triangular"
    RAISED_COSINE = "raised-cosine"


def _lobe_area(v, envelope):
    """Integral of a unit-peak lobe over normalised time [0, v], v in [0, 1/2]."""
    v = np.clip(v, 0.0, 0.5)
    if envelope is Envelope.TRIANGULAR:
        rise = 2.0 * np.minimum(v, 0.25) ** 2
        u = np.clip(v, 0.25, 0.5)
        fall = 2.0 * (u - 0.25) - 2.0 * (u * u - 0.0625)
        return rise + fall
    return 0.5 * (v - np.sin(4 * np.pi * v) / (4 * np.pi))


def _lobe_rate(v, envelope):
    inside = (v >= 0.0) & (v <= 0.5)
    if envelope is Envelope.TRIANGULAR:
        shape = 1.0 - np.abs(4.0 * v - 1.0)
    else:
        shape = 0.5 * (1.0 - np.cos(4 * np.pi * v))
    return np.where(inside, shape, 0.0)


@dataclass(frozen=True)
class BurstProgram:
    """Forth/back rotation about ``axis``: a positive lobe then a mirrored negative lobe.

    ``peak_rate`` is the signed peak Stokes-space rate in rad/s; both lobes
    have equal area so the accumulated retardation is zero once the burst
    is over.
    """

    start: float
    duration: float
    peak_rate: float
    envelope: Envelope = Envelope.TRIANGULAR
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("burst duration must be positive")
        if abs(self.peak_rate) > MAX_SPEED_RADPS * (1 + BURST_HEADROOM):
            raise ValueError(f"|peak rate| {abs(self.peak_rate):.3g} rad/s exceeds the configured ceiling")
        object.__setattr__(self, "envelope", Envelope(self.envelope))
        object.__setattr__(self, "axis", tuple(float(x) for x in _unit(self.axis)))

    def rate(self, t):
        u = (np.asarray(t, dtype=float) - self.start) / self.duration
        return self.peak_rate * (_lobe_rate(u, self.envelope) - _lobe_rate(u - 0.5, self.envelope))

    def phase(self, t):
        """Accumulated retardation in rad; zero before and after the burst."""
        u = (np.asarray(t, dtype=float) - self.start) / self.duration
        fwd = _lobe_area(np.where(u > 0, u, 0.0), self.envelope)
        back = _lobe_area(np.where(u > 0.5, u - 0.5, 0.0), self.envelope)
        return self.peak_rate * self.duration * (fwd - back)


def make_lightning_burst(peak, duration, t0, envelope=Envelope.TRIANGULAR):
    """Faraday-like burst: circular retardation, forth then back, peak rate ``peak``."""
    return BurstProgram(t0, duration, peak, envelope, (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class Plate:
    kind: PlateKind
    orientation: float = 0.0
    rate: float = 0.0
    burst: BurstProgram = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PlateKind(self.kind))


@dataclass(frozen=True)
class WaveplateStack:
    plates: tuple

    def __post_init__(self):
        plates = tuple(self.plates)
        if not plates:
            raise ValueError("a waveplate stack needs at least one plate")
        object.__setattr__(self, "plates", plates)

    def speed_bound(self):
        """Upper bound on the scrambling speed from the plate rates alone (bursts excluded)."""
        return sum(2 * abs(p.rate) * 2 * np.sin(p.kind.retardation / 2) for p in self.plates)


@dataclass(frozen=True)
class ScramblerTrajectory:
    stack: WaveplateStack
    time_origin: float = 0.0

    def orientations(self, t):
        """Physical plate orientations at ``t`` (burst contributions not included)."""
        dt = float(t) - self.time_origin
        return np.array([p.orientation + p.rate * dt for p in self.stack.plates])


def _plate_jones(kind, theta):
    """Waveplate Jones matrices for an array of orientations -> ``(n, 2, 2)``."""
    half = 0.5 * kind.retardation
    two = 2.0 * theta
    gen = np.cos(two)[:, None, None] * PAULI[0] + np.sin(two)[:, None, None] * PAULI[1]
    return np.cos(half) * np.eye(2) - 1j * np.sin(half) * gen


def _axis_jones(axis, phase):
    half = 0.5 * phase
    gen = np.einsum("k,kij->ij", np.asarray(axis), PAULI)
    return np.cos(half)[:, None, None] * np.eye(2) - 1j * np.sin(half)[:, None, None] * gen


def scrambler_at(traj, t):
    """Jones matrix of the stack at time ``t``; a stack ``(n, 2, 2)`` for array ``t``."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    dt = ts - traj.time_origin
    out = np.broadcast_to(np.eye(2, dtype=complex), (len(ts), 2, 2))
    for p in traj.stack.plates:
        out = _plate_jones(p.kind, p.orientation + p.rate * dt) @ out
        if p.burst is not None:
            out = _axis_jones(p.burst.axis, p.burst.phase(ts)) @ out
    return out if np.ndim(t) else out[0]


def scrambler_rotation(traj, t):
    return jones_to_rotation(scrambler_at(traj, t))


def sop_speed(traj, s_in, t, dt):
    """Great-circle rate (rad/s) of the output SOP between ``t`` and ``t + dt``.

    ``s_in`` may be a single Stokes vector or a stack ``(m, 3)``; ``t`` may be
    an array, in which case the result is ``(len(t),)`` or ``(len(t), m)``.
    """
    s_in = np.asarray(s_in, dtype=float)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    r0 = scrambler_rotation(traj, ts)
    r1 = scrambler_rotation(traj, ts + dt)
    a = np.einsum("nij,...j->n...i", r0, s_in)
    b = np.einsum("nij,...j->n...i", r1, s_in)
    arc = great_circle(a, b)
    if np.any(arc >= MAX_STEP_ARC):
        raise StepTooLarge(f"output SOP moved {np.max(arc):.3g} rad in dt={dt:g} s")
    speed = arc / dt
    return speed if np.ndim(t) else speed[0]


def _equator_probes(r0, r1):
    """Inputs whose outputs lie on the equator of the step rotation ``r1 r0^T``."""
    vec = rotation_vector(r1 @ r0.T)
    n = np.linalg.norm(vec)
    axis = vec / n if n > 0 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(axis, np.eye(3)[np.argmin(np.abs(axis))])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return (r0.T @ np.stack([e1, e2, -e1, -e2]).T).T


def max_sop_speed(traj, t, dt, n_probe=64):
    """Device scrambling speed at ``t``: max of :func:`sop_speed` over probe SOPs.

    Probes are ``n_probe`` quasi-uniform SOPs plus the inputs that land on
    the equator of the step rotation, where the arc is largest.
    """
    if n_probe < 64:
        raise ValueError("need at least 64 probe SOPs")
    r0 = scrambler_rotation(traj, t)
    r1 = scrambler_rotation(traj, t + dt)
    probes = np.vstack([fibonacci_sphere(n_probe), _equator_probes(r0, r1)])
    return float(np.max(sop_speed(traj, probes, t, dt)))


def max_sop_speed_trace(traj, times, dt, n_probe=64):
    return np.array([max_sop_speed(traj, float(t), dt, n_probe) for t in times])


# ---------------------------------------------------------------- histograms


@dataclass(frozen=True)
class SpeedHistogram:
    edges: np.ndarray
    counts: np.ndarray
    samples: np.ndarray = field(repr=False)

    @property
    def mode(self):
        i = int(np.argmax(self.counts))
        return 0.5 * (self.edges[i] + self.edges[i + 1])

    def rayleigh_ks(self):
        """KS distance to the Rayleigh law with the same second moment."""
        x = self.samples
        ms = float(np.mean(x * x))
        if ms == 0.0:
            return 1.0
        return float(stats.kstest(x, stats.rayleigh(scale=np.sqrt(ms / 2)).cdf).statistic)

    def classify(self, ks_threshold=0.1):
        """``"static"``, ``"rayleigh-like"``, ``"peaked"`` or ``"other"``.

        Rayleigh-like: KS distance to the fitted Rayleigh law below
        ``ks_threshold``. Peaked: otherwise, with the mode in the top 10% of
        the observed speed range. Thresholds are heuristics.
        """
        top = float(np.max(self.samples))
        if top == 0.0:
            return "static"
        if self.rayleigh_ks() < ks_threshold:
            return "rayleigh-like"
        if self.mode >= 0.9 * top:
            return "peaked"
        return "other"


def speed_histogram(traj, s_in, t_span, n, dt=1e-10, bins=100):
    """Distribution of :func:`sop_speed` over ``n`` evenly spaced times in ``t_span``."""
    if n < 10_000:
        raise ValueError("speed histograms need at least 1e4 samples")
    t0, t1 = t_span
    times = t0 + (np.arange(n) + 0.5) * (t1 - t0) / n
    samples = np.concatenate(
        [sop_speed(traj, s_in, chunk, dt) for chunk in np.array_split(times, max(1, n // 4096))]
    )
    top = float(np.max(samples))
    edges = np.linspace(0.0, top if top > 0 else 1.0, bins + 1)
    counts, _ = np.histogram(samples, edges)
    return SpeedHistogram(edges, counts, samples)


# ---------------------------------------------------------------- presets


def seven_plate_stack(ceiling=MAX_SPEED_RADPS, index=0, hwp_share=0.95, qwp_share=0.04):
    """Seven-plate QWP-QWP-QWP-HWP-QWP-QWP-QWP stack whose speed stays below ``ceiling``.

    The HWP takes ``hwp_share`` of the ceiling; the six QWPs share
    ``qwp_share`` with rates proportional to square roots of distinct primes,
    which keeps all rates pairwise incommensurate. ``index`` varies initial
    orientations and rate signs so that several scramblers in one emulator
    are not copies of each other.
    """
    scale = 1.0 - 0.1 * ((index + 1) * _GOLDEN % 1.0)
    roots = np.roll(_SQRT_PRIMES[:6], index)
    qwp_rates = scale * qwp_share * ceiling / (2 * np.sqrt(2)) * roots / _SQRT_PRIMES[:6].sum()
    signs = [1 if ((index + i) * _GOLDEN) % 1.0 < 0.5 else -1 for i in range(7)]
    hwp_rate = scale * hwp_share * ceiling / 4
    rates = list(qwp_rates[:3]) + [hwp_rate] + list(qwp_rates[3:])
    kinds = [PlateKind.QWP] * 3 + [PlateKind.HWP] + [PlateKind.QWP] * 3
    plates = tuple(
        Plate(kind, 2 * np.pi * (((7 * index + i + 1) * _GOLDEN) % 1.0), sign * rate)
        for i, (kind, sign, rate) in enumerate(zip(kinds, signs, rates))
    )
    return WaveplateStack(plates)


def with_burst(stack, burst, plate_index=None):
    """Copy of ``stack`` with ``burst`` attached to a plate (the first HWP by default)."""
    plates = list(stack.plates)
    if plate_index is None:
        hwps = [i for i, p in enumerate(plates) if p.kind is PlateKind.HWP]
        plate_index = hwps[0] if hwps else len(plates) - 1
    plates[plate_index] = replace(plates[plate_index], burst=burst)
    return WaveplateStack(tuple(plates))


def static_stack(plates=None):
    if plates is None:
        plates = [Plate(PlateKind.QWP, 0.3), Plate(PlateKind.HWP, 1.1), Plate(PlateKind.QWP, -0.4)]
    return WaveplateStack(tuple(replace(p, rate=0.0) for p in plates))
