"""Monte-Carlo DGD statistics and the Taylor-versus-sections accuracy study.

Random scrambler states are Haar-uniform rotations, one per retarder per
draw. Draws are generated in fixed-size chunks, each with its own child of
``SeedSequence(seed)``, so results do not depend on how chunks are
scheduled.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .emulator import EmulatorConfig, EmulatorState, frozen_retarders
from .errors import InvalidConfig
from .pmd import (
    CARRIER_HZ,
    PS,
    DgdSection,
    FrequencyGrid,
    pmd_spectrum,
    taylor_eval,
    taylor_fit_samples,
    taylor_reach,
)
from .polarization import axis_rotation, haar_rotations

CHUNK = 8192
LOCAL_STEP_PHASE = 0.03
MAXWELL_MEAN_OVER_RMS = np.sqrt(8 / (3 * np.pi))


@dataclass(frozen=True)
class DgdHistogram:
    edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    seed: int
    samples: np.ndarray = field(repr=False)

    @property
    def mean(self):
        return float(np.mean(self.samples))

    @property
    def rms(self):
        return float(np.sqrt(np.mean(self.samples**2)))

    def maxwell_fit(self):
        """Maxwellian with the same rms (scale = rms / sqrt(3))."""
        return stats.maxwell(scale=self.rms / np.sqrt(3))

    def maxwell_ks(self):
        return ks_distance(self.samples, self.maxwell_fit().cdf)


@dataclass(frozen=True)
class ModelErrorReport:
    """Per-frequency |Taylor - exact| in ps for each order; ``exact_error`` is the baseline."""

    omegas: np.ndarray
    omega0: float
    orders: tuple
    errors: np.ndarray
    exact_error: np.ndarray
    taylor_dof: tuple
    section_dof: int

    @property
    def offsets(self):
        return self.omegas - self.omega0

    def worst(self):
        return self.errors.max(axis=1)


def _sections_of(config):
    if isinstance(config, EmulatorConfig):
        return list(config.sections), config.carrier_hz
    try:
        secs = [s if isinstance(s, DgdSection) else DgdSection(float(s)) for s in config]
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"cannot interpret {config!r} as DGD sections") from exc
    return secs, CARRIER_HZ


def _draw_chunk(sections, omega, rng, n):
    rots = [haar_rotations(rng, n) for _ in range(len(sections) + 1)]
    return _pmd_vectors(sections, rots, omega)


def _pmd_vectors(sections, rots, omega):
    n = len(rots[0])
    before = rots[0]
    total = np.zeros((n, 3))
    for sec, rot in zip(sections, rots[1:]):
        total += np.einsum("nji,j->ni", before, sec.pmd_vector)
        before = rot @ (axis_rotation(sec.psp_axis, omega * sec.dgd * PS) @ before)
    return total


def _chunks(n, seed):
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(np.random.default_rng(c), size) for c, size in zip(children, sizes)]


def sample_pmd_vectors(config, n, seed):
    secs, carrier = _sections_of(config)
    if n < 1:
        raise InvalidConfig("need at least one draw")
    omega = 2 * np.pi * carrier
    return np.concatenate([_draw_chunk(secs, omega, rng, size) for rng, size in _chunks(n, seed)])


def sample_dgd(config, n, seed, bins=100):
    """Histogram of |Omega| over ``n`` Haar-random scrambler states."""
    secs, _ = _sections_of(config)
    total = float(sum(s.dgd for s in secs))
    dgd = np.linalg.norm(sample_pmd_vectors(config, n, seed), axis=1)
    over = dgd > total * (1 + 1e-12) + 1e-12
    if np.any(over):
        raise AssertionError(f"{int(over.sum())} samples exceed the total DGD {total} ps")
    edges = np.linspace(0.0, total if total > 0 else 1.0, bins + 1)
    counts, _ = np.histogram(np.minimum(dgd, edges[-1]), edges)
    return DgdHistogram(edges, counts, int(n), int(seed), dgd)


def ks_distance(samples, cdf):
    return float(stats.kstest(samples, cdf).statistic)


def two_section_cdf(tau1, tau2):
    """CDF of |Omega| for two sections with uniformly random relative orientation."""
    lo, hi = abs(tau1 - tau2), tau1 + tau2

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        return (x * x - lo * lo) / (4 * tau1 * tau2)

    return cdf


def hinge_vs_uniform(configs, n, seed, bins=100):
    """Paired histograms for configs with equal total DGD, plus their two-sample KS distance."""
    first, second = configs
    totals = [sum(s.dgd for s in _sections_of(c)[0]) for c in (first, second)]
    if not np.isclose(totals[0], totals[1], rtol=1e-12):
        raise InvalidConfig(f"configs must share the total DGD, got {totals[0]} and {totals[1]} ps")
    a = sample_dgd(first, n, seed, bins)
    b = sample_dgd(second, n, seed, bins)
    ks = float(stats.ks_2samp(a.samples, b.samples).statistic)
    return a, b, ks


def pmd_derivative_scatter(config, n, seed, step_hz=1e6):
    """``(|Omega|, |dOmega/dw|)`` pairs in (ps, ps^2) under random scrambler states."""
    secs, carrier = _sections_of(config)
    omega = 2 * np.pi * carrier
    h = 2 * np.pi * step_hz
    out = []
    for rng, size in _chunks(n, seed):
        rots = [haar_rotations(rng, size) for _ in range(len(secs) + 1)]
        mid = _pmd_vectors(secs, rots, omega)
        deriv = (_pmd_vectors(secs, rots, omega + h) - _pmd_vectors(secs, rots, omega - h)) / (2 * h * PS)
        out.append(np.stack([np.linalg.norm(mid, axis=1), np.linalg.norm(deriv, axis=1)], axis=1))
    return np.concatenate(out)


# ---------------------------------------------------------------- Taylor study


def _static_chain(config, retarders, t):
    if isinstance(config, EmulatorConfig):
        return list(config.sections), frozen_retarders(EmulatorState(config, t)), config.omega0
    return list(config), list(retarders), 2 * np.pi * CARRIER_HZ


def taylor_accuracy(config, band, orders, retarders=None, t=0.0, step_hz=None, count=2001):
    """Error of truncated Taylor models of Omega(w) against the exact section model.

    ``config`` is an :class:`EmulatorConfig` (scramblers frozen at ``t``) or
    a list of sections with ``retarders``. ``band`` is a half-width in rad/s
    or a :class:`FrequencyGrid`. Coefficients are finite differences of the
    exact Omega(w) on a local grid whose step keeps ``dw * sum(tau) = 0.03``
    unless ``step_hz`` is given; the zeroth coefficient is the exact value,
    so every order is exact at w0. Samples carry the absolute phase w * tau,
    so much finer steps lose the third derivative to rounding.
    """
    secs, rets, omega0 = _static_chain(config, retarders, t)
    if isinstance(band, FrequencyGrid):
        omegas = band.omegas
        omega0 = band.center
    else:
        omegas = omega0 + np.linspace(-band, band, count)
    orders = tuple(int(k) for k in orders)
    total = sum(s.dgd for s in secs)
    if step_hz is None:
        h = LOCAL_STEP_PHASE / (max(total, 1e-3) * PS)
    else:
        h = 2 * np.pi * step_hz
    reach = taylor_reach(max(orders))
    local = omega0 + h * np.arange(-reach, reach + 1)
    local_pmd = pmd_spectrum(secs, rets, local)
    exact = pmd_spectrum(secs, rets, omegas)
    errors = np.zeros((len(orders), len(omegas)))
    for row, k in enumerate(orders):
        coefs = taylor_fit_samples(local_pmd, local, reach, k)
        errors[row] = np.linalg.norm(taylor_eval(coefs, omegas) - exact, axis=1)
    return ModelErrorReport(
        omegas=omegas,
        omega0=float(omega0),
        orders=orders,
        errors=errors,
        exact_error=np.zeros(len(omegas)),
        taylor_dof=tuple(3 * (k + 1) for k in orders),
        section_dof=3 * (len(secs) + 1) + len(secs),
    )


def remainder_exponent(report, order, lo, hi):
    """Log-log slope of the Taylor error versus |w - w0| for offsets in [lo, hi] rad/s."""
    row = report.orders.index(order)
    off = np.abs(report.offsets)
    mask = (off >= lo) & (off <= hi) & (report.errors[row] > 0)
    if mask.sum() < 3:
        raise ValueError(f"only {int(mask.sum())} offsets fall in [{lo:g}, {hi:g}] rad/s; need 3 for a slope")
    slope, _ = np.polyfit(np.log(off[mask]), np.log(report.errors[row][mask]), 1)
    return float(slope)
