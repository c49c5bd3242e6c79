"""The PMD emulator: N DGD sections between N+1 time-variable retarders.

Scramblers are either :class:`~pmde.scrambler.ScramblerTrajectory` objects
or static :class:`~pmde.polarization.Retarder` settings. The emulator holds
no clock; every evaluation takes an explicit time.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfig, LengthMismatch, NeutralUnavailable
from .pmd import (
    CARRIER_HZ,
    DgdSection,
    cascade_response,
    element_rotation,
    pmd_spectrum,
    section_rotation,
    total_pmd_analytic,
)
from .polarization import Retarder, retarder_to_jones, retarder_to_rotation, rotation_between
from .scrambler import MAX_SPEED_RADPS, ScramblerTrajectory, scrambler_at, seven_plate_stack

HIGHEND_TOTALS_PS = (20, 50, 100, 200)
ZR_MEAN_DGD_PS = 10.0
ZR_MAX_SPEED_RADPS = 50e3
PRESETS = tuple(f"highend-{t}" for t in HIGHEND_TOTALS_PS) + ("zr",)


@dataclass(frozen=True)
class EmulatorConfig:
    section_dgds: tuple
    scramblers: tuple
    carrier_hz: float = CARRIER_HZ
    section_axes: tuple = None
    max_speed: float = MAX_SPEED_RADPS
    preset: str = None

    def __post_init__(self):
        dgds = tuple(float(x) for x in self.section_dgds)
        if any(not np.isfinite(x) or x < 0 for x in dgds):
            raise InvalidConfig(f"section DGDs must be finite and >= 0 ps, got {dgds}")
        scramblers = tuple(self.scramblers)
        if len(scramblers) != len(dgds) + 1:
            raise InvalidConfig(f"{len(dgds)} sections need {len(dgds) + 1} scramblers, got {len(scramblers)}")
        for s in scramblers:
            if not isinstance(s, (Retarder, ScramblerTrajectory)):
                raise InvalidConfig(f"scrambler must be a Retarder or ScramblerTrajectory, got {type(s).__name__}")
        axes = self.section_axes
        if axes is None:
            axes = ((1.0, 0.0, 0.0),) * len(dgds)
        axes = tuple(tuple(float(c) for c in a) for a in axes)
        if len(axes) != len(dgds):
            raise InvalidConfig("need one PSP axis per section")
        if not self.carrier_hz > 0:
            raise InvalidConfig("carrier frequency must be positive")
        if not self.max_speed > 0:
            raise InvalidConfig("scrambler speed ceiling must be positive")
        object.__setattr__(self, "section_dgds", dgds)
        object.__setattr__(self, "scramblers", scramblers)
        object.__setattr__(self, "section_axes", axes)
        try:
            object.__setattr__(self, "sections", tuple(DgdSection(t, a) for t, a in zip(dgds, axes)))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from exc

    @property
    def n_sections(self):
        return len(self.section_dgds)

    @property
    def max_total_dgd(self):
        return float(sum(self.section_dgds))

    @property
    def omega0(self):
        return 2 * np.pi * self.carrier_hz

    def with_scramblers(self, scramblers):
        return replace(self, scramblers=tuple(scramblers))


@dataclass(frozen=True)
class EmulatorState:
    config: EmulatorConfig
    time: float = 0.0

    def at(self, t):
        return replace(self, time=float(t))


def default_scramblers(n_sections, max_speed=MAX_SPEED_RADPS):
    return tuple(ScramblerTrajectory(seven_plate_stack(max_speed, index=i)) for i in range(n_sections + 1))


def equal_sections(total_dgd, n_sections=2, max_speed=MAX_SPEED_RADPS, carrier_hz=CARRIER_HZ, tag=None):
    return EmulatorConfig(
        (total_dgd / n_sections,) * n_sections,
        default_scramblers(n_sections, max_speed),
        carrier_hz=carrier_hz,
        max_speed=max_speed,
        preset=tag,
    )


def preset(name, max_to_mean_ratio=3.0):
    """Built-in configurations.

    ``highend-{20,50,100,200}``: two equal sections summing to the named
    total, 20 Mrad/s scramblers. ``zr``: two sections of
    ``max_to_mean_ratio * 10 ps / 2`` (15 ps by default), 50 krad/s scramblers.
    """
    if name == "zr":
        total = max_to_mean_ratio * ZR_MEAN_DGD_PS
        return equal_sections(total, 2, ZR_MAX_SPEED_RADPS, tag="zr")
    for total in HIGHEND_TOTALS_PS:
        if name == f"highend-{total}":
            return equal_sections(float(total), 2, MAX_SPEED_RADPS, tag=name)
    raise InvalidConfig(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}")


def build(config):
    if not isinstance(config, EmulatorConfig):
        raise InvalidConfig("build() needs an EmulatorConfig")
    return EmulatorState(config, 0.0)


def scrambler_jones(element, t):
    if isinstance(element, Retarder):
        return retarder_to_jones(element)
    return scrambler_at(element, t)


def frozen_retarders(state, t=None):
    """Jones matrices of all scramblers at time ``t`` (the state's time by default)."""
    t = state.time if t is None else t
    return [scrambler_jones(s, t) for s in state.config.scramblers]


def response_at(state, t, grid):
    return cascade_response(state.config.sections, frozen_retarders(state, t), grid)


def pmd_at(state, t=None, omega=None):
    cfg = state.config
    return total_pmd_analytic(cfg.sections, frozen_retarders(state, t), omega, cfg.carrier_hz)


def apply_to_signal(state, t, spectrum, grid):
    """Multiply a dual-polarization spectrum ``(n, 2)`` by the channel at each grid frequency."""
    spectrum = np.asarray(spectrum, dtype=complex)
    resp = response_at(state, t, grid)
    if spectrum.shape != (len(resp), 2):
        raise LengthMismatch(f"spectrum shape {spectrum.shape} does not match {len(resp)} grid points")
    return np.einsum("nij,nj->ni", resp, spectrum)


def _static_rotations(config, t):
    return [element_rotation(scrambler_jones(s, t)) for s in config.scramblers]


def neutral_state(config, t=0.0):
    """Static retarder settings giving a frequency-flat channel.

    Sections are paired innermost first: (N/2, N/2+1), (N/2-1, N/2+2), ...
    For pair (i, j) everything between the two sections is already
    frequency-flat, so the retarder right before section j is chosen to map
    section i's slow PSP onto section j's fast PSP through that static
    transformation. Retarders 0 .. N/2-1 and N keep their settings at ``t``.
    """
    n = config.n_sections
    dgds = np.asarray(config.section_dgds)
    if n % 2:
        raise NeutralUnavailable(f"neutral state needs an even number of sections, got {n}")
    if n and np.ptp(dgds) > 1e-12 * max(1.0, dgds.max()):
        raise NeutralUnavailable(f"neutral state needs equal section DGDs, got {tuple(dgds)}")
    rots = _static_rotations(config, t)
    secs = config.sections
    for p in range(n // 2):
        i = n // 2 - p  # 1-based section indices
        j = n // 2 + 1 + p
        # static map from section i's output to retarder j-1's input
        between = np.eye(3) if j - 1 == i else rots[i]
        for m in range(i + 1, j):
            between = section_rotation(secs[m - 1], config.omega0) @ between
            if m < j - 1:
                between = rots[m] @ between
        carried = between @ np.asarray(secs[i - 1].psp_axis)
        rots[j - 1] = rotation_between(carried, -np.asarray(secs[j - 1].psp_axis))
    return [Retarder.from_rotation(r) for r in rots]


def aligned_state(config, t=0.0):
    """Static settings that line up all input-referred section vectors (total = sum of DGDs)."""
    rots = _static_rotations(config, t)
    secs = config.sections
    if not secs:
        return [Retarder.from_rotation(r) for r in rots]
    before = rots[0]
    direction = before.T @ np.asarray(secs[0].psp_axis)
    for i, sec in enumerate(secs[:-1], start=1):
        before = section_rotation(sec, config.omega0) @ before
        rots[i] = rotation_between(before @ direction, secs[i].psp_axis)
        before = rots[i] @ before
    return [Retarder.from_rotation(r) for r in rots]


def static_config(config, retarders):
    return config.with_scramblers(tuple(retarders))


def neutral_residual(config, grid, t=0.0):
    """Max analytic |Omega(w)| in ps over ``grid`` after applying the neutral state."""
    rets = neutral_state(config, t)
    return float(np.max(np.linalg.norm(pmd_spectrum(config.sections, rets, grid), axis=1)))


# ----------------------------------------------------------- mode-converter geometry


def mode_converter_retarders(delta, axis=(0.0, 1.0, 0.0)):
    return [Retarder.identity(), Retarder(axis, delta), Retarder.identity()]


def sweep_mode_converter(deltas, dgd=26.0, psp_axis=(1.0, 0.0, 0.0), converter_axis=(0.0, 1.0, 0.0), carrier_hz=CARRIER_HZ):
    """Total DGD (ps) of two equal sections versus the middle converter's retardation."""
    a = np.asarray(psp_axis, dtype=float)
    b = np.asarray(converter_axis, dtype=float)
    if abs(np.dot(a, b)) > 1e-12 * np.linalg.norm(a) * np.linalg.norm(b):
        raise ValueError("mode converter axis must be orthogonal to the sections' PSP axis")
    secs = [DgdSection(dgd, psp_axis), DgdSection(dgd, psp_axis)]
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    out = np.array(
        [np.linalg.norm(total_pmd_analytic(secs, mode_converter_retarders(d, converter_axis), carrier_hz=carrier_hz)) for d in deltas]
    )
    return out


def law_of_cosines_dgd(delta, dgd=26.0):
    return 2 * dgd * np.abs(np.cos(np.asarray(delta) / 2))


def retardation_change(dgd_from, dgd_to, carrier_hz=CARRIER_HZ):
    """Retardation change (rad) of one section whose DGD goes ``dgd_from -> dgd_to`` ps."""
    return 2 * np.pi * carrier_hz * (dgd_to - dgd_from) * 1e-12


def converter_rotation(delta, axis=(0.0, 1.0, 0.0)):
    return retarder_to_rotation(Retarder(axis, delta))
