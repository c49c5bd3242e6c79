import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_retarders
from oracles import single_section_pmd
from pmde.errors import ArityMismatch, DegeneratePmd, GridTooCoarse
from pmde.pmd import (
    CARRIER_HZ,
    DgdSection,
    FrequencyGrid,
    TaylorCoefficients,
    build_profile,
    cascade_response,
    extract_pmd_fd,
    fd_weights,
    launch_group_delay,
    output_sop_derivative,
    pmd_spectrum,
    psp_jones,
    psp_pair,
    section_jones,
    section_retardation,
    taylor_eval,
    taylor_fit,
    taylor_fit_samples,
    total_pmd_analytic,
)
from pmde.polarization import (
    Retarder,
    axis_rotation,
    haar_rotations,
    jones_of,
    jones_to_rotation,
    retarder_to_rotation,
)

W0 = 2 * np.pi * CARRIER_HZ
IDENT = Retarder.identity()


def grid(half=2, step_hz=1e6, center_hz=CARRIER_HZ):
    return FrequencyGrid.around(center_hz, step_hz, half)


def test_frequency_grid_uniform_and_increasing():
    g = FrequencyGrid(W0, 2 * np.pi * 1e9, 11)
    w = g.omegas
    assert np.all(np.diff(w) > 0)
    np.testing.assert_allclose(np.diff(w), g.step, rtol=1e-6)
    assert w[g.center_index] == W0
    with pytest.raises(ValueError):
        FrequencyGrid(W0, 1.0, 1)


def test_zero_dgd_section_is_identity():
    w = grid().omegas
    np.testing.assert_array_equal(section_jones(DgdSection(0.0), w), np.broadcast_to(np.eye(2), (5, 2, 2)))


def test_52ps_retardation_is_about_20000_pi():
    delta = section_retardation(DgdSection(52.0), W0)
    # 2 pi * 193.4e12 * 52e-12 = 20113.6 pi
    assert delta / np.pi == pytest.approx(2.0 * 193.4 * 52.0, rel=1e-12)
    assert delta / np.pi == pytest.approx(2.0114e4, rel=1e-4)


def test_retardation_linear_in_frequency_offset():
    s = DgdSection(26.0)
    df = 3.7e9
    change = section_retardation(s, W0 + 2 * np.pi * df) - section_retardation(s, W0)
    assert change == pytest.approx(2 * np.pi * df * 26e-12, rel=1e-6)


def test_section_jones_is_retarder_about_psp_axis():
    s = DgdSection(10.0, (0, 1, 1))
    j = section_jones(s, W0)
    np.testing.assert_allclose(jones_to_rotation(j), axis_rotation((0, 1, 1), W0 * 10e-12), atol=1e-9)


def test_cascade_empty_is_identity():
    resp = cascade_response([], [IDENT], grid())
    np.testing.assert_array_equal(resp, np.broadcast_to(np.eye(2), (5, 2, 2)))


def test_cascade_single_section_equals_section():
    s = DgdSection(10.0)
    g = grid()
    np.testing.assert_allclose(cascade_response([s], [IDENT, IDENT], g), section_jones(s, g.omegas), atol=1e-15)


def test_mode_converter_between_equal_sections_is_frequency_flat():
    secs = [DgdSection(26.0), DgdSection(26.0)]
    rets = [IDENT, Retarder((0, 1, 0), np.pi), IDENT]
    g = FrequencyGrid(W0, 2 * np.pi * 2e12, 101)
    rots = jones_to_rotation(cascade_response(secs, rets, g))
    assert np.abs(rots - rots[0]).max() < 1e-9
    assert np.linalg.norm(total_pmd_analytic(secs, rets)) < 1e-12


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        cascade_response([DgdSection(1.0)], [IDENT], grid())
    with pytest.raises(ArityMismatch):
        total_pmd_analytic([DgdSection(1.0)], [IDENT, IDENT, IDENT])


def test_single_section_analytic(rng):
    g0 = random_retarders(rng, 1)[0]
    sec = DgdSection(17.0, (0.3, -0.2, 0.9))
    pmd = total_pmd_analytic([sec], [g0, IDENT])
    np.testing.assert_allclose(pmd, single_section_pmd(17.0, sec.psp_axis, retarder_to_rotation(g0)), atol=1e-12)
    assert np.linalg.norm(pmd) == pytest.approx(17.0, rel=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 2, 2.0, np.pi])
def test_two_sections_law_of_cosines(theta):
    tau = 26.0
    # second section's slow axis at Stokes angle theta from the first after all preceding elements
    s1 = DgdSection(tau, (1, 0, 0))
    s2 = DgdSection(tau, (np.cos(theta), np.sin(theta), 0))
    # undo the first section's own rotation at w0 so the input-referred angle is theta
    undo = Retarder.from_rotation(axis_rotation((1, 0, 0), -section_retardation(s1, W0)))
    pmd = total_pmd_analytic([s1, s2], [IDENT, undo, IDENT])
    assert np.linalg.norm(pmd) == pytest.approx(tau * np.sqrt(2 + 2 * np.cos(theta)), abs=1e-9)


def test_analytic_matches_finite_difference_random_n4(rng):
    secs = [DgdSection(rng.uniform(0, 125), rng.standard_normal(3)) for _ in range(4)]
    rets = random_retarders(rng, 5)
    g = grid()
    fd = extract_pmd_fd(cascade_response(secs, rets, g), g, 2)
    assert abs(np.linalg.norm(fd) - np.linalg.norm(total_pmd_analytic(secs, rets))) < 1e-4


def test_fd_identity_channel_is_zero():
    g = grid()
    np.testing.assert_allclose(extract_pmd_fd(cascade_response([], [IDENT], g), g, 2), 0.0, atol=1e-12)


def test_fd_single_section():
    g = grid()
    sec = DgdSection(10.0, (0, 0, 1))
    np.testing.assert_allclose(extract_pmd_fd(cascade_response([sec], [IDENT, IDENT], g), g, 2), [0, 0, 10.0], atol=1e-6)


def test_fd_three_point_stencil(rng):
    secs = [DgdSection(rng.uniform(0, 125), rng.standard_normal(3)) for _ in range(8)]
    rets = random_retarders(rng, 9)
    g = grid(half=1)
    fd = extract_pmd_fd(cascade_response(secs, rets, g), g, 1)
    np.testing.assert_allclose(fd, total_pmd_analytic(secs, rets), atol=1e-3)


def test_fd_output_referred_flag(rng):
    secs = [DgdSection(40.0, (0, 1, 0)), DgdSection(25.0, (1, 0, 0))]
    rets = random_retarders(rng, 3)
    g = grid()
    resp = cascade_response(secs, rets, g)
    out = extract_pmd_fd(resp, g, 2, referred="output")
    np.testing.assert_allclose(out, jones_to_rotation(resp[2]) @ extract_pmd_fd(resp, g, 2), atol=1e-9)
    np.testing.assert_allclose(out, total_pmd_analytic(secs, rets, referred="output"), atol=1e-4)


def test_grid_too_coarse():
    # 0.63 rad of section rotation per grid step
    g = grid(step_hz=1e9)
    resp = cascade_response([DgdSection(100.0)], [IDENT, IDENT], g)
    with pytest.raises(GridTooCoarse):
        extract_pmd_fd(resp, g, 2)
    with pytest.raises(GridTooCoarse):
        extract_pmd_fd(resp, g, 0)


def test_profile_aligned_and_antialigned():
    secs = [DgdSection(26.0), DgdSection(26.0)]
    undo = Retarder.from_rotation(axis_rotation((1, 0, 0), -section_retardation(secs[0], W0)))
    prof = build_profile(secs, [IDENT, undo, IDENT])
    np.testing.assert_allclose(prof.segments, [[26, 0, 0], [26, 0, 0]], atol=1e-9)
    np.testing.assert_allclose(prof.total, [52, 0, 0], atol=1e-9)
    np.testing.assert_allclose(prof.vertices[-1], prof.total)

    anti = build_profile(secs, [IDENT, Retarder((0, 1, 0), np.pi), IDENT])
    np.testing.assert_allclose(anti.segments[0], -anti.segments[1], atol=1e-9)
    assert np.linalg.norm(anti.total) < 1e-9


def test_profile_single_section_and_sum(rng):
    prof = build_profile([DgdSection(12.0, (0, 0, 1))], [IDENT, IDENT])
    np.testing.assert_allclose(prof.segments, [[0, 0, 12.0]])
    secs = [DgdSection(rng.uniform(1, 50), rng.standard_normal(3)) for _ in range(6)]
    rets = random_retarders(rng, 7)
    np.testing.assert_allclose(build_profile(secs, rets).total, total_pmd_analytic(secs, rets), atol=1e-9)


def test_psp_pair():
    slow, fast, dgd = psp_pair([10, 0, 0])
    np.testing.assert_array_equal(slow, [1, 0, 0])
    np.testing.assert_array_equal(fast, [-1, 0, 0])
    assert dgd == 10
    slow, _, dgd = psp_pair([3, 4, 0])
    assert dgd == 5
    np.testing.assert_allclose(slow, [0.6, 0.8, 0])
    with pytest.raises(DegeneratePmd):
        psp_pair([0, 0, 1e-10])


def test_group_delay_slow_minus_fast_is_dgd():
    g = grid()
    resp = cascade_response([DgdSection(10.0)], [IDENT, IDENT], g)
    slow = launch_group_delay(resp, g, [1, 0], 2)
    fast = launch_group_delay(resp, g, [0, 1], 2)
    assert slow - fast == pytest.approx(10.0, abs=1e-3)
    assert (slow + fast) / 2 == pytest.approx(0.0, abs=1e-3)


def test_group_delay_identity_channel_is_zero(rng):
    g = grid()
    resp = cascade_response([], [IDENT], g)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert launch_group_delay(resp, g, v, 2) == pytest.approx(0.0, abs=1e-9)


def test_psp_launch_is_stationary(rng):
    g = grid()
    for _ in range(5):
        sec = DgdSection(rng.uniform(5, 100), rng.standard_normal(3))
        rets = random_retarders(rng, 2)
        resp = cascade_response([sec], rets, g)
        pmd = total_pmd_analytic([sec], rets)
        slow, _ = psp_jones(pmd)
        rand = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert output_sop_derivative(resp, g, slow, 2) < 1e-4 * output_sop_derivative(resp, g, rand, 2)


def test_fd_weights_reproduce_polynomial_derivatives():
    x = np.arange(-3, 4)
    for d in range(5):
        w = fd_weights(x, d)
        for p in range(7):
            exact = np.prod(np.arange(p - d + 1, p + 1)) * 0.0**(p - d) if p >= d else 0.0
            assert w @ x.astype(float) ** p == pytest.approx(exact, abs=1e-9)


def test_taylor_fit_samples_recovers_cubic():
    w = W0 + 2 * np.pi * 1e9 * np.arange(-4, 5)
    x = (w - W0) * 1e-12
    coefs_true = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 0.0], [4.0, 0.0, 1.0], [0.0, 6.0, -6.0]])
    samples = sum(np.outer(x**k, c) / np.prod(np.arange(1, k + 1)) for k, c in enumerate(coefs_true))
    fit = taylor_fit_samples(samples, w, 4, 3)
    np.testing.assert_allclose(fit.coefficients, coefs_true, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(taylor_eval(fit, w), samples, atol=1e-9)


def test_taylor_order_zero_is_constant(rng):
    secs = [DgdSection(20.0, (1, 0, 0)), DgdSection(30.0, (0, 1, 0))]
    rets = random_retarders(rng, 3)
    g = grid(half=4)
    c = taylor_fit(cascade_response(secs, rets, g), g, 4, 0)
    vals = taylor_eval(c, W0 + np.linspace(-1e13, 1e13, 7))
    assert np.all(vals == c.coefficients[0])
    np.testing.assert_allclose(c.coefficients[0], total_pmd_analytic(secs, rets), atol=1e-5)


def test_taylor_fit_first_derivative_matches_analytic_spectrum(rng):
    secs = [DgdSection(20.0, (1, 0, 0)), DgdSection(30.0, (0, 1, 0))]
    rets = random_retarders(rng, 3)
    g = grid(half=4)
    c = taylor_fit(cascade_response(secs, rets, g), g, 4, 1)
    h = 2 * np.pi * 1e6
    ref = (pmd_spectrum(secs, rets, [W0 + h]) - pmd_spectrum(secs, rets, [W0 - h]))[0] / (2 * h * 1e-12)
    np.testing.assert_allclose(c.coefficients[1], ref, rtol=1e-3, atol=1e-3 * np.abs(ref).max())


@pytest.mark.parametrize("order", [1, 2, 3])
def test_taylor_diverges_far_from_carrier(order):
    coefs = np.zeros((order + 1, 3))
    coefs[0] = [5, 0, 0]
    coefs[order] = [0, 1.0, 0]
    c = TaylorCoefficients(order, coefs, W0)
    norms = [np.linalg.norm(taylor_eval(c, W0 + d)) for d in (1e13, 1e14, 1e15, 1e16)]
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert norms[-1] > 1e3


def test_taylor_coefficient_count_checked():
    with pytest.raises(ValueError):
        TaylorCoefficients(2, np.zeros((2, 3)))


def test_taylor_needs_wide_enough_grid():
    g = grid(half=1)
    with pytest.raises(GridTooCoarse):
        taylor_fit(cascade_response([DgdSection(1.0)], [IDENT, IDENT], g), g, 1, 2)


# ------------------------------------------------------------ invariants


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_triangle_bound(n, seed):
    rng = np.random.default_rng(seed)
    secs = [DgdSection(rng.uniform(0, 125), rng.standard_normal(3)) for _ in range(n)]
    rets = random_retarders(rng, n + 1)
    assert np.linalg.norm(total_pmd_analytic(secs, rets)) <= sum(s.dgd for s in secs) + 1e-9


def test_triangle_equality_when_aligned():
    secs = [DgdSection(t) for t in (10.0, 20.0, 35.0)]
    rets = [IDENT]
    for s in secs:
        rets.append(Retarder.from_rotation(axis_rotation((1, 0, 0), -section_retardation(s, W0))))
    assert np.linalg.norm(total_pmd_analytic(secs, rets)) == pytest.approx(65.0, abs=1e-9)


def test_isotropy_under_common_conjugation(rng):
    q = haar_rotations(rng, 1)[0]
    secs = [DgdSection(rng.uniform(5, 60), rng.standard_normal(3)) for _ in range(4)]
    rets = random_retarders(rng, 5)
    secs_q = [DgdSection(s.dgd, q @ np.asarray(s.psp_axis)) for s in secs]
    rets_q = [Retarder.from_rotation(q @ retarder_to_rotation(r) @ q.T) for r in rets]
    p = total_pmd_analytic(secs, rets)
    pq = total_pmd_analytic(secs_q, rets_q)
    np.testing.assert_allclose(pq, q @ p, atol=1e-9)
    assert abs(np.linalg.norm(pq) - np.linalg.norm(p)) < 1e-9


def test_quasi_periodic_for_commensurate_dgds(rng):
    secs = [DgdSection(10.0, (1, 0, 0)), DgdSection(20.0, (0.2, 0.5, 0.8))]
    rets = random_retarders(rng, 3)
    period = 2 * np.pi / 10e-12
    w = W0 + np.linspace(0, period, 17)
    a = pmd_spectrum(secs, rets, w)
    b = pmd_spectrum(secs, rets, w + period)
    np.testing.assert_allclose(a, b, atol=1e-6)
    # not periodic with half the period
    c = pmd_spectrum(secs, rets, w + period / 2)
    assert np.abs(a - c).max() > 1.0


def test_pointwise_evaluation_is_order_independent(rng):
    secs = [DgdSection(rng.uniform(5, 60), rng.standard_normal(3)) for _ in range(3)]
    rets = random_retarders(rng, 4)
    w = grid(half=5).omegas
    fwd = cascade_response(secs, rets, w)
    rev = cascade_response(secs, rets, w[::-1])
    assert np.array_equal(fwd, rev[::-1])
    one = np.stack([cascade_response(secs, rets, [x])[0] for x in w])
    assert np.array_equal(fwd, one)


def test_jones_of_psp_gives_psp_stokes():
    slow, fast = psp_jones([0, 3, 4])
    from pmde.polarization import stokes_of

    np.testing.assert_allclose(stokes_of(slow), [0, 0.6, 0.8], atol=1e-12)
    np.testing.assert_allclose(stokes_of(fast), [0, -0.6, -0.8], atol=1e-12)
    assert np.allclose(jones_of([0, 0.6, 0.8]), slow)
