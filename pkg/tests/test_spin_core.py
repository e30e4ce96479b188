"""Spin basis, coherent states, operator matrices, moments, precession oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwsqueeze.spin_core import (
    AtomState,
    BlochAngles,
    GroundExcitedAmplitudes,
    MAX_ATOMS,
    analytic_precession,
    bloch_to_ge,
    build_spin_coherent,
    ge_to_lr_amplitudes,
    moments_from_density,
    moments_from_state,
    spin_operator_matrices,
)

RT2 = math.sqrt(2.0)


def test_ge_normalization_enforced():
    with pytest.raises(ValueError):
        GroundExcitedAmplitudes(0.5, 0.5)


def test_ge_to_lr_examples():
    el, er = ge_to_lr_amplitudes(GroundExcitedAmplitudes(0.0, 1.0))
    assert el == pytest.approx(1 / RT2) and er == pytest.approx(1 / RT2)
    el, er = ge_to_lr_amplitudes(GroundExcitedAmplitudes(1.0, 0.0))
    assert el == pytest.approx(1 / RT2) and er == pytest.approx(-1 / RT2)
    ge = GroundExcitedAmplitudes(math.sqrt(0.001), math.sqrt(0.999))
    el, er = ge_to_lr_amplitudes(ge)
    assert el == pytest.approx((ge.alpha + ge.beta) / RT2, abs=1e-15)
    assert er == pytest.approx((ge.beta - ge.alpha) / RT2, abs=1e-15)
    # loose published decimals for the same pair
    assert abs(el - 0.72927) < 5e-4 and abs(er - 0.68455) < 5e-4
    assert abs(el) ** 2 + abs(er) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_bloch_to_ge_examples():
    ge = bloch_to_ge(BlochAngles(0.0, 0.0))
    assert ge.alpha == pytest.approx(0.0) and ge.beta == pytest.approx(1.0)
    ge = bloch_to_ge(BlochAngles(math.pi, 0.0))
    assert abs(ge.alpha) == pytest.approx(1.0) and abs(ge.beta) == pytest.approx(
        0.0, abs=1e-15
    )
    ge = bloch_to_ge(BlochAngles(math.pi / 2, 0.0))
    assert ge.alpha == pytest.approx(1 / RT2) and ge.beta == pytest.approx(1 / RT2)


def test_bloch_angle_ranges():
    with pytest.raises(ValueError):
        BlochAngles(-0.1, 0.0)
    with pytest.raises(ValueError):
        BlochAngles(0.1, 7.0)


def test_spin_coherent_small_cases():
    st2 = build_spin_coherent(GroundExcitedAmplitudes(0.0, 1.0), 2)
    assert np.allclose(st2.amplitudes, [0.5, 1 / RT2, 0.5], atol=1e-12)
    st2 = build_spin_coherent(GroundExcitedAmplitudes(1.0, 0.0), 2)
    # global phase fixed by comparing against the direct product form
    ref = np.array([0.5, -1 / RT2, 0.5])
    phase = st2.amplitudes[0] / ref[0]
    assert np.allclose(st2.amplitudes / phase, ref, atol=1e-12)


def test_spin_coherent_peak_location():
    st200 = build_spin_coherent(GroundExcitedAmplitudes(0.0, 1.0), 200)
    assert int(np.argmax(st200.pmf())) == 100


def test_spin_coherent_capacity_guard():
    with pytest.raises(ValueError):
        build_spin_coherent(GroundExcitedAmplitudes(0.0, 1.0), MAX_ATOMS + 1)


@settings(max_examples=25, deadline=None)
@given(
    theta=st.floats(0.0, math.pi),
    phi=st.floats(0.0, 2 * math.pi, exclude_max=True),
    n=st.integers(0, 80),
)
def test_spin_coherent_norm_property(theta, phi, n):
    state = build_spin_coherent(bloch_to_ge(BlochAngles(theta, phi)), n)
    assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-10


def test_atom_state_validation():
    with pytest.raises(ValueError):
        AtomState(n_atoms=2, amplitudes=np.ones(3))
    with pytest.raises(ValueError):
        AtomState(n_atoms=3, amplitudes=np.ones(3) / math.sqrt(3))


def test_operator_matrices_small():
    jx, jy, jz = spin_operator_matrices(1)
    assert np.allclose(jx, np.diag([-0.5, 0.5]))
    jx, jy, jz = spin_operator_matrices(2)
    # ladder magnitude sqrt((k+1)(N-k))/2 at k=1; the sign is fixed by the
    # commutation relations together with Jx = diag(k - N/2)
    assert abs(jz[2, 1]) == pytest.approx(RT2 / 2)
    assert jz[2, 1] == pytest.approx(-RT2 / 2)
    assert jy[2, 1] == pytest.approx(-1j * RT2 / 2)
    for op in (jx, jy, jz):
        assert abs(np.trace(op)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 5, 30])
def test_commutation_and_casimir(n):
    jx, jy, jz = spin_operator_matrices(n)
    assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-10
    assert np.max(np.abs(jy @ jz - jz @ jy - 1j * jx)) < 1e-10
    assert np.max(np.abs(jz @ jx - jx @ jz - 1j * jy)) < 1e-10
    casimir = jx @ jx + jy @ jy + jz @ jz
    expected = (n / 2) * (n / 2 + 1) * np.eye(n + 1)
    assert np.max(np.abs(casimir - expected)) < 1e-9


def test_moments_ground_state():
    m = moments_from_state(build_spin_coherent(GroundExcitedAmplitudes(0.0, 1.0), 30))
    assert m.jz_mean == pytest.approx(-15.0, abs=1e-9)
    assert m.jz_var == pytest.approx(0.0, abs=1e-9)


def test_moments_tilted_state():
    ge = GroundExcitedAmplitudes(math.sqrt(0.001), math.sqrt(0.999))
    m = moments_from_state(build_spin_coherent(ge, 30))
    assert m.jz_mean == pytest.approx(30 * (0.001 - 0.999) / 2, abs=1e-9)
    assert abs(m.jz_mean - (-14.97)) < 1e-9
    assert m.jz_var == pytest.approx(30 * 0.001 * 0.999, abs=1e-9)
    assert m.jx_mean == pytest.approx(30 * math.sqrt(0.001 * 0.999), abs=1e-9)
    assert abs(m.jx_mean - 0.94818) < 1e-4


def test_moments_from_density_matches_state():
    ge = GroundExcitedAmplitudes(math.sqrt(0.3), math.sqrt(0.7) * 1j)
    state = build_spin_coherent(ge, 12)
    rho = np.outer(state.amplitudes, state.amplitudes.conj())
    ms = moments_from_state(state)
    md = moments_from_density(rho)
    for field in ("jx_mean", "jy_mean", "jz_mean", "jx_var", "jy_var", "jz_var"):
        assert getattr(ms, field) == pytest.approx(getattr(md, field), abs=1e-10)


def test_moments_from_density_rejects_bad_trace():
    with pytest.raises(ValueError):
        moments_from_density(np.eye(4))


def test_precession_pole_state():
    for t in (0.0, 0.7, 3.0):
        m = analytic_precession(GroundExcitedAmplitudes(0.0, 1.0), 30, math.pi / 4, t)
        assert (m.jx_mean, m.jy_mean, m.jz_mean) == pytest.approx((0, 0, -15))
        assert m.jx_var == pytest.approx(7.5) and m.jy_var == pytest.approx(7.5)


def test_precession_phase_alignment():
    ge = bloch_to_ge(BlochAngles(0.4, 1.1))
    phi_ab = ge.rel_phase
    omega = math.pi / 4
    m = analytic_precession(ge, 20, omega, phi_ab / omega)
    amp = 20 * abs(ge.alpha * ge.beta)
    assert m.jx_mean == pytest.approx(amp, abs=1e-12)
    assert m.jy_mean == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    theta=st.floats(0.01, math.pi - 0.01),
    phi=st.floats(0.0, 2 * math.pi, exclude_max=True),
    t=st.floats(0.0, 50.0),
)
def test_precession_transverse_radius_conserved(theta, phi, t):
    ge = bloch_to_ge(BlochAngles(theta, phi))
    m = analytic_precession(ge, 24, 0.9, t)
    radius = 24 * abs(ge.alpha * ge.beta)
    assert m.jx_mean**2 + m.jy_mean**2 == pytest.approx(radius**2, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    theta=st.floats(0.0, math.pi),
    phi=st.floats(0.0, 2 * math.pi, exclude_max=True),
    n=st.integers(1, 50),
)
def test_coherent_state_moments_match_analytic(theta, phi, n):
    ge = bloch_to_ge(BlochAngles(theta, phi))
    ms = moments_from_state(build_spin_coherent(ge, n))
    ma = analytic_precession(ge, n, 1.0, 0.0)
    for field in ("jx_mean", "jy_mean", "jz_mean", "jx_var", "jy_var", "jz_var"):
        assert getattr(ms, field) == pytest.approx(getattr(ma, field), abs=1e-9)


def test_bloch_round_trip_up_to_global_phase():
    for theta, phi in [(0.3, 0.2), (1.4, 3.9), (2.8, 5.5)]:
        ge = bloch_to_ge(BlochAngles(theta, phi))
        # recover angles from magnitudes/arguments, rebuild, compare states
        theta_r = 2 * math.acos(min(abs(ge.beta), 1.0))
        phi_r = (np.angle(ge.beta) - np.angle(ge.alpha)) % (2 * math.pi)
        ge_r = bloch_to_ge(BlochAngles(theta_r, phi_r))
        s1 = build_spin_coherent(ge, 7).amplitudes
        s2 = build_spin_coherent(ge_r, 7).amplitudes
        overlap = abs(np.vdot(s1, s2))
        assert overlap == pytest.approx(1.0, abs=1e-10)
