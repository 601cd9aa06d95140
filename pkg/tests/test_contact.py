"""Friction element marching, AFT force assembly and energy bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flutterlco import (
    AftConfig,
    ContactElement,
    ContactMarchError,
    HarmonicSet,
    ReducedModel,
    contact_dissipated_work,
    contact_force_and_jacobian,
    contact_force_fourier,
    contact_jacobian,
    jenkins_march,
    max_potential_energy,
)
from flutterlco.contact import TractionState, steady_contact_samples
from flutterlco.harmonics import flatten_count


def one_element_model(k_t=2.0, f_lim=0.6):
    el = ContactElement(0, 1, k_t=k_t, f_lim=f_lim)
    model = ReducedModel(np.eye(2), np.array([[1.0, 0.15], [0.15, 2.0]]),
                         contacts=(el,))
    return model, (el,)


def motion(order, c1, c0=None):
    us = HarmonicSet.zeros(order, 2)
    us.coeff[0] = np.asarray(c1, complex)
    if c0 is not None:
        us.coeff_0 = np.asarray(c0, float)
    return us


def random_motion(rng, order=3, scale=0.3):
    us = HarmonicSet.zeros(order, 2)
    us.coeff_0 = 0.2 * scale * rng.standard_normal(2)
    us.coeff = scale * (rng.standard_normal((order, 2))
                        + 1j * rng.standard_normal((order, 2)))
    return us


# ----------------------------------------------------------------- config


def test_aft_config_validation():
    with pytest.raises(ValueError):
        AftConfig(n_samples=0)
    with pytest.raises(ValueError, match="power of two"):
        AftConfig(n_samples=96)
    with pytest.raises(ValueError, match="transient"):
        AftConfig(n_transient_cycles=0)
    with pytest.raises(ValueError, match="max_cycles"):
        AftConfig(max_cycles=2, n_transient_cycles=3)
    with pytest.raises(ValueError, match="undersamples"):
        AftConfig(n_samples=8).check_order(3)  # needs >= 4H samples


def test_empty_contact_tuple_rejected():
    model = ReducedModel(np.eye(2), np.eye(2))
    with pytest.raises(ValueError, match="no contact elements"):
        contact_force_fourier(motion(1, [1.0, 0.0]), model, ())


# ----------------------------------------------------- closed-form checks


@pytest.mark.parametrize("k_t,f_lim,a", [
    (2.0, 0.6, 1.0),
    (0.9, 0.12, 0.5),
    (5.0, 1.0, 0.3),
    (1.0, 0.25, 2.0),
])
def test_loop_work_matches_closed_form(k_t, f_lim, a):
    # rectilinear harmonic slip of amplitude a dissipates
    # 4 f_lim (a - f_lim / k_t) per cycle
    model, contacts = one_element_model(k_t, f_lim)
    w = contact_dissipated_work(motion(3, [a, 0.0]), model, contacts)
    w_ref = 4.0 * f_lim * (a - f_lim / k_t)
    assert w == pytest.approx(w_ref, rel=1e-3)


def test_loop_work_converges_with_sampling():
    model, contacts = one_element_model()
    us = motion(3, [1.0, 0.0])
    w_ref = 4.0 * 0.6 * (1.0 - 0.6 / 2.0)
    err = [abs(contact_dissipated_work(us, model, contacts,
                                       AftConfig(n_samples=n)) - w_ref)
           for n in (128, 512)]
    assert err[1] < err[0]
    assert err[1] < 1e-4 * w_ref


def test_no_dissipation_below_slip_limit():
    model, contacts = one_element_model()
    # peak gap force k_t * a stays below f_lim
    w = contact_dissipated_work(motion(3, [0.2, 0.1j]), model, contacts)
    assert abs(w) < 1e-14


def test_stick_force_is_linear_spring():
    # below onset the marched force equals K_c u for every harmonic
    model, contacts = one_element_model()
    rng = np.random.default_rng(2)
    us = random_motion(rng, order=3, scale=0.05)
    fc = contact_force_fourier(us, model, contacts)
    k_c = 2.0 * np.eye(2)  # k_t per tangential direction
    np.testing.assert_allclose(fc.coeff_0, k_c @ us.coeff_0, atol=1e-13)
    for k in range(3):
        np.testing.assert_allclose(fc.coeff[k], k_c @ us.coeff[k],
                                   atol=1e-13)


def test_max_potential_energy_stick_closed_form():
    # pure real fundamental: E = 0.5 a^2 psi^T (K + K_c) psi
    model, contacts = one_element_model()
    a = 0.05
    psi = np.array([1.0, 0.4])
    us = motion(1, a * psi)
    k_stick = model.stick_stiffness()
    e_ref = 0.5 * a * a * psi @ k_stick @ psi
    assert max_potential_energy(us, model, contacts) == pytest.approx(
        e_ref, rel=1e-12)


# ----------------------------------------------------------- dissipativity


@given(seed=st.integers(0, 500), scale=st.floats(0.01, 3.0))
@settings(max_examples=40, deadline=None)
def test_dissipated_work_never_negative(seed, scale):
    model, contacts = one_element_model()
    us = random_motion(np.random.default_rng(seed), order=2, scale=scale)
    assert contact_dissipated_work(us, model, contacts) >= 0.0


# -------------------------------------------------------- rate independence


def test_march_is_rate_independent():
    # duplicating samples (dwell in time) leaves the tractions unchanged
    # up to the re-projection roundoff of saturated samples
    el = ContactElement(0, 1, k_t=0.9, f_lim=0.12)
    tau = np.linspace(0.0, 2.0 * np.pi, 200, endpoint=False)
    gaps = np.column_stack([0.3 * np.cos(tau) + 0.05 * np.sin(3 * tau),
                            0.2 * np.sin(tau)])
    p, _ = jenkins_march(gaps, el, TractionState.virgin())
    dup_idx = np.repeat(np.arange(200), 2)
    p_dup, _ = jenkins_march(gaps[dup_idx], el, TractionState.virgin())
    np.testing.assert_allclose(p_dup[::2], p, atol=1e-15)
    np.testing.assert_allclose(p_dup[1::2], p, atol=1e-15)


def test_march_state_chains_exactly():
    el = ContactElement(0, 1, k_t=0.9, f_lim=0.12)
    rng = np.random.default_rng(3)
    gaps = 0.4 * rng.standard_normal((100, 2))
    p_once, s_once = jenkins_march(gaps, el, TractionState.virgin())
    p_a, s_mid = jenkins_march(gaps[:60], el, TractionState.virgin())
    p_b, s_end = jenkins_march(gaps[60:], el, s_mid)
    np.testing.assert_array_equal(np.vstack([p_a, p_b]), p_once)
    np.testing.assert_array_equal(s_end.traction, s_once.traction)


def test_traction_never_exceeds_limit():
    el = ContactElement(0, 1, k_t=2.0, f_lim=0.5)
    rng = np.random.default_rng(9)
    gaps = rng.standard_normal((500, 2))
    p, _ = jenkins_march(gaps, el, TractionState.virgin())
    assert np.all(np.hypot(p[:, 0], p[:, 1]) <= 0.5 * (1 + 1e-12))


# -------------------------------------------------------------- march budget


def test_circular_creep_exhausts_cycle_budget():
    # continuous circular sliding barely past the slip radius relaxes the
    # traction direction slowly; a tight cycle cap must fail loudly
    model, contacts = one_element_model(k_t=0.9, f_lim=0.12)
    r = 1.01 * (0.12 / 0.9)
    us = motion(2, [r, -1j * r])
    with pytest.raises(ContactMarchError, match="not periodic within 10"):
        contact_force_fourier(us, model, contacts, AftConfig(max_cycles=10))
    contact_force_fourier(us, model, contacts)  # default budget settles


# ------------------------------------------------------------------ tangent


def test_jacobian_matches_finite_differences():
    model, contacts = one_element_model(k_t=0.9, f_lim=0.12)
    order = 2
    nf = flatten_count(order, 2)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(6):
        us = random_motion(rng, order=order, scale=0.12)
        jac = contact_jacobian(us, model, contacts)
        x0 = us.flatten()
        h = 1e-6
        for j in range(nf):
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            fp = contact_force_fourier(
                HarmonicSet.from_flat(xp, order, 2), model, contacts)
            fm = contact_force_fourier(
                HarmonicSet.from_flat(xm, order, 2), model, contacts)
            col = (fp.flatten() - fm.flatten()) / (2.0 * h)
            worst = max(worst, np.max(np.abs(jac[:, j] - col)))
    assert worst < 1e-6


def test_force_and_jacobian_consistent():
    model, contacts = one_element_model(k_t=0.9, f_lim=0.12)
    us = random_motion(np.random.default_rng(1), order=2, scale=0.2)
    fc, jac = contact_force_and_jacobian(us, model, contacts)
    fc_ref = contact_force_fourier(us, model, contacts)
    jac_ref = contact_jacobian(us, model, contacts)
    np.testing.assert_allclose(fc.flatten(), fc_ref.flatten(), atol=1e-14)
    np.testing.assert_allclose(jac, jac_ref, atol=1e-12)


# ------------------------------------------------------------- force content


def test_slipping_motion_generates_odd_harmonics():
    model, contacts = one_element_model(k_t=0.9, f_lim=0.12)
    us = motion(3, [1.0, 0.0])
    fc = contact_force_fourier(us, model, contacts)
    # symmetric orbit: third harmonic present, second absent
    assert np.max(np.abs(fc.coeff[2])) > 1e-3
    assert np.max(np.abs(fc.coeff[1])) < 1e-12


def test_steady_samples_shapes_and_limit():
    model, contacts = one_element_model()
    us = motion(2, [1.0, 0.3j])
    cfg = AftConfig(n_samples=64)
    gaps, tractions = steady_contact_samples(us, model, contacts, cfg)
    assert gaps.shape == (64, 1, 2) and tractions.shape == (64, 1, 2)
    assert np.all(np.hypot(tractions[:, 0, 0], tractions[:, 0, 1])
                  <= 0.6 + 1e-12)
