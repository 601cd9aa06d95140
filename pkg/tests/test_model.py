"""Reduced sector model: assembly, reduction, linearized eigensolutions."""

import numpy as np
import pytest
import scipy.linalg

from flutterlco import (
    ContactElement,
    HarmonicSet,
    ReducedModel,
    assemble_dynamic_stiffness,
    craig_bampton_reduce,
    linear_eigen,
    recover_sensor_amplitude,
)


def chain(n):
    """Uniform spring-mass chain fixed at the far end, free at dof 0."""
    k = 2.0 * np.eye(n)
    k[0, 0] = 1.0
    for j in range(n - 1):
        k[j, j + 1] = k[j + 1, j] = -1.0
    return np.eye(n), k


# ---------------------------------------------------------------- elements


def test_contact_element_validation():
    with pytest.raises(ValueError):
        ContactElement(1, 1, k_t=1.0, f_lim=1.0)
    with pytest.raises(ValueError):
        ContactElement(0, 1, k_t=0.0, f_lim=1.0)
    with pytest.raises(ValueError):
        ContactElement(0, 1, k_t=1.0, f_lim=-2.0)
    el = ContactElement(3, 5, k_t=1.0, f_lim=1.0)
    assert el.coords == (3, 5)


def test_reduced_model_validation():
    with pytest.raises(ValueError, match="square"):
        ReducedModel(np.zeros((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError, match="shapes differ"):
        ReducedModel(np.eye(2), np.eye(3))
    with pytest.raises(ValueError, match="outside model"):
        ReducedModel(np.eye(2), np.eye(2),
                     contacts=(ContactElement(0, 2, k_t=1.0, f_lim=1.0),))
    with pytest.raises(ValueError, match="sensor_coord"):
        ReducedModel(np.eye(2), np.eye(2), sensor_coord=2)


def test_validate_spd_names_the_violation():
    m, k = np.eye(2), np.eye(2)
    bad_m = m.copy()
    bad_m[0, 1] = 0.5
    with pytest.raises(ValueError, match="mass matrix is not symmetric"):
        ReducedModel(bad_m, k).validate_spd()
    with pytest.raises(ValueError, match="not positive definite"):
        ReducedModel(np.diag([1.0, -1.0]), k).validate_spd()
    bad_k = k.copy()
    bad_k[1, 0] = 0.3
    with pytest.raises(ValueError, match="stiffness matrix is not symmetric"):
        ReducedModel(m, bad_k).validate_spd()
    with pytest.raises(ValueError, match="not positive semidefinite"):
        ReducedModel(m, np.diag([1.0, -0.5])).validate_spd()
    ReducedModel(m, np.diag([1.0, 0.0])).validate_spd()  # semidefinite ok


# ---------------------------------------------------- dynamic stiffness


def test_dynamic_stiffness_cancellation():
    model = ReducedModel(np.eye(2), np.eye(2))
    np.testing.assert_array_equal(
        assemble_dynamic_stiffness(model, 1.0, 1), np.zeros((2, 2)))
    np.testing.assert_array_equal(
        assemble_dynamic_stiffness(model, 1.0, 0), model.stiffness)
    model = ReducedModel(np.diag([2.0, 2.0]), np.diag([8.0, 8.0]))
    np.testing.assert_array_equal(
        assemble_dynamic_stiffness(model, 1.0, 2), np.zeros((2, 2)))


def test_dynamic_stiffness_validation():
    model = ReducedModel(np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        assemble_dynamic_stiffness(model, -1.0, 1)
    with pytest.raises(ValueError):
        assemble_dynamic_stiffness(model, 1.0, -1)


# ------------------------------------------------------------- reduction


def test_craig_bampton_all_interface_is_identity():
    m, k = chain(4)
    red, t_cb = craig_bampton_reduce(m, k, np.arange(4), 0)
    np.testing.assert_array_equal(t_cb, np.eye(4))
    np.testing.assert_allclose(red.mass, m, atol=1e-14)
    np.testing.assert_allclose(red.stiffness, k, atol=1e-14)


def test_craig_bampton_complete_basis_is_exact():
    # keeping every interior mode reproduces the full spectrum
    m, k = chain(3)
    red, t_cb = craig_bampton_reduce(m, k, np.array([0]), 2)
    full = np.sqrt(scipy.linalg.eigvalsh(k, m))
    reduced = np.sqrt(scipy.linalg.eigvalsh(red.stiffness, red.mass))
    np.testing.assert_allclose(reduced, full, atol=1e-10)
    assert t_cb.shape == (3, 3)


def test_craig_bampton_truncated_is_upper_bound():
    m, k = chain(6)
    red, _ = craig_bampton_reduce(m, k, np.array([0]), 2)
    full = np.sqrt(scipy.linalg.eigvalsh(k, m))
    reduced = np.sqrt(scipy.linalg.eigvalsh(red.stiffness, red.mass))
    # Rayleigh-Ritz: reduced frequencies bound the full ones from above
    assert np.all(reduced[: full.size] >= full[: reduced.size] - 1e-12)
    np.testing.assert_allclose(reduced[0], full[0], rtol=1e-3)


def test_craig_bampton_statics_exact():
    # constraint modes make the interface static response exact
    m, k = chain(5)
    red, t_cb = craig_bampton_reduce(m, k, np.array([0]), 1)
    f_full = np.zeros(5)
    f_full[0] = 1.0
    u_full = np.linalg.solve(k, f_full)
    u_red = np.linalg.solve(red.stiffness, t_cb.T @ f_full)
    assert (t_cb @ u_red)[0] == pytest.approx(u_full[0], abs=1e-12)


def test_craig_bampton_decoupled_interior_has_zero_static_modes():
    m = np.eye(3)
    k = np.diag([1.0, 2.0, 3.0])
    red, t_cb = craig_bampton_reduce(m, k, np.array([0]), 1)
    np.testing.assert_array_equal(t_cb[1:, 0], np.zeros(2))


def test_craig_bampton_validation():
    m, k = chain(3)
    with pytest.raises(ValueError, match="duplicates"):
        craig_bampton_reduce(m, k, np.array([0, 0]), 1)
    with pytest.raises(ValueError, match="out of range"):
        craig_bampton_reduce(m, k, np.array([3]), 1)
    with pytest.raises(ValueError, match="n_fixed_modes"):
        craig_bampton_reduce(m, k, np.array([0]), 5)


# ------------------------------------------------------------ eigenpairs


def test_scalar_analog_frequencies():
    # decoupled coordinates: contact spring k_t=3 on a unit oscillator
    # shifts omega from 1 (slip) to sqrt(1+3)=2 (stick)
    model = ReducedModel(np.eye(2), np.diag([1.0, 5.0]),
                         contacts=(ContactElement(0, 1, k_t=3.0, f_lim=1.0),))
    stick = linear_eigen(model, "stick")
    slip = linear_eigen(model, "slip")
    assert stick[0].omega == pytest.approx(2.0, abs=1e-12)
    assert slip[0].omega == pytest.approx(1.0, abs=1e-12)
    assert stick[1].omega == pytest.approx(np.sqrt(8.0), abs=1e-12)
    assert slip[1].omega == pytest.approx(np.sqrt(5.0), abs=1e-12)


def test_frequencies_do_not_depend_on_slip_limit(pair):
    hi = ReducedModel(pair.mass, pair.stiffness,
                      contacts=(ContactElement(0, 1, k_t=0.9, f_lim=99.0),))
    for kind in ("stick", "slip"):
        a = [m.omega for m in linear_eigen(pair.model, kind)]
        b = [m.omega for m in linear_eigen(hi, kind)]
        assert a == b


def test_no_contacts_makes_states_identical():
    model = ReducedModel(*chain(3))
    stick = linear_eigen(model, "stick")
    slip = linear_eigen(model, "slip")
    for a, b in zip(stick, slip):
        assert a.omega == b.omega
        np.testing.assert_array_equal(a.shape, b.shape)


def test_stick_bounds_slip_mode_by_mode():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((4, 4))
    mass = a @ a.T + 4.0 * np.eye(4)
    b = rng.standard_normal((4, 4))
    stiff = b @ b.T + np.eye(4)
    contacts = (ContactElement(0, 2, k_t=1.7, f_lim=1.0),
                ContactElement(1, 3, k_t=0.4, f_lim=1.0))
    model = ReducedModel(mass, stiff, contacts=contacts)
    stick = linear_eigen(model, "stick")
    slip = linear_eigen(model, "slip")
    for s, f in zip(stick, slip):
        assert s.omega >= f.omega - 1e-12


def test_modes_are_mass_normalized():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((3, 3))
    mass = a @ a.T + 3.0 * np.eye(3)
    model = ReducedModel(mass, chain(3)[1],
                         contacts=(ContactElement(0, 1, k_t=1.0, f_lim=1.0),))
    for kind in ("stick", "slip"):
        for m in linear_eigen(model, kind):
            assert m.shape @ mass @ m.shape == pytest.approx(1.0, abs=1e-10)


def test_rigid_content_is_flagged():
    # contacts are the only ground path: slipping frees a rigid mode
    k_free = np.array([[1.0, -1.0], [-1.0, 1.0]])
    model = ReducedModel(np.eye(2), k_free,
                         contacts=(ContactElement(0, 1, k_t=2.0, f_lim=1.0),))
    slip = linear_eigen(model, "slip")
    assert slip[0].rigid and slip[0].omega == 0.0
    stick = linear_eigen(model, "stick")
    assert not any(m.rigid for m in stick)


def test_deterministic_orientation():
    # degenerate pair: vectors ordered by peak index, peak made positive
    model = ReducedModel(np.eye(2), np.eye(2))
    modes = linear_eigen(model, "slip")
    assert np.argmax(np.abs(modes[0].shape)) == 0
    assert np.argmax(np.abs(modes[1].shape)) == 1
    for m in modes:
        assert m.shape[np.argmax(np.abs(m.shape))] > 0


def test_linear_eigen_rejects_unknown_kind(pair):
    with pytest.raises(ValueError, match="stick"):
        linear_eigen(pair.model, "free")


def test_pair_model_reference_frequencies(pair):
    # frozen references for the shared 2-dof fixture
    assert pair.stick[0].omega == pytest.approx(1.3703958094486688, rel=1e-12)
    assert pair.stick[1].omega == pytest.approx(1.7093903373558443, rel=1e-12)
    assert pair.slip[0].omega == pytest.approx(0.9889310767462374, rel=1e-12)
    assert pair.slip[1].omega == pytest.approx(1.4219758526239212, rel=1e-12)


# ---------------------------------------------------------- sensor recovery


def test_sensor_amplitude_plain():
    model = ReducedModel(np.eye(2), np.eye(2), sensor_coord=1)
    us = HarmonicSet.from_fundamental(np.array([9.0, 3.0 + 4.0j]))
    assert recover_sensor_amplitude(model, us) == pytest.approx(5.0)
    assert recover_sensor_amplitude(
        model, HarmonicSet.zeros(1, 2)) == 0.0


def test_sensor_amplitude_phase_invariant():
    model = ReducedModel(np.eye(2), np.eye(2), sensor_coord=0)
    us = HarmonicSet.from_fundamental(np.array([1.0 + 2.0j, 0.5]))
    base = recover_sensor_amplitude(model, us)
    assert recover_sensor_amplitude(model, us.rotate(1.234)) == \
        pytest.approx(base, rel=1e-13)


def test_sensor_amplitude_through_recovery_matrix():
    t_cb = np.array([[0.0, 2.0], [1.0, 0.0], [3.0, 1.0]])
    model = ReducedModel(np.eye(2), np.eye(2), sensor_coord=0, t_cb=t_cb)
    us = HarmonicSet.from_fundamental(np.array([1.0, 1.0 + 1.0j]))
    # row 0 of the recovered vector is 2 * u1[1]
    assert recover_sensor_amplitude(model, us) == pytest.approx(
        2.0 * abs(1.0 + 1.0j), rel=1e-13)
