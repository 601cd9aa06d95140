"""Anchored Harmonic Balance solver on small closed-form cases."""

import numpy as np
import pytest

from flutterlco import (
    AnchorError,
    ContactElement,
    ExactInfluenceAero,
    HarmonicSet,
    NewtonConfig,
    NewtonDivergenceError,
    PhaseAnchor,
    ReducedModel,
    contact_force_fourier,
    hb_block_matrix,
    solve_structural,
    structural_residual,
)
from flutterlco import AeroInfluenceModel
from flutterlco.hb import rotate_to_anchor
from flutterlco.harmonics import flatten_count


@pytest.fixture
def stick_linear():
    """Two decoupled coordinates; the contact never slips (huge limit).

    With a frequency-independent real influence matrix the anchored HB
    equations in (u, omega^2) are exactly linear, so Newton must land in
    one step from any starting point.
    """
    contacts = (ContactElement(0, 1, k_t=0.5, f_lim=1e6),)
    model = ReducedModel(np.eye(2), np.diag([1.0, 3.0]), contacts=contacts,
                         sensor_coord=0, dominant_coord=0)
    g = AeroInfluenceModel(g_stick=np.array([[0.2, 0.0], [0.0, 0.0]]),
                           g_slip=np.array([[0.2, 0.0], [0.0, 0.0]]),
                           omega_stick=2.0, omega_slip=1.0)
    func = ExactInfluenceAero(g, freq_dependent=False)
    # K_stick = diag(1.5, 3.5); the force feeds only coordinate 0 and
    # enters the residual negatively:
    # (1.5 - w^2) u - 0.2 u = 0  ->  w = sqrt(1.3) on the anchored branch
    return model, contacts, func


# ----------------------------------------------------------- residual form


def test_residual_zero_at_equilibrium(pair):
    us = HarmonicSet.zeros(2, 2)
    us.coeff[0, 0] = 1e-30  # keep the contact march defined
    r = structural_residual(us, 1.0, HarmonicSet.zeros(2, 2), pair.model,
                            pair.contacts)
    assert np.linalg.norm(r.flatten()) < 1e-25


def test_residual_vanishes_for_constructed_stick_solution(pair):
    # pick a sub-onset motion and feed exactly the force that balances it
    us = HarmonicSet.zeros(2, 2)
    us.coeff[0] = 0.4 * pair.onset * pair.psi.astype(complex)
    omega = 1.1
    k_stick = pair.model.stick_stiffness()
    s1 = k_stick - omega ** 2 * pair.mass
    fa = HarmonicSet.zeros(2, 2)
    fa.coeff[0] = s1 @ us.coeff[0]
    r = structural_residual(us, omega, fa, pair.model, pair.contacts)
    assert np.linalg.norm(r.flatten()) < 1e-14


def test_residual_composition(pair):
    rng = np.random.default_rng(3)
    us = HarmonicSet.zeros(2, 2)
    us.coeff_0 = 0.02 * rng.standard_normal(2)
    us.coeff = 0.1 * (rng.standard_normal((2, 2))
                      + 1j * rng.standard_normal((2, 2)))
    fa = HarmonicSet.zeros(2, 2)
    fa.coeff = 0.05 * (rng.standard_normal((2, 2))
                       + 1j * rng.standard_normal((2, 2)))
    omega = 1.3
    r = structural_residual(us, omega, fa, pair.model, pair.contacts)
    s = hb_block_matrix(pair.model, omega ** 2, 2)
    fc = contact_force_fourier(us, pair.model, pair.contacts)
    expected = s @ us.flatten() + fc.flatten() - fa.flatten()
    np.testing.assert_allclose(r.flatten(), expected, atol=1e-13)


def test_block_matrix_structure(pair):
    nu = 1.69
    s = hb_block_matrix(pair.model, nu, 2)
    n = flatten_count(2, 2)
    assert s.shape == (n, n)
    k, m = pair.model.stiffness, pair.model.mass
    np.testing.assert_array_equal(s[:2, :2], k)
    for h in (1, 2):
        blk = k - (h * h * nu) * m
        base = 2 + 4 * (h - 1)
        np.testing.assert_array_equal(s[base:base + 2, base:base + 2], blk)
        np.testing.assert_array_equal(s[base + 2:base + 4, base + 2:base + 4],
                                      blk)
    np.testing.assert_array_equal(s, s.T)


# ----------------------------------------------------------- phase anchor


def test_rotate_to_anchor_places_real_positive():
    us = HarmonicSet.from_fundamental(
        np.array([0.6 * np.exp(1j * 2.2), 0.3 - 0.1j]), order=2)
    anchored = rotate_to_anchor(us, PhaseAnchor(0, 0.25))
    c = anchored.fundamental[0]
    assert c.real == pytest.approx(0.25)
    assert c.imag >= 0.0
    assert abs(c) == pytest.approx(0.6, rel=1e-12)


def test_rotate_to_anchor_rejects_small_amplitude():
    us = HarmonicSet.from_fundamental(np.array([0.1 + 0.0j, 0.0]), order=1)
    with pytest.raises(AnchorError):
        rotate_to_anchor(us, PhaseAnchor(0, 0.2))


def test_anchor_validation():
    with pytest.raises(ValueError):
        PhaseAnchor(0, 0.0)
    with pytest.raises(ValueError):
        PhaseAnchor(-1, 0.5)


# -------------------------------------------------------- one-step solves


@pytest.mark.parametrize("a,phi,omega0", [
    (0.7, 0.0, 1.1),
    (1.3, 1.1, 1.9),
    (0.4, -2.0, 0.8),
])
def test_linear_case_converges_in_one_step(stick_linear, a, phi, omega0):
    model, contacts, func = stick_linear
    us0 = HarmonicSet.from_fundamental(
        np.array([a * np.exp(1j * phi), 0.0]), order=1)
    sol = solve_structural(us0, omega0, func, PhaseAnchor(0, 0.3), model,
                           contacts)
    assert sol.iterations == 1
    assert sol.omega == pytest.approx(np.sqrt(1.3), rel=1e-12)
    assert abs(sol.uset.fundamental[1]) < 1e-12


def test_solution_satisfies_anchor_and_residual(pair, pair_aero, pair_lco):
    func = ExactInfluenceAero(pair_aero)
    anchor = PhaseAnchor(0, 0.5 * abs(pair_lco.uset.fundamental[0]))
    sol = solve_structural(pair_lco.uset, pair_lco.omega, func, anchor,
                           pair.model, pair.contacts)
    c = sol.uset.fundamental[0]
    assert c.real == pytest.approx(anchor.value, rel=1e-12)
    assert abs(c) >= anchor.value
    # independent residual recheck at the returned point
    fa = func.assemble(sol.uset, sol.omega)
    r = structural_residual(sol.uset, sol.omega, fa, pair.model,
                            pair.contacts)
    scale = 1.0 + np.linalg.norm(sol.uset.flatten())
    assert np.linalg.norm(r.flatten()) <= 1e-9 * scale


def test_phase_anchor_neutrality(pair, pair_aero, pair_lco):
    # rotating a converged solution and re-solving with the same anchor
    # must reproduce the frequency and every fundamental magnitude
    func = ExactInfluenceAero(pair_aero)
    anchor = PhaseAnchor(0, 0.5 * abs(pair_lco.uset.fundamental[0]))
    base = solve_structural(pair_lco.uset, pair_lco.omega, func, anchor,
                            pair.model, pair.contacts)
    mags = np.abs(base.uset.fundamental)
    for theta in (0.3, 2.0, 4.5):
        resolved = solve_structural(base.uset.rotate(theta), base.omega,
                                    func, anchor, pair.model, pair.contacts)
        assert resolved.omega == pytest.approx(base.omega, rel=1e-10)
        np.testing.assert_allclose(np.abs(resolved.uset.fundamental), mags,
                                   rtol=1e-9, atol=1e-14)


def test_anchor_above_start_amplitude_raises(pair, pair_aero, pair_lco):
    func = ExactInfluenceAero(pair_aero)
    big = PhaseAnchor(0, 2.0 * abs(pair_lco.uset.fundamental[0]))
    with pytest.raises(AnchorError):
        solve_structural(pair_lco.uset, pair_lco.omega, func, big,
                         pair.model, pair.contacts)


def test_fd_jacobian_reaches_same_solution(pair, pair_aero, pair_lco):
    func = ExactInfluenceAero(pair_aero)
    anchor = PhaseAnchor(0, 0.5 * abs(pair_lco.uset.fundamental[0]))
    start = pair_lco.uset.copy()
    start.coeff = start.coeff * 1.02
    start.coeff_0 = start.coeff_0 * 1.02
    w0 = 1.005 * pair_lco.omega
    sa = solve_structural(start, w0, func, anchor, pair.model, pair.contacts)
    sf = solve_structural(start, w0, func, anchor, pair.model, pair.contacts,
                          cfg=NewtonConfig(fd_jacobian=True))
    assert sf.omega == pytest.approx(sa.omega, rel=1e-10)
    np.testing.assert_allclose(sf.uset.flatten(), sa.uset.flatten(),
                               atol=1e-10)


def test_newton_budget_exhaustion_raises(pair, pair_aero, pair_lco):
    func = ExactInfluenceAero(pair_aero)
    anchor = PhaseAnchor(0, 0.5 * abs(pair_lco.uset.fundamental[0]))
    start = pair_lco.uset.copy()
    start.coeff = start.coeff * 1.06
    start.coeff_0 = start.coeff_0 * 1.06
    with pytest.raises(NewtonDivergenceError, match="Newton iterations"):
        solve_structural(start, 1.02 * pair_lco.omega, func, anchor,
                         pair.model, pair.contacts,
                         cfg=NewtonConfig(max_iter=3))


def test_solver_input_validation(pair, pair_aero):
    func = ExactInfluenceAero(pair_aero)
    anchor = PhaseAnchor(0, 0.1)
    us = HarmonicSet.from_fundamental(np.array([0.3 + 0.0j, 0.0]), order=1)
    with pytest.raises(ValueError, match="frequency"):
        solve_structural(us, -1.0, func, anchor, pair.model, pair.contacts)
    with pytest.raises(ValueError, match="fundamental"):
        solve_structural(HarmonicSet.zeros(0, 2), 1.0, func, anchor,
                         pair.model, pair.contacts)
    with pytest.raises(ValueError, match="anchor"):
        solve_structural(us, 1.0, func, PhaseAnchor(5, 0.1), pair.model,
                         pair.contacts)
