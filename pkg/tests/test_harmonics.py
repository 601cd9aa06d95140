"""Fourier coefficient container: layout, synthesis and phase rotation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flutterlco import HarmonicSet
from flutterlco.harmonics import flatten_count


def random_set(order, n, seed=0):
    rng = np.random.default_rng(seed)
    us = HarmonicSet.zeros(order, n)
    us.coeff_0 = rng.standard_normal(n)
    us.coeff = rng.standard_normal((order, n)) + 1j * rng.standard_normal(
        (order, n))
    return us


def direct_eval(us, tau, coord, derivative=0):
    """Reference synthesis straight from the trig definition."""
    val = us.coeff_0[coord] if derivative == 0 else 0.0
    for k in range(1, us.order + 1):
        c = us.coeff[k - 1, coord] * (1j * k) ** derivative
        val = val + np.real(c * np.exp(1j * k * tau))
    return val


@given(order=st.integers(0, 4), n=st.integers(1, 5),
       seed=st.integers(0, 1000))
def test_flatten_round_trip(order, n, seed):
    us = random_set(order, n, seed)
    back = HarmonicSet.from_flat(us.flatten(), order, n)
    np.testing.assert_array_equal(back.coeff_0, us.coeff_0)
    np.testing.assert_array_equal(back.coeff, us.coeff)


def test_flatten_layout():
    # mean block first, then interleaved Re/Im blocks per harmonic
    us = HarmonicSet.zeros(2, 2)
    us.coeff_0 = np.array([1.0, 2.0])
    us.coeff = np.array([[3.0 + 4.0j, 5.0 + 6.0j],
                         [7.0 + 8.0j, 9.0 + 10.0j]])
    np.testing.assert_array_equal(
        us.flatten(),
        [1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 7.0, 9.0, 8.0, 10.0])


def test_flat_index_addresses_flatten():
    us = random_set(3, 4, seed=5)
    x = us.flatten()
    idx = HarmonicSet.flat_index
    for coord in range(4):
        assert x[idx(3, 4, 0, coord)] == us.coeff_0[coord]
        for k in range(1, 4):
            re = x[idx(3, 4, k, coord)]
            im = x[idx(3, 4, k, coord, imag=True)]
            assert re + 1j * im == us.coeff[k - 1, coord]


def test_flat_index_rejects_out_of_range():
    with pytest.raises(ValueError):
        HarmonicSet.flat_index(2, 3, 3, 0)
    with pytest.raises(ValueError):
        HarmonicSet.flat_index(2, 3, 1, 3)


def test_flatten_count():
    assert flatten_count(0, 3) == 3
    assert flatten_count(2, 2) == 10
    assert flatten_count(3, 7) == (2 * 3 + 1) * 7


def test_from_flat_rejects_wrong_length():
    with pytest.raises(ValueError):
        HarmonicSet.from_flat(np.zeros(9), 2, 2)


def test_zeros_and_from_fundamental():
    us = HarmonicSet.zeros(3, 2)
    assert us.order == 3 and us.n_dofs == 2
    assert not np.any(us.flatten())
    u1 = np.array([1.0 + 2.0j, 3.0])
    us = HarmonicSet.from_fundamental(u1, order=2)
    np.testing.assert_array_equal(us.fundamental, u1)
    assert not np.any(us.coeff_0) and not np.any(us.coeff[1])


def test_fundamental_requires_order():
    us = HarmonicSet.zeros(0, 2)
    with pytest.raises(ValueError):
        us.fundamental


def test_amplitude_is_fundamental_magnitude():
    us = random_set(2, 3, seed=9)
    for j in range(3):
        assert us.amplitude(j) == pytest.approx(abs(us.coeff[0, j]), rel=0,
                                                abs=0)


@pytest.mark.parametrize("derivative", [0, 1, 2])
def test_synthesize_matches_direct_evaluation(derivative):
    us = random_set(3, 2, seed=3)
    n = 16
    samples = us.synthesize(n, derivative=derivative)
    tau = 2.0 * np.pi * np.arange(n) / n
    for coord in range(2):
        ref = [direct_eval(us, t, coord, derivative) for t in tau]
        np.testing.assert_allclose(samples[:, coord], ref, atol=1e-12)


def test_synthesize_rejects_undersampling():
    us = random_set(3, 2)
    with pytest.raises(ValueError):
        us.synthesize(6)


def test_rotate_composes_and_inverts():
    us = random_set(3, 2, seed=7)
    ab = us.rotate(0.4).rotate(1.1)
    once = us.rotate(1.5)
    np.testing.assert_allclose(ab.flatten(), once.flatten(), atol=1e-14)
    back = us.rotate(0.8).rotate(-0.8)
    np.testing.assert_allclose(back.flatten(), us.flatten(), atol=1e-14)


@given(theta=st.floats(-10.0, 10.0))
@settings(max_examples=30)
def test_rotate_preserves_amplitudes(theta):
    us = random_set(2, 3, seed=1)
    rot = us.rotate(theta)
    np.testing.assert_allclose(np.abs(rot.coeff), np.abs(us.coeff),
                               rtol=1e-13)
    np.testing.assert_array_equal(rot.coeff_0, us.coeff_0)


def test_rotate_shifts_time_origin():
    # u_rot(tau) must equal u(tau + theta) including higher harmonics
    us = random_set(3, 2, seed=11)
    theta = 0.83
    rot = us.rotate(theta)
    for tau in (0.0, 1.0, 2.5):
        for coord in range(2):
            assert direct_eval(rot, tau, coord) == pytest.approx(
                direct_eval(us, tau + theta, coord), abs=1e-12)


def test_copy_is_independent():
    us = random_set(2, 2)
    dup = us.copy()
    dup.coeff[0, 0] = 99.0
    dup.coeff_0[0] = 99.0
    assert us.coeff[0, 0] != 99.0 and us.coeff_0[0] != 99.0
