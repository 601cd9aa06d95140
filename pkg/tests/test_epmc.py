"""Nonlinear-mode backbone continuation and its invariants."""

import numpy as np
import pytest

from flutterlco import (
    Backbone,
    ContinuationConfig,
    HarmonicSet,
    backbone_point_at,
    backbone_query,
    contact_dissipated_work,
    continue_backbone,
    epmc_residual,
    max_potential_energy,
    solve_epmc_point,
)


def test_continuation_config_validation():
    with pytest.raises(ValueError):
        ContinuationConfig(order=0)
    with pytest.raises(ValueError):
        ContinuationConfig(tol=0.0)


def test_backbone_endpoints_and_monotonicity(pair, pair_backbone):
    a = pair_backbone.amplitudes
    w = pair_backbone.omegas
    assert a[0] == pytest.approx(0.3 * pair.onset, rel=1e-9)
    assert a[-1] == pytest.approx(60.0 * pair.onset, rel=1e-9)
    assert np.all(np.diff(a) > 0.0)
    # sticking limit reproduces the linear stick mode frequency
    assert w[0] == pytest.approx(pair.stick[0].omega, rel=1e-6)
    # softening: frequency never rises along the branch
    assert np.all(np.diff(w) <= 1e-12)
    # the slipping frequency is approached from above but never crossed
    w_slip = pair.slip[0].omega
    assert w[-1] >= w_slip * (1.0 - 1e-12)
    assert (w[-1] - w_slip) / w_slip < 5e-3


def test_backbone_shapes_mass_normalized(pair, pair_backbone):
    for p in pair_backbone.points:
        h = p.psi_nl.conj() @ (pair.mass @ p.psi_nl)
        assert abs(h - 1.0) <= 1e-8


def test_backbone_damping_nonnegative(pair_backbone):
    assert all(p.d_s >= 0.0 for p in pair_backbone.points)
    # sticking points at the bottom of the branch dissipate nothing
    assert pair_backbone.points[0].d_s == pytest.approx(0.0, abs=1e-12)
    assert max(p.d_s for p in pair_backbone.points) > 0.1


def test_backbone_energy_bookkeeping(pair, pair_backbone):
    from flutterlco import contact_force_fourier, harmonic_supplied_work

    # stored loss factor times 2 pi E equals independently recomputed
    # frequency-domain friction work
    for p in pair_backbone.points[:: max(1, len(pair_backbone.points) // 7)]:
        fc = contact_force_fourier(p.uset, pair.model, pair.contacts)
        w = harmonic_supplied_work(p.uset, fc)
        lhs = 2.0 * np.pi * p.e_p_max * p.d_s
        floor = 2.0 * np.pi * p.e_p_max * 1e-9
        assert abs(lhs - w) <= max(1e-6 * max(abs(lhs), abs(w)), floor)
        # the marched loop area agrees to quadrature accuracy only
        w_loop = contact_dissipated_work(p.uset, pair.model, pair.contacts)
        assert abs(w_loop - w) <= max(1e-3 * max(abs(w), 1e-30), floor)
        e_ref = max_potential_energy(p.uset, pair.model, pair.contacts)
        assert p.e_p_max == pytest.approx(e_ref, rel=1e-9)


def test_stick_residual_is_exactly_modal(pair):
    # below onset the EPMC equations reduce to the linear stick eigenpair
    a = 0.3 * pair.onset
    us = HarmonicSet.zeros(3, 2)
    us.coeff[0] = a * pair.psi.astype(complex)
    r = epmc_residual(us, pair.stick[0].omega, 0.0, pair.model, pair.contacts)
    assert np.linalg.norm(r.flatten()) < 1e-12 * a


def test_epmc_residual_dimension_check(pair):
    with pytest.raises(ValueError, match="dimension"):
        epmc_residual(HarmonicSet.zeros(1, 3), 1.0, 0.0, pair.model,
                      pair.contacts)


def test_continue_backbone_rejects_slipping_start(pair, pair_cfg):
    with pytest.raises(ValueError, match="slip"):
        continue_backbone(pair.model, pair.contacts, 0, 3.0 * pair.onset,
                          60.0 * pair.onset, pair_cfg)


def test_continue_backbone_rejects_bad_range(pair, pair_cfg):
    with pytest.raises(ValueError):
        continue_backbone(pair.model, pair.contacts, 0, 0.5 * pair.onset,
                          0.1 * pair.onset, pair_cfg)


def test_point_solve_between_nodes(pair, pair_backbone, pair_cfg):
    amps = pair_backbone.amplitudes
    k = len(amps) // 2
    a_mid = float(np.sqrt(amps[k] * amps[k + 1]))
    p = solve_epmc_point(pair.model, pair.contacts, a_mid,
                         pair_backbone.points[k], pair_cfg)
    assert p.amplitude == pytest.approx(a_mid, rel=1e-12)
    lo, hi = pair_backbone.points[k + 1].omega, pair_backbone.points[k].omega
    assert lo <= p.omega <= hi
    r = epmc_residual(p.uset, p.omega, p.xi, pair.model, pair.contacts,
                      pair_cfg.aft)
    assert np.linalg.norm(r.flatten()) < 1e-10
    h = p.psi_nl.conj() @ (pair.mass @ p.psi_nl)
    assert abs(h - 1.0) <= 1e-10


def test_backbone_query_interpolation(pair, pair_backbone):
    pts = pair_backbone.points
    # at stored amplitudes the query returns the stored values
    psi, omega, d_s = backbone_query(pair_backbone, pts[3].amplitude)
    assert omega == pytest.approx(pts[3].omega, rel=1e-12)
    assert d_s == pytest.approx(pts[3].d_s, rel=1e-9, abs=1e-15)
    # between nodes: frequency respects the bracketing values
    a_mid = 0.5 * (pts[3].amplitude + pts[4].amplitude)
    psi, omega, d_s = backbone_query(pair_backbone, a_mid)
    assert pts[4].omega <= omega <= pts[3].omega
    h = psi.conj() @ (pair.mass @ psi)
    assert abs(h - 1.0) <= 1e-12


def test_backbone_query_out_of_range(pair_backbone):
    with pytest.raises(ValueError):
        backbone_query(pair_backbone, 0.5 * pair_backbone.amplitudes[0])


def test_backbone_point_at_scales_fundamental(pair, pair_backbone):
    a = 2.0 * pair_backbone.amplitudes[0]
    p = backbone_point_at(pair_backbone, a)
    assert p.amplitude == pytest.approx(a, rel=1e-12)
    u1 = p.uset.fundamental
    amp = np.sqrt(np.real(u1.conj() @ (pair.mass @ u1)))
    assert amp == pytest.approx(a, rel=1e-9)


def test_backbone_validate_rejects_disorder(pair_backbone):
    pts = list(pair_backbone.points)
    bad = Backbone(points=[pts[1], pts[0]],
                   mode_index=pair_backbone.mode_index,
                   omega_stick=pair_backbone.omega_stick,
                   mass=pair_backbone.mass)
    with pytest.raises(ValueError):
        bad.validate()
