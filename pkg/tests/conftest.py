"""Shared fixtures: a two-coordinate contact model small enough that every
solver in the package runs on it in well under a second.

The model couples two mass-normalized coordinates through an off-diagonal
stiffness term and closes one friction element across them, so both the
sticking and the slipping eigenpairs are plain 2x2 results that tests can
check against scipy directly.  Aerodynamic influence matrices are built by
projecting prescribed modal damping ratios back through the mode shapes;
that keeps the intended stick/slip damping of each mode an exact input.
"""

import numpy as np
import pytest

from flutterlco import (
    AeroInfluenceModel,
    ContactElement,
    ContinuationConfig,
    ReducedModel,
    continue_backbone,
    conventional_energy_lco,
    generate_benchmark,
    linear_eigen,
    refined_energy_lco,
)


class PairModel:
    """Bundle of the 2-dof model and everything derived from it."""

    def __init__(self):
        self.mass = np.eye(2)
        self.stiffness = np.array([[1.0, 0.15], [0.15, 2.0]])
        self.contacts = (ContactElement(0, 1, k_t=0.9, f_lim=0.12),)
        self.model = ReducedModel(self.mass, self.stiffness,
                                  contacts=self.contacts,
                                  sensor_coord=0, dominant_coord=0)
        self.stick = [m for m in linear_eigen(self.model, "stick")
                      if not m.rigid]
        self.slip = [m for m in linear_eigen(self.model, "slip")
                     if not m.rigid]
        self.psi = self.stick[0].shape
        # fundamental modal amplitude at which the element first slips
        self.onset = self.contacts[0].f_lim / (
            self.contacts[0].k_t * np.hypot(self.psi[0], self.psi[1]))

    def modal_influence(self, kind: str, gains) -> np.ndarray:
        modes = self.stick if kind == "stick" else self.slip
        p = np.column_stack([m.shape for m in modes])
        g = np.diag(np.asarray(gains, complex))
        return self.mass @ p @ g @ p.T @ self.mass

    def make_aero(self, d_stick: float, d_slip: float,
                  d_other: float = 6e-3) -> AeroInfluenceModel:
        """Influence model whose loss factor on the target mode is
        ``d_stick`` at the sticking frequency and ``d_slip`` at the
        slipping one (negative = self-excited)."""
        g_st = [-1j * d * m.omega ** 2
                for d, m in zip((d_stick, d_other), self.stick)]
        g_sl = [-1j * d * m.omega ** 2
                for d, m in zip((d_slip, d_other), self.slip)]
        return AeroInfluenceModel(
            g_stick=self.modal_influence("stick", g_st),
            g_slip=self.modal_influence("slip", g_sl),
            omega_stick=self.stick[0].omega,
            omega_slip=self.slip[0].omega, nd=0)


@pytest.fixture(scope="session")
def pair():
    return PairModel()


@pytest.fixture(scope="session")
def pair_aero(pair):
    """Self-excited at both ends of the band: one stable limit cycle."""
    return pair.make_aero(-2e-3, -1e-3)


@pytest.fixture(scope="session")
def pair_aero_stable(pair):
    """Positive aero damping everywhere: no limit cycle."""
    return pair.make_aero(+3e-3, +2e-3)


@pytest.fixture(scope="session")
def pair_aero_edge(pair):
    """Damped at stick, strongly self-excited at slip: a stability limit."""
    return pair.make_aero(+2.5e-3, -5e-2)


@pytest.fixture(scope="session")
def pair_cfg():
    return ContinuationConfig(order=3)


@pytest.fixture(scope="session")
def pair_backbone(pair, pair_cfg):
    bb = continue_backbone(pair.model, pair.contacts, 0,
                           0.3 * pair.onset, 60.0 * pair.onset, pair_cfg)
    assert bb.complete
    return bb


@pytest.fixture(scope="session")
def pair_refined(pair, pair_backbone, pair_aero, pair_cfg):
    return refined_energy_lco(pair_backbone, pair_aero,
                              model=pair.model, contacts=pair.contacts,
                              epmc_cfg=pair_cfg)


@pytest.fixture(scope="session")
def pair_lco(pair_refined):
    assert len(pair_refined.lcos) == 1
    return pair_refined.lcos[0]


@pytest.fixture(scope="session")
def pair_conventional(pair, pair_aero):
    grid = np.geomspace(0.3 * pair.onset, 60.0 * pair.onset, 50)
    return conventional_energy_lco(pair.model, pair.contacts,
                                   pair.stick[0], pair_aero, grid)


@pytest.fixture(scope="session")
def bench_small():
    return generate_benchmark(1, size="small")
