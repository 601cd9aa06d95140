"""Reduced-order sector models, contact topology and linear modal analysis.

A sector of a cyclically symmetric bladed disk is represented by a real,
symmetric reduced mass/stiffness pair.  The coordinate vector is ordered as
relative contact coordinates first (two tangential directions per contact
node pair) followed by generalized coordinates such as fixed-interface
modes.  Inter-blade phase effects enter only through the aerodynamic
influence matrices, never through the structural matrices, so all structure
matrices stay real.

Two linearized contact states bound the nonlinear behavior:

* ``stick``: every contact carries its tangential stiffness, obtained by
  adding ``k_t`` on each contact coordinate;
* ``slip``: contacts transmit no tangential force, plain ``K``.

The nonlinear modes computed elsewhere travel between these two limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .harmonics import HarmonicSet


__all__ = [
    "ContactElement",
    "LinearMode",
    "ReducedModel",
    "assemble_dynamic_stiffness",
    "craig_bampton_reduce",
    "linear_eigen",
    "recover_sensor_amplitude",
]

#: eigenvalues below this fraction of the largest are reported as rigid
_RIGID_REL_TOL = 1e-10


@dataclass(frozen=True)
class ContactElement:
    """One elastic dry-friction element acting on a contact node pair.

    The element couples two relative tangential coordinates of the model.
    Below the slip limit it acts as a spring of stiffness ``k_t`` per
    direction; the transmitted tangential force is capped at ``f_lim``
    in magnitude (Coulomb limit, normal load assumed constant).
    """

    coord_x: int
    coord_y: int
    k_t: float
    f_lim: float

    def __post_init__(self):
        if self.coord_x == self.coord_y:
            raise ValueError("contact element needs two distinct coordinates")
        if self.k_t <= 0.0:
            raise ValueError("tangential stiffness k_t must be positive")
        if self.f_lim <= 0.0:
            raise ValueError("slip limit f_lim must be positive")

    @property
    def coords(self) -> tuple[int, int]:
        return (self.coord_x, self.coord_y)


@dataclass
class LinearMode:
    """Mass-normalized eigenpair of a linearized contact state.

    Attributes
    ----------
    omega : float
        Angular eigenfrequency (0 for rigid-body content).
    shape : ndarray
        Mass-normalized eigenvector, ``shape^H M shape = 1``.
    kind : str
        ``"stick"`` or ``"slip"``.
    index : int
        Position in the ascending frequency ordering.
    rigid : bool
        True when the eigenvalue is numerically zero; such modes are
        rejected by the nonlinear methods.
    """

    omega: float
    shape: np.ndarray
    kind: str
    index: int
    rigid: bool = False


@dataclass
class ReducedModel:
    """Real symmetric reduced model of one sector.

    Parameters
    ----------
    mass, stiffness : ndarray, shape (N, N)
        Symmetric matrices; the mass matrix must be positive definite and
        the stiffness positive semidefinite.
    contacts : tuple of ContactElement
        Friction elements, each referencing two coordinates.
    sensor_coord : int
        Coordinate used for scalar amplitude reporting.  When ``t_cb`` is
        present it indexes rows of the recovered full-order vector.
    dominant_coord : int
        Coordinate with dominant participation in the mode family of
        interest; used for phase anchoring.
    t_cb : ndarray, optional
        Recovery matrix from reduced to full-order coordinates (for
        example the Craig-Bampton transformation), shape (N_full, N).
    labels : tuple of str, optional
        Coordinate names for reports.
    """

    mass: np.ndarray
    stiffness: np.ndarray
    contacts: tuple[ContactElement, ...] = ()
    sensor_coord: int = 0
    dominant_coord: int = 0
    t_cb: np.ndarray | None = None
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        self.stiffness = np.asarray(self.stiffness, dtype=float)
        if self.mass.ndim != 2 or self.mass.shape[0] != self.mass.shape[1]:
            raise ValueError("mass matrix must be square")
        if self.stiffness.shape != self.mass.shape:
            raise ValueError("stiffness and mass shapes differ")
        self.contacts = tuple(self.contacts)
        n = self.mass.shape[0]
        for el in self.contacts:
            if not (0 <= el.coord_x < n and 0 <= el.coord_y < n):
                raise ValueError("contact coordinate outside model dimension")
        for name, idx in (("sensor_coord", self.sensor_coord),
                          ("dominant_coord", self.dominant_coord)):
            limit = self.t_cb.shape[0] if (
                self.t_cb is not None and name == "sensor_coord") else n
            if not 0 <= idx < limit:
                raise ValueError(f"{name} out of range")

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def validate_spd(self, atol: float = 0.0) -> None:
        """Check symmetry, positive definite M and semidefinite K.

        Raises ``ValueError`` naming the violated property.  Called by the
        file loaders so malformed inputs fail with a clear message rather
        than deep inside an eigensolver.
        """
        if not np.allclose(self.mass, self.mass.T, rtol=0, atol=1e-12):
            raise ValueError("mass matrix is not symmetric")
        if not np.allclose(self.stiffness, self.stiffness.T, rtol=0, atol=1e-12):
            raise ValueError("stiffness matrix is not symmetric")
        m_eigs = scipy.linalg.eigvalsh(self.mass)
        if m_eigs[0] <= atol:
            raise ValueError("mass matrix is not positive definite")
        k_eigs = scipy.linalg.eigvalsh(self.stiffness)
        if k_eigs[0] < -1e-10 * max(abs(k_eigs[-1]), 1.0):
            raise ValueError("stiffness matrix is not positive semidefinite")

    def stick_stiffness(self) -> np.ndarray:
        """Stiffness with every contact's tangential springs engaged."""
        k = self.stiffness.copy()
        for el in self.contacts:
            k[el.coord_x, el.coord_x] += el.k_t
            k[el.coord_y, el.coord_y] += el.k_t
        return k


def assemble_dynamic_stiffness(model: ReducedModel, omega: float,
                               harmonic: int) -> np.ndarray:
    """Dynamic stiffness block ``S_k = K - (k omega)^2 M`` of one harmonic.

    The model carries no material damping, so the block is real symmetric
    and acts identically on the real and imaginary parts of a coefficient.
    """
    if omega < 0.0:
        raise ValueError("omega must be nonnegative")
    if harmonic < 0:
        raise ValueError("harmonic index must be nonnegative")
    w = harmonic * omega
    return model.stiffness - w * w * model.mass


def craig_bampton_reduce(mass: np.ndarray, stiffness: np.ndarray,
                         interface_dofs: np.ndarray,
                         n_fixed_modes: int) -> tuple[ReducedModel, np.ndarray]:
    """Reduce a full-order model with the Craig-Bampton transformation.

    The reduced basis combines static constraint modes (interior response
    to unit interface displacement) with the lowest fixed-interface normal
    modes of the interior partition:

        T = [ I    0   ]        Psi = -K_ii^-1 K_ib
            [ Psi  Phi ]

    Parameters
    ----------
    mass, stiffness : ndarray
        Full-order symmetric matrices.
    interface_dofs : array of int
        Indices retained as physical coordinates (the contact interface).
    n_fixed_modes : int
        Number of fixed-interface modes kept.

    Returns
    -------
    model : ReducedModel
        Reduced matrices in the order [interface, modal].  Contact
        elements, sensor and anchor coordinates are left at defaults for
        the caller to assign.
    t_cb : ndarray, shape (N_full, N_red)
        Recovery matrix ordered like the original full model.
    """
    mass = np.asarray(mass, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    n_full = mass.shape[0]
    b = np.asarray(interface_dofs, dtype=int)
    if b.size != np.unique(b).size:
        raise ValueError("interface dof list contains duplicates")
    if np.any(b < 0) or np.any(b >= n_full):
        raise ValueError("interface dof index out of range")
    i = np.setdiff1d(np.arange(n_full), b)
    if n_fixed_modes < 0 or n_fixed_modes > i.size:
        raise ValueError(
            f"n_fixed_modes must lie in [0, {i.size}] for this partition"
        )

    k_bb = stiffness[np.ix_(b, b)]
    t_cb = np.zeros((n_full, b.size + n_fixed_modes))
    t_cb[b, :b.size] = np.eye(b.size)

    if i.size:
        k_ii = stiffness[np.ix_(i, i)]
        k_ib = stiffness[np.ix_(i, b)]
        try:
            lu = scipy.linalg.lu_factor(k_ii)
        except scipy.linalg.LinAlgError as exc:
            raise ValueError("interior stiffness is singular") from exc
        if not np.all(np.isfinite(lu[0])):
            raise ValueError("interior stiffness is singular")
        psi = -scipy.linalg.lu_solve(lu, k_ib)
        t_cb[np.ix_(i, np.arange(b.size))] = psi
        if n_fixed_modes:
            m_ii = mass[np.ix_(i, i)]
            vals, vecs = scipy.linalg.eigh(k_ii, m_ii)
            phi = vecs[:, :n_fixed_modes]  # eigh returns M-orthonormal vectors
            t_cb[np.ix_(i, b.size + np.arange(n_fixed_modes))] = phi

    m_red = t_cb.T @ mass @ t_cb
    k_red = t_cb.T @ stiffness @ t_cb
    # enforce exact symmetry lost to roundoff
    m_red = 0.5 * (m_red + m_red.T)
    k_red = 0.5 * (k_red + k_red.T)
    return ReducedModel(m_red, k_red), t_cb


def _deterministic_orientation(vals: np.ndarray, vecs: np.ndarray,
                               rel_tol: float = 1e-9) -> np.ndarray:
    """Fix eigenvector signs and the ordering inside degenerate clusters.

    Each vector is scaled so its largest-magnitude component is positive;
    within a cluster of equal eigenvalues, vectors are ordered by the
    ascending index of that component.  This keeps repeated runs and
    platforms byte-comparable.
    """
    order = np.arange(vals.size)
    scale = max(abs(vals[-1]), 1.0)
    start = 0
    while start < vals.size:
        stop = start + 1
        while stop < vals.size and abs(vals[stop] - vals[start]) <= rel_tol * scale:
            stop += 1
        if stop - start > 1:
            peaks = [int(np.argmax(np.abs(vecs[:, j]))) for j in order[start:stop]]
            order[start:stop] = order[start:stop][np.argsort(peaks, kind="stable")]
        start = stop
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        peak = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[peak, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def linear_eigen(model: ReducedModel, kind: str) -> list[LinearMode]:
    """Mass-normalized modes of the fully sticking or fully slipping model.

    Parameters
    ----------
    model : ReducedModel
    kind : str
        ``"stick"`` adds every contact's tangential stiffness before the
        eigensolve, ``"slip"`` uses the plain stiffness.

    Returns
    -------
    list of LinearMode
        Ascending frequency.  Zero-frequency content (possible in the slip
        state when contacts were the only ground path) is flagged
        ``rigid`` and must not be used to seed nonlinear analyses.
    """
    if kind == "stick":
        k = model.stick_stiffness()
    elif kind == "slip":
        k = model.stiffness.copy()
    else:
        raise ValueError("kind must be 'stick' or 'slip'")
    vals, vecs = scipy.linalg.eigh(k, model.mass)
    vecs = _deterministic_orientation(vals, vecs)
    scale = max(abs(vals[-1]), 1.0)
    modes = []
    for j, lam in enumerate(vals):
        rigid = lam <= _RIGID_REL_TOL * scale
        omega = 0.0 if rigid else float(np.sqrt(lam))
        modes.append(LinearMode(omega=omega, shape=vecs[:, j].copy(),
                                kind=kind, index=j, rigid=rigid))
    return modes


def recover_sensor_amplitude(model: ReducedModel, motion: HarmonicSet) -> float:
    """Fundamental-harmonic amplitude at the model's sensor location.

    When the model carries a recovery matrix the fundamental coefficients
    are first mapped back to full-order coordinates; the sensor index then
    addresses the recovered vector.
    """
    c1 = motion.fundamental  # raises for order-0 input
    if model.t_cb is not None:
        c1 = model.t_cb @ c1
    return float(np.abs(c1[model.sensor_coord]))
