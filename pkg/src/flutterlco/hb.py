"""Structural Harmonic Balance residual and its anchored Newton solver.

The periodic structural equations in the frequency domain read, blockwise
per harmonic k,

    R_k = (K - (k w)^2 M) u_k + fc_k(u) - fa_k = 0,

with the contact coefficients evaluated by the alternating scheme.  Because
the equations are autonomous, the phase of the solution is free; the phase
anchor fixes the real part of one fundamental coefficient to a nonzero
value c, which removes the indeterminacy and excludes the trivial
equilibrium.  The anchored real part is eliminated from the unknown vector
(instead of appending a constraint row), which keeps the Jacobian square:
with the oscillation frequency appended the unknown count again equals the
equation count.

Internally the frequency enters through nu = w^2, so the dynamic stiffness
blocks are linear in the frequency unknown.  Newton then terminates in a
single step on configurations whose residual is linear, e.g. a fully
sticking scalar model under a frequency-independent real influence
coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .aero import AeroForceFunctional
from .contact import AftConfig, contact_force_and_jacobian, contact_force_fourier
from .harmonics import HarmonicSet, flatten_count
from .model import ReducedModel


__all__ = [
    "PhaseAnchor",
    "NewtonConfig",
    "AnchorError",
    "NewtonDivergenceError",
    "StructuralSolution",
    "rotate_to_anchor",
    "structural_residual",
    "solve_structural",
    "hb_block_matrix",
]


class AnchorError(RuntimeError):
    """Anchor value incompatible with the fundamental amplitude."""


class NewtonDivergenceError(RuntimeError):
    """Newton iteration failed; carries the best residual reached."""

    def __init__(self, message: str, iterations: int, residual_norm: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


@dataclass(frozen=True)
class PhaseAnchor:
    """Phase constraint Re{u_1[coord]} = value with value > 0."""

    coord: int
    value: float

    def __post_init__(self):
        if self.value <= 0.0:
            raise ValueError("anchor value must be positive")
        if self.coord < 0:
            raise ValueError("anchor coordinate must be a valid index")


@dataclass(frozen=True)
class NewtonConfig:
    """Controls of the anchored Newton iteration.

    ``tol`` is relative: the residual norm is compared against
    ``tol * (1 + |u|)`` so the same setting works at any amplitude.
    ``damping`` scales the first trial step; backtracking halves from
    there until the residual norm decreases.  With ``fd_jacobian`` the
    analytic Jacobian is replaced by central finite differences of the
    residual (a slow cross-check path).
    """

    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    fd_jacobian: bool = False
    fd_step: float = 1e-7
    min_step: float = 1.0 / 64.0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("residual tolerance must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping factor must lie in (0, 1]")


@dataclass
class StructuralSolution:
    """Converged anchored solution; iterates like the pair (uset, omega)."""

    uset: HarmonicSet
    omega: float
    iterations: int
    residual_norm: float
    info: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.uset, self.omega))


def rotate_to_anchor(uset: HarmonicSet, anchor: PhaseAnchor) -> HarmonicSet:
    """Rotate the global phase so Re{u_1[coord]} equals the anchor value.

    Among the two admissible phases the one with nonnegative imaginary
    part is chosen.  Raises ``AnchorError`` when the fundamental amplitude
    at the anchor coordinate is below the anchor value, since no rotation
    can then satisfy the constraint.
    """
    z = uset.coeff[0][anchor.coord]
    amp = abs(z)
    if amp < anchor.value * (1.0 - 1e-12):
        raise AnchorError(
            f"fundamental amplitude {amp:.3e} at coordinate {anchor.coord} "
            f"is below the anchor value {anchor.value:.3e}; lower the anchor"
        )
    target = np.arccos(min(anchor.value / amp, 1.0))
    theta = target - np.angle(z)
    out = uset.rotate(theta)
    out.coeff[0][anchor.coord] = anchor.value + 1j * out.coeff[0][anchor.coord].imag
    return out


def hb_block_matrix(model: ReducedModel, nu: float, order: int) -> np.ndarray:
    """Block-diagonal dynamic stiffness in the flattened layout.

    Block 0 is K; harmonic k contributes K - k^2 nu M twice (real and
    imaginary parts).  ``nu`` is the squared frequency.
    """
    n = model.n_dofs
    size = flatten_count(order, n)
    out = np.zeros((size, size))
    out[:n, :n] = model.stiffness
    for k in range(1, order + 1):
        s_k = model.stiffness - (k * k * nu) * model.mass
        for half in (0, 1):
            b = 2 * k - 1 + half
            out[b * n:(b + 1) * n, b * n:(b + 1) * n] = s_k
    return out


def structural_residual(uset: HarmonicSet, omega: float, f_a: HarmonicSet,
                        model: ReducedModel, contacts,
                        cfg: AftConfig | None = None) -> HarmonicSet:
    """Harmonic Balance residual S(w) u + fc(u) - fa, blockwise.

    ``f_a`` holds the aerodynamic force coefficients already evaluated at
    this iterate.  The result has the same shape as the motion set.
    """
    if f_a.order != uset.order or f_a.n_dofs != uset.n_dofs:
        raise ValueError("aero force shape does not match motion")
    if uset.n_dofs != model.n_dofs:
        raise ValueError("motion does not match model dimension")
    fc = contact_force_fourier(uset, model, contacts, cfg)
    res = HarmonicSet.zeros(uset.order, uset.n_dofs)
    res.coeff_0 = model.stiffness @ uset.coeff_0 + fc.coeff_0 - f_a.coeff_0
    for k in range(1, uset.order + 1):
        s_k = model.stiffness - (k * omega) ** 2 * model.mass
        res.coeff[k - 1] = (s_k @ uset.coeff[k - 1]
                            + fc.coeff[k - 1] - f_a.coeff[k - 1])
    return res


# ----------------------------------------------------------------------
# anchored Newton iteration
# ----------------------------------------------------------------------


def _aero_terms(aero_func: AeroForceFunctional | None, uset: HarmonicSet,
                omega: float):
    if aero_func is None:
        fa = HarmonicSet.zeros(uset.order, uset.n_dofs)
        return fa, None, None
    fa = aero_func.assemble(uset, omega)
    jac = aero_func.jac_real(uset.fundamental, omega)
    dfdw = aero_func.dforce1_domega(uset.fundamental, omega)
    return fa, jac, dfdw


def _flat_residual(flat: np.ndarray, nu: float, model: ReducedModel,
                   contacts, aero_func, order: int, aft: AftConfig,
                   ) -> np.ndarray:
    uset = HarmonicSet.from_flat(flat, order, model.n_dofs)
    omega = float(np.sqrt(nu))
    fc = contact_force_fourier(uset, model, contacts, aft)
    fa, _, _ = _aero_terms(aero_func, uset, omega)
    s = hb_block_matrix(model, nu, order)
    return s @ flat + fc.flatten() - fa.flatten()


def _flat_system(flat: np.ndarray, nu: float, model: ReducedModel,
                 contacts, aero_func, order: int, aft: AftConfig):
    """Residual, full Jacobian d R/d flat and column d R/d nu."""
    n = model.n_dofs
    uset = HarmonicSet.from_flat(flat, order, n)
    omega = float(np.sqrt(nu))
    fc, jc = contact_force_and_jacobian(uset, model, contacts, aft)
    fa, ja, dfdw = _aero_terms(aero_func, uset, omega)
    s = hb_block_matrix(model, nu, order)

    res = s @ flat + fc.flatten() - fa.flatten()
    jac = s + jc
    if ja is not None:
        jac[n:3 * n, n:3 * n] -= ja

    dnu = np.zeros_like(flat)
    for k in range(1, order + 1):
        for half in (0, 1):
            b = 2 * k - 1 + half
            seg = flat[b * n:(b + 1) * n]
            dnu[b * n:(b + 1) * n] = -(k * k) * (model.mass @ seg)
    if dfdw is not None:
        dfd_nu = dfdw / (2.0 * omega)
        dnu[n:2 * n] -= dfd_nu.real
        dnu[2 * n:3 * n] -= dfd_nu.imag
    return res, jac, dnu


def _fd_system(flat: np.ndarray, nu: float, model, contacts, aero_func,
               order: int, aft: AftConfig, h: float):
    """Finite-difference Jacobian cross-check path."""
    res = _flat_residual(flat, nu, model, contacts, aero_func, order, aft)
    m = flat.size
    jac = np.empty((m, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        rp = _flat_residual(flat + e, nu, model, contacts, aero_func, order, aft)
        rm = _flat_residual(flat - e, nu, model, contacts, aero_func, order, aft)
        jac[:, j] = (rp - rm) / (2.0 * h)
    hn = h * max(nu, 1.0)
    rp = _flat_residual(flat, nu + hn, model, contacts, aero_func, order, aft)
    rm = _flat_residual(flat, nu - hn, model, contacts, aero_func, order, aft)
    dnu = (rp - rm) / (2.0 * hn)
    return res, jac, dnu


def solve_structural(uset0: HarmonicSet, omega0: float,
                     aero_func: AeroForceFunctional | None,
                     anchor: PhaseAnchor, model: ReducedModel, contacts,
                     cfg: NewtonConfig | None = None,
                     aft: AftConfig | None = None) -> StructuralSolution:
    """Solve the anchored Harmonic Balance equations by damped Newton.

    The initial guess is rotated onto the anchor plane first.  Unknowns
    are the flattened coefficients with the anchored entry removed, plus
    the squared frequency.  Each step is backtracked until the residual
    norm decreases; failure to find a decreasing step or exhausting the
    iteration budget raises ``NewtonDivergenceError``.

    Returns a ``StructuralSolution``; its ``uset`` satisfies the anchor
    exactly and ``|u_1[coord]| >= value`` is verified on exit.
    """
    cfg = cfg or NewtonConfig()
    aft = aft or AftConfig()
    if uset0.order < 1:
        raise ValueError("need at least the fundamental harmonic")
    if omega0 <= 0.0:
        raise ValueError("initial frequency must be positive")
    if anchor.coord >= model.n_dofs:
        raise ValueError("anchor coordinate outside model")

    order, n = uset0.order, model.n_dofs
    a_idx = HarmonicSet.flat_index(order, n, 1, anchor.coord, imag=False)
    flat = rotate_to_anchor(uset0, anchor).flatten()
    nu = omega0 * omega0

    def residual_norm_at(x_flat, x_nu):
        r = _flat_residual(x_flat, x_nu, model, contacts, aero_func, order, aft)
        # tolerance acts relative to the motion level; an absolute test
        # would be unreachable at large amplitudes
        scale = 1.0 + float(np.linalg.norm(x_flat))
        return float(np.linalg.norm(r)), r, scale

    norm, res, scale = residual_norm_at(flat, nu)
    iterations = 0
    while True:
        if norm <= cfg.tol * scale:
            break
        if iterations >= cfg.max_iter:
            raise NewtonDivergenceError(
                f"no convergence in {cfg.max_iter} Newton iterations "
                f"(residual {norm:.3e}, tolerance {cfg.tol:g})",
                iterations, norm,
            )
        if cfg.fd_jacobian:
            res, jac, dnu = _fd_system(flat, nu, model, contacts, aero_func,
                                       order, aft, cfg.fd_step)
        else:
            res, jac, dnu = _flat_system(flat, nu, model, contacts, aero_func,
                                         order, aft)
        jx = np.column_stack([np.delete(jac, a_idx, axis=1), dnu])
        try:
            step = lu_solve(lu_factor(jx), -res)
        except Exception as exc:
            raise NewtonDivergenceError(
                f"singular Jacobian at iteration {iterations}: {exc}",
                iterations, norm,
            ) from exc

        d_flat = np.insert(step[:-1], a_idx, 0.0)
        d_nu = float(step[-1])
        s = cfg.damping
        accepted = False
        while s >= cfg.min_step:
            nu_t = nu + s * d_nu
            if nu_t <= 0.0:
                s *= 0.5
                continue
            flat_t = flat + s * d_flat
            norm_t, _, scale_t = residual_norm_at(flat_t, nu_t)
            if norm_t < norm * (1.0 - 1e-4 * s) or norm_t <= cfg.tol * scale_t:
                flat, nu, norm, scale = flat_t, nu_t, norm_t, scale_t
                accepted = True
                break
            s *= 0.5
        if not accepted:
            raise NewtonDivergenceError(
                f"line search stalled at iteration {iterations} "
                f"(residual {norm:.3e})",
                iterations, norm,
            )
        iterations += 1

    uset = HarmonicSet.from_flat(flat, order, n)
    amp = abs(uset.coeff[0][anchor.coord])
    if amp < anchor.value * (1.0 - 1e-12):
        raise AnchorError(
            f"converged amplitude {amp:.3e} below anchor value "
            f"{anchor.value:.3e}"
        )
    return StructuralSolution(uset=uset, omega=float(np.sqrt(nu)),
                              iterations=iterations, residual_norm=norm)
