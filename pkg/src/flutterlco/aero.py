"""Aerodynamic influence forces, work and damping conventions.

The flow acts on the structure through an influence coefficient matrix G:
for fundamental motion ``u1`` the complex aerodynamic force coefficient is
``G u1``.  Two reference matrices are available, identified with the
linearized flow around the fully sticking and fully slipping structure, and
the matrix at an intermediate oscillation frequency is interpolated
linearly:

    G(w) = G_slip + (G_stick - G_slip) (w - w_slip) / (w_stick - w_slip).

Sign conventions used throughout the package:

* ``aero_work`` returns the energy per cycle supplied BY the flow TO the
  structure; positive values mean self-excitation.
* ``damping_ratio`` maps energy REMOVED per cycle to a loss factor
  ``D = W / (2 pi E)``.  Aerodynamic damping is therefore
  ``D_a = -supplied / (2 pi E)`` and a negative ``D_a`` indicates
  self-excitation.  At a limit cycle ``D_s + D_a = 0``.

A relaxation-based surrogate stands in for a nonlinear frequency-domain
flow solver: it converges its internal force state toward the influence
target through damped fixed-point iterations, exposing tolerance, iteration
counts and warm restarts exactly like a partitioned flow solver would.  An
optional cubic amplitude correction (``kappa``) makes its response depart
from the linear influence model so the coupling loop can be exercised
against a flow law the structural linearizations do not match.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .harmonics import HarmonicSet


__all__ = [
    "AeroInfluenceModel",
    "ExtrapolationWarning",
    "influence_matrix",
    "influence_force",
    "aero_work",
    "harmonic_supplied_work",
    "damping_ratio",
    "SurrogateFluidState",
    "surrogate_fluid_solve",
    "SurrogateFluidSolver",
    "DirectAeroProvider",
    "AeroForceFunctional",
    "ExactInfluenceAero",
    "complex_to_real_block",
]


class ExtrapolationWarning(UserWarning):
    """Influence matrix requested well outside its reference band."""


@dataclass
class AeroInfluenceModel:
    """Influence coefficient matrices of one inter-blade phase index.

    Attributes
    ----------
    g_stick, g_slip : ndarray, shape (N, N), complex
        Influence matrices linearized about the stick and slip states.
    omega_stick, omega_slip : float
        Reference frequencies the two matrices belong to.
    nd : int, optional
        Nodal diameter (inter-blade phase) label.
    """

    g_stick: np.ndarray
    g_slip: np.ndarray
    omega_stick: float
    omega_slip: float
    nd: int | None = None

    def __post_init__(self):
        self.g_stick = np.asarray(self.g_stick, dtype=complex)
        self.g_slip = np.asarray(self.g_slip, dtype=complex)
        if self.g_stick.ndim != 2 or self.g_stick.shape[0] != self.g_stick.shape[1]:
            raise ValueError("influence matrices must be square")
        if self.g_slip.shape != self.g_stick.shape:
            raise ValueError("stick and slip influence shapes differ")
        if self.omega_stick <= 0 or self.omega_slip <= 0:
            raise ValueError("reference frequencies must be positive")
        if self.omega_stick == self.omega_slip:
            raise ValueError("reference frequencies must differ")

    @property
    def n_dofs(self) -> int:
        return self.g_stick.shape[0]

    @property
    def slope(self) -> np.ndarray:
        """Frequency derivative of the interpolated matrix (constant)."""
        return (self.g_stick - self.g_slip) / (self.omega_stick - self.omega_slip)


def influence_matrix(aero: AeroInfluenceModel, omega: float,
                     freq_dependent: bool = True) -> np.ndarray:
    """Influence matrix at an oscillation frequency.

    With ``freq_dependent`` off the stick-reference matrix is returned
    regardless of ``omega`` (frequency-constant variant).  Requests more
    than 20 percent outside the band spanned by the two references emit an
    ``ExtrapolationWarning``; the linear form is evaluated anyway.
    """
    if not freq_dependent:
        return aero.g_stick.copy()
    lo = 0.8 * min(aero.omega_stick, aero.omega_slip)
    hi = 1.2 * max(aero.omega_stick, aero.omega_slip)
    if not lo <= omega <= hi:
        warnings.warn(
            f"influence matrix extrapolated to omega={omega:g}, reference "
            f"band [{aero.omega_slip:g}, {aero.omega_stick:g}]",
            ExtrapolationWarning, stacklevel=2,
        )
    s = (omega - aero.omega_slip) / (aero.omega_stick - aero.omega_slip)
    # two-term form keeps both reference points bitwise exact
    return (1.0 - s) * aero.g_slip + s * aero.g_stick


def influence_force(aero: AeroInfluenceModel, u1: np.ndarray, omega: float,
                    freq_dependent: bool = True,
                    kappa: float = 0.0) -> np.ndarray:
    """Fundamental aerodynamic force coefficient for motion ``u1``.

    The optional cubic correction scales the linear force by
    ``1 + kappa |u1|^2``; it is a solver-exercise knob, zero by default.
    """
    u1 = np.asarray(u1, dtype=complex)
    g = influence_matrix(aero, omega, freq_dependent)
    scale = 1.0 + kappa * float(np.real(np.vdot(u1, u1)))
    return scale * (g @ u1)


def aero_work(u1: np.ndarray, f1: np.ndarray) -> float:
    """Work per cycle done by a fundamental force on fundamental motion.

    For ``u(t) = Re{u1 e^(i w t)}`` and ``f(t) = Re{f1 e^(i w t)}`` the
    cycle integral of velocity times force is ``pi Im{u1^H f1}``,
    independent of the frequency.  Positive values mean the force feeds
    energy into the motion.
    """
    return float(np.pi * np.imag(np.vdot(u1, f1)))


def harmonic_supplied_work(motion: HarmonicSet, force: HarmonicSet) -> float:
    """Cycle work of a periodic force on a periodic motion, all harmonics.

    Extends ``aero_work`` by orthogonality: harmonic k contributes
    ``pi k Im{u_k^H f_k}``; the zeroth harmonic does no net work.  Exact
    for the truncated representations, no sampling involved.
    """
    order = min(motion.order, force.order)
    w = 0.0
    for k in range(1, order + 1):
        w += k * float(np.imag(np.vdot(motion.coeff[k - 1], force.coeff[k - 1])))
    return float(np.pi) * w


def damping_ratio(work_removed: float, e_p_max: float) -> float:
    """Loss factor of a cyclic energy flow: ``D = W / (2 pi E_p,max)``.

    ``work_removed`` is energy extracted from the vibration per cycle, so
    friction yields nonnegative values.  Pass the negated supplied aero
    work to obtain the aerodynamic damping ratio (negative when the flow
    excites the structure).
    """
    if e_p_max <= 0.0:
        raise ValueError("peak potential energy must be positive")
    return float(work_removed / (2.0 * np.pi * e_p_max))


# ----------------------------------------------------------------------
# surrogate frequency-domain flow solver
# ----------------------------------------------------------------------


@dataclass
class SurrogateFluidState:
    """Persistent internal state of the surrogate flow solver.

    Carrying the force estimate across calls gives warm restarts: a call
    whose target is already matched converges in a single inner iteration.
    """

    force: HarmonicSet | None = None
    residual_history: list[float] = field(default_factory=list)
    inner_iterations: int = 0
    total_inner: int = 0


def surrogate_fluid_solve(uset: HarmonicSet, omega: float,
                          state: SurrogateFluidState | None,
                          aero: AeroInfluenceModel,
                          rho_f: float = 0.5,
                          kappa: float = 0.0,
                          eps_a: float = 1e-10,
                          order: int = 2,
                          freq_dependent: bool = True,
                          max_inner: int = 100000,
                          ) -> tuple[HarmonicSet, SurrogateFluidState]:
    """Relax the internal force state toward the influence target.

    The structural iterate ``(uset, omega)`` stays frozen during the inner
    iterations (serial coupling).  Each iteration applies

        s <- s + rho_f (t - s),      t = G(omega) u1 (1 + kappa |u1|^2)

    with all higher force harmonics of the target zero, and stops when the
    residual ``|t - s|`` drops below ``eps_a`` relative to the target
    norm.  The residual history decays geometrically with factor
    ``1 - rho_f``, hence monotonically.

    Returns the converged force set and the updated state.
    """
    if not 0.0 < rho_f <= 1.0:
        raise ValueError("relaxation factor rho_f must lie in (0, 1]")
    if uset.order < 1:
        raise ValueError("motion must carry a fundamental harmonic")

    target = HarmonicSet.zeros(order, uset.n_dofs)
    target.coeff[0] = influence_force(aero, uset.fundamental, omega,
                                      freq_dependent, kappa)
    t_flat = target.flatten()

    if state is None or state.force is None:
        s_flat = np.zeros_like(t_flat)
        prev_total = 0
    else:
        if state.force.order != order or state.force.n_dofs != uset.n_dofs:
            raise ValueError("surrogate state shape does not match request")
        s_flat = state.force.flatten()
        prev_total = state.total_inner

    t_norm = float(np.linalg.norm(t_flat))
    tol = eps_a * t_norm if t_norm > 0.0 else eps_a
    history: list[float] = []
    for _ in range(max_inner):
        s_flat = s_flat + rho_f * (t_flat - s_flat)
        r = float(np.linalg.norm(t_flat - s_flat))
        history.append(r)
        if r <= tol:
            break
    else:
        raise RuntimeError(
            f"surrogate flow solve did not reach eps_a={eps_a:g} within "
            f"{max_inner} inner iterations"
        )

    force = HarmonicSet.from_flat(s_flat, order, uset.n_dofs)
    new_state = SurrogateFluidState(
        force=force.copy(),
        residual_history=history,
        inner_iterations=len(history),
        total_inner=prev_total + len(history),
    )
    return force, new_state


class SurrogateFluidSolver:
    """Callable flow-solver facade with persistent warm-restart state.

    Instances satisfy the provider interface of the coupled solver: a
    ``solve(uset, omega)`` method returning the force coefficient set and
    an information record with inner iteration counts, plus ``target``
    exposing the closed-form force law for independent checks.
    """

    def __init__(self, aero: AeroInfluenceModel, rho_f: float = 0.5,
                 kappa: float = 0.0, eps_a: float = 1e-10, order: int = 2,
                 freq_dependent: bool = True, max_inner: int = 100000):
        self.aero = aero
        self.rho_f = rho_f
        self.kappa = kappa
        self.eps_a = eps_a
        self.order = order
        self.freq_dependent = freq_dependent
        self.max_inner = max_inner
        self.state = SurrogateFluidState()

    def reset(self) -> None:
        self.state = SurrogateFluidState()

    def target(self, uset: HarmonicSet, omega: float) -> HarmonicSet:
        """Closed-form force the relaxation converges to."""
        out = HarmonicSet.zeros(self.order, uset.n_dofs)
        out.coeff[0] = influence_force(self.aero, uset.fundamental, omega,
                                       self.freq_dependent, self.kappa)
        return out

    def solve(self, uset: HarmonicSet, omega: float
              ) -> tuple[HarmonicSet, dict]:
        force, self.state = surrogate_fluid_solve(
            uset, omega, self.state, self.aero, rho_f=self.rho_f,
            kappa=self.kappa, eps_a=self.eps_a, order=self.order,
            freq_dependent=self.freq_dependent, max_inner=self.max_inner,
        )
        info = {
            "inner_iterations": self.state.inner_iterations,
            "residual_history": list(self.state.residual_history),
        }
        return force, info


class DirectAeroProvider:
    """Provider that returns the influence-law force in one evaluation.

    Equivalent to a fully converged flow solve at every call; used when
    no inner relaxation behavior needs to be exercised.
    """

    def __init__(self, aero: AeroInfluenceModel, order: int = 2,
                 freq_dependent: bool = True, kappa: float = 0.0):
        self.aero = aero
        self.order = order
        self.freq_dependent = freq_dependent
        self.kappa = kappa

    def target(self, uset: HarmonicSet, omega: float) -> HarmonicSet:
        out = HarmonicSet.zeros(self.order, uset.n_dofs)
        out.coeff[0] = influence_force(self.aero, uset.fundamental, omega,
                                       self.freq_dependent, self.kappa)
        return out

    def solve(self, uset: HarmonicSet, omega: float
              ) -> tuple[HarmonicSet, dict]:
        return self.target(uset, omega), {
            "inner_iterations": 1,
            "residual_history": [0.0],
        }


# ----------------------------------------------------------------------
# aero force functionals consumed by the structural Newton solver
# ----------------------------------------------------------------------


def complex_to_real_block(a: np.ndarray) -> np.ndarray:
    """Real block form [[Re, -Im], [Im, Re]] of a complex linear map."""
    n = a.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = a.real
    out[:n, n:] = -a.imag
    out[n:, :n] = a.imag
    out[n:, n:] = a.real
    return out


class AeroForceFunctional:
    """Fundamental-harmonic aero force with consistent derivatives.

    Subclasses provide the force at harmonic one as a function of the
    fundamental motion coefficient and the frequency, its derivative in
    real block form, the frequency derivative, and frozen contributions
    for every other harmonic.  The structural solver treats instances as
    the complete aerodynamic right-hand side.
    """

    def force1(self, u1: np.ndarray, omega: float) -> np.ndarray:
        raise NotImplementedError

    def jac_real(self, u1: np.ndarray, omega: float) -> np.ndarray:
        """d [Re f1; Im f1] / d [Re u1; Im u1], shape (2N, 2N)."""
        raise NotImplementedError

    def dforce1_domega(self, u1: np.ndarray, omega: float) -> np.ndarray:
        raise NotImplementedError

    def frozen(self, order: int, n_dofs: int) -> HarmonicSet:
        """Force coefficients held fixed on harmonics k != 1."""
        return HarmonicSet.zeros(order, n_dofs)

    def assemble(self, uset: HarmonicSet, omega: float) -> HarmonicSet:
        """Full force coefficient set at the given structural iterate."""
        out = self.frozen(uset.order, uset.n_dofs)
        out.coeff[0] = self.force1(uset.fundamental, omega)
        return out


class ExactInfluenceAero(AeroForceFunctional):
    """Closed-form influence force ``G(omega) u1 (1 + kappa |u1|^2)``.

    Used for direct solves of the coupled frequency-domain equations when
    no partitioned flow solver is in the loop.
    """

    def __init__(self, aero: AeroInfluenceModel, freq_dependent: bool = True,
                 kappa: float = 0.0):
        self.aero = aero
        self.freq_dependent = freq_dependent
        self.kappa = kappa

    def force1(self, u1, omega):
        return influence_force(self.aero, u1, omega,
                               self.freq_dependent, self.kappa)

    def jac_real(self, u1, omega):
        g = influence_matrix(self.aero, omega, self.freq_dependent)
        scale = 1.0 + self.kappa * float(np.real(np.vdot(u1, u1)))
        block = complex_to_real_block(scale * g)
        if self.kappa != 0.0:
            gu = g @ u1
            lin = np.concatenate([gu.real, gu.imag])
            grad = 2.0 * self.kappa * np.concatenate([u1.real, u1.imag])
            block += np.outer(lin, grad)
        return block

    def dforce1_domega(self, u1, omega):
        if not self.freq_dependent:
            return np.zeros_like(np.asarray(u1, dtype=complex))
        scale = 1.0 + self.kappa * float(np.real(np.vdot(u1, u1)))
        return scale * (self.aero.slope @ u1)
