"""Fully coupled frequency-domain flutter solver (serial alternation).

One outer iteration freezes the structural iterate, lets the flow
provider converge its force coefficients, builds a linearized force
functional around that exchange point, and re-solves the structural
equations with the frequency as unknown.  The functional is strictly
consistent: evaluated at the expansion point it reproduces the provider
force exactly, so a fixed point of the outer loop solves the true coupled
equations regardless of the linearization choice.  Three variants are
available:

* ``freq-dependent-G``: provider force plus the influence-matrix
  increment ``G(w) u1 - G(w_prev) u1_prev``.
* ``freq-independent-G``: same with the stick-reference matrix,
  dropping the frequency dependence.
* ``dominating-mode``: scales the provider force by the complex ratio of
  the dominant fundamental coefficient, ``f1 = f1_prev u1[i]/u1_prev[i]``.

Harmonics other than the fundamental are frozen at the exchanged values.
An under-relaxation factor applied to the structural update stabilizes
configurations where the plain alternation oscillates.

Per outer iteration, only the fundamental coefficients, the retained
harmonics and the frequency cross the interface; the trace records this
payload, ``(2 min(Hs, Ha) + 1) N + 1`` real numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aero import (AeroForceFunctional, AeroInfluenceModel,
                   complex_to_real_block, harmonic_supplied_work,
                   influence_matrix)
from .contact import AftConfig, contact_force_fourier, max_potential_energy
from .energy import EnergyLco, mac
from .epmc import Backbone, backbone_point_at
from .harmonics import HarmonicSet
from .hb import NewtonConfig, PhaseAnchor, rotate_to_anchor, solve_structural
from .model import ReducedModel, linear_eigen, recover_sensor_amplitude


__all__ = [
    "CoupledConfig",
    "CouplingTrace",
    "LcoSolution",
    "CoupledDivergenceError",
    "LINEARIZATION_VARIANTS",
    "linearize_aero",
    "coupled_solve",
    "initialize_from_backbone",
]


LINEARIZATION_VARIANTS = ("freq-dependent-G", "freq-independent-G",
                          "dominating-mode")


class CoupledDivergenceError(RuntimeError):
    """Outer loop failed; carries the trace accumulated so far."""

    def __init__(self, message: str, trace: "CouplingTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class CoupledConfig:
    """Outer-loop controls.

    ``eps_s`` and ``eps_a`` are the inner structural/fluid residual
    tolerances; ``eps_omega`` and ``eps_u`` the relative outer step
    tolerances on frequency and flattened coefficients (scaled by the
    dominant amplitude).  ``relax`` under-relaxes the structural update.
    """

    anchor: PhaseAnchor
    eps_s: float = 1e-11
    eps_a: float = 1e-10
    eps_omega: float = 1e-12
    eps_u: float = 1e-12
    max_outer: int = 50
    linearization: str = "freq-dependent-G"
    relax: float = 1.0
    order: int = 1
    aft: AftConfig = field(default_factory=AftConfig)
    newton: NewtonConfig | None = None

    def __post_init__(self):
        for name in ("eps_s", "eps_a", "eps_omega", "eps_u"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.relax <= 1.0:
            raise ValueError("relaxation factor must lie in (0, 1]")
        if self.linearization not in LINEARIZATION_VARIANTS:
            raise ValueError(
                f"unknown linearization {self.linearization!r}; choose from "
                f"{LINEARIZATION_VARIANTS}"
            )
        if self.order < 1:
            raise ValueError("harmonic order must be at least 1")


@dataclass
class CouplingTrace:
    """Outer-iteration history of one coupled solve."""

    omega: list[float] = field(default_factory=list)
    amplitude: list[float] = field(default_factory=list)
    delta_omega: list[float] = field(default_factory=list)
    delta_u: list[float] = field(default_factory=list)
    structural_residual: list[float] = field(default_factory=list)
    structural_iterations: list[int] = field(default_factory=list)
    fluid_iterations: list[int] = field(default_factory=list)
    fluid_residuals: list[list[float]] = field(default_factory=list)
    payload_size: int = 0
    outer_iterations: int = 0
    converged: bool = False


@dataclass
class LcoSolution:
    """Converged coupled limit cycle with energy and shape diagnostics."""

    uset: HarmonicSet
    omega: float
    amplitude: float
    sensor_amplitude: float
    d_s: float
    d_a: float
    w_s: float
    w_a: float
    e_p_max: float
    balance_residual: float
    mac_stick: float
    stick_mode_index: int
    outer_iterations: int
    mac_nl: float | None = None


# ----------------------------------------------------------------------
# linearized force functionals around an exchange point
# ----------------------------------------------------------------------


class _FrozenHarmonics(AeroForceFunctional):
    def __init__(self, f_m: HarmonicSet):
        self._frozen = f_m.copy()
        self._frozen.coeff[0] = 0.0

    def frozen(self, order: int, n_dofs: int) -> HarmonicSet:
        out = HarmonicSet.zeros(order, n_dofs)
        out.coeff_0 = self._frozen.coeff_0.copy()
        kmax = min(order, self._frozen.order)
        out.coeff[:kmax] = self._frozen.coeff[:kmax]
        return out


class _InfluenceShiftAero(_FrozenHarmonics):
    """f1(u1, w) = f1_m + G(w) u1 - G(w_prev) u1_prev."""

    def __init__(self, f_m, u1_prev, omega_prev, aero, freq_dependent):
        super().__init__(f_m)
        self.aero = aero
        self.freq_dependent = freq_dependent
        g_prev = influence_matrix(aero, omega_prev, freq_dependent)
        self.offset = f_m.coeff[0] - g_prev @ u1_prev

    def force1(self, u1, omega):
        g = influence_matrix(self.aero, omega, self.freq_dependent)
        return self.offset + g @ u1

    def jac_real(self, u1, omega):
        return complex_to_real_block(
            influence_matrix(self.aero, omega, self.freq_dependent))

    def dforce1_domega(self, u1, omega):
        if not self.freq_dependent:
            return np.zeros_like(np.asarray(u1, dtype=complex))
        return self.aero.slope @ u1


class _DominatingModeAero(_FrozenHarmonics):
    """f1(u1, w) = f1_m * u1[i] / u1_prev[i]."""

    def __init__(self, f_m, u1_prev, dominant_coord):
        super().__init__(f_m)
        z = complex(u1_prev[dominant_coord])
        if z == 0:
            raise ValueError("dominant fundamental coefficient is zero; "
                             "the scaling linearization is undefined")
        self.i = dominant_coord
        self.gain = f_m.coeff[0] / z

    def force1(self, u1, omega):
        return self.gain * u1[self.i]

    def jac_real(self, u1, omega):
        a = np.zeros((u1.shape[0], u1.shape[0]), dtype=complex)
        a[:, self.i] = self.gain
        return complex_to_real_block(a)

    def dforce1_domega(self, u1, omega):
        return np.zeros_like(np.asarray(u1, dtype=complex))


def linearize_aero(f_m: HarmonicSet, u_prev: HarmonicSet, omega_prev: float,
                   variant: str, aero: AeroInfluenceModel | None = None,
                   dominant_coord: int | None = None) -> AeroForceFunctional:
    """Build the force functional expanded around an exchange point.

    Whatever the variant, evaluating the functional at
    ``(u_prev, omega_prev)`` reproduces ``f_m`` exactly; this consistency
    makes the converged coupled solution independent of the choice.
    """
    u1_prev = u_prev.fundamental
    if variant == "freq-dependent-G":
        if aero is None:
            raise ValueError("influence model required for this variant")
        return _InfluenceShiftAero(f_m, u1_prev, omega_prev, aero, True)
    if variant == "freq-independent-G":
        if aero is None:
            raise ValueError("influence model required for this variant")
        return _InfluenceShiftAero(f_m, u1_prev, omega_prev, aero, False)
    if variant == "dominating-mode":
        if dominant_coord is None:
            raise ValueError("dominant coordinate required for this variant")
        return _DominatingModeAero(f_m, u1_prev, dominant_coord)
    raise ValueError(f"unknown linearization {variant!r}")


# ----------------------------------------------------------------------
# outer loop
# ----------------------------------------------------------------------


def _force_to_order(f: HarmonicSet, order: int, n: int) -> HarmonicSet:
    out = HarmonicSet.zeros(order, n)
    out.coeff_0 = f.coeff_0.copy()
    kmax = min(order, f.order)
    out.coeff[:kmax] = f.coeff[:kmax]
    return out


def _modal_amplitude(uset: HarmonicSet, model: ReducedModel) -> float:
    u1 = uset.fundamental
    return float(np.sqrt(np.real(np.vdot(u1, model.mass @ u1))))


def coupled_solve(model: ReducedModel, contacts, provider,
                  init: tuple[HarmonicSet, float], cfg: CoupledConfig
                  ) -> tuple[LcoSolution, CouplingTrace]:
    """Alternate provider and structural solves until both stop moving.

    ``provider`` must expose ``solve(uset, omega) -> (HarmonicSet, info)``
    with ``info['inner_iterations']`` and ``info['residual_history']``,
    the influence model as ``aero``, its harmonic order as ``order``, and
    the closed-form force law as ``target(uset, omega)`` for the final
    independent energy check.

    Convergence requires the relative frequency step below ``eps_omega``
    and the relative flattened-coefficient step below ``eps_u``.  On the
    iteration cap a ``CoupledDivergenceError`` carrying the trace is
    raised.
    """
    contacts = tuple(contacts)
    uset0, omega0 = init
    if uset0.order != cfg.order:
        uset0 = _force_to_order(uset0, cfg.order, uset0.n_dofs)
    u_prev = rotate_to_anchor(uset0, cfg.anchor)
    omega_prev = float(omega0)
    newton = cfg.newton or NewtonConfig(tol=cfg.eps_s)

    h_ex = min(cfg.order, getattr(provider, "order", cfg.order))
    trace = CouplingTrace(payload_size=(2 * h_ex + 1) * model.n_dofs + 1)

    for m in range(1, cfg.max_outer + 1):
        f_m, info = provider.solve(u_prev, omega_prev)
        f_m = _force_to_order(f_m, cfg.order, model.n_dofs)
        functional = linearize_aero(f_m, u_prev, omega_prev,
                                    cfg.linearization,
                                    aero=getattr(provider, "aero", None),
                                    dominant_coord=model.dominant_coord)
        sol = solve_structural(u_prev, omega_prev, functional, cfg.anchor,
                               model, contacts, newton, cfg.aft)
        flat_new = (cfg.relax * sol.uset.flatten()
                    + (1.0 - cfg.relax) * u_prev.flatten())
        u_new = HarmonicSet.from_flat(flat_new, cfg.order, model.n_dofs)
        omega_new = sol.omega

        amp_dom = abs(u_new.coeff[0][model.dominant_coord])
        d_omega = abs(omega_new - omega_prev) / max(abs(omega_prev), 1e-300)
        d_u = (float(np.linalg.norm(flat_new - u_prev.flatten()))
               / max(amp_dom, 1e-300))

        trace.omega.append(omega_new)
        trace.amplitude.append(amp_dom)
        trace.delta_omega.append(d_omega)
        trace.delta_u.append(d_u)
        trace.structural_residual.append(sol.residual_norm)
        trace.structural_iterations.append(sol.iterations)
        trace.fluid_iterations.append(int(info.get("inner_iterations", 0)))
        trace.fluid_residuals.append(list(info.get("residual_history", [])))
        trace.outer_iterations = m

        u_prev, omega_prev = u_new, omega_new
        if d_omega < cfg.eps_omega and d_u < cfg.eps_u:
            trace.converged = True
            break
    else:
        raise CoupledDivergenceError(
            f"outer loop did not converge within {cfg.max_outer} iterations "
            f"(last relative steps: omega {trace.delta_omega[-1]:.3e}, "
            f"u {trace.delta_u[-1]:.3e})",
            trace,
        )

    solution = _diagnose(u_prev, omega_prev, model, contacts, provider,
                         cfg, trace)
    return solution, trace


def _diagnose(uset: HarmonicSet, omega: float, model: ReducedModel,
              contacts, provider, cfg: CoupledConfig,
              trace: CouplingTrace) -> LcoSolution:
    """Energy and shape diagnostics, recomputed from scratch."""
    fc = contact_force_fourier(uset, model, contacts, cfg.aft)
    w_s = harmonic_supplied_work(uset, fc)
    fa = _force_to_order(provider.target(uset, omega), cfg.order,
                         model.n_dofs)
    w_a = harmonic_supplied_work(uset, fa)
    e_p = max_potential_energy(uset, model, contacts, cfg.aft)
    balance = abs(w_a - w_s) / max(abs(w_a), abs(w_s), 1e-300)

    amp = _modal_amplitude(uset, model)
    psi = uset.fundamental / amp
    best, best_idx = 0.0, -1
    for j, mode in enumerate(linear_eigen(model, "stick")):
        if mode.rigid:
            continue
        value = mac(psi, mode.shape.astype(complex))
        if value > best:
            best, best_idx = value, j

    return LcoSolution(
        uset=uset, omega=omega, amplitude=amp,
        sensor_amplitude=recover_sensor_amplitude(model, uset),
        d_s=w_s / (2.0 * np.pi * e_p), d_a=-w_a / (2.0 * np.pi * e_p),
        w_s=w_s, w_a=w_a, e_p_max=e_p, balance_residual=balance,
        mac_stick=best, stick_mode_index=best_idx,
        outer_iterations=trace.outer_iterations,
    )


def initialize_from_backbone(backbone: Backbone, lco: EnergyLco,
                             anchor: PhaseAnchor | None = None,
                             dominant_coord: int | None = None,
                             order: int | None = None,
                             ) -> tuple[HarmonicSet, float, PhaseAnchor]:
    """Starting point for the coupled solver from a refined limit cycle.

    Takes the full coefficient set of the refined LCO (or synthesizes it
    from the backbone at the LCO amplitude), rotates the global phase onto
    the anchor plane, and returns the anchored set, the frequency and the
    anchor.  When no anchor is given, one is created at half the dominant
    fundamental amplitude on ``dominant_coord``.
    """
    if lco.uset is not None:
        uset = lco.uset.copy()
    else:
        uset = backbone_point_at(backbone, lco.amplitude).uset
    if order is not None and order != uset.order:
        out = HarmonicSet.zeros(order, uset.n_dofs)
        out.coeff_0 = uset.coeff_0.copy()
        kmax = min(order, uset.order)
        out.coeff[:kmax] = uset.coeff[:kmax]
        uset = out
    omega = float(lco.omega)

    if anchor is None:
        if dominant_coord is None:
            raise ValueError("need either an anchor or a dominant coordinate")
        amp = abs(uset.coeff[0][dominant_coord])
        if amp == 0.0:
            raise ValueError("dominant coefficient vanishes at the LCO")
        anchor = PhaseAnchor(coord=dominant_coord, value=0.5 * amp)
    return rotate_to_anchor(uset, anchor), omega, anchor
