"""Energy methods: locate limit cycles from work-balance curves.

Both methods compare the friction work dissipated per cycle with the work
the flow supplies, expressed as damping ratios over the peak potential
energy.  A limit cycle lives where the total damping

    D(a) = D_s(a) + D_a(a)

crosses zero; a positive slope at the crossing means perturbations decay
back onto the cycle (stable LCO), a negative slope marks a stability
limit beyond which vibrations grow.

The conventional method imposes the sticking linear mode shape and
frequency at every amplitude, so only the friction work varies.  The
refined method walks along a precomputed nonlinear-mode backbone, taking
the amplitude-dependent shape psi_nl(a) and frequency w_nl(a) into both
the friction damping and the aerodynamic work G(w_nl(a)); ablation flags
can freeze either quantity at its small-amplitude value to isolate their
influence.

Both methods use the same bookkeeping as the backbone computation: work
from harmonic coefficients, energy from the cycle maximum of the sampled
potential.  The reported limit cycles therefore balance the recomputed
works to the bisection tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .aero import (AeroInfluenceModel, aero_work, damping_ratio,
                   harmonic_supplied_work, influence_matrix)
from .contact import (AftConfig, contact_force_fourier, max_potential_energy,
                      steady_contact_samples)
from .epmc import (Backbone, BackbonePoint, ContinuationConfig,
                   ContinuationError, backbone_point_at, backbone_query,
                   solve_epmc_point)
from .harmonics import HarmonicSet
from .model import LinearMode, ReducedModel


__all__ = [
    "EnergyLco",
    "EnergyCurve",
    "EnergyMethodResult",
    "OUTCOME_LCOS",
    "OUTCOME_STABLE",
    "OUTCOME_UNBOUNDED",
    "mac",
    "classify_stability",
    "energy_balance_residual",
    "conventional_energy_lco",
    "refined_energy_lco",
]


OUTCOME_LCOS = "limit cycles found"
OUTCOME_STABLE = "stable for all amplitudes"
OUTCOME_UNBOUNDED = "unbounded growth predicted"


@dataclass
class EnergyLco:
    """One located limit cycle (or stability limit)."""

    amplitude: float
    omega: float
    stability: str
    d_s: float
    d_a: float
    shape: np.ndarray
    method: str
    e_p_max: float
    w_s: float
    w_a: float
    uset: HarmonicSet | None = None


@dataclass
class EnergyCurve:
    """Damping and work curves sampled over the amplitude grid."""

    amplitudes: np.ndarray
    omega: np.ndarray
    d_s: np.ndarray
    d_a: np.ndarray
    w_s: np.ndarray
    w_a: np.ndarray
    e_p_max: np.ndarray
    mac_vs_stick: np.ndarray

    @property
    def d_total(self) -> np.ndarray:
        return self.d_s + self.d_a


@dataclass
class EnergyMethodResult:
    """Limit cycles plus the curves they were read from."""

    lcos: list[EnergyLco]
    curve: EnergyCurve
    outcome: str
    extras: dict = field(default_factory=dict)


def energy_balance_residual(model: ReducedModel, contacts,
                            aero: AeroInfluenceModel, uset: HarmonicSet,
                            omega: float, freq_dependent: bool = True,
                            aft: AftConfig | None = None) -> float:
    """Relative work mismatch of a claimed limit cycle.

    Recomputed from the coefficients, the frequency and the influence law
    alone, bypassing whatever bookkeeping the reporting solver kept.  At a
    genuine limit cycle the marched friction work cancels the aero input
    and the value is at the solver tolerance.
    """
    fc = contact_force_fourier(uset, model, tuple(contacts),
                               aft or AftConfig())
    w_s = harmonic_supplied_work(uset, fc)
    u1 = uset.fundamental
    w_a = aero_work(u1, influence_matrix(aero, omega, freq_dependent) @ u1)
    return abs(w_a - w_s) / max(abs(w_a), abs(w_s), 1e-300)


def mac(psi1: np.ndarray, psi2: np.ndarray) -> float:
    """Modal assurance criterion |p1^H p2|^2 / (|p1|^2 |p2|^2) in [0, 1]."""
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.asarray(psi2, dtype=complex)
    n1 = float(np.real(np.vdot(psi1, psi1)))
    n2 = float(np.real(np.vdot(psi2, psi2)))
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("MAC of a zero vector is undefined")
    return float(min(abs(np.vdot(psi1, psi2)) ** 2 / (n1 * n2), 1.0))


def classify_stability(d_total, lo: float, hi: float,
                       degenerate_tol: float = 1e-14) -> str:
    """Classify a zero crossing of the total damping by its secant slope.

    ``d_total`` is a callable; ``(lo, hi)`` the bracket containing the
    crossing.  Rising damping means energy balance restores perturbations
    (stable); falling marks a stability limit (unstable).  A slope whose
    magnitude falls below ``degenerate_tol`` is reported degenerate.
    """
    if hi <= lo:
        raise ValueError("bracket must satisfy lo < hi")
    f_lo, f_hi = float(d_total(lo)), float(d_total(hi))
    if f_lo * f_hi > 0.0:
        raise ValueError("bracket does not straddle a sign change")
    slope = (f_hi - f_lo) / (hi - lo)
    if abs(slope) <= degenerate_tol:
        return "degenerate"
    return "stable" if slope > 0.0 else "unstable"


def _bisect(f, lo: float, hi: float, f_lo: float, rel_tol: float,
            f_tol: float = 0.0, max_iter: int = 160) -> float:
    """Sign-change bisection on f; returns the best-balanced point.

    Narrows to the relative width tolerance first; with a positive
    ``f_tol`` it keeps halving until the returned point carries
    ``|f| <= f_tol``, so the reported root balances in value and not
    just in position.
    """
    best, f_best = lo, f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = float(f(mid))
        if abs(fm) < abs(f_best):
            best, f_best = mid, fm
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, fm
        else:
            hi = mid
        if hi - lo <= rel_tol * hi and (f_tol <= 0.0 or abs(f_best) <= f_tol):
            break
    return best


def _scan_roots(f, grid: np.ndarray, values: np.ndarray, rel_tol: float,
                scales: np.ndarray | None = None, f_rel_tol: float = 1e-10,
                ) -> list[tuple[float, float, float]]:
    """All bracketed zero crossings of f on the grid: (root, lo, hi).

    ``scales`` gives the local magnitude of the two balanced terms; when
    present, each root is refined until its residual drops below
    ``f_rel_tol`` times the local scale.
    """
    roots = []
    for j in range(len(grid) - 1):
        f0, f1 = values[j], values[j + 1]
        if f0 == 0.0:
            roots.append((float(grid[j]), float(grid[j]), float(grid[j + 1])))
        elif f0 * f1 < 0.0:
            f_tol = f_rel_tol * float(scales[j]) if scales is not None else 0.0
            r = _bisect(f, float(grid[j]), float(grid[j + 1]), f0, rel_tol,
                        f_tol)
            roots.append((r, float(grid[j]), float(grid[j + 1])))
    return roots


def _outcome(lcos, d_values) -> str:
    if lcos:
        return OUTCOME_LCOS
    return OUTCOME_STABLE if np.all(d_values > 0.0) else OUTCOME_UNBOUNDED


# ----------------------------------------------------------------------
# conventional method: stick shape and frequency imposed at all amplitudes
# ----------------------------------------------------------------------


def conventional_energy_lco(model: ReducedModel, contacts, mode: LinearMode,
                            aero: AeroInfluenceModel, grid,
                            freq_dependent: bool = True,
                            aft: AftConfig | None = None,
                            bisect_rel_tol: float = 1e-10,
                            ) -> EnergyMethodResult:
    """Energy method with the sticking mode held fixed.

    The motion ``u(t) = Re{psi a e^(i w t)}`` is imposed at every grid
    amplitude with the stick shape and frequency; the friction work comes
    from the marched hysteresis, the aero work from the influence matrix
    at the stick frequency.  Zero crossings of the total damping are
    bisected and classified.  The grid must start in the stick regime.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("amplitude grid must be increasing, length >= 2")
    if np.any(grid <= 0):
        raise ValueError("amplitudes must be positive")
    aft = aft or AftConfig()
    contacts = tuple(contacts)
    psi = mode.shape.astype(complex)
    omega = mode.omega
    g_mat = influence_matrix(aero, omega, freq_dependent)

    def evaluate(a: float):
        uset = HarmonicSet.zeros(1, model.n_dofs)
        uset.coeff[0] = psi * a
        fc = contact_force_fourier(uset, model, contacts, aft)
        w_s = max(harmonic_supplied_work(uset, fc), 0.0)
        w_a = aero_work(uset.coeff[0], g_mat @ uset.coeff[0])
        e_p = max_potential_energy(uset, model, contacts, aft)
        return w_s, w_a, e_p

    # stick-regime check at the smallest amplitude
    probe = HarmonicSet.zeros(1, model.n_dofs)
    probe.coeff[0] = psi * grid[0]
    _, p = steady_contact_samples(probe, model, contacts, aft)
    f_lim = np.array([el.f_lim for el in contacts])
    if np.any(np.sqrt(np.sum(p * p, axis=2)).max(axis=0)
              >= f_lim * (1.0 - 1e-9)):
        raise ValueError("grid must start in the stick regime; contacts "
                         f"slip already at amplitude {grid[0]:g}")

    rows = np.array([evaluate(a) for a in grid])
    w_s, w_a, e_p = rows[:, 0], rows[:, 1], rows[:, 2]
    d_s = w_s / (2.0 * np.pi * e_p)
    d_a = -w_a / (2.0 * np.pi * e_p)
    curve = EnergyCurve(
        amplitudes=grid, omega=np.full_like(grid, omega), d_s=d_s, d_a=d_a,
        w_s=w_s, w_a=w_a, e_p_max=e_p, mac_vs_stick=np.ones_like(grid),
    )

    def d_total(a: float) -> float:
        ws, wa, ep = evaluate(a)
        return damping_ratio(ws, ep) + damping_ratio(-wa, ep)

    lcos = []
    scales = np.maximum(d_s, np.abs(d_a))
    for root, lo, hi in _scan_roots(d_total, grid, curve.d_total,
                                    bisect_rel_tol, scales):
        ws, wa, ep = evaluate(root)
        uset = HarmonicSet.zeros(1, model.n_dofs)
        uset.coeff[0] = psi * root
        lcos.append(EnergyLco(
            amplitude=root, omega=omega,
            stability=classify_stability(d_total, lo, hi),
            d_s=damping_ratio(ws, ep), d_a=damping_ratio(-wa, ep),
            shape=psi.copy(), method="conventional", e_p_max=ep,
            w_s=ws, w_a=wa, uset=uset,
        ))
    return EnergyMethodResult(lcos=lcos, curve=curve,
                              outcome=_outcome(lcos, curve.d_total))


# ----------------------------------------------------------------------
# refined method: walk the nonlinear-mode backbone
# ----------------------------------------------------------------------


def refined_energy_lco(backbone: Backbone, aero: AeroInfluenceModel,
                       freq_dependent: bool = True,
                       const_shape: bool = False,
                       const_omega: bool = False,
                       model: ReducedModel | None = None,
                       contacts=None,
                       epmc_cfg: ContinuationConfig | None = None,
                       bisect_rel_tol: float = 1e-10,
                       ) -> EnergyMethodResult:
    """Energy method along the amplitude-dependent mode.

    Friction damping, shape, frequency and peak energy interpolate along
    the backbone; the aero work uses ``G(w_nl(a))`` with the current
    shape.  ``const_shape`` freezes the shape at the smallest-amplitude
    point and ``const_omega`` the frequency, reproducing the ablation
    variants.  When ``model`` and ``contacts`` are given, each located
    limit cycle is polished by exact periodic-motion solves at the
    candidate amplitude (secant iteration on the balance), removing the
    interpolation error from the reported point.
    """
    backbone.validate()
    amps = backbone.amplitudes
    psi_ref = backbone.points[0].psi_nl
    omega_ref = backbone.points[0].omega

    def parts(a: float):
        psi, omega, d_s = backbone_query(backbone, a)
        if const_shape:
            psi = psi_ref
        if const_omega:
            omega = omega_ref
        j, t = _interp_weights(amps, a)
        e_p = (1.0 - t) * backbone.points[j].e_p_max \
            + t * backbone.points[min(j + 1, len(amps) - 1)].e_p_max
        u1 = psi * a
        w_a = aero_work(u1, influence_matrix(aero, omega, freq_dependent) @ u1)
        return psi, omega, d_s, e_p, w_a

    def d_total(a: float) -> float:
        _, _, d_s, e_p, w_a = parts(a)
        return d_s + damping_ratio(-w_a, e_p)

    rows = [parts(a) for a in amps]
    d_s_arr = np.array([r[2] for r in rows])
    e_p_arr = np.array([r[3] for r in rows])
    w_a_arr = np.array([r[4] for r in rows])
    omega_arr = np.array([r[1] for r in rows])
    d_a_arr = -w_a_arr / (2.0 * np.pi * e_p_arr)
    curve = EnergyCurve(
        amplitudes=amps, omega=omega_arr, d_s=d_s_arr, d_a=d_a_arr,
        w_s=np.array([p.w_s for p in backbone.points]), w_a=w_a_arr,
        e_p_max=e_p_arr,
        mac_vs_stick=np.array([mac(r[0], psi_ref) for r in rows]),
    )

    lcos = []
    scales = np.maximum(d_s_arr, np.abs(d_a_arr))
    for root, lo, hi in _scan_roots(d_total, amps, curve.d_total,
                                    bisect_rel_tol, scales):
        stability = classify_stability(d_total, lo, hi)
        if model is not None and contacts is not None:
            record = _polish_lco(backbone, aero, model, tuple(contacts),
                                 lo, hi, freq_dependent, const_shape,
                                 const_omega, epmc_cfg, bisect_rel_tol)
        else:
            psi, omega, d_s, e_p, w_a = parts(root)
            record = EnergyLco(
                amplitude=root, omega=omega, stability=stability,
                d_s=d_s, d_a=damping_ratio(-w_a, e_p), shape=psi,
                method="refined", e_p_max=e_p,
                w_s=2.0 * np.pi * e_p * d_s, w_a=w_a,
                uset=backbone_point_at(backbone, root).uset,
            )
        record.stability = stability
        lcos.append(record)
    return EnergyMethodResult(lcos=lcos, curve=curve,
                              outcome=_outcome(lcos, curve.d_total))


def _interp_weights(amps: np.ndarray, a: float) -> tuple[int, float]:
    j = int(np.searchsorted(amps, a))
    if j == 0:
        return 0, 0.0
    if j >= len(amps):
        return len(amps) - 2, 1.0
    if amps[j] == a:
        return j, 0.0
    j -= 1
    return j, float((a - amps[j]) / (amps[j + 1] - amps[j]))


def _exact_balance(point: BackbonePoint, aero: AeroInfluenceModel,
                   freq_dependent: bool, const_shape: bool,
                   const_omega: bool, psi_ref, omega_ref):
    psi = psi_ref if const_shape else point.psi_nl
    omega = omega_ref if const_omega else point.omega
    u1 = psi * point.amplitude
    w_a = aero_work(u1, influence_matrix(aero, omega, freq_dependent) @ u1)
    d_a = damping_ratio(-w_a, point.e_p_max)
    return point.d_s + d_a, d_a, w_a


def _polish_lco(backbone: Backbone, aero: AeroInfluenceModel,
                model: ReducedModel, contacts, lo: float, hi: float,
                freq_dependent: bool, const_shape: bool, const_omega: bool,
                epmc_cfg: ContinuationConfig | None,
                rel_tol: float) -> EnergyLco:
    """Refine an interpolated balance root with exact periodic solves.

    Works on the scan bracket, not the interpolated root: the exact
    balance can change sign slightly outside the interpolated crossing
    (the friction damping is kinked at the slip onset), so the bracket
    is re-established on exact solves first and then narrowed by secant
    proposals that fall back to bisection.
    """
    cfg = epmc_cfg or ContinuationConfig()
    # the reported point must balance to ~1e-10 of the damping scale, so
    # the periodic solves have to be noticeably cleaner than that
    cfg = replace(cfg, tol=min(cfg.tol, 1e-12))
    psi_ref = backbone.points[0].psi_nl
    omega_ref = backbone.points[0].omega
    amps = backbone.amplitudes

    def solve_at(a: float) -> BackbonePoint:
        seed = backbone_point_at(
            backbone, float(np.clip(a, amps[0], amps[-1])))
        return solve_epmc_point(model, contacts, a, seed, cfg)

    def balance(point: BackbonePoint) -> float:
        return _exact_balance(point, aero, freq_dependent, const_shape,
                              const_omega, psi_ref, omega_ref)[0]

    p_lo, p_hi = solve_at(lo), solve_at(hi)
    f_lo, f_hi = balance(p_lo), balance(p_hi)
    for _ in range(40):
        if f_lo == 0.0 or f_hi == 0.0 or f_lo * f_hi < 0.0:
            break
        width = hi - lo
        if abs(f_lo) <= abs(f_hi):
            lo = max(0.5 * lo, lo - width)
            p_lo = solve_at(lo)
            f_lo = balance(p_lo)
        else:
            hi = hi + width
            p_hi = solve_at(hi)
            f_hi = balance(p_hi)
    else:
        raise ContinuationError(
            "could not re-establish a balance bracket with exact solves "
            f"around [{lo:g}, {hi:g}]")

    point = p_lo if abs(f_lo) <= abs(f_hi) else p_hi
    f_best = f_lo if abs(f_lo) <= abs(f_hi) else f_hi
    if f_lo != 0.0 and f_hi != 0.0:
        for _ in range(120):
            # stop on the balance value, not the bracket width: the kink
            # at slip onset makes the residual steep in the amplitude
            if hi - lo <= rel_tol * hi and abs(f_best) <= 1e-10 * point.d_s:
                break
            mid = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            margin = 0.01 * (hi - lo)
            if not np.isfinite(mid) or not lo + margin <= mid <= hi - margin:
                mid = 0.5 * (lo + hi)
            trial = solve_at(mid)
            fm = balance(trial)
            if abs(fm) < abs(f_best):
                point, f_best = trial, fm
            if fm == 0.0:
                break
            if (fm > 0.0) == (f_lo > 0.0):
                lo, f_lo = mid, fm
            else:
                hi, f_hi = mid, fm

    _, d_a, w_a = _exact_balance(point, aero, freq_dependent, const_shape,
                                 const_omega, psi_ref, omega_ref)
    psi = psi_ref if const_shape else point.psi_nl
    omega = omega_ref if const_omega else point.omega
    return EnergyLco(
        amplitude=point.amplitude, omega=omega, stability="stable",
        d_s=point.d_s, d_a=d_a, shape=psi, method="refined",
        e_p_max=point.e_p_max, w_s=point.w_s, w_a=w_a, uset=point.uset,
    )
