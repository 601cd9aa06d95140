"""Nonlinear modal analysis: amplitude-dependent modes of the frictional
structure by continuation of periodic motions.

A damped nonlinear system has no exactly periodic free vibrations, so the
periodic-motion concept adds a mass-proportional self-excitation that
feeds back exactly the energy the friction contacts dissipate:

    S_k(w) u_k + fc_k(u) - 2 xi w (i k w) M u_k = 0,   k >= 1,

with the zeroth harmonic retained (friction can rectify).  The coefficient
xi plays the role of a viscous modal damping ratio; solving for the
periodic motion along an amplitude range yields the backbone: natural
frequency w_nl(a), mode shape psi_nl(a) and damping of the frictional
"mode" as functions of the modal amplitude a, defined through the mass
normalization u_1 = psi_nl a with psi_nl^H M psi_nl = 1.

Each backbone point also records the reported damping ratio

    D_s = dW_s / (2 pi E_p,max),

the loss factor of the friction work per cycle over the peak potential
energy, which is the quantity the energy methods balance against the
aerodynamic damping.  The friction work is evaluated from the harmonic
coefficients of the contact force (exact for the truncated motion), so
2 pi E_p,max D_s reproduces the dissipated work identically.

Continuation is pseudo-arclength with a tangent predictor and Newton
corrector; the step doubles after fast correctors and halves on failure,
down to a floor below which the partial backbone is returned flagged
incomplete.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .aero import damping_ratio, harmonic_supplied_work
from .contact import (AftConfig, contact_force_and_jacobian,
                      contact_force_fourier, max_potential_energy,
                      steady_contact_samples)
from .harmonics import HarmonicSet, flatten_count
from .hb import hb_block_matrix
from .model import ReducedModel, linear_eigen


__all__ = [
    "BackbonePoint",
    "Backbone",
    "ContinuationConfig",
    "ContinuationError",
    "epmc_residual",
    "solve_epmc_point",
    "continue_backbone",
    "backbone_query",
    "backbone_point_at",
]


class ContinuationError(RuntimeError):
    """Continuation could not produce a usable backbone."""


@dataclass
class BackbonePoint:
    """One converged amplitude point of a nonlinear mode.

    ``amplitude`` is the mass-normalized modal amplitude a with
    ``u_1 = psi_nl a``; ``d_s`` is the loss-factor damping ratio
    ``w_s / (2 pi e_p_max)``; ``xi`` is the raw self-excitation
    coefficient of the periodic-motion equations.
    """

    amplitude: float
    omega: float
    d_s: float
    psi_nl: np.ndarray
    uset: HarmonicSet
    xi: float
    e_p_max: float
    w_s: float


@dataclass
class Backbone:
    """Amplitude-ordered nonlinear mode data of one structural mode."""

    points: list[BackbonePoint]
    mode_index: int
    omega_stick: float
    mass: np.ndarray
    complete: bool = True

    def __len__(self) -> int:
        return len(self.points)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    def validate(self) -> None:
        a = self.amplitudes
        if len(a) < 2:
            raise ValueError("backbone needs at least two points")
        if not np.all(np.diff(a) > 0):
            raise ValueError("backbone amplitudes must increase strictly")


@dataclass(frozen=True)
class ContinuationConfig:
    """Controls of the backbone continuation."""

    order: int = 3
    tol: float = 1e-10
    max_corrector: int = 10
    ds0: float | None = None
    ds_min_factor: float = 1e-6
    ds_max: float | None = None
    max_points: int = 2000
    aft: AftConfig = field(default_factory=AftConfig)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("harmonic order must be at least 1")
        if self.tol <= 0:
            raise ValueError("corrector tolerance must be positive")


def epmc_residual(uset: HarmonicSet, omega: float, xi: float,
                  model: ReducedModel, contacts,
                  cfg: AftConfig | None = None) -> HarmonicSet:
    """Periodic-motion residual including the self-excitation term.

    Blockwise ``S_k(w) u_k + fc_k - 2 xi w (i k w) M u_k`` for k >= 1 and
    ``K c0 + fc_0`` for the zeroth harmonic.  ``xi`` is the raw damping
    coefficient of the excitation term.
    """
    if uset.n_dofs != model.n_dofs:
        raise ValueError("motion does not match model dimension")
    fc = contact_force_fourier(uset, model, contacts, cfg)
    res = HarmonicSet.zeros(uset.order, uset.n_dofs)
    res.coeff_0 = model.stiffness @ uset.coeff_0 + fc.coeff_0
    for k in range(1, uset.order + 1):
        s_k = model.stiffness - (k * omega) ** 2 * model.mass
        u_k = uset.coeff[k - 1]
        res.coeff[k - 1] = (s_k @ u_k + fc.coeff[k - 1]
                            - 2j * xi * k * omega * omega * (model.mass @ u_k))
    return res


# ----------------------------------------------------------------------
# flat-layout assembly
#
# unknown vector y = [flattened coefficients | nu = w^2 | xi | a]
# equations      F = [balance residual | amplitude normalization |
#                     phase constraint | closure row]
# ----------------------------------------------------------------------


def _epmc_flat_system(flat: np.ndarray, nu: float, xi: float,
                      model: ReducedModel, contacts, order: int,
                      aft: AftConfig, with_jac: bool):
    n = model.n_dofs
    uset = HarmonicSet.from_flat(flat, order, n)
    if with_jac:
        fc, jc = contact_force_and_jacobian(uset, model, contacts, aft)
    else:
        fc, jc = contact_force_fourier(uset, model, contacts, aft), None
    s = hb_block_matrix(model, nu, order)
    res = s @ flat + fc.flatten()

    jac = s + jc if with_jac else None
    dnu = np.zeros_like(flat) if with_jac else None
    dxi = np.zeros_like(flat) if with_jac else None

    for k in range(1, order + 1):
        re = slice((2 * k - 1) * n, (2 * k) * n)
        im = slice((2 * k) * n, (2 * k + 1) * n)
        m_re = model.mass @ flat[re]
        m_im = model.mass @ flat[im]
        c = 2.0 * xi * k * nu
        res[re] += c * m_im
        res[im] -= c * m_re
        if with_jac:
            jac[re, im] += c * model.mass
            jac[im, re] -= c * model.mass
            dnu[re] += -(k * k) * m_re + 2.0 * xi * k * m_im
            dnu[im] += -(k * k) * m_im - 2.0 * xi * k * m_re
            dxi[re] += 2.0 * k * nu * m_im
            dxi[im] -= 2.0 * k * nu * m_re
    return res, jac, dnu, dxi


def _split(y: np.ndarray, n_flat: int):
    return y[:n_flat], float(y[n_flat]), float(y[n_flat + 1]), float(y[n_flat + 2])


def _constraints(flat: np.ndarray, a: float, n: int, i_dom: int,
                 mass: np.ndarray):
    """Amplitude normalization (relative form) and phase constraint."""
    re1, im1 = flat[n:2 * n], flat[2 * n:3 * n]
    q = float(re1 @ (mass @ re1) + im1 @ (mass @ im1))
    g1 = q / (a * a) - 1.0
    g2 = float(im1[i_dom])
    return g1, g2, q


def _corrector(y0: np.ndarray, closure_row: np.ndarray, closure_rhs: float,
               model: ReducedModel, contacts, order: int, i_dom: int,
               cfg: ContinuationConfig, scale: float):
    """Newton iteration on [residual; normalization; phase; closure].

    The closure equation is ``closure_row . y - closure_rhs = 0`` (fixed
    amplitude or arclength).  Residual rows are scaled by 1/scale so the
    tolerance acts relative to the amplitude level.  Returns (y, its) or
    raises ContinuationError.
    """
    n = model.n_dofs
    n_flat = flatten_count(order, n)
    size = n_flat + 3
    y = y0.copy()
    s_r = 1.0 / max(scale, 1e-300)

    for it in range(cfg.max_corrector + 1):
        flat, nu, xi, a = _split(y, n_flat)
        if nu <= 0.0 or a <= 0.0:
            raise ContinuationError("corrector left the admissible region")
        res, jac, dnu, dxi = _epmc_flat_system(
            flat, nu, xi, model, contacts, order, cfg.aft, True)
        g1, g2, q = _constraints(flat, a, n, i_dom, model.mass)
        g3 = float(closure_row @ y) - closure_rhs

        f = np.empty(size)
        f[:n_flat] = res * s_r
        f[n_flat] = g1
        f[n_flat + 1] = g2 * s_r
        f[n_flat + 2] = g3
        if float(np.linalg.norm(f)) <= cfg.tol:
            return y, it
        if it == cfg.max_corrector:
            break

        jm = np.zeros((size, size))
        jm[:n_flat, :n_flat] = jac * s_r
        jm[:n_flat, n_flat] = dnu * s_r
        jm[:n_flat, n_flat + 1] = dxi * s_r
        # amplitude normalization row
        jm[n_flat, n:2 * n] = 2.0 * (model.mass @ flat[n:2 * n]) / (a * a)
        jm[n_flat, 2 * n:3 * n] = 2.0 * (model.mass @ flat[2 * n:3 * n]) / (a * a)
        jm[n_flat, n_flat + 2] = -2.0 * q / a ** 3
        # phase row
        jm[n_flat + 1, 2 * n + i_dom] = s_r
        # closure row
        jm[n_flat + 2] = closure_row
        try:
            step = lu_solve(lu_factor(jm), -f)
        except Exception as exc:
            raise ContinuationError(f"singular corrector system: {exc}") from exc
        y = y + step

    raise ContinuationError(
        f"corrector did not converge in {cfg.max_corrector} iterations"
    )


def _point_from_y(y: np.ndarray, model: ReducedModel, contacts,
                  order: int, aft: AftConfig) -> BackbonePoint:
    n_flat = flatten_count(order, model.n_dofs)
    flat, nu, xi, a = _split(y, n_flat)
    uset = HarmonicSet.from_flat(flat, order, model.n_dofs)
    omega = float(np.sqrt(nu))
    fc = contact_force_fourier(uset, model, contacts, aft)
    w_s = max(harmonic_supplied_work(uset, fc), 0.0)
    e_p = max_potential_energy(uset, model, contacts, aft)
    return BackbonePoint(
        amplitude=a, omega=omega, d_s=damping_ratio(w_s, e_p),
        psi_nl=uset.fundamental / a, uset=uset, xi=xi, e_p_max=e_p, w_s=w_s,
    )


def _y_from_point(point: BackbonePoint, amplitude: float, order: int,
                  n: int) -> np.ndarray:
    """Start vector at a requested amplitude, rescaled from a known point."""
    ratio = amplitude / point.amplitude
    uset = HarmonicSet.zeros(order, n)
    uset.coeff_0 = point.uset.coeff_0 * ratio
    kmax = min(order, point.uset.order)
    uset.coeff[:kmax] = point.uset.coeff[:kmax] * ratio
    uset.coeff[0] = point.psi_nl * amplitude
    return np.concatenate([uset.flatten(),
                           [point.omega ** 2, point.xi, amplitude]])


def _amplitude_closure(n_flat: int, amplitude: float):
    row = np.zeros(n_flat + 3)
    row[n_flat + 2] = 1.0
    return row, amplitude


def solve_epmc_point(model: ReducedModel, contacts, amplitude: float,
                     start: BackbonePoint,
                     cfg: ContinuationConfig | None = None) -> BackbonePoint:
    """Converge one periodic-motion point at a prescribed modal amplitude.

    ``start`` supplies the warm start (typically a neighboring backbone
    point or an interpolated one); its coefficients are rescaled to the
    requested amplitude before correcting.
    """
    cfg = cfg or ContinuationConfig()
    if amplitude <= 0.0:
        raise ValueError("amplitude must be positive")
    n = model.n_dofs
    n_flat = flatten_count(cfg.order, n)
    i_dom = model.dominant_coord
    y0 = _y_from_point(start, amplitude, cfg.order, n)
    row, rhs = _amplitude_closure(n_flat, amplitude)
    y, _ = _corrector(y0, row, rhs, model, contacts, cfg.order, i_dom, cfg,
                      scale=amplitude)
    return _point_from_y(y, model, contacts, cfg.order, cfg.aft)


def _stick_seed(model: ReducedModel, contacts, mode_index: int,
                amplitude: float, order: int, aft: AftConfig):
    """Seed vector from the sticking linear mode; checks full stick."""
    modes = linear_eigen(model, "stick")
    if not 0 <= mode_index < len(modes):
        raise ValueError("mode index out of range")
    mode = modes[mode_index]
    if mode.rigid:
        raise ValueError("cannot continue a rigid mode")
    uset = HarmonicSet.zeros(order, model.n_dofs)
    uset.coeff[0] = mode.shape.astype(complex) * amplitude
    _, p = steady_contact_samples(uset, model, contacts, aft)
    f_lim = np.array([el.f_lim for el in contacts])
    peak = np.sqrt(np.sum(p * p, axis=2)).max(axis=0)
    if np.any(peak >= f_lim * (1.0 - 1e-9)):
        raise ValueError(
            "contacts slip at the smallest amplitude; lower the start of "
            "the amplitude range"
        )
    y = np.concatenate([uset.flatten(), [mode.omega ** 2, 0.0, amplitude]])
    return y, mode


def continue_backbone(model: ReducedModel, contacts, mode_index: int,
                      u_min: float, u_max: float,
                      cfg: ContinuationConfig | None = None) -> Backbone:
    """Trace one nonlinear mode from ``u_min`` to ``u_max``.

    Seeds from the sticking linear mode (which must still stick at
    ``u_min``), then advances by pseudo-arclength prediction and Newton
    correction.  The step doubles after correctors that need at most two
    iterations and halves after failures; underflow of the step aborts
    with the partial backbone flagged incomplete.  Endpoints land exactly
    on ``u_min`` and ``u_max`` via fixed-amplitude correction.
    """
    cfg = cfg or ContinuationConfig()
    if not 0.0 < u_min < u_max:
        raise ValueError("need 0 < u_min < u_max")
    contacts = tuple(contacts)
    n = model.n_dofs
    n_flat = flatten_count(cfg.order, n)
    i_dom = model.dominant_coord

    y_seed, mode = _stick_seed(model, contacts, mode_index, u_min,
                               cfg.order, cfg.aft)
    row, rhs = _amplitude_closure(n_flat, u_min)
    y, _ = _corrector(y_seed, row, rhs, model, contacts, cfg.order, i_dom,
                      cfg, scale=u_min)
    points = [_point_from_y(y, model, contacts, cfg.order, cfg.aft)]

    ds = cfg.ds0 if cfg.ds0 is not None else u_min
    ds_min = ds * cfg.ds_min_factor
    ds_max = cfg.ds_max if cfg.ds_max is not None else 0.25 * (u_max - u_min)
    t_prev = np.zeros(n_flat + 3)
    t_prev[n_flat + 2] = 1.0
    complete = True

    while points[-1].amplitude < u_max and len(points) < cfg.max_points:
        tangent = _tangent(y, t_prev, model, contacts, cfg, i_dom,
                           scale=points[-1].amplitude)
        advanced = False
        while ds >= ds_min:
            y_pred = y + ds * tangent
            closure = tangent.copy()
            rhs = float(tangent @ y) + ds
            try:
                y_new, its = _corrector(y_pred, closure, rhs, model, contacts,
                                        cfg.order, i_dom, cfg,
                                        scale=points[-1].amplitude)
            except ContinuationError:
                ds *= 0.5
                continue
            a_new = float(y_new[n_flat + 2])
            if a_new <= points[-1].amplitude or y_new[n_flat] <= 0.0:
                ds *= 0.5
                continue
            advanced = True
            break
        if not advanced:
            complete = False
            warnings.warn(
                "continuation step underflow; returning partial backbone",
                RuntimeWarning, stacklevel=2,
            )
            break

        if a_new >= u_max:
            row, rhs = _amplitude_closure(n_flat, u_max)
            try:
                y_end, _ = _corrector(y_new, row, rhs, model, contacts,
                                      cfg.order, i_dom, cfg, scale=u_max)
            except ContinuationError:
                y_end = y_new
            points.append(_point_from_y(y_end, model, contacts, cfg.order,
                                        cfg.aft))
            break

        y, t_prev = y_new, tangent
        points.append(_point_from_y(y, model, contacts, cfg.order, cfg.aft))
        if its <= 2:
            ds = min(2.0 * ds, ds_max)
        elif its >= 6:
            ds = max(0.5 * ds, ds_min)

    else:
        if points[-1].amplitude < u_max:
            complete = False
            warnings.warn(
                "continuation point budget exhausted before the amplitude "
                "range was covered", RuntimeWarning, stacklevel=2,
            )

    backbone = Backbone(points=points, mode_index=mode_index,
                        omega_stick=mode.omega, mass=model.mass.copy(),
                        complete=complete)
    backbone.validate()
    return backbone


def _tangent(y: np.ndarray, t_prev: np.ndarray, model: ReducedModel,
             contacts, cfg: ContinuationConfig, i_dom: int,
             scale: float) -> np.ndarray:
    """Unit tangent of the solution path, oriented along the previous one."""
    n = model.n_dofs
    n_flat = flatten_count(cfg.order, n)
    size = n_flat + 3
    flat, nu, xi, a = _split(y, n_flat)
    s_r = 1.0 / max(scale, 1e-300)
    _, jac, dnu, dxi = _epmc_flat_system(
        flat, nu, xi, model, contacts, cfg.order, cfg.aft, True)
    _, _, q = _constraints(flat, a, n, i_dom, model.mass)

    jm = np.zeros((size, size))
    jm[:n_flat, :n_flat] = jac * s_r
    jm[:n_flat, n_flat] = dnu * s_r
    jm[:n_flat, n_flat + 1] = dxi * s_r
    jm[n_flat, n:2 * n] = 2.0 * (model.mass @ flat[n:2 * n]) / (a * a)
    jm[n_flat, 2 * n:3 * n] = 2.0 * (model.mass @ flat[2 * n:3 * n]) / (a * a)
    jm[n_flat, n_flat + 2] = -2.0 * q / a ** 3
    jm[n_flat + 1, 2 * n + i_dom] = s_r
    jm[n_flat + 2] = t_prev
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        t = lu_solve(lu_factor(jm), rhs)
    except Exception as exc:
        raise ContinuationError(f"singular tangent system: {exc}") from exc
    t = t / np.linalg.norm(t)
    if float(t @ t_prev) < 0.0:
        t = -t
    return t


# ----------------------------------------------------------------------
# backbone interpolation
# ----------------------------------------------------------------------


def _bracket(backbone: Backbone, u: float) -> tuple[int, float]:
    a = backbone.amplitudes
    if not a[0] * (1.0 - 1e-12) <= u <= a[-1] * (1.0 + 1e-12):
        raise ValueError(
            f"amplitude {u:g} outside backbone range [{a[0]:g}, {a[-1]:g}]"
        )
    j = int(np.searchsorted(a, u))
    if j == 0:
        return 0, 0.0
    if j >= len(a):
        return len(a) - 2, 1.0
    if a[j] == u:
        return j, 0.0
    j -= 1
    return j, float((u - a[j]) / (a[j + 1] - a[j]))


def backbone_query(backbone: Backbone, u: float
                   ) -> tuple[np.ndarray, float, float]:
    """Interpolated (psi_nl, omega_nl, D_s) at an amplitude.

    Frequency and damping interpolate linearly between neighboring
    points; the shape interpolates componentwise and is re-normalized to
    unit modal mass afterwards.
    """
    j, t = _bracket(backbone, u)
    p0, p1 = backbone.points[j], backbone.points[min(j + 1, len(backbone) - 1)]
    omega = (1.0 - t) * p0.omega + t * p1.omega
    d_s = (1.0 - t) * p0.d_s + t * p1.d_s
    psi = (1.0 - t) * p0.psi_nl + t * p1.psi_nl
    norm = np.sqrt(float(np.real(np.vdot(psi, backbone.mass @ psi))))
    return psi / norm, float(omega), float(d_s)


def backbone_point_at(backbone: Backbone, u: float) -> BackbonePoint:
    """Synthesized backbone point at an amplitude between stored points.

    All scalar fields and the flattened coefficient sets interpolate
    linearly; the fundamental is then replaced by the re-normalized shape
    scaled to the requested amplitude, so the returned point satisfies the
    amplitude definition exactly.  Intended as a warm start for exact
    point solves and as coupled-solver initialization.
    """
    j, t = _bracket(backbone, u)
    p0, p1 = backbone.points[j], backbone.points[min(j + 1, len(backbone) - 1)]
    psi, omega, d_s = backbone_query(backbone, u)
    flat = (1.0 - t) * p0.uset.flatten() + t * p1.uset.flatten()
    uset = HarmonicSet.from_flat(flat, p0.uset.order, p0.uset.n_dofs)
    uset.coeff[0] = psi * u
    return BackbonePoint(
        amplitude=u, omega=omega, d_s=d_s, psi_nl=psi, uset=uset,
        xi=(1.0 - t) * p0.xi + t * p1.xi,
        e_p_max=(1.0 - t) * p0.e_p_max + t * p1.e_p_max,
        w_s=(1.0 - t) * p0.w_s + t * p1.w_s,
    )
