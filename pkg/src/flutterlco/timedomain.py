"""Time-domain reference solutions for cross-checking the frequency solvers.

The reduced model is integrated with the implicit average-acceleration
scheme; the friction elements keep their hysteretic state between steps and
are updated by the same radial-return law the frequency solvers march.
Each step solves the nonlinear balance by Newton with the consistent
contact tangent.

The aerodynamic influence law is frequency-domain by nature; its time
realization here is the narrowband equivalent

    f(t) = Re{G} u(t) + Im{G} / w  v(t),

valid while the response is dominated by one harmonic near ``w``.  The
frequency estimate is refreshed from the zero crossings of the dominant
coordinate every few cycles, and the influence matrix is re-interpolated
at the refreshed value.  This approximation bounds the oracle's accuracy
and is the reason amplitude comparisons against it carry percent-level
tolerances.

``find_stability_limit`` brackets the critical initial amplitude of a
subcritical configuration by bisection on integrations seeded along a
given shape: runs that blow past a growth threshold count as unstable,
runs whose envelope collapses count as stable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .aero import AeroInfluenceModel, influence_matrix
from .model import ContactElement, ReducedModel, linear_eigen


__all__ = [
    "TimeSeries",
    "NonStationaryError",
    "BracketError",
    "time_integrate",
    "extract_lco",
    "classify_probe",
    "find_stability_limit",
]


class NonStationaryError(RuntimeError):
    """The analyzed tail is not a settled periodic orbit."""


class BracketError(ValueError):
    """The probe amplitudes do not straddle a stability boundary."""


@dataclass
class TimeSeries:
    """Integration record.  ``diverged`` marks an overflow-guard stop."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    diverged: bool = False
    omega_estimates: list[tuple[float, float]] = field(default_factory=list)


def _contact_arrays(contacts):
    contacts = tuple(contacts)
    coords = np.array([[el.coord_x, el.coord_y] for el in contacts], dtype=int)
    k_t = np.array([el.k_t for el in contacts])
    f_lim = np.array([el.f_lim for el in contacts])
    return coords, k_t, f_lim


def _step_contact(u, coords, k_t, f_lim, p_n, g_n):
    """Radial-return update for all elements at the trial displacement.

    Returns the scattered contact force, the tangent blocks (E, 2, 2) and
    the updated tractions.
    """
    g = u[coords]
    p_star = p_n + k_t[:, None] * (g - g_n)
    norm = np.sqrt(np.sum(p_star * p_star, axis=1))
    slip = norm > f_lim
    scale = np.where(slip, f_lim / np.where(slip, norm, 1.0), 1.0)
    p = p_star * scale[:, None]

    n_el = coords.shape[0]
    tang = np.zeros((n_el, 2, 2))
    tang[:, 0, 0] = k_t
    tang[:, 1, 1] = k_t
    if np.any(slip):
        ns = p_star[slip] / norm[slip, None]
        proj = (f_lim[slip] / norm[slip])[:, None, None] * (
            np.eye(2)[None, :, :] - ns[:, :, None] * ns[:, None, :]
        )
        tang[slip] = k_t[slip, None, None] * proj
    return p, tang


def _scatter_contact(n, coords, p, tang):
    f = np.zeros(n)
    kt = np.zeros((n, n))
    for e in range(coords.shape[0]):
        cx, cy = coords[e]
        f[cx] += p[e, 0]
        f[cy] += p[e, 1]
        kt[np.ix_((cx, cy), (cx, cy))] += tang[e]
    return f, kt


def _min_period(model: ReducedModel) -> float:
    omegas = [m.omega for m in linear_eigen(model, "stick") if not m.rigid]
    if not omegas:
        raise ValueError("model has no elastic modes")
    return 2.0 * np.pi / max(omegas)


def time_integrate(model: ReducedModel, contacts,
                   aero: AeroInfluenceModel | None,
                   u0: np.ndarray, v0: np.ndarray,
                   duration: float, step: float,
                   freq_dependent: bool = True,
                   omega_init: float | None = None,
                   reestimate_cycles: int = 10,
                   overflow_factor: float = 1e6,
                   newton_tol: float = 1e-12,
                   ) -> TimeSeries:
    """Integrate the frictional model, optionally under the influence law.

    ``step`` must resolve the fastest sticking mode with at least 50 steps
    per period.  ``omega_init`` seeds the narrowband frequency for the
    velocity-proportional aero gain (defaults to the interpolation band
    center); the estimate refreshes every ``reestimate_cycles`` response
    cycles.  Displacements beyond ``overflow_factor`` times the initial
    scale stop the run with ``diverged`` set, which the stability-limit
    search uses as the growth signal.
    """
    if step <= 0 or duration <= step:
        raise ValueError("need 0 < step < duration")
    t_min = _min_period(model)
    if step > t_min / 50.0:
        raise ValueError(
            f"step {step:g} too large; the fastest stick period {t_min:g} "
            "needs >= 50 steps"
        )
    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if u.shape != (model.n_dofs,) or v.shape != (model.n_dofs,):
        raise ValueError("initial conditions do not match model dimension")

    coords, k_t, f_lim = _contact_arrays(contacts)
    p_n = np.zeros((coords.shape[0], 2))
    g_n = u[coords]
    # consistent start: contact springs loaded by the initial displacement
    p_n = k_t[:, None] * g_n
    norm = np.sqrt(np.sum(p_n * p_n, axis=1))
    over = norm > f_lim
    if np.any(over):
        p_n[over] *= (f_lim[over] / norm[over])[:, None]

    if aero is not None:
        omega_est = float(omega_init) if omega_init else \
            0.5 * (aero.omega_stick + aero.omega_slip)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g_mat = influence_matrix(aero, omega_est, freq_dependent)
        g_re, g_im = g_mat.real.copy(), g_mat.imag.copy()
    else:
        omega_est = 0.0
        g_re = g_im = None

    n_steps = int(np.floor(duration / step))
    h = step
    beta, gamma = 0.25, 0.5
    c_a = 1.0 / (beta * h * h)
    c_v = gamma / (beta * h)

    n = model.n_dofs
    mass, stiff = model.mass, model.stiffness
    t_out = np.empty(n_steps + 1)
    u_out = np.empty((n_steps + 1, n))
    v_out = np.empty((n_steps + 1, n))
    t_out[0], u_out[0], v_out[0] = 0.0, u, v

    # initial acceleration from the balance at t = 0
    f_c, _ = _scatter_contact(n, coords, p_n, np.zeros((coords.shape[0], 2, 2)))
    rhs = -(stiff @ u) - f_c
    if aero is not None:
        rhs += g_re @ u + (g_im / omega_est) @ v
    a = np.linalg.solve(mass, rhs)

    scale0 = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))), 1e-12)
    u_limit = overflow_factor * scale0
    diverged = False
    estimates = []

    i_dom = model.dominant_coord
    last_x = u[i_dom]
    crossings: list[float] = []
    last_est_t = 0.0

    k = 0
    for k in range(1, n_steps + 1):
        t = k * h
        u_pred = u + h * v + h * h * (0.5 - beta) * a
        v_pred = v + h * (1.0 - gamma) * a

        u_new = u.copy()
        for _ in range(12):
            p, tang = _step_contact(u_new, coords, k_t, f_lim, p_n, g_n)
            f_c, k_c = _scatter_contact(n, coords, p, tang)
            r = mass @ ((u_new - u_pred) * c_a) + stiff @ u_new + f_c
            jac = c_a * mass + stiff + k_c
            if aero is not None:
                v_new = v_pred + c_v * (u_new - u_pred)
                r -= g_re @ u_new + (g_im / omega_est) @ v_new
                jac = jac - g_re - c_v * (g_im / omega_est)
            du = lu_solve(lu_factor(jac), -r)
            u_new = u_new + du
            if float(np.max(np.abs(du))) <= newton_tol * max(
                    float(np.max(np.abs(u_new))), 1e-30):
                break

        p, _ = _step_contact(u_new, coords, k_t, f_lim, p_n, g_n)
        a = c_a * (u_new - u_pred)
        v = v_pred + gamma * h * a
        p_n, g_n = p, u_new[coords]
        u = u_new

        t_out[k], u_out[k], v_out[k] = t, u, v

        if float(np.max(np.abs(u))) > u_limit:
            diverged = True
            break

        if aero is not None:
            x = u[i_dom]
            if last_x < 0.0 <= x:
                frac = last_x / (last_x - x)
                crossings.append(t - h + frac * h)
                if len(crossings) >= reestimate_cycles + 1 and \
                        crossings[-1] - last_est_t > 0.0:
                    spans = np.diff(crossings[-(reestimate_cycles + 1):])
                    omega_new = 2.0 * np.pi / float(np.mean(spans))
                    if np.isfinite(omega_new) and omega_new > 0.0:
                        omega_est = omega_new
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore")
                            g_mat = influence_matrix(aero, omega_est,
                                                     freq_dependent)
                        g_re, g_im = g_mat.real.copy(), g_mat.imag.copy()
                        estimates.append((t, omega_est))
                        last_est_t = t
                        crossings = crossings[-1:]
            last_x = x

    end = k + 1
    return TimeSeries(t=t_out[:end], u=u_out[:end], v=v_out[:end],
                      diverged=diverged, omega_estimates=estimates)


def extract_lco(series: TimeSeries, settle_fraction: float = 0.5,
                coord: int | None = None, min_cycles: int = 20,
                drift_tol: float = 0.01) -> tuple[np.ndarray, float]:
    """Amplitude per coordinate and frequency of a settled periodic tail.

    The tail after ``settle_fraction`` of the record is segmented by
    upward zero crossings of the reference coordinate; the frequency is
    the mean crossing spacing, amplitudes are half peak-to-trough per
    cycle averaged over the retained cycles.  A drift of the reference
    amplitude beyond ``drift_tol`` between the first and last retained
    cycles raises ``NonStationaryError``.
    """
    if series.diverged:
        raise NonStationaryError("series ended in the overflow guard")
    if not 0.0 <= settle_fraction < 1.0:
        raise ValueError("settle fraction must lie in [0, 1)")
    n = series.t.size
    start = int(settle_fraction * n)
    t = series.t[start:]
    u = series.u[start:]
    if coord is None:
        coord = int(np.argmax(np.max(np.abs(u), axis=0)))
    x = u[:, coord]

    sign_flip = (x[:-1] < 0.0) & (x[1:] >= 0.0)
    idx = np.nonzero(sign_flip)[0]
    if len(idx) < min_cycles + 1:
        raise NonStationaryError(
            f"only {max(len(idx) - 1, 0)} full cycles in the tail; "
            f"need {min_cycles}"
        )
    frac = x[idx] / (x[idx] - x[idx + 1])
    t_cross = t[idx] + frac * (t[idx + 1] - t[idx])
    freq = 2.0 * np.pi / float(np.mean(np.diff(t_cross)))

    n_cyc = len(idx) - 1
    amps = np.zeros((n_cyc, u.shape[1]))
    for c in range(n_cyc):
        seg = u[idx[c]:idx[c + 1] + 1]
        amps[c] = 0.5 * (seg.max(axis=0) - seg.min(axis=0))
    ref = amps[:, coord]
    mean_ref = float(np.mean(ref))
    if mean_ref <= 0.0:
        raise NonStationaryError("reference coordinate has no oscillation")
    drift = abs(ref[-1] - ref[0]) / mean_ref
    if drift > drift_tol:
        raise NonStationaryError(
            f"amplitude drift {drift:.2%} across the retained cycles "
            f"exceeds {drift_tol:.2%}"
        )
    return amps.mean(axis=0), freq


def _cycle_amplitudes(series: TimeSeries, coord: int) -> np.ndarray:
    """Half peak-to-trough of one coordinate per upward-crossing cycle."""
    x = series.u[:, coord]
    idx = np.nonzero((x[:-1] < 0.0) & (x[1:] >= 0.0))[0]
    if len(idx) < 2:
        return np.empty(0)
    amps = np.empty(len(idx) - 1)
    for c in range(len(idx) - 1):
        seg = x[idx[c]:idx[c + 1] + 1]
        amps[c] = 0.5 * (seg.max() - seg.min())
    return amps


def classify_probe(series: TimeSeries, coord: int, a_ref: float,
                   trend_log: float = 0.06) -> str:
    """Label an integration as 'grow', 'decay' or 'settle'.

    Fast paths catch overflow, a tripled envelope or a collapsed one;
    otherwise the total change of the log cycle amplitude over the last
    60% of cycles decides, with a +-``trend_log`` dead band for orbits
    that are stationary within the run length.
    """
    if series.diverged:
        return "grow"
    amps = _cycle_amplitudes(series, coord)
    if amps.size < 8:
        return "decay" if float(np.max(np.abs(series.u[-10:, coord]))) \
            < 0.05 * a_ref else "settle"
    if float(np.max(amps)) >= 3.0 * a_ref:
        return "grow"
    if amps[-1] <= 0.05 * a_ref or amps[-1] <= 0.0:
        return "decay"
    tail = amps[int(0.4 * amps.size):]
    k = np.arange(tail.size, dtype=float)
    slope = float(np.polyfit(k, np.log(tail), 1)[0])
    total = slope * tail.size
    if total > trend_log:
        return "grow"
    if total < -trend_log:
        return "decay"
    return "settle"


def _bisect_amplitude(classify, lo: float, hi: float,
                      rel_tol: float) -> float:
    """Shared straddle check + bisection on a grow/decay/settle oracle."""
    if not 0.0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    c_lo, c_hi = classify(lo), classify(hi)
    if c_lo != "decay" or c_hi != "grow":
        raise BracketError(
            f"no straddle: lower probe '{c_lo}', upper probe '{c_hi}'"
            + (" (both converge to a limit cycle)"
               if c_lo == c_hi == "settle" else "")
        )
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        c = classify(mid)
        if c == "grow":
            hi = mid
        else:
            # decayed, or stationary within the run length: the growth
            # threshold lies above
            lo = mid
    return 0.5 * (lo + hi)


def find_stability_limit(model: ReducedModel, contacts,
                         aero: AeroInfluenceModel, shape: np.ndarray,
                         omega: float, bracket: tuple[float, float],
                         cycles: int = 1500, steps_per_period: int = 150,
                         rel_tol: float = 0.01,
                         trend_log: float = 0.06,
                         freq_dependent: bool = True) -> float:
    """Bisect the critical initial amplitude between decay and growth.

    Probes integrate from initial conditions along ``shape`` (complex
    allowed) at the given frequency and are labeled by the trend of
    their cycle-amplitude envelope.  Raises ``BracketError`` when the
    endpoint probes do not straddle the boundary; two probes settling
    onto the same orbit report 'both converge to a limit cycle'.

    The run length bounds the resolution: a probe within about
    ``trend_log / (pi |D_total'| cycles)`` of the critical amplitude
    looks stationary and is treated as below threshold, biasing the
    result by under the bracket tolerance for the bundled benchmarks.
    """
    shape = np.asarray(shape, dtype=complex)
    i_dom = model.dominant_coord
    a_dom = abs(shape[i_dom])
    if a_dom == 0.0:
        raise ValueError("shape has no dominant-coordinate motion")
    step = 2.0 * np.pi / (omega * steps_per_period)
    step = min(step, _min_period(model) / 50.0)
    duration = cycles * 2.0 * np.pi / omega

    def classify(a: float) -> str:
        u0 = a * shape.real
        v0 = -a * omega * shape.imag
        series = time_integrate(model, contacts, aero, u0, v0, duration,
                                step, freq_dependent=freq_dependent,
                                omega_init=omega, overflow_factor=20.0)
        return classify_probe(series, i_dom, a * a_dom, trend_log)

    return _bisect_amplitude(classify, float(bracket[0]),
                             float(bracket[1]), rel_tol)
