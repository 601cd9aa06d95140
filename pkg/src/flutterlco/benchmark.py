"""Synthetic two-configuration benchmark of a frictionally damped sector.

No proprietary blade model ships with this package, so the solvers are
exercised on a generated reduced model that reproduces the *structure* of
the problem class rather than any absolute values: a handful of relative
contact coordinates coupled through the mass matrix to a few generalized
modal coordinates, friction elements whose engagement moves the target
mode from its sticking to its sliding frequency, and per-nodal-diameter
aerodynamic influence matrices whose modal damping carries chosen signs.

Both configurations share the structural model (stick/slip frequency
ratio 0.80 of the target mode); they differ only in the aerodynamic
tables:

* configuration 1 is self-excited already at the sticking linearization
  (negative aerodynamic damping, small against the peak friction
  damping), so a stable limit cycle sits just past the slip onset;
* configuration 2 is aerodynamically damped at stick but self-excited at
  the sliding limit, so the equilibrium is locally stable and an
  *unstable* limit cycle bounds the safe amplitude range.

The influence matrices are synthesized in the corresponding modal basis,
``G = M Psi diag(g) Psi^T M``, which makes the modal damping of every
linear mode exact by construction:  for motion along mass-normalized
``psi_j`` at frequency ``w``, ``D^a = -Im(g_j)/w^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .aero import AeroInfluenceModel
from .model import ContactElement, LinearMode, ReducedModel, linear_eigen


__all__ = [
    "BenchmarkCase",
    "generate_benchmark",
    "flutter_curve",
]

_SEED = 176524
_RATIO_TARGET = 1.25   # omega_stick / omega_slip of the target mode
_ONSET_BASE = 0.12     # modal amplitude at which the first element slips
_CONTACT_NORM = 0.25   # contact-coordinate content of the target mode

#: target aerodynamic damping of the flutter-prone mode, per nodal
#: diameter, at the stick and slip reference states.  Signs encode the
#: two configurations; magnitudes are scaled up from realistic per-mille
#: values so the time-domain cross checks settle within test budgets.
_D_STICK = {
    1: {0: 4.0e-3, 1: 1.5e-3, 2: -8.0e-4, 3: 2.5e-3, 4: -3.0e-3},
    2: {0: 5.0e-3, 1: 3.0e-3, 2: 2.5e-3, 3: -1.2e-3, 4: 6.0e-3},
}
_D_SLIP = {
    1: {0: 3.0e-3, 1: -1.0e-3, 2: 1.5e-3, 3: 4.0e-3, 4: -2.0e-3},
    2: {0: 2.0e-3, 1: -1.5e-3, 2: -5.0e-3, 3: 1.0e-3, 4: -6.0e-3},
}
_TARGET_ND = 2

#: surrogate-fluid cubic coefficient at which the plain serial iteration
#: on configuration 2 bounces between over- and under-predicted
#: amplitudes without settling, while 0.3 under-relaxation converges;
#: exposed through the case metadata for the regression runs.
_KAPPA_RELAX = 1.5e-3


@dataclass
class BenchmarkCase:
    """Generated model, contacts, per-ND aero tables and tuning metadata."""

    model: ReducedModel
    contacts: tuple[ContactElement, ...]
    aero_set: dict[int, AeroInfluenceModel]
    target_nd: int
    mode_index: int
    config: int
    size: str
    amp_range: tuple[float, float]
    metadata: dict = field(default_factory=dict)

    @property
    def aero(self) -> AeroInfluenceModel:
        """Influence model of the target nodal diameter."""
        return self.aero_set[self.target_nd]

    def aero_for(self, nd: int) -> AeroInfluenceModel:
        try:
            return self.aero_set[nd]
        except KeyError:
            raise KeyError(
                f"no aero data for nodal diameter {nd}; available: "
                f"{sorted(self.aero_set)}"
            ) from None


def _sizes(size: str) -> tuple[int, int]:
    if size == "small":
        return 2, 2   # contact pairs, modal coordinates -> N = 6
    if size == "medium":
        return 8, 5   # 2*8 + 5 = 21
    raise ValueError("size must be 'small' or 'medium'")


def _target_mode(modes: list[LinearMode], coord: int) -> LinearMode:
    elastic = [m for m in modes if not m.rigid]
    return max(elastic, key=lambda m: abs(m.shape[coord]))


def _build_structure(size: str):
    """Mass/stiffness pair with contact coordinates first, then modal.

    Synthesized from a prescribed free-sliding modal basis, M = P^-T P^-1
    and K = P^-T diag(lam) P^-1, so the sliding spectrum and the contact
    participation of every mode are design quantities rather than
    outcomes.  The target mode carries a dedicated contact pattern; the
    remaining modes are kept nearly orthogonal to it at the contact
    coordinates.  The tangential springs then stiffen mostly the target
    mode, which makes the stick/slip frequency split large enough to tune
    while every sticking mode stays slow enough for the time-domain
    cross checks.
    """
    n_pairs, n_modal = _sizes(size)
    n_c = 2 * n_pairs
    n = n_c + n_modal
    rng = np.random.default_rng(_SEED)

    # free-sliding spectrum: target mode lowest (rescaled to 1 later),
    # the rest spread upward and safely above the tuned stick frequency
    if size == "small":
        lam = np.concatenate([[1.0], np.linspace(1.9, 4.7, n - 1) ** 2])
    else:
        lam = np.concatenate([[1.0], np.linspace(1.7, 5.0, n - 1) ** 2])

    # contact pattern of the target mode: per-element amplitude and
    # direction, total Euclidean norm held at _CONTACT_NORM
    angles = rng.uniform(0.0, 2.0 * np.pi, n_pairs)
    weights = 1.0 + 0.3 * rng.uniform(-1.0, 1.0, n_pairs)
    g = np.zeros(n_c)
    g[0::2] = weights * np.cos(angles)
    g[1::2] = weights * np.sin(angles)
    g *= _CONTACT_NORM / np.linalg.norm(g)

    phi = np.zeros((n, n))
    phi[:n_c, 0] = g
    phi[n_c, 0] = 1.0  # the first modal coordinate dominates the target
    phi[n_c + 1:, 0] = 0.08 * rng.standard_normal(n_modal - 1)
    g_hat = g / np.linalg.norm(g)
    for j in range(1, n):
        b = rng.standard_normal(n_c)
        b -= (b @ g_hat) * g_hat  # near-orthogonal to the target pattern
        b *= rng.uniform(0.08, 0.22) / np.linalg.norm(b)
        b += 0.05 * rng.uniform(-1.0, 1.0) * g  # finite residual coupling
        phi[:n_c, j] = b
        # spread the remaining modes over the other modal coordinates,
        # keeping the target's dominant coordinate clean for tracking
        q = 0.25 * rng.standard_normal(n_modal)
        q[0] *= 0.4
        if n_modal > 1:
            q[1 + (j - 1) % (n_modal - 1)] += 1.0
        phi[n_c:, j] = q

    inv = np.linalg.inv(phi)
    mass = inv.T @ inv
    stiff = inv.T @ np.diag(lam) @ inv
    mass = 0.5 * (mass + mass.T)
    stiff = 0.5 * (stiff + stiff.T)
    return mass, stiff, n_c, n_modal


def _tune_kt(mass, stiff, n_c, coord) -> float:
    """Bisect the uniform tangential stiffness to the frequency ratio."""

    def ratio(k_t: float) -> float:
        ks = stiff.copy()
        ks[np.arange(n_c), np.arange(n_c)] += k_t
        vals, vecs = scipy.linalg.eigh(ks, mass)
        j = int(np.argmax(np.abs(vecs[coord, :])))
        w_st = np.sqrt(vals[j])
        vals_s, vecs_s = scipy.linalg.eigh(stiff, mass)
        js = int(np.argmax(np.abs(vecs_s[coord, :])))
        return float(w_st / np.sqrt(vals_s[js]))

    lo, hi = 1e-3, 1e5
    if ratio(hi) <= _RATIO_TARGET:
        raise RuntimeError("fixed-interface spectrum leaves the frequency "
                           "ratio target unreachable")
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if ratio(mid) < _RATIO_TARGET:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-13:
            break
    return float(np.sqrt(lo * hi))


def _modal_gains(config: int, nd: int, modes: list[LinearMode],
                 target_idx: int, table: dict, rng) -> np.ndarray:
    """Complex gain per mode; 'table' pins the target, others are damped."""
    g = np.zeros(len(modes), dtype=complex)
    for j, mode in enumerate(modes):
        w2 = mode.omega ** 2
        if j == target_idx:
            d = table[config][nd]
        else:
            # parasitic modes: aerodynamically damped, mild ND variation
            d = (6.0e-3 + 2.0e-3 * np.cos(0.9 * j + 0.7 * nd)) * 1.0
        re = 3.0e-7 * w2 * float(rng.uniform(-1.0, 1.0))
        g[j] = re - 1j * d * w2
    return g


def generate_benchmark(config: int, size: str = "small") -> BenchmarkCase:
    """Deterministically generate one benchmark configuration.

    Returns the same structural model for both configurations; only the
    aerodynamic tables differ.  See the module docstring for the design
    targets each configuration realizes.
    """
    if config not in (1, 2):
        raise ValueError("config must be 1 or 2")
    mass, stiff, n_c, n_modal = _build_structure(size)
    coord = n_c  # first modal coordinate dominates the target mode

    k_t = _tune_kt(mass, stiff, n_c, coord)

    # normalize the sliding frequency of the target mode to 1
    vals, vecs = scipy.linalg.eigh(stiff, mass)
    j = int(np.argmax(np.abs(vecs[coord, :])))
    scale = 1.0 / vals[j]
    stiff = stiff * scale
    k_t = k_t * scale

    # slip onset amplitudes staggered across the elements
    probe = ReducedModel(mass, stiff,
                         contacts=tuple(
                             ContactElement(2 * e, 2 * e + 1, k_t, 1.0)
                             for e in range(n_c // 2)),
                         sensor_coord=coord, dominant_coord=coord)
    stick_modes = linear_eigen(probe, "stick")
    target = _target_mode(stick_modes, coord)
    rng = np.random.default_rng(_SEED + 1)
    contacts = []
    g_med = float(np.median([
        np.hypot(target.shape[2 * e], target.shape[2 * e + 1])
        for e in range(n_c // 2)]))
    for e in range(n_c // 2):
        g_e = max(np.hypot(target.shape[2 * e], target.shape[2 * e + 1]),
                  0.2 * g_med)
        onset = _ONSET_BASE * (1.0 + 0.35 * float(rng.uniform(0.0, 1.0)))
        contacts.append(ContactElement(2 * e, 2 * e + 1, k_t,
                                       float(k_t * g_e * onset)))
    contacts = tuple(contacts)

    labels = tuple(
        f"contact{e}_{xy}" for e in range(n_c // 2) for xy in ("x", "y")
    ) + tuple(f"mode{j}" for j in range(n_modal))
    model = ReducedModel(mass, stiff, contacts=contacts, sensor_coord=coord,
                         dominant_coord=coord, labels=labels)

    stick_modes = [m for m in linear_eigen(model, "stick") if not m.rigid]
    slip_modes = [m for m in linear_eigen(model, "slip") if not m.rigid]
    t_stick = _target_mode(stick_modes, coord)
    t_slip = _target_mode(slip_modes, coord)
    mode_index = stick_modes.index(t_stick)

    psi_st = np.column_stack([m.shape for m in stick_modes])
    psi_sl = np.column_stack([m.shape for m in slip_modes])
    i_st = stick_modes.index(t_stick)
    i_sl = slip_modes.index(t_slip)

    rng_a = np.random.default_rng(_SEED + 2)
    aero_set = {}
    for nd in sorted(_D_STICK[config]):
        g_st = _modal_gains(config, nd, stick_modes, i_st, _D_STICK, rng_a)
        g_sl = _modal_gains(config, nd, slip_modes, i_sl, _D_SLIP, rng_a)
        big_st = mass @ psi_st @ np.diag(g_st) @ psi_st.T @ mass
        big_sl = mass @ psi_sl @ np.diag(g_sl) @ psi_sl.T @ mass
        aero_set[nd] = AeroInfluenceModel(
            g_stick=big_st, g_slip=big_sl,
            omega_stick=t_stick.omega, omega_slip=t_slip.omega, nd=nd)

    onsets = [el.f_lim / (el.k_t * max(np.hypot(
        t_stick.shape[el.coord_x], t_stick.shape[el.coord_y]), 1e-12))
        for el in contacts]
    # the lower end sticks with margin; the upper end reaches far enough
    # past the slip onsets that the friction damping has decayed below
    # every slip-side aero magnitude in the tables
    amp_range = (0.3 * min(onsets), 180.0 * max(onsets))

    meta = {
        "seed": _SEED,
        "config": config,
        "size": size,
        "omega_stick": t_stick.omega,
        "omega_slip": t_slip.omega,
        "d_a_stick": _D_STICK[config][_TARGET_ND],
        "d_a_slip": _D_SLIP[config][_TARGET_ND],
        "kappa_relax": _KAPPA_RELAX,
        "slip_onsets": [float(a) for a in onsets],
    }
    return BenchmarkCase(model=model, contacts=contacts, aero_set=aero_set,
                         target_nd=_TARGET_ND, mode_index=mode_index,
                         config=config, size=size, amp_range=amp_range,
                         metadata=meta)


def flutter_curve(case: BenchmarkCase) -> list[dict]:
    """Aerodynamic damping of the target mode versus nodal diameter.

    Evaluates the modal projection of the stick and slip influence
    matrices independently of how they were generated, one row per ND.
    """
    coord = case.model.dominant_coord
    stick = _target_mode(linear_eigen(case.model, "stick"), coord)
    slip = _target_mode(linear_eigen(case.model, "slip"), coord)
    rows = []
    for nd in sorted(case.aero_set):
        aero = case.aero_set[nd]
        d_st = -float(np.imag(stick.shape @ aero.g_stick @ stick.shape)) \
            / stick.omega ** 2
        d_sl = -float(np.imag(slip.shape @ aero.g_slip @ slip.shape)) \
            / slip.omega ** 2
        rows.append({"nd": nd, "d_a_stick": d_st, "d_a_slip": d_sl})
    return rows
