"""Truncated Fourier representations of periodic multi-coordinate motion.

A periodic vector signal is represented by its complex harmonic
coefficients ``c_k`` with the convention

    u(tau) = c_0 + sum_{k=1}^{H} Re{ c_k * exp(i k tau) },    tau = omega t,

so ``c_0`` is real (static offset) and each higher harmonic carries an
amplitude and a phase per coordinate.  All frequency-domain solvers in this
package exchange coefficients in a single flattened real layout::

    [ c_0 | Re c_1 | Im c_1 | ... | Re c_H | Im c_H ]

which has ``(2 H + 1) N`` entries for ``N`` coordinates.  Keeping one
canonical layout makes Jacobian bookkeeping and solver interfaces explicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


__all__ = ["HarmonicSet", "flatten_count"]


def flatten_count(order: int, n_dofs: int) -> int:
    """Number of real values in the flattened coefficient layout."""
    return (2 * order + 1) * n_dofs


@dataclass
class HarmonicSet:
    """Fourier coefficients of a periodic vector signal up to order ``H``.

    Parameters
    ----------
    coeff_0 : ndarray, shape (N,)
        Real coefficients of the zeroth harmonic (static part).
    coeff : ndarray, shape (H, N), complex
        Coefficients of harmonics 1..H; ``coeff[k-1]`` belongs to
        harmonic ``k``.  ``H`` may be zero, in which case this array is
        empty with shape (0, N).

    Notes
    -----
    The represented signal is real by construction; only non-negative
    harmonics are stored.  Instances are mutable containers, the solvers
    treat them as values and copy before modifying.
    """

    coeff_0: np.ndarray
    coeff: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.coeff_0 = np.atleast_1d(np.asarray(self.coeff_0, dtype=float))
        if self.coeff_0.ndim != 1:
            raise ValueError("coeff_0 must be a vector")
        n = self.coeff_0.shape[0]
        if self.coeff is None:
            self.coeff = np.zeros((0, n), dtype=complex)
        self.coeff = np.asarray(self.coeff, dtype=complex)
        if self.coeff.ndim != 2 or self.coeff.shape[1] != n:
            raise ValueError(
                f"coeff must have shape (H, {n}), got {self.coeff.shape}"
            )
        if not (np.all(np.isfinite(self.coeff_0))
                and np.all(np.isfinite(self.coeff))):
            raise ValueError("harmonic coefficients must be finite")

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    @property
    def order(self) -> int:
        """Truncation order H."""
        return self.coeff.shape[0]

    @property
    def n_dofs(self) -> int:
        """Number of coordinates N."""
        return self.coeff_0.shape[0]

    @property
    def fundamental(self) -> np.ndarray:
        """Complex coefficients of harmonic 1 (raises if H = 0)."""
        if self.order < 1:
            raise ValueError("harmonic set has no fundamental (order 0)")
        return self.coeff[0]

    def copy(self) -> "HarmonicSet":
        return HarmonicSet(self.coeff_0.copy(), self.coeff.copy())

    @classmethod
    def zeros(cls, order: int, n_dofs: int) -> "HarmonicSet":
        if order < 0 or n_dofs < 1:
            raise ValueError("order must be >= 0 and n_dofs >= 1")
        return cls(np.zeros(n_dofs), np.zeros((order, n_dofs), dtype=complex))

    @classmethod
    def from_fundamental(cls, c1: np.ndarray, order: int = 1) -> "HarmonicSet":
        """Build a set whose only nonzero coefficients are harmonic 1."""
        c1 = np.asarray(c1, dtype=complex)
        out = cls.zeros(order, c1.shape[0])
        out.coeff[0] = c1
        return out

    # ------------------------------------------------------------------
    # flattening
    # ------------------------------------------------------------------

    def flatten(self) -> np.ndarray:
        """Return the canonical real layout, length ``(2H+1) N``."""
        parts = [self.coeff_0]
        for k in range(self.order):
            parts.append(self.coeff[k].real)
            parts.append(self.coeff[k].imag)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, flat: np.ndarray, order: int, n_dofs: int) -> "HarmonicSet":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (flatten_count(order, n_dofs),):
            raise ValueError(
                f"flat vector has length {flat.shape}, expected "
                f"({flatten_count(order, n_dofs)},)"
            )
        c0 = flat[:n_dofs].copy()
        coeff = np.zeros((order, n_dofs), dtype=complex)
        for k in range(order):
            lo = n_dofs * (1 + 2 * k)
            coeff[k] = flat[lo:lo + n_dofs] + 1j * flat[lo + n_dofs:lo + 2 * n_dofs]
        return cls(c0, coeff)

    @staticmethod
    def flat_index(order: int, n_dofs: int, harmonic: int, coord: int,
                   imag: bool = False) -> int:
        """Index of one coefficient component in the flattened layout."""
        if not 0 <= harmonic <= order:
            raise ValueError("harmonic out of range")
        if not 0 <= coord < n_dofs:
            raise ValueError("coordinate out of range")
        if harmonic == 0:
            if imag:
                raise ValueError("zeroth harmonic has no imaginary part")
            return coord
        return n_dofs * (2 * harmonic - 1 + (1 if imag else 0)) + coord

    # ------------------------------------------------------------------
    # synthesis
    # ------------------------------------------------------------------

    def synthesize(self, n_samples: int, coords: np.ndarray | None = None,
                   derivative: int = 0) -> np.ndarray:
        """Evaluate the signal on a uniform phase grid over one period.

        Parameters
        ----------
        n_samples : int
            Number of equally spaced samples tau_j = 2 pi j / n.
        coords : array of int, optional
            Subset of coordinates to synthesize (default all).
        derivative : int
            Order of the derivative with respect to tau (0, 1 or 2);
            each order multiplies harmonic k by ``i k``.

        Returns
        -------
        ndarray, shape (n_samples, len(coords))
        """
        if n_samples < 2 * self.order + 1:
            raise ValueError("n_samples too small to represent the set")
        c0 = self.coeff_0 if coords is None else self.coeff_0[coords]
        ck = self.coeff if coords is None else self.coeff[:, coords]
        spec = np.zeros((n_samples // 2 + 1, c0.shape[0]), dtype=complex)
        if derivative == 0:
            spec[0] = c0 * n_samples
        for k in range(1, self.order + 1):
            spec[k] = ck[k - 1] * (1j * k) ** derivative * (n_samples / 2.0)
        return np.fft.irfft(spec, n=n_samples, axis=0)

    # ------------------------------------------------------------------
    # phase handling
    # ------------------------------------------------------------------

    def rotate(self, theta: float) -> "HarmonicSet":
        """Return a copy advanced by a global phase shift.

        Shifting time by ``theta / omega`` multiplies harmonic k by
        ``exp(i k theta)``; the zeroth harmonic is unchanged.  The signal
        itself is the same orbit, re-parameterized in phase.
        """
        out = self.copy()
        for k in range(1, self.order + 1):
            out.coeff[k - 1] *= np.exp(1j * k * theta)
        return out

    def amplitude(self, coord: int) -> float:
        """Magnitude of the fundamental coefficient of one coordinate."""
        return float(np.abs(self.fundamental[coord]))
