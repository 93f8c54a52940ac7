"""Dispersion, phase mismatch and split-step biphoton amplitude.

Loss bookkeeping: the pump power decays as ``exp(-alpha z)`` and each
generated photon's amplitude as ``exp(-alpha (L - z) / 2)`` from its birth
point to the output facet, with ``alpha = loss_db * ln(10) / 10``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DispersionValidityError, EnergyConservationError, InvalidParameterError

DB_TO_NEPER = math.log(10.0) / 10.0


@dataclass(frozen=True)
class DispersionModel:
    """Cubic Taylor expansion of k(w) about ``reference``."""

    reference: float
    k0: float = 0.0
    k1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    span: float = math.inf

    def __post_init__(self):
        for name in ("reference", "k0", "k1", "beta2", "beta3"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"dispersion coefficient {name} must be finite")
        if not self.span > 0:
            raise InvalidParameterError("dispersion span must be > 0")

    def detuning(self, omega):
        x = np.asarray(omega, dtype=float) - self.reference
        if np.any(np.abs(x) > self.span):
            raise DispersionValidityError(
                f"frequency outside the model span of {self.span:.3e} rad/s around {self.reference:.6e}"
            )
        return x

    def taylor(self, x):
        """``k - k0`` at detuning ``x``."""
        return self.k1 * x + 0.5 * self.beta2 * x**2 + self.beta3 * x**3 / 6.0


def silicon_nanowire(reference):
    """Representative dispersion for a ~450 x 220 nm silicon strip near 1550 nm.

    Group index 4.2 and beta2 = -0.6 ps^2/m. Published values scatter by
    tens of percent; pass your own :class:`DispersionModel` for fits.
    """
    k1 = 4.2 / 299792458.0
    k0 = 2.4 * reference / 299792458.0
    return DispersionModel(reference, k0=k0, k1=k1, beta2=-0.6e-24, beta3=0.0, span=2 * math.pi * 20e12)


@dataclass(frozen=True)
class WaveguideSpec:
    length: float = 0.01
    gamma: float = 300.0
    loss_db_per_m: float = 0.0
    segments: int = 64
    include_nonlinear_phase: bool = False

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidParameterError("waveguide length must be > 0")
        if not self.gamma >= 0:
            raise InvalidParameterError("gamma must be >= 0")
        if not self.loss_db_per_m >= 0:
            raise InvalidParameterError("loss must be >= 0")
        if int(self.segments) != self.segments or self.segments < 1:
            raise InvalidParameterError("segments must be a positive integer")

    @property
    def alpha(self):
        """Power attenuation coefficient in 1/m."""
        return self.loss_db_per_m * DB_TO_NEPER


def propagation_constant(omega, disp):
    x = disp.detuning(omega)
    return disp.k0 + disp.taylor(x)


def phase_mismatch(wp1, wp2, ws, wi, disp, wg=None, pump_power=0.0, tol=None):
    """``k(wp1) + k(wp2) - k(ws) - k(wi)``, broadcasting over arrays.

    ``disp=None`` means flat phase matching (zero mismatch). The k0 terms
    cancel identically and are never added, which avoids catastrophic
    cancellation at optical frequencies. ``tol`` bounds the allowed energy
    mismatch (default: 1e-9 relative).
    """
    wp1, wp2, ws, wi = (np.asarray(v, dtype=float) for v in (wp1, wp2, ws, wi))
    excess = wp1 + wp2 - ws - wi
    if tol is None:
        tol = 1e-9 * np.max(np.abs(ws))
    if np.any(np.abs(excess) > tol):
        raise EnergyConservationError("pump and generated frequencies violate energy conservation")
    if disp is None:
        dk = np.zeros(np.broadcast(wp1, wp2, ws, wi).shape)
    else:
        t = disp.taylor
        dk = (
            t(disp.detuning(wp1))
            + t(disp.detuning(wp2))
            - t(disp.detuning(ws))
            - t(disp.detuning(wi))
        )
    if wg is not None and wg.include_nonlinear_phase:
        dk = dk + 2.0 * wg.gamma * pump_power
    return dk if dk.ndim else float(dk)


def pm_sinc(delta_k, length):
    """``sin(x)/x`` at ``x = delta_k * length / 2``."""
    return np.sinc(np.asarray(delta_k) * length / (2.0 * math.pi))


def _segment_midpoints(wg):
    dz = wg.length / wg.segments
    return dz, (np.arange(wg.segments) + 0.5) * dz


def _loss_weight(z, wg):
    # pump power exp(-a z); two photons, amplitude exp(-a (L-z)/2) each
    a = wg.alpha
    return np.exp(-a * z) * np.exp(-a * (wg.length - z))


def split_step_amplitude(wp1, wp2, ws, wi, wg, disp, pump_power=1.0):
    """Coherent sum of per-segment pair amplitudes along the waveguide.

    ``sum_j gamma P(z_j) dz exp(i dk z_j) T_out(z_j)`` over ``wg.segments``
    midpoints. Explicit loop over segments; see :func:`segment_sum` for the
    vectorized equivalent.
    """
    dk = phase_mismatch(wp1, wp2, ws, wi, disp, wg, pump_power)
    dz, z = _segment_midpoints(wg)
    dk = np.asarray(dk)
    total = np.zeros(dk.shape, dtype=complex)
    for zj in z:
        total += wg.gamma * pump_power * dz * _loss_weight(zj, wg) * np.exp(1j * dk * zj)
    return total if total.ndim else complex(total)


def segment_sum(delta_k, wg, pump_power=1.0):
    """Closed-form evaluation of the split-step sum for an array of mismatches.

    The pump decay and the photons' remaining path loss multiply to
    ``exp(-alpha L)`` for every segment, so the N-term sum is a geometric
    series ``exp(u/2) * expm1(N u) / expm1(u)`` with ``u = i dk dz``.
    Agrees with :func:`split_step_amplitude` to rounding.
    """
    dk = np.asarray(delta_k, dtype=float)
    n = wg.segments
    dz = wg.length / n
    u = 1j * dk * dz
    prefactor = wg.gamma * pump_power * dz * math.exp(-wg.alpha * wg.length)
    small = np.abs(u) < 1e-12
    u_safe = np.where(small, 1.0, u)
    series = np.where(small, n, np.exp(u_safe / 2) * np.expm1(n * u_safe) / np.expm1(u_safe))
    out = prefactor * series
    return out if out.ndim else complex(out)


def continuum_amplitude(delta_k, wg, pump_power=1.0):
    """N -> infinity limit: ``gamma P L exp(-alpha L) sinc(dk L / 2)`` (modulus)."""
    return wg.gamma * pump_power * wg.length * math.exp(-wg.alpha * wg.length) * np.abs(pm_sinc(delta_k, wg.length))
