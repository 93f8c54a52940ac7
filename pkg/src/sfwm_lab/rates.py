"""Closed-form pair generation rates per detuning interval, and the numerics that check them.

An interval ``m`` collects pairs whose half-separation ``(wi - ws) / 2``
lies in ``[m, m + 1) * interval`` around the pump centre ``w0``. The
closed forms assume phase matching is constant over the interval and, for
coherent pumping, that the interval is much wider than the pump line.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .biphoton import pair_rate_density
from .errors import AsymptoticValidityError, InvalidParameterError
from .spectral import CoherentPump, FrequencyGrid, IncoherentPump
from .waveguide import continuum_amplitude, phase_mismatch

MIN_INTERVAL_TO_WIDTH = 10.0
COHERENT_LINESHAPE_FACTOR = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class DetuningScheme:
    interval: float
    center: float = 0.0

    def __post_init__(self):
        if not self.interval > 0:
            raise InvalidParameterError("detuning interval must be > 0")

    def detuning(self, m):
        return m * self.interval

    def midpoint(self, m):
        """Signal and idler frequencies at the middle of interval ``m``."""
        x = (m + 0.5) * self.interval
        return self.center - x, self.center + x

    def check_width(self, sigma_p):
        if self.interval < MIN_INTERVAL_TO_WIDTH * sigma_p:
            raise AsymptoticValidityError(
                f"interval {self.interval:.3e} is below {MIN_INTERVAL_TO_WIDTH:g} pump widths "
                f"({sigma_p:.3e}); use numeric_interval_rate instead"
            )


def _gain(m, scheme, wg, disp, power):
    """``gamma^2 L^2 sinc^2(dk L / 2) exp(-2 alpha L)`` at the interval midpoint."""
    ws, wi = scheme.midpoint(m)
    dk = phase_mismatch(scheme.center, scheme.center, ws, wi, disp, wg, power)
    return float(continuum_amplitude(dk, wg)) ** 2


def convolution_factor_gaussian(interval, sigma_p, m=0):
    """Integral of the squared Gaussian self-convolution over one interval.

    Independent of ``m`` because the ridge lies along ``ws + wi = 2 w0``
    and each interval cuts the same length of it.
    """
    if sigma_p < 0:
        raise InvalidParameterError("sigma_p must be >= 0")
    if sigma_p == 0:
        return 0.0
    DetuningScheme(interval).check_width(sigma_p)
    return math.sqrt(2 * math.pi) * interval * sigma_p


def coherent_rate_interval(m, scheme, sigma_p, power, wg, disp=None):
    scheme.check_width(sigma_p)
    return scheme.interval / (2 * math.pi) * _gain(m, scheme, wg, disp, power) * power**2 * COHERENT_LINESHAPE_FACTOR


def incoherent_rate_interval(m, scheme, power, wg, disp=None):
    return scheme.interval / (2 * math.pi) * _gain(m, scheme, wg, disp, power) * power**2


def incoherent_sum_factor(pump, scheme):
    """``2 * interval * sum_p I_p sum_{m >= p} I_m`` over the pump components."""
    if not isinstance(pump, IncoherentPump):
        raise InvalidParameterError("incoherent_sum_factor needs an IncoherentPump")
    inten = pump.intensities
    tail = np.cumsum(inten[::-1])[::-1]
    return 2.0 * scheme.interval * math.fsum(inten * tail)


def xi_factor_coherent(sigma_p, kappa=1.0):
    """``kappa * int alpha`` for a unit-normalized Gaussian line of width ``sigma_p``."""
    if not sigma_p > 0:
        raise InvalidParameterError("sigma_p must be > 0")
    return kappa * math.sqrt(2 * math.sqrt(math.pi)) * math.sqrt(sigma_p)


# ------------------------------------------------------------ quadrature


def _rotated_box_quad(x_lo, x_hi, y_lo, y_hi, sigma_p, rtol=1e-8):
    """Integrate ``exp(-2 ((wi + ws) / (2 sigma))^2)`` over a rotated box.

    Works in the original coordinates ``u = wi - w0`` and ``v = w0 - ws``
    (so ``X = (u + v) / 2`` and ``Y = (u - v) / 2``); the box in (X, Y) is
    a diamond in (u, v) and the unit Jacobian needs no correction.
    """

    def inner(u):
        lo = max(2 * x_lo - u, u - 2 * y_hi)
        hi = min(2 * x_hi - u, u - 2 * y_lo)
        if hi <= lo:
            return 0.0
        f = lambda v: math.exp(-2.0 * ((u - v) / (2.0 * sigma_p)) ** 2)
        pts = [u] if lo < u < hi else None
        val, _ = integrate.quad(f, lo, hi, points=pts, epsabs=0.0, epsrel=rtol, limit=200)
        return val

    u_lo, u_hi = x_lo + y_lo, x_hi + y_hi
    # the integrand over v peaks where the diamond crosses Y = 0
    kinks = [p for p in (x_lo, x_hi, x_lo + y_hi, x_hi + y_lo) if u_lo < p < u_hi]
    val, _ = integrate.quad(inner, u_lo, u_hi, points=sorted(set(kinks)) or None,
                            epsabs=0.0, epsrel=rtol, limit=200)
    return val


def convolution_factor_quadrature(interval, sigma_p, m=0, rtol=1e-8):
    """Adaptive 2D quadrature of the same integral over the unbounded-ridge box.

    The box is ``X in [m, m+1] * interval`` by ``|Y| <= interval / 2``; the
    closed form extends the Y range to infinity.
    """
    return _rotated_box_quad(m * interval, (m + 1) * interval, -0.5 * interval, 0.5 * interval, sigma_p, rtol)


def asymmetric_interval_factor(n_k, n_l, interval, sigma_p):
    """Ridge weight between signal interval ``n_l`` and idler interval ``n_k``.

    Only matching indices share the energy-conserving ridge, so the factor is
    the symmetric-interval value for ``n_k == n_l`` and zero otherwise.
    """
    DetuningScheme(interval).check_width(sigma_p)
    if n_k == n_l:
        return convolution_factor_gaussian(interval, sigma_p)
    return 0.0


def asymmetric_interval_quadrature(n_k, n_l, interval, sigma_p, rtol=1e-8):
    """Quadrature of the asymmetric-interval integral on its stated box."""
    x_lo = 0.5 * (n_k + n_l) * interval
    y_lo = (n_k - n_l - 1) * 0.5 * interval
    y_hi = (n_k - n_l + 1) * 0.5 * interval
    return _rotated_box_quad(x_lo, x_lo + interval, y_lo, y_hi, sigma_p, rtol)


# ------------------------------------------------------------ Monte-Carlo


@dataclass(frozen=True)
class PhaseAverage:
    mean: float
    stderr: float
    ensembles: int


def mc_phase_average(amplitudes, ensembles, seed=None, chunk=20000, fixed_phases=None):
    """Average of ``|sum_m A_m exp(i phi_m)|^2`` over i.i.d. uniform phases.

    ``fixed_phases`` pins every ensemble member to the same phases, which
    gives the fully coherent sum for comparison.
    """
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    if ensembles < 1:
        raise InvalidParameterError("ensembles must be >= 1")
    if fixed_phases is not None:
        fixed = np.asarray(fixed_phases, dtype=float).ravel()
        if fixed.shape != amps.shape:
            raise InvalidParameterError("fixed_phases must match the amplitudes")
        return PhaseAverage(float(abs(np.exp(1j * fixed) @ amps) ** 2), 0.0, ensembles)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < ensembles:
        n = min(chunk, ensembles - done)
        phases = rng.uniform(0.0, 2 * math.pi, (n, amps.size))
        s = np.abs(np.exp(1j * phases) @ amps) ** 2
        total += float(s.sum())
        total_sq += float(np.dot(s, s))
        done += n
    mean = total / ensembles
    if ensembles > 1:
        var = max(total_sq / ensembles - mean**2, 0.0) * ensembles / (ensembles - 1)
        stderr = math.sqrt(var / ensembles)
    else:
        stderr = math.inf
    return PhaseAverage(mean, stderr, ensembles)


# ---------------------------------------------------------- numeric route


def default_spacing(pump):
    if isinstance(pump, IncoherentPump):
        if pump.spacing is None:
            raise InvalidParameterError("single-line incoherent pump: pass the spacing explicitly")
        return pump.spacing
    if pump.shape == "gaussian":
        return pump.bandwidth / 6.0
    return pump.bandwidth / 16.0


def _pump_center(pump):
    return pump.center if isinstance(pump, CoherentPump) else float(pump.frequencies[np.argmax(pump.intensities)])


def _pump_reach(pump):
    if isinstance(pump, CoherentPump):
        return pump.half_span
    f = pump.frequencies
    return float(max(f[-1] - pump.center, pump.center - f[0]))


def numeric_band_rate(pump, wg, disp, x_lo, x_hi, spacing=None, kappa=1.0, center=None, workers=None):
    """Pair rate with half-separation in ``[x_lo, x_hi]``, summed from the discretized JSI.

    Signal and idler grids mirror each other about ``center`` and are
    padded by the pump reach on both sides so the whole ridge is captured.
    Cells on the band edge count half.
    """
    d = default_spacing(pump) if spacing is None else spacing
    w0 = _pump_center(pump) if center is None else center
    pad = _pump_reach(pump) + 2 * d
    # offsets x_k = x0 + k d with 2 x0 / d integral so X hits the edges exactly
    lo_off = max(x_lo - pad, -pad)
    k0 = math.floor(lo_off / (0.5 * d))
    x0 = k0 * 0.5 * d
    count = int(math.ceil((x_hi + pad - x0) / d)) + 1
    offsets = x0 + d * np.arange(count)
    gs = FrequencyGrid(w0 - offsets[-1], d, count)  # ascending signal grid
    gi = FrequencyGrid(w0 + x0, d, count)
    rate = pair_rate_density(pump, wg, disp, gs, gi, kappa, workers).values
    u = gi.points - w0
    v = w0 - gs.points
    half_sep = 0.5 * (u[None, :] + v[:, None])
    tol = 1e-9 * d
    weight = ((half_sep > x_lo + tol) & (half_sep < x_hi - tol)).astype(float)
    edge = np.isclose(half_sep, x_lo, rtol=0, atol=tol) | np.isclose(half_sep, x_hi, rtol=0, atol=tol)
    weight[edge] = 0.5
    return float(np.sum(rate * weight))


def numeric_interval_rate(m, scheme, pump, wg, disp=None, spacing=None, kappa=1.0, workers=None):
    return numeric_band_rate(
        pump, wg, disp, scheme.detuning(m), scheme.detuning(m + 1), spacing, kappa, scheme.center, workers
    )
