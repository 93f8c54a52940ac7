"""Channelized pair counting, noise, CAR and heralded g2.

Brightness coefficients are rates per squared pump power: multiply by
``P**2`` to get counts per second.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .biphoton import pair_rate_density
from .channels import ChannelBank
from .errors import (
    BracketError,
    DataError,
    InvalidParameterError,
    ParseError,
    UndefinedCARError,
    UndefinedEstimatorError,
)
from .spectral import CoherentPump, FrequencyGrid, IncoherentPump, extend_boundaries, incoherent_pump, pump_power

DEFAULT_WINDOW = 0.8e-9  # s


@dataclass(frozen=True)
class EfficiencyModel:
    mu_ts: float = 1.0
    mu_ti: float = 1.0
    mu_ds: float = 1.0
    mu_di: float = 1.0

    def __post_init__(self):
        for name in ("mu_ts", "mu_ti", "mu_ds", "mu_di"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise InvalidParameterError(f"{name} must lie in (0, 1], got {v}")

    @property
    def signal(self):
        return self.mu_ts * self.mu_ds

    @property
    def idler(self):
        return self.mu_ti * self.mu_di


@dataclass(frozen=True)
class ArmNoise:
    """Singles of one arm: ``brightness * P^2 + linear * P + background``."""

    brightness: float
    linear: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        for name in ("brightness", "linear", "background"):
            if not getattr(self, name) >= 0:
                raise InvalidParameterError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NoiseModel:
    a1: float = 0.0
    a2: float = 0.0
    n01: float = 0.0
    n02: float = 0.0
    window: float = DEFAULT_WINDOW

    def __post_init__(self):
        for name in ("a1", "a2", "n01", "n02"):
            if not getattr(self, name) >= 0:
                raise InvalidParameterError(f"{name} must be >= 0")
        if not self.window > 0:
            raise InvalidParameterError("coincidence window must be > 0")

    def arms(self, brightness):
        return ArmNoise(brightness.b_sc1, self.a1, self.n01), ArmNoise(brightness.b_sc2, self.a2, self.n02)


@dataclass(frozen=True)
class Brightness:
    b_cc: float
    b_sc1: float
    b_sc2: float


@dataclass(frozen=True)
class CountingResult:
    singles_s: float
    singles_i: float
    coincidences: float
    accidentals: float
    car: float

    def as_dict(self):
        return {
            "singles_s": self.singles_s,
            "singles_i": self.singles_i,
            "coincidences": self.coincidences,
            "accidentals": self.accidentals,
        }


# ------------------------------------------------------------ pipeline


def _pump_anchor(pump):
    if isinstance(pump, IncoherentPump):
        return float(pump.frequencies[0]), float(pump.frequencies[0]), float(pump.frequencies[-1])
    return pump.center, pump.center - pump.half_span, pump.center + pump.half_span


def _pump_center(pump):
    return pump.center


def _default_spacing(pump, bank_s):
    if isinstance(pump, IncoherentPump) and pump.spacing is not None:
        return pump.spacing
    widths = [ch.width for ch in bank_s if ch.shape == "brickwall"]
    d = min(widths) / 64 if widths else None
    if isinstance(pump, CoherentPump):
        fine = pump.fwhm / 10
        d = fine if d is None else min(d, fine)
    if d is None:
        raise InvalidParameterError("cannot infer a grid spacing; pass spacing explicitly")
    return d


def collection_grids(pump, bank_s, bank_i, spacing):
    """Signal/idler grids covering both banks and every partner of an in-band photon.

    Band edges are first made mirror images about the pump centre, then
    widened by the partner reach ``2 * (pump extent)``. Both grids contain
    the pump anchor frequency's lattice so incoherent lines land exactly.
    """
    anchor, p_lo, p_hi = _pump_anchor(pump)
    ext = extend_boundaries(bank_s.band, bank_i.band, _pump_center(pump), spacing)
    s_lo, s_hi = ext.signal_band
    i_lo, i_hi = ext.idler_band
    sig = (min(s_lo, 2 * p_lo - i_hi), max(s_hi, 2 * p_hi - i_lo))
    idl = (min(i_lo, 2 * p_lo - s_hi), max(i_hi, 2 * p_hi - s_lo))

    def grid(lo, hi):
        k_lo = math.floor((lo - anchor) / spacing + 1e-9) - 1
        k_hi = math.ceil((hi - anchor) / spacing - 1e-9) + 1
        return FrequencyGrid(anchor + k_lo * spacing, spacing, k_hi - k_lo + 1)

    return grid(*sig), grid(*idl)


def pipeline_counts(pump, wg, disp, bank_s, bank_i, eff=None, spacing=None, kappa=1.0, workers=None):
    """Coincidence and single-arm brightness of a channel pair.

    Every pump-component pair and every grid-snapped (signal, idler) pair on
    its energy diagonal contributes its split-step rate. Coincidences weight
    by both channel transmittances and all four efficiencies; each single
    arm weights by its own channel and efficiencies only.
    """
    if not isinstance(bank_s, ChannelBank) or not isinstance(bank_i, ChannelBank):
        raise InvalidParameterError("channels must be ChannelBank instances")
    eff = EfficiencyModel() if eff is None else eff
    d = _default_spacing(pump, bank_s) if spacing is None else spacing
    gs, gi = collection_grids(pump, bank_s, bank_i, d)
    rate = pair_rate_density(pump, wg, disp, gs, gi, kappa, workers).values
    ts = bank_s.on_grid(gs)
    ti = bank_i.on_grid(gi)
    p2 = pump_power(pump, kappa) ** 2
    b_cc = float(ts @ rate @ ti) * eff.signal * eff.idler / p2
    b_sc1 = float(np.sum(rate.sum(axis=1) * ts)) * eff.signal / p2
    b_sc2 = float(np.sum(rate.sum(axis=0) * ti)) * eff.idler / p2
    return Brightness(b_cc, b_sc1, b_sc2)


# ------------------------------------------------------------ CAR


def singles_rate(power, brightness, linear=0.0, background=0.0):
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise InvalidParameterError("pump power must be >= 0")
    out = brightness * p**2 + linear * p + background
    return out if out.ndim else float(out)


def _arm_rate(p, arm):
    return singles_rate(p, arm.brightness, arm.linear, arm.background)


def car(power, b_cc, arm1, arm2, window=DEFAULT_WINDOW):
    """``B_cc P^2 / (window * S1(P) * S2(P))``."""
    p = np.asarray(power, dtype=float)
    if np.any(p <= 0):
        raise InvalidParameterError("CAR needs pump power > 0")
    acc = _arm_rate(p, arm1) * _arm_rate(p, arm2) * window
    if np.any(np.asarray(acc) <= 0):
        raise UndefinedCARError("accidental rate is zero; CAR is undefined")
    out = b_cc * p**2 / acc
    return out if np.ndim(out) else float(out)


def counting_result(power, b_cc, arm1, arm2, window=DEFAULT_WINDOW):
    s1 = _arm_rate(power, arm1)
    s2 = _arm_rate(power, arm2)
    cc = b_cc * power**2
    acc = s1 * s2 * window
    value = cc / acc if acc > 0 else math.nan
    return CountingResult(s1, s2, cc, acc, value)


def _peak_sides(p, arm1, arm2):
    b1, a1, n1 = arm1.brightness, arm1.linear, arm1.background
    b2, a2, n2 = arm2.brightness, arm2.linear, arm2.background
    noise = (a1 * n2 + a2 * n1) * p + 2 * n1 * n2
    pairs = 2 * b1 * b2 * p**4 + (a1 * b2 + a2 * b1) * p**3
    return noise, pairs


def car_peak_residual(p, arm1, arm2):
    noise, pairs = _peak_sides(p, arm1, arm2)
    scale = max(abs(noise), abs(pairs))
    return abs(noise - pairs) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class CarPeak:
    power: float
    car: float
    residual: float


def car_peak(b_cc, arm1, arm2, window=DEFAULT_WINDOW, power_range=(1e-12, 1e12)):
    """Power of maximum CAR, from the stationarity condition.

    Dividing the condition by ``P`` gives a function that is strictly
    increasing for ``P > 0``, so a sign change brackets a unique root.
    """
    lo, hi = power_range
    if not 0 < lo < hi:
        raise InvalidParameterError("power range must satisfy 0 < lo < hi")

    def g(p):
        noise, pairs = _peak_sides(p, arm1, arm2)
        return (pairs - noise) / p

    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo < 0 < g_hi):
        raise BracketError(
            f"no CAR maximum in [{lo:.3e}, {hi:.3e}] W (condition does not change sign; "
            "CAR is monotone when noise is absent)"
        )
    p_star = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return CarPeak(p_star, car(p_star, b_cc, arm1, arm2, window), car_peak_residual(p_star, arm1, arm2))


def car_shift_delta(p1, mu1, mu2, arm1, arm2):
    """Excess of the rescaled noise side over the pair side at the old peak ``p1``.

    Scaling the linear noise by ``mu1`` and the background by ``mu2`` moves
    the CAR maximum to higher power whenever this is positive.
    """
    _, pairs = _peak_sides(p1, arm1, arm2)
    return (mu1 * mu2 - 1) * pairs + 2 * (mu2**2 - mu1 * mu2) * arm1.background * arm2.background


def scale_noise(arm, mu_linear, mu_background):
    return replace(arm, linear=arm.linear * mu_linear, background=arm.background * mu_background)


# ------------------------------------------------------- counting noise


def simulate_counts(rates, duration, seed=None):
    """Independent Poisson draws of ``rate * duration`` for every entry of ``rates``."""
    if not duration > 0:
        raise InvalidParameterError("duration must be > 0")
    if isinstance(rates, CountingResult):
        rates = rates.as_dict()
    rng = np.random.default_rng(seed)
    out = {}
    for key in rates:
        r = rates[key]
        if r < 0 or not math.isfinite(r):
            raise InvalidParameterError(f"rate {key} must be finite and >= 0")
        out[key] = int(rng.poisson(r * duration))
    return out


def heralded_g2(n1, n12, n13, n123):
    """Three-detector estimator ``N123 N1 / (N12 N13)``; detector 1 heralds."""
    if n12 <= 0 or n13 <= 0:
        raise UndefinedEstimatorError("heralded g2 needs nonzero herald-signal coincidences")
    return n123 * n1 / (n12 * n13)


def simulate_heralded(mean_pairs, trials, seed=None, herald_eff=1.0, signal_eff=1.0, noise_mean=0.0):
    """Counts for a herald plus 50:50-split signal arm over independent time bins.

    Pairs per bin are Poisson with mean ``mean_pairs``; each detector also
    sees Poisson noise of mean ``noise_mean`` per bin. Detectors are
    threshold (click/no-click).
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    pairs = rng.poisson(mean_pairs, trials)
    herald = rng.binomial(pairs, herald_eff) + rng.poisson(noise_mean, trials)
    sig = rng.binomial(pairs, signal_eff)
    d2 = rng.binomial(sig, 0.5)
    d3 = sig - d2
    d2 = d2 + rng.poisson(noise_mean, trials)
    d3 = d3 + rng.poisson(noise_mean, trials)
    c1, c2, c3 = herald > 0, d2 > 0, d3 > 0
    return {
        "N1": int(c1.sum()),
        "N12": int((c1 & c2).sum()),
        "N13": int((c1 & c3).sum()),
        "N123": int((c1 & c2 & c3).sum()),
    }


def g2_prediction(coincidences, accidentals):
    """Heralded g2 from the share of true coincidences among all heralded ones.

    Model: a heralded detection carries a single photon with probability
    ``C / (C + A)`` and Poissonian light otherwise, which gives
    ``1 - (C / (C + A))^2``.
    """
    total = coincidences + accidentals
    if total <= 0:
        raise UndefinedEstimatorError("no coincidences to predict g2 from")
    true_share = coincidences / total
    return 1.0 - true_share**2


# ------------------------------------------------------------ noise fit


@dataclass(frozen=True)
class SinglesFit:
    brightness: float
    linear: float
    background: float


def fit_noise(power, singles):
    """Least squares of singles against ``[P^2, P, 1]``."""
    p = np.asarray(power, dtype=float)
    s = np.asarray(singles, dtype=float)
    if p.shape != s.shape or p.size < 3:
        raise DataError("need at least 3 (power, singles) points of equal length")
    design = np.column_stack([p**2, p, np.ones_like(p)])
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    return SinglesFit(*map(float, coef))


def load_singles_table(path):
    """Read ``power_W,singles_s,singles_i`` rows."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "power_W":
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", lineno)
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
    if not rows:
        raise DataError("no samples")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


# ------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class PumpSettings:
    coherence: str = "incoherent"
    shape: str = "rectangular"
    bandwidth: float = 2 * math.pi * 200e9
    center: float = 0.0
    spacing: float | None = None  # component spacing for incoherent pumps
    kappa: float = 1.0
    seed: int | None = 0

    def build(self, default_spacing):
        if self.coherence == "coherent":
            return CoherentPump(self.center, self.bandwidth, self.shape)
        if self.coherence == "incoherent":
            d = self.spacing or default_spacing
            return incoherent_pump(self.center, self.bandwidth, d, self.shape, seed=self.seed)
        raise InvalidParameterError(f"unknown pump coherence {self.coherence!r}")


@dataclass(frozen=True)
class Scenario:
    pump: PumpSettings
    wg: object
    bank_s: ChannelBank
    bank_i: ChannelBank
    disp: object = None
    eff: EfficiencyModel = field(default_factory=EfficiencyModel)
    noise: NoiseModel = field(default_factory=NoiseModel)
    power: float = 1e-3
    spacing: float | None = None

    def grid_spacing(self):
        if self.spacing:
            return self.spacing
        if self.pump.spacing:
            return self.pump.spacing
        return min(ch.width for ch in self.bank_s) / 64

    def brightness(self, workers=None):
        d = self.grid_spacing()
        pump = self.pump.build(d)
        return pipeline_counts(pump, self.wg, self.disp, self.bank_s, self.bank_i, self.eff, d,
                               self.pump.kappa, workers)


SWEEP_COLUMNS = ["value", "b_cc", "b_sc1", "b_sc2", "singles_s", "singles_i", "coincidences",
                 "accidentals", "car", "g2"]


def _recentred(bank, target):
    lo, hi = bank.band
    return bank.shifted(target - 0.5 * (lo + hi))


def scenario_at(scenario, variable, value):
    """Copy of ``scenario`` with one sweep variable set.

    ``detuning`` places the signal and idler banks ``value`` below and above
    the pump centre; ``asymmetry`` offsets the pump from its nominal centre
    with the banks fixed.
    """
    if variable == "power":
        return replace(scenario, power=value)
    if variable == "bandwidth":
        return replace(scenario, pump=replace(scenario.pump, bandwidth=value))
    if variable == "detuning":
        c = scenario.pump.center
        return replace(scenario, bank_s=_recentred(scenario.bank_s, c - value),
                       bank_i=_recentred(scenario.bank_i, c + value))
    if variable == "asymmetry":
        return replace(scenario, pump=replace(scenario.pump, center=scenario.pump.center + value))
    raise InvalidParameterError(f"unknown sweep variable {variable!r}")


def sweep(variable, values, scenario, workers=None):
    values = list(values)
    if not values:
        raise InvalidParameterError("sweep range is empty")
    rows = []
    cached = scenario.brightness(workers) if variable == "power" else None
    for v in values:
        sc = scenario_at(scenario, variable, v)
        b = cached or sc.brightness(workers)
        arm1, arm2 = sc.noise.arms(b)
        res = counting_result(sc.power, b.b_cc, arm1, arm2, sc.noise.window)
        g2 = g2_prediction(res.coincidences, res.accidentals) if res.coincidences + res.accidentals > 0 else math.nan
        rows.append([v, b.b_cc, b.b_sc1, b.b_sc2, res.singles_s, res.singles_i, res.coincidences,
                     res.accidentals, res.car, g2])
    return rows
