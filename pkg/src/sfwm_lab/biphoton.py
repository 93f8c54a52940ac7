"""Discretized joint spectra for coherent and incoherent pumping.

Signal and idler live on grids with a common spacing ``d``. The pump is
sampled on a lattice of the same spacing whose offset is chosen so that
``ws + wi - wp`` always falls on it; every (signal, idler, pump) triple then
maps to integer indices and the energy-conservation sum is exact.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidParameterError, ResolutionError
from .spectral import CoherentPump, FrequencyGrid, IncoherentPump, normalize_coherent, pump_power
from .waveguide import phase_mismatch, segment_sum

MIN_POINTS_PER_FWHM = 8


def worker_count():
    """Thread cap from ``SFWM_LAB_THREADS`` (default: up to 4 cores)."""
    env = os.environ.get("SFWM_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"SFWM_LAB_THREADS must be an integer, got {env!r}") from None
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class JointSpectrum:
    grid_s: FrequencyGrid
    grid_i: FrequencyGrid
    values: np.ndarray
    kind: str = "amplitude"
    normalized: bool = False
    stderr: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("amplitude", "intensity"):
            raise InvalidParameterError(f"unknown joint-spectrum kind {self.kind!r}")
        v = np.asarray(self.values)
        if v.shape != (self.grid_s.count, self.grid_i.count):
            raise InvalidParameterError(
                f"values shape {v.shape} does not match grids ({self.grid_s.count}, {self.grid_i.count})"
            )
        if self.kind == "intensity":
            if np.iscomplexobj(v) or np.any(v < 0):
                raise InvalidParameterError("intensity values must be real and >= 0")
        object.__setattr__(self, "values", v)

    @property
    def spacing(self):
        return self.grid_s.spacing

    def intensity(self):
        """``|values|^2`` for amplitudes, the values themselves otherwise."""
        if self.kind == "amplitude":
            return np.abs(self.values) ** 2
        return self.values

    def normalize(self):
        if self.kind == "amplitude":
            norm = math.sqrt(float(np.sum(np.abs(self.values) ** 2)))
        else:
            norm = float(np.sum(self.values))
        if norm == 0:
            raise DegenerateInputError("cannot normalize an all-zero joint spectrum")
        return JointSpectrum(self.grid_s, self.grid_i, self.values / norm, self.kind, True)

    def to_dict(self):
        flat = self.values.ravel()
        if self.kind == "amplitude":
            values = [[float(z.real), float(z.imag)] for z in flat.astype(complex)]
        else:
            values = [float(x) for x in flat]
        return {
            "grid_s": self.grid_s.to_dict(),
            "grid_i": self.grid_i.to_dict(),
            "kind": self.kind,
            "values": values,
        }

    @classmethod
    def from_dict(cls, data):
        gs = FrequencyGrid(data["grid_s"]["start"], data["grid_s"]["d"], data["grid_s"]["M"])
        gi = FrequencyGrid(data["grid_i"]["start"], data["grid_i"]["d"], data["grid_i"]["M"])
        raw = np.asarray(data["values"], dtype=float)
        if data["kind"] == "amplitude":
            raw = raw[:, 0] + 1j * raw[:, 1]
        return cls(gs, gi, raw.reshape(gs.count, gi.count), data["kind"])


# ------------------------------------------------------------ pump lattice


def check_aligned(grid_s, grid_i):
    if not math.isclose(grid_s.spacing, grid_i.spacing, rel_tol=1e-9):
        raise InvalidParameterError(
            f"signal and idler grids must share a spacing ({grid_s.spacing} vs {grid_i.spacing})"
        )


def pump_lattice(grid_s, grid_i, lo, hi, anchor):
    """Pump grid covering ``[lo, hi]`` on which ``ws + wi - wp`` lands exactly.

    Two offset classes qualify (``(s0 + i0) / 2`` plus whole or half
    spacings); the one passing closest to ``anchor`` is used.
    """
    check_aligned(grid_s, grid_i)
    d = grid_s.spacing
    base = 0.5 * (grid_s.start + grid_i.start)

    def miss(offset):
        r = (anchor - offset) / d
        return abs(r - round(r))

    offset = base if miss(base) <= miss(base + 0.5 * d) else base + 0.5 * d
    start = offset + math.floor((lo - offset) / d + 1e-9) * d
    count = max(2, int(math.ceil((hi - start) / d - 1e-9)) + 1)
    lattice = FrequencyGrid(start, d, count)
    shift = int(round((grid_s.start + grid_i.start - 2.0 * lattice.start) / d))
    return lattice, shift


@dataclass(frozen=True)
class SampledPump:
    lattice: FrequencyGrid
    shift: int  # partner index of pump j for cell (k, l): k + l + shift - j
    amplitude: np.ndarray  # complex field amplitude per lattice point
    intensity: np.ndarray  # |alpha|^2 per lattice point
    coherent: bool
    xi: float = 0.0  # coherent prefactor / kappa: sum(alpha) * d


def sample_pump(pump, grid_s, grid_i):
    d = grid_s.spacing
    if isinstance(pump, CoherentPump):
        if pump.coefficient is None:
            pump = normalize_coherent(pump)
        if pump.fwhm < d:
            # monochromatic limit: a single bin carrying unit norm
            lattice, shift = pump_lattice(grid_s, grid_i, pump.center - d, pump.center + d, pump.center)
            amp = np.zeros(lattice.count)
            amp[int(np.argmin(np.abs(lattice.points - pump.center)))] = 1.0 / math.sqrt(d)
        else:
            if pump.fwhm / d < MIN_POINTS_PER_FWHM:
                raise ResolutionError(
                    f"grid spacing {d:.3e} rad/s resolves the pump FWHM with only "
                    f"{pump.fwhm / d:.1f} points (need {MIN_POINTS_PER_FWHM})"
                )
            lattice, shift = pump_lattice(
                grid_s, grid_i, pump.center - pump.half_span, pump.center + pump.half_span, pump.center
            )
            amp = pump.density(lattice.points)
        amp = amp.astype(complex)
        return SampledPump(lattice, shift, amp, np.abs(amp) ** 2, True, float(np.sum(amp.real)) * d)

    if isinstance(pump, IncoherentPump):
        sp = pump.spacing
        if sp is not None and not math.isclose(sp, d, rel_tol=1e-6):
            raise InvalidParameterError(
                f"incoherent component spacing {sp:.6e} must equal the grid spacing {d:.6e}"
            )
        f = pump.frequencies
        lattice, shift = pump_lattice(grid_s, grid_i, f[0], f[-1], f[0])
        idx = np.rint((f - lattice.start) / d).astype(int)
        inten = np.zeros(lattice.count)
        phase = np.zeros(lattice.count)
        np.add.at(inten, idx, pump.intensities)
        phase[idx] = pump.phases
        amp = np.sqrt(inten) * np.exp(1j * phase)
        return SampledPump(lattice, shift, amp, inten, False)

    raise InvalidParameterError(f"not a pump spectrum: {type(pump).__name__}")


# ------------------------------------------------------------- kernels


def _row_terms(k, sampled, grid_s, grid_i, wg, disp, power):
    """Per-pump-component pair amplitudes for signal row ``k``.

    Returns ``(j, jp, valid, A)`` with shapes ``(Mi, Mp)``; ``A`` is the
    split-step amplitude at unit pump power (zero where invalid).
    """
    lat = sampled.lattice
    mp = lat.count
    d = grid_s.spacing
    wi = grid_i.points
    ws = grid_s.start + k * d
    n = k + np.arange(grid_i.count) + sampled.shift
    j = np.arange(mp)
    jp = n[:, None] - j[None, :]
    valid = (jp >= 0) & (jp < mp)
    live = (sampled.intensity > 0)
    valid &= live[None, :] & live[np.clip(jp, 0, mp - 1)]
    amp = np.zeros(valid.shape, dtype=complex)
    if not np.any(valid):
        return j, jp, valid, amp
    rows, cols = np.nonzero(valid)
    wp = lat.points
    dk = phase_mismatch(
        wp[cols], wp[jp[rows, cols]], np.full(rows.size, ws), wi[rows], disp, wg, power, tol=0.5 * d
    )
    amp[rows, cols] = segment_sum(dk, wg)
    return j, jp, valid, amp


def _map_rows(fn, count, workers=None):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or count < 8:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(count)))


def _flat_amplitude(wg, disp, power):
    """Split-step amplitude when it does not depend on frequency, else ``None``.

    Without a dispersion model the mismatch is zero (or the constant
    nonlinear phase), so every term of a cell's pump sum carries the same
    amplitude and the sum collapses to a discrete self-convolution.
    """
    if disp is not None:
        return None
    dk = 2.0 * wg.gamma * power if wg.include_nonlinear_phase else 0.0
    return complex(segment_sum(dk, wg))


def _spread_by_pump_sum(per_sum, sampled, grid_s, grid_i):
    """Map values indexed by pump-index sum ``j + j'`` onto the (signal, idler) grid."""
    n = np.arange(grid_s.count)[:, None] + np.arange(grid_i.count)[None, :] + sampled.shift
    inside = (n >= 0) & (n < per_sum.shape[0])
    out = np.zeros(n.shape + per_sum.shape[1:], dtype=per_sum.dtype)
    out[inside] = per_sum[n[inside]]
    return out


def _coherent_cells(sampled, grid_s, grid_i, wg, disp, power, workers=None):
    a = sampled.amplitude
    d = grid_s.spacing
    flat = _flat_amplitude(wg, disp, power)
    if flat is not None:
        return _spread_by_pump_sum(np.convolve(a, a) * flat * d, sampled, grid_s, grid_i)

    def row(k):
        j, jp, valid, amp = _row_terms(k, sampled, grid_s, grid_i, wg, disp, power)
        partner = a[np.clip(jp, 0, a.size - 1)]
        return np.sum(np.where(valid, a[None, :] * partner * amp, 0.0), axis=1) * d

    return np.array(_map_rows(row, grid_s.count, workers))


def _intensity_cells(sampled, grid_s, grid_i, wg, disp, power, workers=None):
    inten = sampled.intensity
    flat = _flat_amplitude(wg, disp, power)
    if flat is not None:
        return _spread_by_pump_sum(np.convolve(inten, inten) * abs(flat) ** 2, sampled, grid_s, grid_i)

    def row(k):
        j, jp, valid, amp = _row_terms(k, sampled, grid_s, grid_i, wg, disp, power)
        partner = inten[np.clip(jp, 0, inten.size - 1)]
        return np.sum(np.where(valid, inten[None, :] * partner * np.abs(amp) ** 2, 0.0), axis=1)

    return np.array(_map_rows(row, grid_s.count, workers))


def _monte_carlo_cells(sampled, grid_s, grid_i, wg, disp, power, ensembles, seed, workers=None):
    """Mean and standard error of ``|sum_p A_p exp(i phi_p)|^2`` per cell."""
    if ensembles < 2:
        raise InvalidParameterError("monte_carlo needs at least 2 ensembles")
    inten = sampled.intensity
    mp = inten.size
    rng = np.random.default_rng(seed)
    phases = np.exp(1j * rng.uniform(0.0, 2 * math.pi, (mp, ensembles)))

    def stats(samples):
        return samples.mean(axis=-1), samples.std(axis=-1, ddof=1) / math.sqrt(ensembles)

    flat = _flat_amplitude(wg, disp, power)
    if flat is not None:
        j = np.arange(mp)
        jp = np.arange(2 * mp - 1)[:, None] - j[None, :]
        ok = (jp >= 0) & (jp < mp)
        terms = np.where(ok, np.sqrt(inten[None, :] * inten[np.clip(jp, 0, mp - 1)]), 0.0) * flat
        mean, err = stats(np.abs(terms @ phases) ** 2)
        return (_spread_by_pump_sum(mean, sampled, grid_s, grid_i),
                _spread_by_pump_sum(err, sampled, grid_s, grid_i))

    def row(k):
        j, jp, valid, amp = _row_terms(k, sampled, grid_s, grid_i, wg, disp, power)
        partner = inten[np.clip(jp, 0, mp - 1)]
        terms = np.where(valid, np.sqrt(inten[None, :] * partner) * amp, 0.0)
        return stats(np.abs(terms @ phases) ** 2)

    out = _map_rows(row, grid_s.count, workers)
    return np.array([m for m, _ in out]), np.array([s for _, s in out])


def _input_power(pump, kappa=1.0):
    return pump_power(pump, kappa)


def build_jsa_coherent(pump, wg, disp, grid_s, grid_i, kappa=1.0, workers=None):
    """Normalized JSA ``sum_p alpha(wp) alpha(ws + wi - wp) A(...) d``."""
    if not isinstance(pump, CoherentPump):
        raise InvalidParameterError("build_jsa_coherent needs a CoherentPump")
    sampled = sample_pump(pump, grid_s, grid_i)
    cells = _coherent_cells(sampled, grid_s, grid_i, wg, disp, _input_power(pump, kappa), workers)
    return JointSpectrum(grid_s, grid_i, cells, "amplitude").normalize()


def build_jsa_incoherent(pump, wg, disp, grid_s, grid_i, mode="intensity_sum", ensembles=1000, seed=None,
                         kappa=1.0, workers=None):
    """Effective JSA for an incoherent pump.

    ``intensity_sum`` is the deterministic root of the summed squared terms;
    ``monte_carlo`` averages ``|sum|^2`` over random component phases before
    taking the root, and carries the standard error of that average (in the
    same normalization as ``values**2``).
    """
    if not isinstance(pump, IncoherentPump):
        raise InvalidParameterError("build_jsa_incoherent needs an IncoherentPump")
    sampled = sample_pump(pump, grid_s, grid_i)
    power = _input_power(pump, kappa)
    if mode == "intensity_sum":
        cells = _intensity_cells(sampled, grid_s, grid_i, wg, disp, power, workers)
        return JointSpectrum(grid_s, grid_i, np.sqrt(cells), "amplitude").normalize()
    if mode == "monte_carlo":
        mean, err = _monte_carlo_cells(sampled, grid_s, grid_i, wg, disp, power, ensembles, seed, workers)
        total = float(mean.sum())
        if total == 0:
            raise DegenerateInputError("all-zero joint spectrum")
        return JointSpectrum(grid_s, grid_i, np.sqrt(mean / total), "amplitude", True, err / total)
    raise InvalidParameterError(f"unknown incoherent mode {mode!r}")


def build_jsa(pump, wg, disp, grid_s, grid_i, **kwargs):
    if isinstance(pump, CoherentPump):
        kwargs = {k: v for k, v in kwargs.items() if k in ("kappa", "workers")}
        return build_jsa_coherent(pump, wg, disp, grid_s, grid_i, **kwargs)
    return build_jsa_incoherent(pump, wg, disp, grid_s, grid_i, **kwargs)


def pair_rate_density(pump, wg, disp, grid_s, grid_i, kappa=1.0, workers=None):
    """Pair generation rate per grid cell, in simulation units.

    Coherent: ``|xi_C sum_p alpha alpha' A d|^2 d^2 / 2pi`` with
    ``xi_C = kappa * int alpha``. Incoherent: each partner component is
    spread over one spacing, giving ``kappa^2 d sum_p I_p I_p' |A|^2 / 2pi``.
    Summed over a detuning interval these reproduce the closed-form rates.
    """
    sampled = sample_pump(pump, grid_s, grid_i)
    d = grid_s.spacing
    power = _input_power(pump, kappa)
    if sampled.coherent:
        cells = _coherent_cells(sampled, grid_s, grid_i, wg, disp, power, workers)
        rate = (kappa * sampled.xi) ** 2 * np.abs(cells) ** 2 * d**2 / (2 * math.pi)
    else:
        cells = _intensity_cells(sampled, grid_s, grid_i, wg, disp, power, workers)
        rate = kappa**2 * d * cells / (2 * math.pi)
    return JointSpectrum(grid_s, grid_i, rate, "intensity")


# --------------------------------------------------------- post-processing


def apply_filters(js, t_s, t_i, renormalize=False):
    t_s = np.asarray(t_s, dtype=float)
    t_i = np.asarray(t_i, dtype=float)
    if t_s.shape != (js.grid_s.count,) or t_i.shape != (js.grid_i.count,):
        raise InvalidParameterError("transmittance arrays must match the grids")
    for t in (t_s, t_i):
        if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
            raise InvalidParameterError("transmittance must lie in [0, 1]")
    if js.kind == "amplitude":
        out = js.values * np.sqrt(np.outer(t_s, t_i))
    else:
        out = js.values * np.outer(t_s, t_i)
    result = JointSpectrum(js.grid_s, js.grid_i, out, js.kind)
    return result.normalize() if renormalize else result


@dataclass(frozen=True)
class SchmidtResult:
    purity: float
    coefficients: np.ndarray  # normalized lambda_k, descending

    @property
    def schmidt_number(self):
        return 1.0 / self.purity


def schmidt_purity(js):
    """Purity ``sum lambda_k^2`` from the SVD of a JSA matrix."""
    if js.kind != "amplitude":
        raise InvalidParameterError("schmidt_purity needs an amplitude spectrum")
    sv = np.linalg.svd(np.asarray(js.values, dtype=complex), compute_uv=False)
    if sv.size == 0 or sv[0] == 0 or not np.all(np.isfinite(sv)):
        raise DegenerateInputError("JSA is identically zero")
    sv = sv[sv > 1e-12 * sv[0]]
    lam = sv**2 / np.sum(sv**2)
    return SchmidtResult(float(np.sum(lam**2)), lam)


@dataclass(frozen=True)
class ChannelMatrix:
    values: np.ndarray
    labels_s: list
    labels_i: list

    def rows(self):
        yield ["channel"] + list(self.labels_i)
        for label, row in zip(self.labels_s, self.values):
            yield [label] + [float(x) for x in row]


def channel_jsi_matrix(js, bank_s, bank_i):
    """Coincidence weight between every signal/idler channel pair (unnormalized)."""
    check_aligned(js.grid_s, js.grid_i)
    jsi = js.intensity()
    d = js.spacing
    ts = np.array([ch.transmittance(js.grid_s.points) for ch in bank_s])
    ti = np.array([ch.transmittance(js.grid_i.points) for ch in bank_i])
    mat = ts @ jsi @ ti.T * d * d
    return ChannelMatrix(mat, list(bank_s.labels), list(bank_i.labels))
