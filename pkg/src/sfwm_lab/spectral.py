"""Frequency grids, pump spectral models and measured-spectrum ingestion.

All frequencies are angular (rad/s) unless a name says otherwise.
"""

import csv
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import (
    DataError,
    InvalidGeometryError,
    InvalidParameterError,
    OutOfRangeError,
    ParseError,
)

TWO_PI = 2.0 * math.pi

# ITU DWDM anchor: channel Cnn sits at 190.0 + 0.1 * nn THz.
ITU_BASE_THZ = 190.0
ITU_STEP_THZ = 0.1

_CHANNEL_RE = re.compile(r"^[Cc](\d{1,3})$")
_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(thz|ghz|mhz|hz|rad/s)?\s*$", re.IGNORECASE)
_UNIT_HZ = {"thz": 1e12, "ghz": 1e9, "mhz": 1e6, "hz": 1.0}


def itu_frequency(label):
    """Angular frequency of an ITU channel label such as ``"C34"``."""
    m = _CHANNEL_RE.match(str(label).strip())
    if m is None:
        raise InvalidParameterError(f"not an ITU channel label: {label!r}")
    nu = (ITU_BASE_THZ + ITU_STEP_THZ * int(m.group(1))) * 1e12
    return TWO_PI * nu


def parse_frequency(value):
    """Convert a config value to rad/s.

    Numbers are taken as rad/s already. Strings may be an ITU label
    (``"C34"``) or a quantity with an ordinary-frequency unit
    (``"200GHz"``, ``"193.4 THz"``); ``rad/s`` is accepted explicitly.
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"not a frequency: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    if _CHANNEL_RE.match(text):
        return itu_frequency(text)
    m = _QUANTITY_RE.match(text)
    if m is None:
        raise InvalidParameterError(f"cannot parse frequency {value!r}")
    number = float(m.group(1))
    unit = (m.group(2) or "rad/s").lower()
    if unit == "rad/s":
        return number
    return TWO_PI * number * _UNIT_HZ[unit]


def wavelength_nm_to_omega(wavelength_nm):
    return TWO_PI * SPEED_OF_LIGHT / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def omega_to_wavelength_nm(omega):
    return TWO_PI * SPEED_OF_LIGHT / np.asarray(omega, dtype=float) * 1e9


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``start + k*spacing`` for ``k in range(count)``."""

    start: float
    spacing: float
    count: int

    def __post_init__(self):
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise InvalidParameterError(f"grid spacing must be > 0, got {self.spacing}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f"grid needs at least 2 points, got {self.count}")
        if not math.isfinite(self.start):
            raise InvalidParameterError("grid start must be finite")
        object.__setattr__(self, "count", int(self.count))

    @property
    def points(self):
        return self.start + self.spacing * np.arange(self.count)

    @property
    def stop(self):
        """Last grid point (inclusive)."""
        return self.start + self.spacing * (self.count - 1)

    @classmethod
    def centered(cls, center, spacing, count):
        return cls(center - 0.5 * (count - 1) * spacing, spacing, count)

    @classmethod
    def spanning(cls, lo, hi, count):
        """Cell-centred grid of ``count`` cells tiling ``[lo, hi]``."""
        if not hi > lo:
            raise InvalidParameterError("empty band")
        d = (hi - lo) / count
        return cls(lo + 0.5 * d, d, count)

    def to_dict(self):
        return {"start": self.start, "d": self.spacing, "M": self.count}


# ---------------------------------------------------------------- pumps


@dataclass(frozen=True)
class CoherentPump:
    """Laser-like pump with amplitude density ``coefficient * shape(w - center)``.

    ``bandwidth`` is the Gaussian width parameter (``exp(-x^2 / 2 sigma^2)``)
    or the full width of a rectangular line. ``coefficient`` is ``None``
    until :func:`normalize_coherent` fixes it.
    """

    center: float
    bandwidth: float
    shape: str = "gaussian"
    coefficient: float | None = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "rectangular"):
            raise InvalidParameterError(f"unknown pump shape {self.shape!r}")
        if not self.bandwidth > 0:
            raise InvalidParameterError(f"pump bandwidth must be > 0, got {self.bandwidth}")

    @property
    def fwhm(self):
        if self.shape == "gaussian":
            # |alpha|^2 ~ exp(-x^2 / sigma^2)
            return 2.0 * self.bandwidth * math.sqrt(math.log(2.0))
        return self.bandwidth

    @property
    def half_span(self):
        """Half-width beyond which the density is treated as zero."""
        if self.shape == "gaussian":
            return 8.0 * self.bandwidth
        return 0.5 * self.bandwidth

    def density(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        c = 1.0 if self.coefficient is None else self.coefficient
        if self.shape == "gaussian":
            return c * np.exp(-(x**2) / (2.0 * self.bandwidth**2))
        half = 0.5 * self.bandwidth
        inside = np.abs(x) < half
        # half weight on an exact edge keeps midpoint sums symmetric
        edge = np.isclose(np.abs(x), half, rtol=0.0, atol=1e-9 * self.bandwidth)
        return c * np.where(edge, 0.5, inside.astype(float))

    def integral(self):
        """``int alpha(w) dw`` of the (possibly normalized) density."""
        c = 1.0 if self.coefficient is None else self.coefficient
        if self.shape == "gaussian":
            return c * self.bandwidth * math.sqrt(TWO_PI)
        return c * self.bandwidth


@dataclass(frozen=True)
class IncoherentPump:
    """ASE-like pump: evenly spaced, mutually incoherent components."""

    frequencies: np.ndarray
    intensities: np.ndarray
    phases: np.ndarray
    envelope_bandwidth: float = 0.0

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        a = np.atleast_1d(np.asarray(self.intensities, dtype=float))
        p = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if f.size == 0:
            raise InvalidParameterError("incoherent pump has no components")
        if a.shape != f.shape or p.shape != f.shape:
            raise InvalidParameterError("frequencies, intensities and phases must have equal length")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise InvalidParameterError("component intensities must be finite and >= 0")
        if np.any(p < 0) or np.any(p >= TWO_PI):
            raise InvalidParameterError("phases must lie in [0, 2*pi)")
        if f.size > 1:
            steps = np.diff(f)
            if np.any(steps <= 0):
                raise InvalidParameterError("component frequencies must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
                raise InvalidParameterError("incoherent components must be evenly spaced")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "intensities", a)
        object.__setattr__(self, "phases", p)

    @property
    def spacing(self):
        """Component spacing, or ``None`` for a single line."""
        if self.frequencies.size < 2:
            return None
        return float((self.frequencies[-1] - self.frequencies[0]) / (self.frequencies.size - 1))

    @property
    def center(self):
        w = self.intensities
        if w.sum() == 0:
            return float(self.frequencies.mean())
        return float(np.dot(w, self.frequencies) / w.sum())

    def concatenate(self, other):
        return IncoherentPump(
            np.concatenate([self.frequencies, other.frequencies]),
            np.concatenate([self.intensities, other.intensities]),
            np.concatenate([self.phases, other.phases]),
            max(self.envelope_bandwidth, other.envelope_bandwidth),
        )


def normalize_coherent(spectrum):
    """Return a copy whose amplitude density satisfies ``int |alpha|^2 dw = 1``."""
    if not spectrum.bandwidth > 0:
        raise InvalidParameterError("bandwidth must be > 0")
    if spectrum.shape == "gaussian":
        coeff = 1.0 / math.sqrt(spectrum.bandwidth * math.sqrt(math.pi))
    else:
        coeff = 1.0 / math.sqrt(spectrum.bandwidth)
    return replace(spectrum, coefficient=coeff)


def pump_power(spectrum, kappa=1.0):
    """Pump power in simulation units.

    Coherent: ``kappa * |int alpha dw|^2`` on the normalized density, i.e.
    ``kappa * 2 sqrt(pi) sigma_p`` for a Gaussian line. Incoherent:
    ``kappa * sum |alpha_n|^2``.
    """
    if not kappa > 0:
        raise InvalidParameterError("power prefactor kappa must be > 0")
    if isinstance(spectrum, CoherentPump):
        if spectrum.coefficient is None:
            spectrum = normalize_coherent(spectrum)
        return kappa * spectrum.integral() ** 2
    if isinstance(spectrum, IncoherentPump):
        return kappa * math.fsum(spectrum.intensities)
    raise InvalidParameterError(f"not a pump spectrum: {type(spectrum).__name__}")


def draw_phases(count, seed=None):
    """I.i.d. uniform phases in ``[0, 2*pi)``."""
    if count < 0:
        raise InvalidParameterError("count must be >= 0")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, TWO_PI, int(count))
    # uniform() may round up to exactly 2*pi
    return np.where(phases >= TWO_PI, 0.0, phases)


def incoherent_pump(center, bandwidth, spacing, shape="rectangular", total_intensity=1.0, seed=None):
    """Discretize an ASE envelope into components ``spacing`` apart.

    Rectangular envelopes get ``round(bandwidth / spacing)`` equal lines
    (at least one). Gaussian envelopes follow ``exp(-x^2 / bandwidth^2)``
    out to 8 widths, the intensity profile of a coherent Gaussian line of
    the same ``bandwidth``.
    """
    if not spacing > 0:
        raise InvalidParameterError("spacing must be > 0")
    if not bandwidth >= 0:
        raise InvalidParameterError("bandwidth must be >= 0")
    if shape == "rectangular":
        n = max(1, int(round(bandwidth / spacing)))
        offsets = (np.arange(n) - 0.5 * (n - 1)) * spacing
        weights = np.ones(n)
    elif shape == "gaussian":
        if not bandwidth > 0:
            raise InvalidParameterError("gaussian envelope needs bandwidth > 0")
        half = int(math.ceil(8.0 * bandwidth / spacing))
        offsets = np.arange(-half, half + 1) * spacing
        weights = np.exp(-(offsets**2) / bandwidth**2)
    else:
        raise InvalidParameterError(f"unknown envelope shape {shape!r}")
    intensities = total_intensity * weights / weights.sum()
    return IncoherentPump(center + offsets, intensities, draw_phases(offsets.size, seed), bandwidth)


# ------------------------------------------------------- measured spectra


@dataclass(frozen=True)
class MeasuredSpectrum:
    wavelength_nm: np.ndarray
    values: np.ndarray
    kind: str = "intensity"

    def __post_init__(self):
        if self.kind not in ("intensity", "transmittance"):
            raise InvalidParameterError(f"unknown spectrum kind {self.kind!r}")
        lam = np.asarray(self.wavelength_nm, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if lam.size == 0:
            raise DataError("no samples")
        if lam.shape != val.shape:
            raise DataError("wavelength and value arrays differ in length")
        steps = np.diff(lam)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise DataError("wavelengths must be strictly monotone")
        if np.any(val < 0):
            raise DataError("spectrum values must be >= 0")
        if self.kind == "transmittance" and np.any(val > 1):
            raise DataError("transmittance values must lie in [0, 1]")
        object.__setattr__(self, "wavelength_nm", lam)
        object.__setattr__(self, "values", val)

    @property
    def omega(self):
        return wavelength_nm_to_omega(self.wavelength_nm)


def load_measured_spectrum(path, kind="intensity"):
    """Read a ``wavelength_nm,value`` CSV.

    ``#`` lines and an optional header row are skipped. Samples are sorted by
    wavelength; exact duplicate rows collapse, conflicting duplicates raise
    :class:`DataError`.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            if not rows and cells[0].lower() == "wavelength_nm":
                continue
            if len(cells) != 2:
                raise ParseError(f"expected 2 columns, got {len(cells)}", lineno)
            try:
                lam, val = float(cells[0]), float(cells[1])
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
            if not (math.isfinite(lam) and math.isfinite(val)) or lam <= 0:
                raise ParseError(f"invalid sample {row!r}", lineno)
            rows.append((lam, val))
    if not rows:
        raise DataError("no samples")
    rows.sort()
    lam = []
    val = []
    for w, v in rows:
        if lam and w == lam[-1]:
            if v != val[-1]:
                raise DataError(f"conflicting duplicate samples at {w} nm")
            continue
        lam.append(w)
        val.append(v)
    return MeasuredSpectrum(np.array(lam), np.array(val), kind)


def resample_to_grid(spectrum, grid, threshold=0.01):
    """Threshold, convert to angular frequency and interpolate onto ``grid``.

    Values below ``threshold * max`` are zeroed first. Interpolation is
    linear in angular frequency. Grid points that coincide with a sample
    (to 1e-6 of the spacing) take that sample exactly.
    """
    if not 0 <= threshold <= 1:
        raise InvalidParameterError("threshold must be a fraction in [0, 1]")
    values = spectrum.values.copy()
    values[values < threshold * values.max()] = 0.0
    omega = spectrum.omega
    order = np.argsort(omega)
    omega, values = omega[order], values[order]
    pts = grid.points
    tol = 1e-6 * grid.spacing
    if pts[0] < omega[0] - tol or pts[-1] > omega[-1] + tol:
        raise OutOfRangeError(
            f"grid [{pts[0]:.6e}, {pts[-1]:.6e}] rad/s exceeds data span "
            f"[{omega[0]:.6e}, {omega[-1]:.6e}] rad/s"
        )
    out = np.interp(pts, omega, values)
    idx = np.clip(np.searchsorted(omega, pts), 1, omega.size - 1) if omega.size > 1 else np.zeros(pts.size, int)
    for cand in (idx - 1, idx):
        hit = np.abs(omega[cand] - pts) <= tol
        out[hit] = values[cand[hit]]
    return out


# ------------------------------------------------------ band boundaries


@dataclass(frozen=True)
class BoundaryExtension:
    """Signal/idler bands padded to be mirror images about the pump."""

    outer: float  # max detuning, multiple of spacing
    inner: float  # min detuning, multiple of spacing
    signal_band: tuple
    idler_band: tuple
    signal_padding: tuple = field(default=(0.0, 0.0))  # (low side, high side) added
    idler_padding: tuple = field(default=(0.0, 0.0))


def _detuning_range(band, center):
    lo, hi = band
    if not hi > lo:
        raise InvalidGeometryError(f"empty band {band}")
    if lo < center < hi:
        raise InvalidGeometryError("band spans the pump centre")
    if lo >= center:
        return lo - center, hi - center, +1
    return center - hi, center - lo, -1


def extend_boundaries(signal_band, idler_band, pump_center, spacing):
    """Pad two collection bands so both cover the same detuning range.

    The outer detuning is rounded up and the inner one down to multiples of
    ``spacing``, so no in-band photon is dropped. Padded regions are meant to
    carry zero transmittance.
    """
    if not spacing > 0:
        raise InvalidParameterError("spacing must be > 0")
    s_min, s_max, s_side = _detuning_range(signal_band, pump_center)
    i_min, i_max, i_side = _detuning_range(idler_band, pump_center)
    if s_side == i_side:
        raise InvalidGeometryError("signal and idler bands lie on the same side of the pump")
    eps = 1e-9
    outer = math.ceil(max(s_max, i_max) / spacing - eps) * spacing
    inner = max(0.0, math.floor(min(s_min, i_min) / spacing + eps) * spacing)

    def band(side):
        if side > 0:
            return (pump_center + inner, pump_center + outer)
        return (pump_center - outer, pump_center - inner)

    new_s, new_i = band(s_side), band(i_side)
    return BoundaryExtension(
        outer=outer,
        inner=inner,
        signal_band=new_s,
        idler_band=new_i,
        signal_padding=(signal_band[0] - new_s[0], new_s[1] - signal_band[1]),
        idler_padding=(idler_band[0] - new_i[0], new_i[1] - idler_band[1]),
    )
