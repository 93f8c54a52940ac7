"""DWDM channel transmittances."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameterError
from .spectral import TWO_PI, itu_frequency

ITU_SPACING = TWO_PI * 100e9
DEFAULT_WIDTH = TWO_PI * 200e9


@dataclass(frozen=True)
class Channel:
    """One collection channel.

    ``shape`` is ``"brickwall"`` (unit transmittance over ``width``),
    ``"allpass"`` (unit everywhere) or ``"measured"``, in which case
    ``omega``/``values`` hold samples that are interpolated linearly and
    taken as zero outside their span.
    """

    label: str
    center: float
    width: float = DEFAULT_WIDTH
    shape: str = "brickwall"
    omega: tuple | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.shape not in ("brickwall", "allpass", "measured"):
            raise InvalidParameterError(f"unknown channel shape {self.shape!r}")
        if self.shape == "brickwall" and not self.width > 0:
            raise InvalidParameterError("channel width must be > 0")
        if self.shape == "measured":
            if self.omega is None or self.values is None or len(self.omega) != len(self.values):
                raise InvalidParameterError("measured channel needs matching omega/values samples")
            v = np.asarray(self.values, dtype=float)
            if np.any(v < 0) or np.any(v > 1):
                raise InvalidParameterError("transmittance must lie in [0, 1]")
            if np.any(np.diff(np.asarray(self.omega, dtype=float)) <= 0):
                raise InvalidParameterError("measured channel samples must be increasing in omega")

    @property
    def band(self):
        if self.shape == "brickwall":
            return (self.center - 0.5 * self.width, self.center + 0.5 * self.width)
        if self.shape == "measured":
            w = np.asarray(self.omega)
            nz = np.nonzero(np.asarray(self.values) > 0)[0]
            if nz.size == 0:
                return (float(w[0]), float(w[0]))
            return (float(w[nz[0]]), float(w[nz[-1]]))
        return (-math.inf, math.inf)

    def transmittance(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.shape == "allpass":
            return np.ones_like(w)
        if self.shape == "brickwall":
            x = np.abs(w - self.center)
            half = 0.5 * self.width
            edge = np.isclose(x, half, rtol=0.0, atol=1e-9 * self.width)
            return np.where(edge, 0.5, (x < half).astype(float))
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)

    def shifted(self, offset):
        if self.shape == "measured":
            return replace(
                self,
                center=self.center + offset,
                omega=tuple(np.asarray(self.omega) + offset),
            )
        return replace(self, center=self.center + offset)


def itu_channel(label, width=DEFAULT_WIDTH, shape="brickwall"):
    return Channel(label, itu_frequency(label), width, shape)


@dataclass(frozen=True)
class ChannelBank:
    channels: tuple

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise InvalidParameterError("channel bank is empty")
        labels = [ch.label for ch in chans]
        if len(set(labels)) != len(labels):
            raise InvalidParameterError("channel labels must be unique")
        object.__setattr__(self, "channels", chans)

    def __iter__(self):
        return iter(self.channels)

    def __len__(self):
        return len(self.channels)

    @property
    def labels(self):
        return [ch.label for ch in self.channels]

    @property
    def band(self):
        bands = [ch.band for ch in self.channels]
        return (min(b[0] for b in bands), max(b[1] for b in bands))

    def transmittance(self, omega):
        """Combined transmittance of the arm (sum of channels, capped at 1)."""
        total = sum(ch.transmittance(omega) for ch in self.channels)
        return np.clip(total, 0.0, 1.0)

    def on_grid(self, grid):
        return self.transmittance(grid.points)

    def shifted(self, offset):
        return ChannelBank(tuple(ch.shifted(offset) for ch in self.channels))


def bank(*channels):
    return ChannelBank(tuple(channels))
