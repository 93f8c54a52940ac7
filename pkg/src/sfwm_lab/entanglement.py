"""Two-qubit polarization states from a Sagnac source: fringes, CHSH, fidelity, tomography.

Basis order is HH, HV, VH, VV. A linear polarizer at angle ``theta``
projects onto ``cos(theta) H + sin(theta) V``.
"""

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    InvalidParameterError,
    InvalidSettingsError,
    InvalidStateError,
    ParseError,
    UndefinedVisibilityError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
FRINGE_POINTS = 720

# analyzer angles in degrees, listed as (x, x + 90, x', x' + 90) per arm
CHSH_SIGNAL_DEG = (-22.5, 67.5, 22.5, 112.5)
CHSH_IDLER_DEG = (-45.0, 45.0, 0.0, 90.0)

_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "A": np.array([1, -1], dtype=complex) / math.sqrt(2),
    "R": np.array([1, 1j], dtype=complex) / math.sqrt(2),
    "L": np.array([1, -1j], dtype=complex) / math.sqrt(2),
}
TOMOGRAPHY_SETTINGS = [a + b for a, b in itertools.product("HVDR", repeat=2)]


@dataclass(frozen=True)
class TwoQubitState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidStateError(f"density matrix must be 4x4, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidStateError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise InvalidStateError(f"trace is {np.trace(rho).real:.12g}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise InvalidStateError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    def to_dict(self):
        return {"rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.rho]}

    @classmethod
    def from_dict(cls, data):
        arr = np.asarray(data["rho"], dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])


@dataclass(frozen=True)
class SagnacParams:
    eta: float = 1.0  # amplitude ratio of the two propagation directions
    delta: float = 0.0
    noise: float = 0.0  # white-noise weight p

    def __post_init__(self):
        if not self.eta >= 0:
            raise InvalidParameterError("eta must be >= 0")
        if not 0 <= self.noise <= 1:
            raise InvalidParameterError("white-noise weight must lie in [0, 1]")


def sagnac_state(params):
    """``(1 - p) |phi><phi| + p I / 4`` with ``phi ~ |HH> + eta e^{i delta} |VV>``."""
    phi = np.zeros(4, dtype=complex)
    phi[0] = 1.0
    phi[3] = params.eta * np.exp(1j * params.delta)
    pure = np.outer(phi, phi.conj()) / (1 + params.eta**2)
    rho = (1 - params.noise) * pure + params.noise * np.eye(4) / 4
    return TwoQubitState(0.5 * (rho + rho.conj().T))


def bell_phi_plus():
    return sagnac_state(SagnacParams())


def _as_rho(state):
    return state.rho if isinstance(state, TwoQubitState) else TwoQubitState(state).rho


def _linear_ket(theta):
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


def _projector(ket):
    return np.outer(ket, ket.conj())


def coincidence_probability(state, theta_s, theta_i):
    rho = _as_rho(state)
    proj = np.kron(_projector(_linear_ket(theta_s)), _projector(_linear_ket(theta_i)))
    return float(np.real(np.trace(rho @ proj)))


def fringe(state, theta_s, points=FRINGE_POINTS):
    """Coincidence probability versus idler analyzer angle over a full turn."""
    rho = _as_rho(state)
    theta = 2 * math.pi * np.arange(points) / points
    ps = _projector(_linear_ket(theta_s))
    # reduce to the idler qubit: sigma_i = Tr_s[(P_s x I) rho]
    reduced = np.einsum("ab,bjak->jk", ps, rho.reshape(2, 2, 2, 2))
    c, s = np.cos(theta), np.sin(theta)
    vals = (
        reduced[0, 0].real * c**2
        + reduced[1, 1].real * s**2
        + 2 * np.real(reduced[0, 1]) * c * s
    )
    return theta, vals


def _basis_angle(basis):
    angles = {"H": 0.0, "D": math.pi / 4}
    if basis not in angles:
        raise InvalidParameterError(f"basis must be 'H' or 'D', got {basis!r}")
    return angles[basis]


def fringe_visibility(state, basis="H", points=FRINGE_POINTS):
    _, vals = fringe(state, _basis_angle(basis), points)
    hi, lo = float(vals.max()), float(vals.min())
    if hi + lo <= 0:
        raise UndefinedVisibilityError("fringe is identically zero")
    return (hi - lo) / (hi + lo)


def visibility_closed_form(state, basis="H"):
    """Visibility from three fringe samples.

    Any fringe has the form ``c0 + c2 cos 2t + s2 sin 2t``, so its contrast
    is ``sqrt(c2^2 + s2^2) / c0``.
    """
    ts = _basis_angle(basis)
    p0 = coincidence_probability(state, ts, 0.0)
    p45 = coincidence_probability(state, ts, math.pi / 4)
    p90 = coincidence_probability(state, ts, math.pi / 2)
    c0 = 0.5 * (p0 + p90)
    if c0 <= 0:
        raise UndefinedVisibilityError("fringe is identically zero")
    c2 = 0.5 * (p0 - p90)
    s2 = p45 - c0
    return math.hypot(c2, s2) / c0


def correlator(state, a, b):
    """``E(a, b)`` from the four coincidence probabilities with orthogonal analyzers."""
    q = math.pi / 2
    pp = coincidence_probability(state, a, b)
    mm = coincidence_probability(state, a + q, b + q)
    pm = coincidence_probability(state, a, b + q)
    mp = coincidence_probability(state, a + q, b)
    total = pp + mm + pm + mp
    if total <= 0:
        raise UndefinedVisibilityError("no coincidences at these analyzer settings")
    return (pp + mm - pm - mp) / total


def chsh(state, a, a2, b, b2):
    """``S = E(a, b) - E(a, b2) + E(a2, b) + E(a2, b2)``; angles in radians."""
    return correlator(state, a, b) - correlator(state, a, b2) + correlator(state, a2, b) + correlator(state, a2, b2)


def chsh_from_lists(state, signal_deg=CHSH_SIGNAL_DEG, idler_deg=CHSH_IDLER_DEG):
    """CHSH from two four-angle lists ``(x, x + 90, x', x' + 90)``.

    The second signal setting is ``a`` and the first ``a2``; the second idler
    setting is ``b`` and the first ``b2``. With the default angles this
    reaches ``2 sqrt(2)`` on ``|HH> + |VV>``.
    """
    if len(signal_deg) != 4 or len(idler_deg) != 4:
        raise InvalidParameterError("each arm needs four analyzer angles")
    for lst in (signal_deg, idler_deg):
        for x, xp in ((lst[0], lst[1]), (lst[2], lst[3])):
            if not math.isclose((xp - x) % 180.0, 90.0, abs_tol=1e-9):
                raise InvalidParameterError(f"angles {x} and {xp} are not orthogonal analyzer settings")
    r = [math.radians(x) for x in signal_deg]
    t = [math.radians(x) for x in idler_deg]
    return chsh(state, r[2], r[0], t[2], t[0])


def _sqrt_psd(mat):
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho_ex, rho_th):
    """Uhlmann fidelity ``[Tr sqrt(sqrt(rho_th) rho_ex sqrt(rho_th))]^2``.

    Evaluated as the squared sum of singular values of
    ``sqrt(rho_ex) sqrt(rho_th)``, which is the same trace but stays
    accurate (and exactly symmetric) for rank-deficient states.
    """
    ex = _as_rho(rho_ex)
    th = _as_rho(rho_th)
    sv = np.linalg.svd(_sqrt_psd(ex) @ _sqrt_psd(th), compute_uv=False)
    return float(min(np.sum(sv) ** 2, 1.0))


# ------------------------------------------------------------ tomography


def setting_projector(setting):
    if len(setting) != 2 or any(ch not in _KETS for ch in setting):
        raise InvalidSettingsError(f"unknown tomography setting {setting!r}")
    return np.kron(_projector(_KETS[setting[0]]), _projector(_KETS[setting[1]]))


def ideal_counts(state, settings=TOMOGRAPHY_SETTINGS, total=1.0):
    rho = _as_rho(state)
    return np.array([total * np.real(np.trace(rho @ setting_projector(s))) for s in settings])


def _pauli_basis():
    paulis = [
        np.eye(2, dtype=complex),
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    return [np.kron(p, q) for p in paulis for q in paulis]


def physical_projection(rho):
    """Hermitize, clip negative eigenvalues and renormalize to unit trace."""
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise InvalidStateError("reconstruction has no positive weight")
    out = (v * (w / w.sum())) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def tomography_linear(counts, settings=TOMOGRAPHY_SETTINGS):
    """Linear-inversion estimate from projective coincidence counts.

    Counts are modelled as ``N Tr(rho Pi_k)``; the unnormalized Pauli
    coefficients are solved by least squares and the result is projected
    onto the physical states.
    """
    counts = np.asarray(counts, dtype=float)
    settings = list(settings)
    if counts.shape != (len(settings),):
        raise InvalidSettingsError("need one count per setting")
    if np.any(counts < 0):
        raise DataError("counts must be >= 0")
    basis = _pauli_basis()
    design = np.array([[np.real(np.trace(setting_projector(s) @ b)) / 4 for b in basis] for s in settings])
    if np.linalg.matrix_rank(design) < 16:
        raise InvalidSettingsError("tomography settings are not informationally complete")
    coef, *_ = np.linalg.lstsq(design, counts, rcond=None)
    rho = sum(c * b for c, b in zip(coef, basis)) / 4
    if np.real(np.trace(rho)) <= 0:
        raise DataError("counts carry no signal")
    return TwoQubitState(physical_projection(rho / np.real(np.trace(rho))))


def subtract_accidentals(counts, accidentals):
    """Net counts, floored at zero."""
    return np.clip(np.asarray(counts, dtype=float) - np.asarray(accidentals, dtype=float), 0.0, None)


def load_tomography_counts(path):
    """Read ``setting_s,setting_i,counts`` rows; returns (settings, counts)."""
    settings, counts = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            if cells[0] == "setting_s":
                continue
            if len(cells) != 3:
                raise ParseError(f"expected 3 columns, got {len(cells)}", lineno)
            if cells[0] not in _KETS or cells[1] not in _KETS:
                raise ParseError(f"unknown analyzer setting in {row!r}", lineno)
            try:
                counts.append(float(cells[2]))
            except ValueError:
                raise ParseError(f"non-numeric count {cells[2]!r}", lineno) from None
            settings.append(cells[0] + cells[1])
    if not settings:
        raise DataError("no samples")
    return settings, np.array(counts)


def random_state(rng, rank=4):
    """Random density matrix from a complex Ginibre matrix."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    rho = rho / np.real(np.trace(rho))
    return TwoQubitState(0.5 * (rho + rho.conj().T))
