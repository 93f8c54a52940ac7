"""Canned configurations that regenerate the data behind the standard figures."""

import numpy as np

from .biphoton import apply_filters, build_jsa_coherent, build_jsa_incoherent, schmidt_purity
from .channels import Channel, bank, itu_channel
from .counting import (
    ArmNoise,
    EfficiencyModel,
    PumpSettings,
    Scenario,
    car,
    car_peak,
    pipeline_counts,
    scenario_at,
    sweep,
)
from .errors import BracketError
from .spectral import TWO_PI, CoherentPump, FrequencyGrid, incoherent_pump, itu_frequency
from .waveguide import WaveguideSpec, silicon_nanowire

GHZ = TWO_PI * 1e9


def _filter_grids(signal, idler, m):
    """About three filter widths per axis, with the brick-wall edges on grid points.

    Landing the edges on points (where they take half weight) removes the
    staircase jitter that otherwise makes purity wobble with ``m``.
    """
    n = int(round(m / 3))
    # centred grids put points at half-integer offsets when m is even
    if (n % 2 == 0) == (m % 2 == 0):
        n += 1
    d = signal.width / n
    return FrequencyGrid.centered(signal.center, d, m), FrequencyGrid.centered(idler.center, d, m)


def filtered_purities(pump_width, filter_width, m=256, center="C34", signal="C20", idler="C48", workers=None):
    """Coherent and incoherent purity for a rectangular pump and brick-wall filters.

    Grids span each filter band plus roughly one channel width either side;
    phase matching is flat.
    """
    cs, ci = itu_channel(signal, filter_width), itu_channel(idler, filter_width)
    gs, gi = _filter_grids(cs, ci, m)
    ts, ti = cs.transmittance(gs.points), ci.transmittance(gi.points)
    wg = WaveguideSpec()
    w0 = itu_frequency(center)
    coh = build_jsa_coherent(CoherentPump(w0, pump_width, "rectangular"), wg, None, gs, gi, workers=workers)
    inc_pump = incoherent_pump(w0, pump_width, gs.spacing, "rectangular", seed=0)
    inc = build_jsa_incoherent(inc_pump, wg, None, gs, gi, workers=workers)
    return schmidt_purity(apply_filters(coh, ts, ti)), schmidt_purity(apply_filters(inc, ts, ti))


def fig1(m=256, workers=None):
    coh, inc = filtered_purities(200 * GHZ, 200 * GHZ, m, workers=workers)
    rows = []
    for filt in (50, 100, 200):
        for pump in (25, 50, 100, 200, 400, 800):
            c, i = filtered_purities(pump * GHZ, filt * GHZ, m, workers=workers)
            rows.append([filt, pump, c.purity, i.purity])
    return {
        "coherent": {"purity": coh.purity, "schmidt": list(coh.coefficients[:10])},
        "incoherent": {"purity": inc.purity, "schmidt": list(inc.coefficients[:10])},
        "grid_points": m,
        "bandwidth_table": rows,
    }


FIG1_COLUMNS = ["filter_GHz", "pump_GHz", "purity_coherent", "purity_incoherent"]


def _s2_scenario(bandwidth, spacing=10 * GHZ):
    w0 = itu_frequency("C34")
    width = 200 * GHZ
    return Scenario(
        PumpSettings("incoherent", "rectangular", bandwidth, w0, spacing),
        WaveguideSpec(),
        bank(Channel("signal", w0 - 5 * width, width)),
        bank(Channel("idler", w0 + 5 * width, width)),
        silicon_nanowire(w0),
    )


def figS2(workers=None):
    """Normalized coincidence and single-arm brightness versus detuning and bandwidth.

    Square incoherent pump, 200 GHz channels of unit transmittance.
    """
    detuning_rows = []
    detunings = np.linspace(0.2e12, 4.0e12, 9) * TWO_PI
    for bw in (50, 100, 200, 400):
        rows = np.array(sweep("detuning", detunings, _s2_scenario(bw * GHZ), workers))
        for det, cc, s1, s2 in zip(detunings, rows[:, 1] / rows[:, 1].max(), rows[:, 2] / rows[:, 2].max(),
                                   rows[:, 3] / rows[:, 3].max()):
            detuning_rows.append([bw, det / TWO_PI / 1e9, cc, s1, s2])
    bandwidth_rows = []
    widths = np.array([25, 50, 100, 200, 400, 800]) * GHZ
    for det in (1.0e12, 2.0e12, 3.0e12):
        base = _s2_scenario(widths[0])
        placed = scenario_at(base, "detuning", det * TWO_PI)
        rows = np.array(sweep("bandwidth", widths, placed, workers))
        for bw, cc, s1 in zip(widths, rows[:, 1] / rows[:, 1].max(), rows[:, 2] / rows[:, 2].max()):
            bandwidth_rows.append([det / 1e9, bw / GHZ, cc, s1])
    return detuning_rows, bandwidth_rows


FIGS2_DETUNING_COLUMNS = ["bandwidth_GHz", "detuning_GHz", "coincidence_norm", "singles_s_norm", "singles_i_norm"]
FIGS2_BANDWIDTH_COLUMNS = ["detuning_GHz", "bandwidth_GHz", "coincidence_norm", "singles_s_norm"]

# Illustrative noise for the CAR curves: linear noise in counts/s per W and
# background in counts/s. Not fitted to any measurement.
FIGS3D_NOISE = {"linear": 2.0e6, "background": 500.0}
FIGS3D_EFFICIENCY = EfficiencyModel(0.2, 0.2, 0.1, 0.1)


def figS3d(points=100, workers=None):
    """CAR versus pump power for coherent and incoherent 200 GHz pumps, with and without noise."""
    w0 = itu_frequency("C34")
    wg = WaveguideSpec()
    bs, bi = bank(itu_channel("C20")), bank(itu_channel("C48"))
    d = 5 * GHZ
    pumps = {
        "coherent": CoherentPump(w0, 200 * GHZ, "gaussian"),
        "incoherent": incoherent_pump(w0, 200 * GHZ, d, "gaussian", seed=0),
    }
    bright = {k: pipeline_counts(p, wg, None, bs, bi, FIGS3D_EFFICIENCY, d, workers=workers) for k, p in pumps.items()}
    power = np.logspace(-5, -1, points)
    columns = ["power_W"]
    data = [power]
    peaks = {}
    for name, b in bright.items():
        noisy = (ArmNoise(b.b_sc1, **FIGS3D_NOISE), ArmNoise(b.b_sc2, **FIGS3D_NOISE))
        quiet = (ArmNoise(b.b_sc1), ArmNoise(b.b_sc2))
        data.append(car(power, b.b_cc, *noisy))
        data.append(car(power, b.b_cc, *quiet))
        columns += [f"car_{name}", f"car_{name}_noise_free"]
        try:
            pk = car_peak(b.b_cc, *noisy)
            peaks[name] = {"power_W": pk.power, "car": pk.car, "residual": pk.residual, "b_cc": b.b_cc,
                           "b_sc1": b.b_sc1, "b_sc2": b.b_sc2}
        except BracketError:
            peaks[name] = None
    return columns, np.column_stack(data), peaks

