"""``sfwm-lab`` command-line entry point."""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import recipes
from .biphoton import (
    JointSpectrum,
    apply_filters,
    build_jsa_coherent,
    build_jsa_incoherent,
    channel_jsi_matrix,
    schmidt_purity,
)
from .counting import (
    Brightness,
    PumpSettings,
    Scenario,
    SWEEP_COLUMNS,
    car_peak,
    counting_result,
    pipeline_counts,
    sweep,
)
from .entanglement import (
    CHSH_IDLER_DEG,
    CHSH_SIGNAL_DEG,
    bell_phi_plus,
    chsh_from_lists,
    fidelity,
    fringe_visibility,
    load_tomography_counts,
    sagnac_state,
    subtract_accidentals,
    tomography_linear,
)
from .errors import BracketError, NumericalError, ValidationError
from .output import fmt, write_csv, write_json
from .rates import (
    DetuningScheme,
    coherent_rate_interval,
    incoherent_rate_interval,
    numeric_interval_rate,
)
from .spectral import CoherentPump, FrequencyGrid, load_measured_spectrum, parse_frequency, pump_power, resample_to_grid

SUBCOMMANDS = ["jsa", "purity", "rates", "car", "sweep", "jsi-channels", "chsh", "fidelity", "tomo", "ingest", "repro"]
FIGURES = ["fig1", "figS2", "figS3d"]


def _out(args, cfg):
    return args.out or cfg.get("output") or "."


def _say(line):
    print(line)


def _seed(args, cfg):
    return args.seed if args.seed is not None else cfg.get("seed", 0)


def _filtered_jsa(cfg, seed):
    bank_s, bank_i = cfgmod.build_banks(cfg)
    gs, gi = cfgmod.build_grids(cfg, bank_s, bank_i)
    pump = cfgmod.build_pump(cfg, spacing=gs.spacing, seed=seed)
    wg = cfgmod.build_waveguide(cfg)
    disp = cfgmod.build_dispersion(cfg)
    kappa = cfg.get("pump", {}).get("kappa", 1.0)
    if isinstance(pump, CoherentPump):
        js = build_jsa_coherent(pump, wg, disp, gs, gi, kappa)
    else:
        p = cfg.get("pump", {})
        js = build_jsa_incoherent(pump, wg, disp, gs, gi, p.get("mode", "intensity_sum"),
                                  p.get("ensembles", 1000), seed, kappa)
    return apply_filters(js, bank_s.on_grid(gs), bank_i.on_grid(gi), renormalize=True), bank_s, bank_i


def cmd_jsa(args, cfg):
    js, _, _ = _filtered_jsa(cfg, _seed(args, cfg))
    path = os.path.join(_out(args, cfg), "jsa.json")
    write_json(path, js.to_dict())
    _say(f"wrote {path}")


def cmd_purity(args, cfg):
    if "jsa_file" in cfg:
        with open(cfg["jsa_file"], encoding="utf-8") as fh:
            js = JointSpectrum.from_dict(json.load(fh))
    else:
        js, _, _ = _filtered_jsa(cfg, _seed(args, cfg))
    res = schmidt_purity(js)
    path = os.path.join(_out(args, cfg), "schmidt.csv")
    write_csv(path, ["k", "lambda"], enumerate(res.coefficients))
    _say(f"purity {res.purity:.6f}")
    _say(f"schmidt_number {res.schmidt_number:.6f}")


def cmd_rates(args, cfg):
    r = cfg.get("rates", {})
    spacing = cfgmod.freq_setting(r, "spacing") if "spacing" in r else None
    pump = cfgmod.build_pump(cfg, spacing=spacing, seed=_seed(args, cfg))
    wg = cfgmod.build_waveguide(cfg)
    disp = cfgmod.build_dispersion(cfg)
    kappa = cfg.get("pump", {}).get("kappa", 1.0)
    scheme = DetuningScheme(cfgmod.freq_setting(r, "interval"), cfgmod.freq_setting(cfg["pump"], "center"))
    power = pump_power(pump, kappa)
    rows = []
    for m in range(r.get("intervals", 4)):
        if isinstance(pump, CoherentPump):
            if pump.shape != "gaussian":
                raise ValidationError("closed-form coherent rates assume a gaussian pump")
            analytic = coherent_rate_interval(m, scheme, pump.bandwidth, power, wg, disp)
        else:
            analytic = incoherent_rate_interval(m, scheme, power, wg, disp)
        numeric = numeric_interval_rate(m, scheme, pump, wg, disp, spacing, kappa)
        rows.append([m, scheme.detuning(m), analytic, numeric, numeric / analytic - 1 if analytic else math.nan])
    path = os.path.join(_out(args, cfg), "rates.csv")
    write_csv(path, ["m", "detuning", "analytic", "numeric", "rel_diff"], rows)
    for row in rows:
        _say(" ".join(fmt(float(x)) for x in row))


def _brightness(cfg, seed):
    if "brightness" in cfg:
        b = cfg["brightness"]
        return Brightness(b["b_cc"], b["b_sc1"], b["b_sc2"])
    bank_s, bank_i = cfgmod.build_banks(cfg)
    spacing = cfgmod.freq_setting(cfg.get("grid", {}), "d") if "d" in cfg.get("grid", {}) else None
    pump = cfgmod.build_pump(cfg, spacing=spacing, seed=seed)
    return pipeline_counts(pump, cfgmod.build_waveguide(cfg), cfgmod.build_dispersion(cfg), bank_s, bank_i,
                           cfgmod.build_efficiency(cfg), spacing, cfg.get("pump", {}).get("kappa", 1.0))


def cmd_car(args, cfg):
    b = _brightness(cfg, _seed(args, cfg))
    noise = cfgmod.build_noise(cfg, enabled=not args.no_noise)
    arm1, arm2 = noise.arms(b)
    c = cfg.get("car", {})
    power = np.logspace(math.log10(c.get("power_min", 1e-5)), math.log10(c.get("power_max", 1e-1)), c.get("points", 100))
    rows = []
    for p in power:
        res = counting_result(float(p), b.b_cc, arm1, arm2, noise.window)
        rows.append([p, res.singles_s, res.singles_i, res.coincidences, res.accidentals, res.car])
    path = os.path.join(_out(args, cfg), "car.csv")
    write_csv(path, ["power_W", "singles_s", "singles_i", "coincidences", "accidentals", "car"], rows)
    try:
        pk = car_peak(b.b_cc, arm1, arm2, noise.window)
        _say(f"peak_power_W {fmt(pk.power)}")
        _say(f"peak_car {fmt(pk.car)}")
        _say(f"residual {fmt(pk.residual)}")
    except BracketError:
        _say("no interior CAR maximum (CAR decreases monotonically)")
    _say(f"wrote {path}")


def _scenario(cfg):
    p = cfg.get("pump", {})
    bank_s, bank_i = cfgmod.build_banks(cfg)
    g = cfg.get("grid", {})
    return Scenario(
        PumpSettings(p.get("coherence", "incoherent"), p.get("shape", "rectangular"),
                     cfgmod.freq_setting(p, "bandwidth"), cfgmod.freq_setting(p, "center"),
                     cfgmod.freq_setting(p, "spacing") if "spacing" in p else None,
                     p.get("kappa", 1.0), cfg.get("seed", 0)),
        cfgmod.build_waveguide(cfg),
        bank_s,
        bank_i,
        cfgmod.build_dispersion(cfg),
        cfgmod.build_efficiency(cfg),
        cfgmod.build_noise(cfg),
        p.get("power", 1e-3),
        cfgmod.freq_setting(g, "d") if "d" in g else None,
    )


def cmd_sweep(args, cfg):
    if "sweep" not in cfg:
        raise ValidationError("config needs a sweep section")
    variable, values = cfgmod.sweep_values(cfg)
    rows = sweep(variable, values, _scenario(cfg))
    path = os.path.join(_out(args, cfg), f"sweep_{variable}.csv")
    write_csv(path, SWEEP_COLUMNS, rows)
    _say(f"wrote {path} ({len(rows)} rows)")


def cmd_jsi_channels(args, cfg):
    seed = _seed(args, cfg)
    bank_s, bank_i = cfgmod.build_banks(cfg)
    gs, gi = cfgmod.build_grids(cfg, bank_s, bank_i)
    pump = cfgmod.build_pump(cfg, spacing=gs.spacing, seed=seed)
    wg, disp = cfgmod.build_waveguide(cfg), cfgmod.build_dispersion(cfg)
    if isinstance(pump, CoherentPump):
        js = build_jsa_coherent(pump, wg, disp, gs, gi)
    else:
        js = build_jsa_incoherent(pump, wg, disp, gs, gi)
    mat = channel_jsi_matrix(js, bank_s, bank_i)
    path = os.path.join(_out(args, cfg), "jsi_channels.csv")
    rows = list(mat.rows())
    write_csv(path, rows[0], rows[1:])
    _say(f"wrote {path}")


def _theory_state(cfg):
    return sagnac_state(cfgmod.build_sagnac(cfg))


def cmd_chsh(args, cfg):
    state = _theory_state(cfg)
    c = cfg.get("chsh", {})
    s = chsh_from_lists(state, c.get("signal_deg", CHSH_SIGNAL_DEG), c.get("idler_deg", CHSH_IDLER_DEG))
    _say(f"S {s:.9f}")
    _say(f"visibility_H {fringe_visibility(state, 'H'):.9f}")
    _say(f"visibility_D {fringe_visibility(state, 'D'):.9f}")


def _measured_state(cfg):
    t = cfg.get("tomography")
    if not t or "counts" not in t:
        raise ValidationError("config needs tomography.counts (a setting_s,setting_i,counts CSV)")
    settings, counts = load_tomography_counts(t["counts"])
    if "accidentals" in t:
        counts = subtract_accidentals(counts, t["accidentals"])
    return tomography_linear(counts, settings)


def cmd_fidelity(args, cfg):
    theory = _theory_state(cfg)
    measured = _measured_state(cfg) if "tomography" in cfg else bell_phi_plus()
    _say(f"fidelity {fidelity(measured, theory):.9f}")


def cmd_tomo(args, cfg):
    state = _measured_state(cfg)
    path = os.path.join(_out(args, cfg), "state.json")
    write_json(path, state.to_dict())
    _say(f"fidelity_to_model {fidelity(state, _theory_state(cfg)):.9f}")
    _say(f"wrote {path}")


def cmd_ingest(args, cfg):
    ing = cfg.get("ingest")
    if not ing:
        raise ValidationError("config needs an ingest section")
    measured = load_measured_spectrum(ing["path"], kind=args.kind)
    omega = np.sort(measured.omega)
    lo = parse_frequency(ing["start"]) if "start" in ing else float(omega[0])
    hi = parse_frequency(ing["stop"]) if "stop" in ing else float(omega[-1])
    count = ing.get("M", cfg.get("grid", {}).get("M", 256))
    grid = FrequencyGrid(lo, (hi - lo) / (count - 1), count)
    values = resample_to_grid(measured, grid, ing.get("threshold", 0.01))
    path = os.path.join(_out(args, cfg), "resampled.csv")
    write_csv(path, ["omega_rad_s", "value"], zip(grid.points, values))
    _say(f"wrote {path} ({count} points)")


def cmd_repro(args, cfg):
    out = _out(args, cfg)
    if args.figure == "fig1":
        res = recipes.fig1()
        write_json(os.path.join(out, "fig1.json"), res)
        write_csv(os.path.join(out, "fig1_bandwidth.csv"), recipes.FIG1_COLUMNS, res["bandwidth_table"])
        _say(f"purity_coherent {res['coherent']['purity']:.6f}")
        _say(f"purity_incoherent {res['incoherent']['purity']:.6f}")
    elif args.figure == "figS2":
        det, bw = recipes.figS2()
        write_csv(os.path.join(out, "figS2_detuning.csv"), recipes.FIGS2_DETUNING_COLUMNS, det)
        write_csv(os.path.join(out, "figS2_bandwidth.csv"), recipes.FIGS2_BANDWIDTH_COLUMNS, bw)
        gap = max(abs(r[2] - r[3]) for r in det)
        _say(f"max_coincidence_singles_gap {gap:.6f}")
    else:
        columns, data, peaks = recipes.figS3d()
        write_csv(os.path.join(out, "figS3d.csv"), columns, data)
        write_json(os.path.join(out, "figS3d_peaks.json"), peaks)
        for name, pk in peaks.items():
            if pk:
                _say(f"{name} peak_power_W {fmt(pk['power_W'])} peak_car {fmt(pk['car'])}")
    _say(f"wrote outputs to {out}")


COMMANDS = {
    "jsa": cmd_jsa,
    "purity": cmd_purity,
    "rates": cmd_rates,
    "car": cmd_car,
    "sweep": cmd_sweep,
    "jsi-channels": cmd_jsi_channels,
    "chsh": cmd_chsh,
    "fidelity": cmd_fidelity,
    "tomo": cmd_tomo,
    "ingest": cmd_ingest,
    "repro": cmd_repro,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sfwm-lab", description="Photon-pair source simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        if name == "repro":
            p.add_argument("figure", choices=FIGURES)
        p.add_argument("--config", required=name != "repro", help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--kind", choices=["intensity", "transmittance"], default="intensity")
        p.add_argument("--no-noise", action="store_true", help="zero the linear and background noise")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config) if args.config else {}
        COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
