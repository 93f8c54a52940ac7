"""JSON run configuration: schema, loading and object builders."""

import json
import math

import jsonschema
import numpy as np

from .channels import DEFAULT_WIDTH, Channel, ChannelBank, itu_channel
from .counting import EfficiencyModel, NoiseModel
from .entanglement import SagnacParams
from .errors import InvalidParameterError
from .spectral import (
    CoherentPump,
    FrequencyGrid,
    incoherent_pump,
    load_measured_spectrum,
    parse_frequency,
)
from .waveguide import DispersionModel, WaveguideSpec, silicon_nanowire

_FREQ = {"type": ["number", "string"]}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_UNIT = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


_CHANNEL = _obj(
    {
        "label": {"type": "string"},
        "center": _FREQ,
        "width": _FREQ,
        "shape": {"enum": ["brickwall", "allpass", "measured"]},
        "path": {"type": "string"},
    },
    ["label"],
)

SCHEMA = _obj(
    {
        "pump": _obj(
            {
                "coherence": {"enum": ["coherent", "incoherent"]},
                "shape": {"enum": ["gaussian", "rectangular"]},
                "bandwidth": _FREQ,
                "center": _FREQ,
                "spacing": _FREQ,
                "kappa": _POS,
                "power": _POS,
                "mode": {"enum": ["intensity_sum", "monte_carlo"]},
                "ensembles": {"type": "integer", "minimum": 2},
            }
        ),
        "waveguide": _obj(
            {
                "length": _POS,
                "gamma": _NONNEG,
                "loss_db_per_m": _NONNEG,
                "segments": {"type": "integer", "minimum": 1},
                "include_nonlinear_phase": {"type": "boolean"},
                "dispersion": {
                    "oneOf": [
                        {"enum": ["flat", "silicon"]},
                        _obj(
                            {
                                "reference": _FREQ,
                                "k1": {"type": "number"},
                                "beta2": {"type": "number"},
                                "beta3": {"type": "number"},
                                "span": _FREQ,
                            },
                            ["reference"],
                        ),
                    ]
                },
            }
        ),
        "grid": _obj({"M": {"type": "integer", "minimum": 2}, "d": _FREQ, "margin": _NONNEG}),
        "channels": _obj(
            {
                "signal": {"type": "array", "items": _CHANNEL, "minItems": 1},
                "idler": {"type": "array", "items": _CHANNEL, "minItems": 1},
            }
        ),
        "noise": _obj({"a1": _NONNEG, "a2": _NONNEG, "N01": _NONNEG, "N02": _NONNEG, "window": _POS}),
        "efficiency": _obj({"mu_ts": _UNIT, "mu_ti": _UNIT, "mu_ds": _UNIT, "mu_di": _UNIT}),
        "brightness": _obj({"b_cc": _NONNEG, "b_sc1": _NONNEG, "b_sc2": _NONNEG}, ["b_cc", "b_sc1", "b_sc2"]),
        "car": _obj({"power_min": _POS, "power_max": _POS, "points": {"type": "integer", "minimum": 2}}),
        "sweep": _obj(
            {
                "variable": {"enum": ["power", "bandwidth", "detuning", "asymmetry"]},
                "values": {"type": "array", "items": _FREQ, "minItems": 1},
                "start": _FREQ,
                "stop": _FREQ,
                "points": {"type": "integer", "minimum": 1},
            },
            ["variable"],
        ),
        "rates": _obj({"interval": _FREQ, "intervals": {"type": "integer", "minimum": 1}, "spacing": _FREQ}),
        "state": _obj({"eta": _NONNEG, "delta": {"type": "number"}, "noise": {"type": "number", "minimum": 0, "maximum": 1}}),
        "chsh": _obj(
            {
                "signal_deg": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "idler_deg": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
            }
        ),
        "tomography": _obj({"counts": {"type": "string"}, "accidentals": _NONNEG}),
        "ingest": _obj({"path": {"type": "string"}, "threshold": {"type": "number", "minimum": 0, "maximum": 1},
                        "start": _FREQ, "stop": _FREQ, "M": {"type": "integer", "minimum": 2}}, ["path"]),
        "jsa_file": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    }
)


def validate(cfg):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidParameterError(f"config {where}: {exc.message}") from None
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate(cfg)


def freq_setting(section, key, default=None):
    if key not in section:
        if default is None:
            raise InvalidParameterError(f"missing required setting {key!r}")
        return default
    return parse_frequency(section[key])


def build_dispersion(cfg):
    wg = cfg.get("waveguide", {})
    choice = wg.get("dispersion", "flat")
    if choice == "flat":
        return None
    if choice == "silicon":
        return silicon_nanowire(freq_setting(cfg.get("pump", {}), "center", parse_frequency("C34")))
    return DispersionModel(
        parse_frequency(choice["reference"]),
        k1=choice.get("k1", 0.0),
        beta2=choice.get("beta2", 0.0),
        beta3=choice.get("beta3", 0.0),
        span=parse_frequency(choice["span"]) if "span" in choice else math.inf,
    )


def build_waveguide(cfg):
    wg = cfg.get("waveguide", {})
    keys = ("length", "gamma", "loss_db_per_m", "segments", "include_nonlinear_phase")
    return WaveguideSpec(**{k: wg[k] for k in keys if k in wg})


def _channel(entry):
    label = entry["label"]
    width = freq_setting(entry, "width", DEFAULT_WIDTH)
    shape = entry.get("shape", "measured" if "path" in entry else "brickwall")
    if shape == "measured":
        if "path" not in entry:
            raise InvalidParameterError(f"measured channel {label!r} needs a path")
        measured = load_measured_spectrum(entry["path"], kind="transmittance")
        omega = measured.omega
        order = np.argsort(omega)
        center = freq_setting(entry, "center", float(np.average(omega, weights=measured.values + 1e-300)))
        return Channel(label, center, width, "measured", tuple(omega[order]), tuple(measured.values[order]))
    if "center" in entry:
        return Channel(label, parse_frequency(entry["center"]), width, shape)
    return itu_channel(label, width, shape)


def build_banks(cfg):
    ch = cfg.get("channels")
    if not ch or "signal" not in ch or "idler" not in ch:
        raise InvalidParameterError("config needs channels.signal and channels.idler")
    return ChannelBank(tuple(_channel(e) for e in ch["signal"])), ChannelBank(tuple(_channel(e) for e in ch["idler"]))


def build_grids(cfg, bank_s, bank_i):
    """Signal/idler grids spanning each bank's band plus a margin of channel widths."""
    g = cfg.get("grid", {})
    margin = g.get("margin", 1.0)

    def padded(bank):
        lo, hi = bank.band
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidParameterError("all-pass channels need an explicit centre and width for gridding")
        w = max(ch.width for ch in bank)
        return lo - margin * w, hi + margin * w

    (s_lo, s_hi), (i_lo, i_hi) = padded(bank_s), padded(bank_i)
    span = max(s_hi - s_lo, i_hi - i_lo)
    if "d" in g:
        d = parse_frequency(g["d"])
        m = int(math.ceil(span / d - 1e-9))
    else:
        m = g.get("M", 256)
        d = span / m
    return (
        FrequencyGrid.centered(0.5 * (s_lo + s_hi), d, m),
        FrequencyGrid.centered(0.5 * (i_lo + i_hi), d, m),
    )


def build_pump(cfg, spacing=None, seed=None):
    p = cfg.get("pump")
    if p is None:
        raise InvalidParameterError("config needs a pump section")
    center = freq_setting(p, "center")
    bandwidth = freq_setting(p, "bandwidth")
    shape = p.get("shape", "rectangular")
    if p.get("coherence", "coherent") == "coherent":
        return CoherentPump(center, bandwidth, shape)
    d = freq_setting(p, "spacing", spacing)
    if d is None:
        raise InvalidParameterError("incoherent pump needs a component spacing")
    return incoherent_pump(center, bandwidth, d, shape, seed=seed if seed is not None else cfg.get("seed", 0))


def build_noise(cfg, enabled=True):
    n = cfg.get("noise", {})
    window = n.get("window", NoiseModel().window)
    if not enabled:
        return NoiseModel(window=window)
    return NoiseModel(n.get("a1", 0.0), n.get("a2", 0.0), n.get("N01", 0.0), n.get("N02", 0.0), window)


def build_efficiency(cfg):
    return EfficiencyModel(**cfg.get("efficiency", {}))


def build_sagnac(cfg):
    s = cfg.get("state", {})
    return SagnacParams(s.get("eta", 1.0), s.get("delta", 0.0), s.get("noise", 0.0))


def sweep_values(cfg):
    sw = cfg["sweep"]
    variable = sw["variable"]
    conv = (lambda x: float(x)) if variable == "power" else parse_frequency
    if "values" in sw:
        return variable, [conv(v) for v in sw["values"]]
    if "start" not in sw or "stop" not in sw:
        raise InvalidParameterError("sweep needs values or start/stop")
    n = sw.get("points", 11)
    return variable, list(np.linspace(conv(sw["start"]), conv(sw["stop"]), n))
