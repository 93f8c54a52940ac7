import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm_lab.channels import Channel, bank
from sfwm_lab.counting import (
    ArmNoise,
    Brightness,
    EfficiencyModel,
    NoiseModel,
    PumpSettings,
    Scenario,
    car,
    car_peak,
    car_peak_residual,
    car_shift_delta,
    collection_grids,
    counting_result,
    fit_noise,
    g2_prediction,
    heralded_g2,
    load_singles_table,
    pipeline_counts,
    scale_noise,
    scenario_at,
    simulate_counts,
    simulate_heralded,
    singles_rate,
    sweep,
)
from sfwm_lab.errors import (
    BracketError,
    DataError,
    InvalidParameterError,
    ParseError,
    UndefinedCARError,
    UndefinedEstimatorError,
)
from sfwm_lab.spectral import TWO_PI, CoherentPump, incoherent_pump
from sfwm_lab.waveguide import DispersionModel, WaveguideSpec

GHZ = TWO_PI * 1e9
W0 = TWO_PI * 193.4e12
WIDTH = 100 * GHZ
D = WIDTH / 63  # channel edges fall between grid points


def _symmetric(offset, width=WIDTH):
    return bank(Channel("s", W0 - offset, width)), bank(Channel("i", W0 + offset, width))


# ------------------------------------------------------------ pipeline


def test_monochromatic_pump_collects_every_twin():
    bs, bi = _symmetric(3 * WIDTH)
    pump = CoherentPump(W0, D / 4, "rectangular")
    b = pipeline_counts(pump, WaveguideSpec(), None, bs, bi, spacing=D)
    assert b.b_cc > 0
    assert b.b_cc == pytest.approx(b.b_sc1, rel=1e-12)
    assert b.b_cc == pytest.approx(b.b_sc2, rel=1e-12)


def test_efficiencies_enter_as_products():
    bs, bi = _symmetric(3 * WIDTH)
    pump = CoherentPump(W0, D / 4, "rectangular")
    base = pipeline_counts(pump, WaveguideSpec(), None, bs, bi, spacing=D)
    eff = EfficiencyModel(0.5, 0.8, 0.25, 0.5)
    lossy = pipeline_counts(pump, WaveguideSpec(), None, bs, bi, eff, spacing=D)
    assert lossy.b_cc == pytest.approx(base.b_cc * 0.5 * 0.8 * 0.25 * 0.5)
    assert lossy.b_sc1 == pytest.approx(base.b_sc1 * 0.5 * 0.25)
    assert lossy.b_sc2 == pytest.approx(base.b_sc2 * 0.8 * 0.5)


@settings(max_examples=15, deadline=None)
@given(
    st.floats(0.2, 1.0), st.floats(0.2, 1.0), st.floats(0.2, 1.0), st.floats(0.2, 1.0),
    st.floats(-0.6, 0.6), st.sampled_from([20.0, 80.0, 200.0]),
)
def test_coincidence_never_exceeds_singles(m1, m2, m3, m4, skew, pump_ghz):
    bs = bank(Channel("s", W0 - 2 * WIDTH, WIDTH))
    bi = bank(Channel("i", W0 + (2 + skew) * WIDTH, WIDTH))
    pump = incoherent_pump(W0, pump_ghz * GHZ, 5 * GHZ, seed=0)
    b = pipeline_counts(pump, WaveguideSpec(), DispersionModel(W0, beta2=-0.6e-24), bs, bi,
                        EfficiencyModel(m1, m2, m3, m4))
    assert b.b_cc <= b.b_sc1 * (1 + 1e-12)
    assert b.b_cc <= b.b_sc2 * (1 + 1e-12)


def test_collection_grid_reaches_partners():
    bs, bi = _symmetric(2 * WIDTH)
    pump = incoherent_pump(W0, 200 * GHZ, 5 * GHZ, seed=0)
    gs, gi = collection_grids(pump, bs, bi, 5 * GHZ)
    f = pump.frequencies
    # partners of the idler band edge from the outermost pump lines
    assert gs.start <= 2 * f[0] - bi.band[1] + 1e-6 * GHZ
    assert gs.stop >= 2 * f[-1] - bi.band[0] - 1e-6 * GHZ
    assert np.isclose((gs.start - f[0]) / gs.spacing, round((gs.start - f[0]) / gs.spacing))


def test_pipeline_rejects_plain_channels():
    with pytest.raises(InvalidParameterError):
        pipeline_counts(CoherentPump(W0, GHZ), WaveguideSpec(), None, Channel("s", W0 - WIDTH), Channel("i", W0))


# ------------------------------------------------------------ singles and CAR


def test_singles_rate_examples():
    assert singles_rate(1.0, 1.0, 1.0, 1.0) == 3.0
    assert singles_rate(0.0, 5.0, 2.0, 7.0) == 7.0
    assert singles_rate(3.0, 2.0, 0.5, 10.0) == pytest.approx(29.5)
    with pytest.raises(InvalidParameterError):
        singles_rate(-1.0, 1.0)


def test_car_examples():
    arm = ArmNoise(1.0, 1.0, 1.0)
    assert car(1.0, 1.0, arm, arm, window=1.0) == pytest.approx(1 / 9)
    quiet = ArmNoise(2.0)
    p = np.array([0.5, 1.0, 2.0, 4.0])
    expected = 3.0 / (1e-9 * 2.0 * 2.0 * p**2)
    got = car(p, 3.0, quiet, quiet, window=1e-9)
    assert np.allclose(got, expected, rtol=1e-14)
    assert np.all(np.diff(got) < 0)
    with pytest.raises(UndefinedCARError):
        car(1.0, 1.0, ArmNoise(0.0), ArmNoise(1.0))
    with pytest.raises(InvalidParameterError):
        car(0.0, 1.0, arm, arm)


@given(st.floats(1e-6, 1e3), st.floats(0.0, 1e9), st.floats(1e3, 1e10), st.floats(0.0, 1e6), st.floats(0.0, 1e4))
def test_car_equals_coincidences_over_accidentals(p, b_cc, b_sc, a, n0):
    arm1, arm2 = ArmNoise(b_sc, a, n0), ArmNoise(2 * b_sc, 0.5 * a, n0 + 1)
    res = counting_result(p, b_cc, arm1, arm2, 1e-9)
    acc = singles_rate(p, b_sc, a, n0) * singles_rate(p, 2 * b_sc, 0.5 * a, n0 + 1) * 1e-9
    assert res.accidentals == acc
    assert res.car == car(p, b_cc, arm1, arm2, 1e-9)


def test_car_peak_examples():
    arm = ArmNoise(1.0, 0.0, 1.0)
    peak = car_peak(1.0, arm, arm)
    assert peak.power == pytest.approx(1.0, rel=1e-10)
    # without linear noise the condition reduces to P^4 = N1 N2 / (B1 B2)
    both = car_peak(1.0, ArmNoise(1.0, 0.0, 4.0), ArmNoise(1.0, 0.0, 4.0))
    assert both.power / peak.power == pytest.approx(2.0, rel=1e-10)
    one = car_peak(1.0, ArmNoise(1.0, 0.0, 4.0), arm)
    assert one.power / peak.power == pytest.approx(4 ** 0.25, rel=1e-10)
    uneven = car_peak(1.0, ArmNoise(3.0, 0.0, 5.0), ArmNoise(2.0, 0.0, 7.0))
    assert uneven.power == pytest.approx((35.0 / 6.0) ** 0.25, rel=1e-10)
    with pytest.raises(BracketError):
        car_peak(1.0, ArmNoise(1.0), ArmNoise(1.0))
    with pytest.raises(InvalidParameterError):
        car_peak(1.0, arm, arm, power_range=(1.0, 0.5))


@settings(max_examples=50)
@given(
    st.floats(1e6, 1e12), st.floats(1e6, 1e12), st.floats(0.0, 1e8), st.floats(0.0, 1e8),
    st.floats(1.0, 1e5), st.floats(1.0, 1e5),
)
def test_car_peak_is_a_maximum(b1, b2, a1, a2, n1, n2):
    arm1, arm2 = ArmNoise(b1, a1, n1), ArmNoise(b2, a2, n2)
    b_cc = 0.01 * min(b1, b2)
    peak = car_peak(b_cc, arm1, arm2)
    assert peak.residual < 1e-8
    assert car_peak_residual(peak.power, arm1, arm2) == peak.residual
    for f in (0.9, 1.1):
        assert car(f * peak.power, b_cc, arm1, arm2) < peak.car


def test_shift_delta_examples():
    arm1, arm2 = ArmNoise(2.0, 0.3, 1.0), ArmNoise(1.5, 0.2, 2.0)
    assert car_shift_delta(0.7, 1.0, 1.0, arm1, arm2) == 0.0
    assert car_shift_delta(0.7, 1.5, 2.0, arm1, arm2) > 0


@settings(max_examples=50)
@given(
    st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0),
    st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(1.01, 3.0), st.floats(0.01, 2.0),
)
def test_rescaled_noise_moves_peak_up(b1, b2, a1, a2, n1, n2, mu1, extra):
    mu2 = mu1 + extra
    arm1, arm2 = ArmNoise(b1, a1, n1), ArmNoise(b2, a2, n2)
    p1 = car_peak(1.0, arm1, arm2).power
    assert car_shift_delta(p1, mu1, mu2, arm1, arm2) > 0
    moved = car_peak(1.0, scale_noise(arm1, mu1, mu2), scale_noise(arm2, mu1, mu2)).power
    assert moved >= p1


def test_brighter_source_has_higher_peak_car():
    noise = dict(linear=2e6, background=500.0)
    coh = Brightness(1e8, 1e10, 1e10)
    inc = Brightness(*(math.sqrt(2) * x for x in (coh.b_cc, coh.b_sc1, coh.b_sc2)))
    pc = car_peak(coh.b_cc, ArmNoise(coh.b_sc1, **noise), ArmNoise(coh.b_sc2, **noise))
    pi = car_peak(inc.b_cc, ArmNoise(inc.b_sc1, **noise), ArmNoise(inc.b_sc2, **noise))
    assert pi.car > pc.car


# ------------------------------------------------------------ counting statistics


def test_simulate_counts():
    rates = {"zero": 0.0, "big": 1e6}
    a = simulate_counts(rates, 1.0, seed=5)
    assert a["zero"] == 0
    assert abs(a["big"] - 1e6) <= 5 * math.sqrt(1e6)
    assert simulate_counts(rates, 1.0, seed=5) == a
    res = counting_result(1.0, 10.0, ArmNoise(5.0), ArmNoise(5.0), 1.0)
    assert set(simulate_counts(res, 2.0, seed=0)) == {"singles_s", "singles_i", "coincidences", "accidentals"}
    with pytest.raises(InvalidParameterError):
        simulate_counts(rates, 0.0)
    with pytest.raises(InvalidParameterError):
        simulate_counts({"x": -1.0}, 1.0)


def test_heralded_g2_estimator():
    assert heralded_g2(100, 10, 10, 0) == 0.0
    assert heralded_g2(100, 10, 10, 1) == 1.0
    with pytest.raises(UndefinedEstimatorError):
        heralded_g2(100, 0, 10, 1)


def test_ideal_pair_source_is_antibunched():
    counts = simulate_heralded(0.01, 1_000_000, seed=3)
    assert heralded_g2(counts["N1"], counts["N12"], counts["N13"], counts["N123"]) < 0.05


def test_noise_raises_heralded_g2():
    clean = simulate_heralded(0.05, 400_000, seed=4)
    noisy = simulate_heralded(0.05, 400_000, seed=4, noise_mean=0.05)
    g_clean = heralded_g2(clean["N1"], clean["N12"], clean["N13"], clean["N123"])
    g_noisy = heralded_g2(noisy["N1"], noisy["N12"], noisy["N13"], noisy["N123"])
    assert g_noisy > g_clean


def test_g2_prediction():
    assert g2_prediction(10.0, 0.0) == 0.0
    assert g2_prediction(1.0, 1.0) == pytest.approx(0.75)
    with pytest.raises(UndefinedEstimatorError):
        g2_prediction(0.0, 0.0)


# ------------------------------------------------------------ noise fit


def test_fit_noise_recovers_polynomial(tmp_path):
    p = np.linspace(0.0, 5e-3, 9)
    s = 3e9 * p**2 + 2e6 * p + 400.0
    fit = fit_noise(p, s)
    assert fit.brightness == pytest.approx(3e9, rel=1e-8)
    assert fit.linear == pytest.approx(2e6, rel=1e-8)
    assert fit.background == pytest.approx(400.0, rel=1e-8)
    path = tmp_path / "singles.csv"
    path.write_text("power_W,singles_s,singles_i\n" + "\n".join(f"{a},{b},{b}" for a, b in zip(p, s)) + "\n")
    pw, ss, si = load_singles_table(path)
    assert np.allclose(pw, p) and np.allclose(ss, s)
    with pytest.raises(DataError):
        fit_noise([1.0, 2.0], [1.0, 2.0])


def test_singles_table_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("power_W,singles_s,singles_i\n0.1,2,3\n0.2,x,3\n")
    with pytest.raises(ParseError, match="line 3"):
        load_singles_table(bad)
    short = tmp_path / "short.csv"
    short.write_text("0.1,2\n")
    with pytest.raises(ParseError):
        load_singles_table(short)


def test_model_validation():
    with pytest.raises(InvalidParameterError):
        EfficiencyModel(mu_ts=0.0)
    with pytest.raises(InvalidParameterError):
        NoiseModel(a1=-1.0)
    with pytest.raises(InvalidParameterError):
        NoiseModel(window=0.0)
    with pytest.raises(InvalidParameterError):
        ArmNoise(-1.0)


# ------------------------------------------------------------ sweeps


def _scenario(noise=None):
    bs, bi = _symmetric(3 * WIDTH)
    return Scenario(
        PumpSettings("incoherent", "rectangular", 40 * GHZ, W0, 2 * GHZ),
        WaveguideSpec(),
        bs,
        bi,
        noise=noise or NoiseModel(a1=1e6, a2=1e6, n01=300.0, n02=300.0),
    )


def test_power_sweep_matches_car_pointwise():
    sc = _scenario()
    powers = [1e-4, 5e-4, 1e-3, 5e-3]
    rows = sweep("power", powers, sc)
    b = sc.brightness()
    arm1, arm2 = sc.noise.arms(b)
    for row, p in zip(rows, powers):
        assert row[0] == p
        assert row[8] == car(p, b.b_cc, arm1, arm2, sc.noise.window)


def test_coincidences_scale_quadratically_without_noise():
    sc = _scenario(NoiseModel())
    rows = sweep("power", [1e-3, 2e-3], sc)
    assert rows[1][6] == 4 * rows[0][6]


def test_bandwidth_sweep_coincidences_do_not_increase():
    sc = _scenario(NoiseModel())
    sc = Scenario(sc.pump, sc.wg, bank(Channel("s", W0 - 1.5 * WIDTH, 2 * WIDTH)),
                  bank(Channel("i", W0 + 1.5 * WIDTH, 2 * WIDTH)), sc.disp, noise=sc.noise)
    rows = sweep("bandwidth", [20 * GHZ, 40 * GHZ, 80 * GHZ, 160 * GHZ], sc)
    cc = [r[6] for r in rows]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(cc, cc[1:]))


def test_scenario_variables():
    sc = _scenario()
    moved = scenario_at(sc, "detuning", 5 * WIDTH)
    assert moved.bank_s.channels[0].center == pytest.approx(W0 - 5 * WIDTH)
    assert moved.bank_i.channels[0].center == pytest.approx(W0 + 5 * WIDTH)
    assert scenario_at(sc, "asymmetry", GHZ).pump.center == pytest.approx(W0 + GHZ)
    assert scenario_at(sc, "bandwidth", GHZ).pump.bandwidth == GHZ
    with pytest.raises(InvalidParameterError):
        scenario_at(sc, "temperature", 1.0)
    with pytest.raises(InvalidParameterError):
        sweep("power", [], sc)
