import numpy as np
import pytest

from sfwm_lab.channels import Channel, ChannelBank, bank, itu_channel
from sfwm_lab.errors import InvalidParameterError
from sfwm_lab.spectral import TWO_PI, FrequencyGrid


def test_brickwall_edges_take_half():
    ch = Channel("x", 10.0, 4.0)
    assert np.array_equal(ch.transmittance([7.9, 8.0, 9.0, 12.0, 12.1]), [0.0, 0.5, 1.0, 0.5, 0.0])
    assert ch.band == (8.0, 12.0)


def test_itu_channel_center():
    ch = itu_channel("C20", TWO_PI * 100e9)
    assert ch.center == pytest.approx(TWO_PI * 192.0e12)
    assert ch.band[1] - ch.band[0] == pytest.approx(TWO_PI * 100e9)


def test_allpass_and_measured():
    assert np.all(Channel("a", 0.0, shape="allpass").transmittance([-1e20, 0.0, 1e20]) == 1.0)
    m = Channel("m", 1.0, 1.0, "measured", (0.0, 1.0, 2.0), (0.0, 1.0, 0.5))
    assert np.allclose(m.transmittance([-1.0, 0.5, 1.5, 3.0]), [0.0, 0.5, 0.75, 0.0])
    assert m.band == (1.0, 2.0)
    assert m.shifted(2.0).transmittance([2.5])[0] == pytest.approx(0.5)


def test_channel_validation():
    with pytest.raises(InvalidParameterError):
        Channel("x", 0.0, shape="gaussian")
    with pytest.raises(InvalidParameterError):
        Channel("x", 0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        Channel("m", 0.0, 1.0, "measured", (0.0, 1.0), (0.5, 1.5))
    with pytest.raises(InvalidParameterError):
        Channel("m", 0.0, 1.0, "measured", (1.0, 0.0), (0.5, 0.5))


def test_bank_sums_and_caps():
    b = bank(Channel("a", 0.0, 2.0), Channel("b", 2.0, 2.0))
    assert b.labels == ["a", "b"]
    assert b.band == (-1.0, 3.0)
    # shared edge at 1.0 gets 0.5 + 0.5
    assert np.allclose(b.transmittance([0.0, 1.0, 2.0, 3.5]), [1.0, 1.0, 1.0, 0.0])
    overlap = bank(Channel("a", 0.0, 4.0), Channel("b", 1.0, 4.0))
    assert overlap.transmittance([0.5])[0] == 1.0
    grid = FrequencyGrid(-1.0, 1.0, 5)
    assert b.on_grid(grid).shape == (5,)
    assert b.shifted(1.0).band == (0.0, 4.0)


def test_bank_validation():
    with pytest.raises(InvalidParameterError):
        ChannelBank(())
    with pytest.raises(InvalidParameterError):
        bank(Channel("a", 0.0), Channel("a", 1.0))
