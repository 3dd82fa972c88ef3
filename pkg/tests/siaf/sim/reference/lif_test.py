'''Sequential LIF dynamics'''
import itertools

import numpy as np
import pytest

from siaf.sim.errors import AccumulatorOverflowError, ShapeMismatchError
from siaf.sim.reference.lif import LifParams, lif_seq, lif_step, threshold_for_scale
from siaf.sim.tensor import AccTensor
from tests import scalar_lif

PARAMS = LifParams(threshold_int=50, leak_shift=2)


def _run(currents, params=PARAMS):
    spikes, membrane = lif_seq(AccTensor(np.asarray(currents).reshape(len(currents), 1)), params)
    return list(spikes.to_bits()[:, 0]), int(membrane.data[0])


def test_three_steps_against_recurrence():
    spikes, membrane = _run([60, 10, 40, 0])
    assert spikes == [1, 0, 0, 0]
    assert (10 >> 2) + 40 == 42
    assert membrane == 42 >> 2


def test_zero_input():
    assert _run([0, 0, 0, 0]) == ([0, 0, 0, 0], 0)


def test_hard_reset_then_refire():
    assert _run([50, 50, 49, 38]) == ([1, 1, 0, 1], 0)


def test_negative_membrane_floors():
    # -7 >> 2 == -2
    spikes, membrane = _run([-7, 0])
    assert spikes == [0, 0]
    assert membrane == -2


def test_against_scalar_oracle():
    rng = np.random.default_rng(0)
    currents = rng.integers(-100, 101, size=(4, 500))
    spikes, membrane = lif_seq(AccTensor(currents), PARAMS)
    bits = spikes.to_bits()
    for i in range(currents.shape[1]):
        expected_spikes, expected_membrane = scalar_lif(currents[:, i], 50)
        assert list(bits[:, i]) == expected_spikes
        assert int(membrane.data[i]) == expected_membrane


def test_single_step_is_a_threshold():
    currents = np.arange(-60, 61).reshape(1, -1)
    spikes, _ = lif_seq(AccTensor(currents), PARAMS)
    assert np.array_equal(spikes.to_bits()[0], (currents[0] >= 50).astype(np.uint8))


def test_causality():
    rng = np.random.default_rng(1)
    currents = rng.integers(-100, 101, size=(4, 64))
    full = lif_seq(AccTensor(currents), PARAMS)[0].to_bits()
    for steps in (1, 2):
        prefix = lif_seq(AccTensor(currents[:steps]), PARAMS)[0].to_bits()
        assert np.array_equal(prefix, full[:steps])


def test_rejects_bad_time_steps():
    with pytest.raises(ShapeMismatchError):
        lif_seq(AccTensor(np.zeros((3, 2))), PARAMS)


def test_overflow_is_an_error():
    with pytest.raises(AccumulatorOverflowError):
        lif_step(np.array([2 ** 31 - 1]), np.array([2 ** 31 - 1]), LifParams(2 ** 31 - 1, leak_shift=0))


@pytest.mark.parametrize('scale_exp, threshold', [(-1, 1), (-6, 32), (-14, 8192), (0, 1)])
def test_threshold_for_scale(scale_exp, threshold):
    assert threshold_for_scale(scale_exp) == threshold
    # the threshold is 0.5 expressed at 2**scale_exp
    assert threshold * 2.0 ** scale_exp == 0.5 or scale_exp == 0


def test_params_contract():
    with pytest.raises(ValueError):
        LifParams(0)
    with pytest.raises(ValueError):
        LifParams(1, reset_mode='soft')
    with pytest.raises(ValueError):
        LifParams(1, leak_shift=32)


def test_grid_of_short_sequences():
    for currents in itertools.product((-50, 0, 25, 50), repeat=2):
        spikes, membrane = _run(list(currents))
        assert (spikes, membrane) == scalar_lif(currents, 50)
