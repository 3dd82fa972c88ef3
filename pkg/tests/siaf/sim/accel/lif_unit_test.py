'''Reconfigurable unrolled LIF unit'''
import itertools

import numpy as np
import pytest

from siaf.sim.accel.lif_unit import (SELECTORS, UnrolledLifUnit, fire_channel, pack_lanes, selector_for,
                                     time_steps_for, unpack_lanes, unrolled_lif)
from siaf.sim.errors import SelectorError, TimeStepMismatchError
from siaf.sim.reference.lif import LifParams, lif_seq
from siaf.sim.tensor import AccTensor

PARAMS = LifParams(threshold_int=50, leak_shift=2)


def _unit(time_steps):
    return UnrolledLifUnit(PARAMS, selector_for(time_steps))


def test_selector_patterns():
    assert SELECTORS == {4: 0b111, 2: 0b101, 1: 0b000}
    for time_steps, selectors in SELECTORS.items():
        assert time_steps_for(selectors) == time_steps
        assert _unit(time_steps).neurons == 4 // time_steps


def test_chained_example():
    spikes, membranes = unrolled_lif(np.array([60, 10, 40, 30]), _unit(4))
    assert spikes.tolist() == [1, 0, 0, 0]
    assert membranes.tolist() == [0, 10, 42, 40]


def test_independent_example():
    spikes, _ = unrolled_lif(np.array([60, 10, 40, 60]), _unit(1))
    assert spikes.tolist() == [1, 0, 0, 1]


def test_pairs_example():
    # stage 3 starts from zero, so 40 alone stays below threshold
    spikes, membranes = unrolled_lif(np.array([60, 10, 40, 30]), _unit(2))
    assert spikes.tolist() == [1, 0, 0, 0]
    assert membranes.tolist() == [0, 10, 40, 40]


@pytest.mark.parametrize('time_steps, links', [(4, [True, True, True]), (2, [True, False, True]),
                                               (1, [False, False, False])])
def test_mux_links(time_steps, links):
    '''selector bit 2 feeds stage 2, bit 0 feeds stage 4'''
    unit = _unit(time_steps)
    assert [unit.mux(stage) for stage in (2, 3, 4)] == links
    with pytest.raises(SelectorError):
        unit.mux(1)


@pytest.mark.parametrize('time_steps', [1, 2, 4])
def test_matches_sequential_chains(time_steps):
    grid = np.array(list(itertools.product((-64, -16, 0, 16, 48, 64), repeat=4))).T
    spikes, membranes = unrolled_lif(grid, _unit(time_steps))
    for start in range(0, 4, time_steps):
        chain = AccTensor(grid[start:start + time_steps])
        expected_spikes, expected_membrane = lif_seq(chain, PARAMS)
        assert np.array_equal(spikes[start:start + time_steps], expected_spikes.to_bits())
        assert np.array_equal(membranes[start + time_steps - 1], expected_membrane.data)


@pytest.mark.parametrize('selectors', [0b001, 0b010, 0b011, 0b100, 0b110])
def test_other_patterns_are_rejected(selectors):
    with pytest.raises(SelectorError):
        UnrolledLifUnit(PARAMS, selectors)


def test_no_selector_for_three_steps():
    with pytest.raises(TimeStepMismatchError):
        selector_for(3)


def test_unit_takes_four_lanes():
    with pytest.raises(TimeStepMismatchError):
        unrolled_lif(np.zeros(3), _unit(4))


def test_pack_lanes_layout():
    currents = np.array([[1, 2, 3], [4, 5, 6]])
    lanes = pack_lanes(currents, 2)
    # unit 0 holds positions 0 and 1, lanes neuron-major
    assert lanes.tolist() == [[1, 3], [4, 6], [2, 0], [5, 0]]
    assert np.array_equal(unpack_lanes(lanes, 2, 3), currents)


@pytest.mark.parametrize('time_steps', [1, 2, 4])
def test_fire_channel_matches_reference(time_steps):
    rng = np.random.default_rng(time_steps)
    currents = rng.integers(-80, 81, size=(time_steps, 37))
    spikes, _ = fire_channel(currents, _unit(time_steps))
    expected, _ = lif_seq(AccTensor(currents), PARAMS)
    assert np.array_equal(spikes, expected.to_bits())


def test_fire_channel_checks_configuration():
    with pytest.raises(TimeStepMismatchError):
        fire_channel(np.zeros((2, 8)), _unit(4))
