'''
Reconfigurable unrolled LIF unit.

Four LIF stages are chained combinationally; three muxes between them either
pass the previous stage's membrane or a zero. Selector bits are read MSB first:
bit 2 drives the mux in front of stage 2, bit 0 the one in front of stage 4.
'''
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from siaf.sim.errors import SelectorError, TimeStepMismatchError
from siaf.sim.reference.lif import LifParams, lif_step

logger = logging.getLogger(__name__)  # pylint: disable=C0103

STAGES = 4
SELECTORS = {4: 0b111, 2: 0b101, 1: 0b000}
_TIME_STEPS = {selector: steps for steps, selector in SELECTORS.items()}


def selector_for(time_steps: int) -> int:
    '''mux pattern that cuts the chain into time_steps-long pieces'''
    if time_steps not in SELECTORS:
        raise TimeStepMismatchError(f'no selector pattern for T={time_steps}')
    return SELECTORS[time_steps]


def time_steps_for(selectors: int) -> int:
    '''chain length a mux pattern realizes'''
    if selectors not in _TIME_STEPS:
        raise SelectorError(f'selector pattern {selectors:03b} is not one of 111, 101, 000')
    return _TIME_STEPS[selectors]


@dataclass(frozen=True)
class UnrolledLifUnit:
    params: LifParams
    selectors: int

    def __post_init__(self):
        time_steps_for(self.selectors)

    @property
    def time_steps(self) -> int:
        '''length of each chain'''
        return time_steps_for(self.selectors)

    @property
    def neurons(self) -> int:
        '''independent neurons one unit evaluates per cycle'''
        return STAGES // self.time_steps

    def mux(self, stage: int) -> bool:
        '''True when stage (2..4) takes the previous stage's membrane'''
        if not 2 <= stage <= STAGES:
            raise SelectorError(f'stage {stage} has no mux in front of it')
        return bool((self.selectors >> (STAGES - stage)) & 1)


def unrolled_lif(currents, unit: UnrolledLifUnit, where: str = 'lif_unit') -> Tuple[np.ndarray, np.ndarray]:
    '''
    Evaluate the four stages on currents of shape [4, ...] (any trailing shape
    is evaluated elementwise, one unit per element). Stage 1 always starts
    from a zero membrane. Returns spike bits and post-reset membranes, both [4, ...].
    '''
    currents = np.asarray(currents, dtype=np.int64)
    if currents.shape[0] != STAGES:
        raise TimeStepMismatchError(f'unit takes {STAGES} lane currents, got {currents.shape[0]}')
    incoming = np.zeros(currents.shape[1:], dtype=np.int64)
    spikes = np.zeros(currents.shape, dtype=np.uint8)
    membranes = np.zeros(currents.shape, dtype=np.int64)
    for stage in range(STAGES):
        if stage and not unit.mux(stage + 1):
            incoming = np.zeros_like(incoming)
        spikes[stage], membranes[stage] = lif_step(incoming, currents[stage], unit.params,
                                                   f'{where}[stage={stage + 1}]')
        incoming = membranes[stage]
    return spikes, membranes


def pack_lanes(currents: np.ndarray, time_steps: int) -> np.ndarray:
    '''
    Arrange [T, P] currents onto [4, ceil(P*T/4)] unit lanes: with T=2 each unit
    takes two neighbouring positions (lanes 1-2 and 3-4), with T=1 four.
    '''
    steps, positions = currents.shape
    if steps != time_steps:
        raise TimeStepMismatchError(f'{steps} current lanes for T={time_steps}')
    per_unit = STAGES // time_steps
    units = -(-positions // per_unit)
    padded = np.zeros((time_steps, units * per_unit), dtype=np.int64)
    padded[:, :positions] = currents
    # [T, units, per_unit] -> [per_unit, T, units] -> lanes ordered neuron-major
    return padded.reshape(time_steps, units, per_unit).transpose(2, 0, 1).reshape(STAGES, units)


def unpack_lanes(lanes: np.ndarray, time_steps: int, positions: int) -> np.ndarray:
    '''inverse of pack_lanes, returns [T, P]'''
    per_unit = STAGES // time_steps
    units = lanes.shape[1]
    return lanes.reshape(per_unit, time_steps, units).transpose(1, 2, 0).reshape(
        time_steps, units * per_unit)[:, :positions]


def fire_channel(currents: np.ndarray, unit: UnrolledLifUnit,
                 where: str = 'lif_unit') -> Tuple[np.ndarray, np.ndarray]:
    '''
    Released [T, P] currents of one output channel through the LIF units,
    returns [T, P] spikes and [T, P] membranes.
    '''
    time_steps, positions = currents.shape
    if time_steps != unit.time_steps:
        raise TimeStepMismatchError(f'T={time_steps} currents on a unit configured for '
                                    f'T={unit.time_steps} (selectors {unit.selectors:03b})')
    lanes = pack_lanes(currents, time_steps)
    spikes, membranes = unrolled_lif(lanes, unit, where)
    return (unpack_lanes(spikes, time_steps, positions).astype(np.uint8),
            unpack_lanes(membranes, time_steps, positions))
