'''Channel-group accumulation of partial sums through temp SRAM'''
import logging
from typing import Optional, Sequence

import numpy as np

from siaf.sim.errors import SiafError, TimeStepMismatchError
from siaf.sim.tensor import checked_int32

logger = logging.getLogger(__name__)  # pylint: disable=C0103


class PartialSumStore:
    '''
    Temp-SRAM image of one output channel: one int32 accumulator lane per time
    step per output position. Every access is counted on the temp bank.
    '''

    def __init__(self, time_steps: int, positions: int, bank=None, name: str = 'temp'):
        self.values = np.zeros((time_steps, positions), dtype=np.int64)
        self.initialized = np.zeros((time_steps, positions), dtype=bool)
        self.bank = bank
        self.name = name

    @property
    def nbytes(self) -> int:
        '''footprint with 32-bit words'''
        return self.values.size * 4

    def read(self, lanes, positions) -> np.ndarray:
        '''values of an initialized region'''
        region = np.ix_(lanes, positions)
        if not self.initialized[region].all():
            raise SiafError(f'{self.name}: partial sums read before the first group initialized them')
        if self.bank is not None:
            self.bank.record_read(len(lanes) * len(positions))
        return self.values[region]

    def write(self, lanes, positions, values) -> None:
        '''store a region'''
        region = np.ix_(lanes, positions)
        self.values[region] = values
        self.initialized[region] = True
        if self.bank is not None:
            self.bank.record_write(len(lanes) * len(positions))

    def reset(self, lanes, positions) -> None:
        '''mark a released region as free'''
        self.initialized[np.ix_(lanes, positions)] = False


def accumulate_group(partials, store: PartialSumStore, lanes: Sequence[int], positions: Sequence[int],
                     first: bool, last: bool, shift: int = 0, bias: int = 0,
                     where: str = 'accumulator') -> Optional[np.ndarray]:
    '''
    Add one channel group's partial sums into the store.

    partials: [blocks, len(lanes), len(positions)], one row per PE block and
    one per time-step lane; the reduction runs over blocks only, time-step
    lanes are never mixed. shift weights the group (bitplane b is shifted by b).
    bias is added with the first group. On the last group the completed
    currents [len(lanes), len(positions)] are released and the region freed;
    otherwise None is returned.
    '''
    partials = np.asarray(partials, dtype=np.int64)
    lanes, positions = list(lanes), list(positions)
    if len(set(lanes)) != len(lanes):
        raise TimeStepMismatchError(f'{where}: duplicate time-step lanes {lanes}')
    if partials.shape[1:] != (len(lanes), len(positions)):
        raise TimeStepMismatchError(f'{where}: partials {partials.shape} do not match '
                                    f'{len(lanes)} lanes x {len(positions)} positions')
    group_sum = checked_int32(partials.sum(axis=0) << shift, where)
    if first:
        total = group_sum + bias
    else:
        total = store.read(lanes, positions) + group_sum
    total = checked_int32(total, where)
    if last:
        store.reset(lanes, positions)
        return total
    store.write(lanes, positions, total)
    return None
