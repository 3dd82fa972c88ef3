'''Leaky integrate-and-fire dynamics, integer form'''
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from siaf.sim.tensor import INT32_MAX, AccTensor, SpikeTensor, check_time_steps, checked_int32

logger = logging.getLogger(__name__)  # pylint: disable=C0103

# leak of 0.25 is a right shift by 2
DEFAULT_LEAK_SHIFT = 2
RESET_HARD = 'hard'


@dataclass(frozen=True)
class LifParams:
    '''Threshold in the layer's accumulator scale, leak as a right shift'''
    threshold_int: int
    leak_shift: int = DEFAULT_LEAK_SHIFT
    reset_mode: str = RESET_HARD

    def __post_init__(self):
        if not 0 < self.threshold_int <= INT32_MAX:
            raise ValueError(f'threshold_int must be in (0, {INT32_MAX}], got {self.threshold_int}')
        if not 0 <= self.leak_shift < 32:
            raise ValueError(f'leak_shift must be in [0, 32), got {self.leak_shift}')
        if self.reset_mode != RESET_HARD:
            raise ValueError(f'only hard reset is modeled, got {self.reset_mode!r}')


def threshold_for_scale(scale_exp: int) -> int:
    '''Integer form of the 0.5 threshold for currents worth 2**scale_exp each'''
    if scale_exp < 0:
        return 1 << (-scale_exp - 1)
    # integer currents: u >= 0.5 means u >= 1
    return 1


def lif_step(chain_in: np.ndarray, current: np.ndarray, params: LifParams,
             where: str = 'lif') -> Tuple[np.ndarray, np.ndarray]:
    '''One time step: returns (spike bits, post-reset membrane)'''
    u = checked_int32((np.asarray(chain_in, dtype=np.int64) >> params.leak_shift)
                      + np.asarray(current, dtype=np.int64), where)
    fired = u >= params.threshold_int
    return fired.astype(np.uint8), np.where(fired, 0, u)


def lif_seq(currents: AccTensor, params: LifParams, where: str = 'lif') -> Tuple[SpikeTensor, AccTensor]:
    '''
    Sequential LIF over the leading time axis, each element independently.
    u[t] = (u[t-1] >> leak_shift) + I[t], spike when u[t] >= threshold, hard reset to 0.
    The returned membrane is the post-reset state that would enter step T+1.
    '''
    data = currents.wide()
    time_steps = check_time_steps(data.shape[0])
    membrane = np.zeros(data.shape[1:], dtype=np.int64)
    spikes = np.zeros(data.shape, dtype=np.uint8)
    for t in range(time_steps):
        spikes[t], membrane = lif_step(membrane, data[t], params, f'{where}[t={t}]')
    return SpikeTensor.from_bits(spikes), AccTensor(membrane, currents.scale_exp, where)
