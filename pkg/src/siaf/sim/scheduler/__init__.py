'''
Tick-batching schedules.

SerialTickBatch processes the time steps of a layer one pass at a time and
spills LIF membranes to SRAM between passes. ParallelTickBatch feeds all time
steps to the per-time-step PE arrays at once and evaluates them through the
unrolled LIF unit, so weights are fetched once and no membrane is stored.
'''
from dataclasses import dataclass
from typing import Tuple, Union

from siaf.sim.accel.lif_unit import selector_for, time_steps_for
from siaf.sim.errors import ConfigError, TimeStepMismatchError
from siaf.sim.tensor import check_time_steps

SERIAL = 'serial'
PARALLEL = 'parallel'


@dataclass(frozen=True)
class SerialTickBatch:
    time_steps: int
    kind = SERIAL

    def __post_init__(self):
        check_time_steps(self.time_steps)

    def lane_passes(self) -> Tuple[Tuple[int, ...], ...]:
        '''one pass per time step'''
        return tuple((t,) for t in range(self.time_steps))

    @property
    def spills_membrane(self) -> bool:
        '''membranes cross passes through the membrane bank'''
        return self.time_steps > 1

    def describe(self) -> dict:
        '''report section'''
        return {'kind': self.kind, 'time_steps': self.time_steps}


@dataclass(frozen=True)
class ParallelTickBatch:
    time_steps: int
    selectors: int
    kind = PARALLEL

    def __post_init__(self):
        check_time_steps(self.time_steps)
        if time_steps_for(self.selectors) != self.time_steps:
            raise TimeStepMismatchError(f'selectors {self.selectors:03b} do not realize T={self.time_steps}')

    def lane_passes(self) -> Tuple[Tuple[int, ...], ...]:
        '''a single pass carrying every time step'''
        return (tuple(range(self.time_steps)),)

    @property
    def spills_membrane(self) -> bool:
        '''never'''
        return False

    def describe(self) -> dict:
        '''report section'''
        return {'kind': self.kind, 'time_steps': self.time_steps, 'selectors': f'{self.selectors:03b}'}


Schedule = Union[SerialTickBatch, ParallelTickBatch]


def make_schedule(kind: str, time_steps: int) -> Schedule:
    '''Schedule by name'''
    if kind == SERIAL:
        return SerialTickBatch(time_steps)
    if kind == PARALLEL:
        return ParallelTickBatch(time_steps, selector_for(check_time_steps(time_steps)))
    raise ConfigError(f'unknown schedule {kind!r}, expected serial or parallel', 'schedule.kind')
