'''
Cycle-level model of the compute fabric: 8x9 PE arrays, PE blocks of one
array per time step, channel-group accumulation through temp SRAM and the
reconfigurable unrolled LIF unit.
'''
import logging
from dataclasses import dataclass, fields

from siaf.sim.errors import ConfigError

logger = logging.getLogger(__name__)  # pylint: disable=C0103


@dataclass(frozen=True)
class AccelConfig:  # pylint: disable=R0902
    '''Fabric geometry and timing knobs'''
    pe_rows: int = 8
    pe_cols: int = 9
    arrays_per_block: int = 4
    num_blocks: int = 12
    clock_hz: float = 500e6
    ops_per_pe_cycle: int = 2
    fill_cycles: int = 2
    sparsity_gating: bool = True
    overlap_drain: bool = True
    vector_lanes: int = 8
    weight_fetch_stall_cycles: int = 0

    def __post_init__(self):
        for name in ('pe_rows', 'pe_cols', 'arrays_per_block', 'num_blocks', 'ops_per_pe_cycle',
                     'vector_lanes'):
            if getattr(self, name) <= 0:
                raise ConfigError(f'{name} must be positive', f'accelerator.{name}')
        if self.clock_hz <= 0:
            raise ConfigError('clock_hz must be positive', 'accelerator.clock_hz')
        if self.fill_cycles < 0 or self.weight_fetch_stall_cycles < 0:
            raise ConfigError('cycle penalties must be >= 0', 'accelerator')
        if self.pe_cols != 9:
            raise ConfigError('PE columns hold one 3x3 kernel or a 9-channel slice, pe_cols must be 9',
                              'accelerator.pe_cols')

    @classmethod
    def from_dict(cls, section: dict) -> 'AccelConfig':
        '''Build from the accelerator config section, unknown keys are errors'''
        known = {f.name for f in fields(cls)}
        unknown = set(section or {}) - known
        if unknown:
            raise ConfigError(f'unknown keys {sorted(unknown)}', 'accelerator')
        return cls(**(section or {}))

    @property
    def pes_per_array(self) -> int:
        '''8 x 9'''
        return self.pe_rows * self.pe_cols

    @property
    def total_pes(self) -> int:
        '''every PE of every array of every block'''
        return self.pes_per_array * self.arrays_per_block * self.num_blocks

    @property
    def peak_ops_per_cycle(self) -> int:
        '''spike operations per cycle with every PE busy'''
        return self.total_pes * self.ops_per_pe_cycle

    @property
    def peak_gsops(self) -> float:
        '''peak throughput in giga spike operations per second'''
        return self.peak_ops_per_cycle * self.clock_hz / 1e9

    @property
    def matmul_group(self) -> int:
        '''reduction channels one 1x1/matmul group covers'''
        return self.num_blocks * self.pe_cols


@dataclass
class CycleStats:
    '''Cycle count and spike operations, utilization against peak'''
    cycles: int = 0
    pe_active_ops: int = 0
    peak_ops_per_cycle: int = AccelConfig().peak_ops_per_cycle

    @property
    def utilization(self) -> float:
        '''active ops over the peak ops the elapsed cycles allow'''
        if not self.cycles:
            return 0.0
        return self.pe_active_ops / (self.cycles * self.peak_ops_per_cycle)

    def add(self, other: 'CycleStats') -> 'CycleStats':
        '''accumulate other into self'''
        self.cycles += other.cycles
        self.pe_active_ops += other.pe_active_ops
        return self
