'''Main entry point for the siaf simulator module.'''
import sys
import threading
from dataclasses import dataclass
from typing import List, Optional, Tuple

from siaf.sim import constants
from siaf.sim import custom_logger
from siaf.sim.accel import AccelConfig
from siaf.sim.config import SimConfig
from siaf.sim.fault import Fault
from siaf.sim.fault.registry import Registry
from siaf.sim.init import SimInit
from siaf.sim.reference.model import LayerTrace, model_forward
from siaf.sim.reference.model_file import load_model
from siaf.sim.reference.network import ModelConfig, summarize
from siaf.sim.scheduler import Schedule, make_schedule
from siaf.sim.scheduler.compare import ScheduleComparison, compare_schedules
from siaf.sim.scheduler.compiler import LayerPlan, compile_model, membrane_capacity, total_cycles
from siaf.sim.scheduler.executor import Mismatch, RunReport, execute, first_mismatch
from siaf.sim.tensor import AccTensor, ByteImage
from siaf.version import __version__

logger = custom_logger.get_custom_logger(__name__)

_tracing_lock = threading.Lock()
_tracing_applied = False  # pylint: disable=C0103


@dataclass
class Verification:
    '''Outcome of a golden versus fabric run'''
    mismatch: Optional[Mismatch]
    report: RunReport
    layers_compared: int

    @property
    def ok(self) -> bool:
        '''every trace entry and the logits are bit-identical'''
        return self.mismatch is None


class Simulator:
    '''
    Top-level entry point. Each instance owns its configuration and creates
    fresh banks for every run, so instances can run on separate threads.
    '''

    def __init__(self, config: Optional[SimConfig] = None, faults: Optional[List[Fault]] = None):
        global _tracing_applied  # pylint: disable=W0603
        logger.debug('Python version: %s', sys.version)
        logger.debug('siaf version: %s', __version__)
        self._config = config or SimConfig()
        self._init = SimInit(self._config)
        with _tracing_lock:
            if not _tracing_applied:
                self._init.apply_config(self._config)
                _tracing_applied = True
        self.faults = list(faults) if faults is not None else list(Registry().snapshot())

    @classmethod
    def from_files(cls, model_path: str, weights_path: Optional[str] = None,  # pylint: disable=R0913
                   config_file: Optional[str] = None, overrides: Optional[dict] = None,
                   faults: Optional[List[Fault]] = None) -> Tuple['Simulator', ModelConfig]:
        '''Load a model file and build a simulator from every config layer'''
        cfg, sections = load_model(model_path, weights_path)
        config = SimConfig(config_file, sections, overrides)
        if config.time_steps is not None and config.time_steps != cfg.time_steps:
            cfg, _ = load_model(model_path, weights_path, config.time_steps)
        return cls(config, faults), cfg

    @property
    def config(self) -> SimConfig:
        '''merged configuration'''
        return self._config

    @property
    def accel(self) -> AccelConfig:
        '''fabric configuration'''
        return self._config.accel_config()

    def schedule(self, time_steps: int, kind: Optional[str] = None) -> Schedule:
        '''configured schedule for a model with time_steps'''
        return make_schedule(kind or self._config.schedule_kind, time_steps)

    def compile(self, cfg: ModelConfig, schedule: Optional[Schedule] = None,
                check_coverage: bool = False) -> List[LayerPlan]:
        '''plans for cfg under the configured schedule'''
        schedule = schedule or self.schedule(cfg.time_steps)
        return compile_model(cfg, self.accel, schedule, self._config.bank_set(), check_coverage)

    def run(self, cfg: ModelConfig, img: ByteImage,
            schedule: Optional[Schedule] = None) -> Tuple[AccTensor, LayerTrace, RunReport]:
        '''one frame on the fabric'''
        schedule = schedule or self.schedule(cfg.time_steps)
        plans = self.compile(cfg, schedule)
        banks = self._config.bank_set(membrane_capacity(plans))
        return execute(plans, img, cfg, self.accel, schedule, banks, self._config.energy_model(), self.faults)

    def verify(self, cfg: ModelConfig, img: ByteImage, schedule: Optional[Schedule] = None) -> Verification:
        '''golden reference against the fabric, entry by entry'''
        _, golden = model_forward(img, cfg)
        _, fabric, report = self.run(cfg, img, schedule)
        mismatch = first_mismatch(golden, fabric)
        report.verification = {
            'match': mismatch is None,
            'layers_compared': len(golden),
            'mismatch': mismatch.to_dict() if mismatch else None,
        }
        if mismatch:
            logger.debug('Verification mismatch: %s', mismatch.describe())
        return Verification(mismatch, report, len(golden))

    def compare(self, cfg: ModelConfig, img: ByteImage) -> ScheduleComparison:
        '''serial against fully parallel tick batching'''
        return compare_schedules(cfg, self.accel, img, self._config.bank_config,
                                 self._config.energy_model(), self.faults)

    def stats(self, cfg: ModelConfig) -> dict:
        '''fabric constants and compiled cost of cfg, without functional execution'''
        accel = self.accel
        schedule = self.schedule(cfg.time_steps)
        plans = self.compile(cfg, schedule)
        cycles = total_cycles(plans, accel.overlap_drain)
        banks = self._config.bank_set()
        summary = summarize(cfg)
        return {
            'model': {'name': summary.name, 'time_steps': summary.time_steps,
                      'input_shape': list(summary.input_shape), 'tokens': list(summary.tokens),
                      'blocks': summary.blocks, 'parameters': summary.parameters},
            'schedule': schedule.describe(),
            'accelerator': {
                'total_pes': accel.total_pes,
                'peak_ops_per_cycle': accel.peak_ops_per_cycle,
                'peak_gsops': accel.peak_gsops,
                'clock_hz': accel.clock_hz,
                'sram_budget_bytes': banks.budget_bytes,
                'sram_budget_kb': banks.budget_bytes / 1024,
                'published_peak_gsops': constants.PUBLISHED_PEAK_GSOPS,
                'published_sram_kb': constants.PUBLISHED_SRAM_KB,
            },
            'cycles': {
                'per_layer': [plan.describe(accel.overlap_drain) for plan in plans],
                'total': cycles,
                'total_without_overlap': total_cycles(plans, False),
                'frames_per_second': accel.clock_hz / cycles if cycles else 0.0,
                'published_frames_per_second': constants.PUBLISHED_FRAMES_PER_SECOND,
                'weight_fetch_words': sum(plan.weight_fetch_words for plan in plans),
                'membrane_bytes': sum(plan.membrane_bytes for plan in plans),
            },
        }

    def register_fault(self, fault: Fault) -> None:
        '''inject fault into this simulator's following runs'''
        self.faults.append(fault)

    def register_processor(self, processor) -> None:
        '''Add additional span exporters + processors'''
        logger.debug('Entering Simulator.register_processor().')
        self._init.register_processor(processor)
