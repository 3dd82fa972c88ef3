'''Serial versus fully parallel tick batching on the same model and frame'''
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from siaf.sim.accel import AccelConfig
from siaf.sim.accel.jobs import JOB_CONV3X3
from siaf.sim.constants import PUBLISHED_WEIGHT_ACCESS_REDUCTION
from siaf.sim.memory import BANK_MEMBRANE, EnergyModel, default_budget
from siaf.sim.reference.network import ModelConfig
from siaf.sim.scheduler import PARALLEL, SERIAL, make_schedule
from siaf.sim.scheduler.compiler import LayerPlan, compile_model, membrane_capacity
from siaf.sim.scheduler.executor import RunReport, execute
from siaf.sim.tensor import AccTensor, ByteImage

logger = logging.getLogger(__name__)  # pylint: disable=C0103


@dataclass
class OverheadBreakdown:
    '''Where the non-compute cycles of one schedule go'''
    compute: int = 0
    fill: int = 0
    exposed_drain: int = 0
    stall: int = 0
    vector: int = 0

    @classmethod
    def from_plans(cls, plans: Sequence[LayerPlan], accel: AccelConfig) -> 'OverheadBreakdown':
        '''sum over plans; fill is part of compute and reported separately'''
        breakdown = cls()
        for plan in plans:
            breakdown.compute += plan.cycles.compute
            breakdown.fill += sum(accel.fill_cycles for job in plan.jobs if job.kind == JOB_CONV3X3)
            breakdown.exposed_drain += plan.cycles.exposed_drain if accel.overlap_drain else plan.cycles.drain
            breakdown.stall += plan.cycles.stall
            breakdown.vector += plan.vector_cycles
        return breakdown


@dataclass
class LayerComparison:
    name: str
    serial_weight_reads: int
    parallel_weight_reads: int
    serial_cycles: int
    parallel_cycles: int

    @property
    def latency_ratio(self) -> float:
        '''parallel over serial cycles'''
        return self.parallel_cycles / self.serial_cycles if self.serial_cycles else 1.0


@dataclass
class ScheduleComparison:  # pylint: disable=R0902
    '''Side-by-side result of both schedules'''
    time_steps: int
    serial: RunReport
    parallel: RunReport
    layers: List[LayerComparison]
    serial_overhead: OverheadBreakdown
    parallel_overhead: OverheadBreakdown
    logits_match: bool
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def serial_weight_reads(self) -> int:
        '''weight words the serial schedule reads on the PE array'''
        return sum(layer.serial_weight_reads for layer in self.layers)

    @property
    def parallel_weight_reads(self) -> int:
        '''weight words the parallel schedule reads on the PE array'''
        return sum(layer.parallel_weight_reads for layer in self.layers)

    @property
    def weight_access_reduction(self) -> float:
        '''1 - parallel / serial weight reads, 1 - 1/T by construction'''
        if not self.serial_weight_reads:
            return 0.0
        return 1.0 - self.parallel_weight_reads / self.serial_weight_reads

    @property
    def latency_ratio(self) -> float:
        '''parallel over serial frame cycles'''
        return self.parallel.total_cycles / self.serial.total_cycles if self.serial.total_cycles else 1.0

    def to_dict(self) -> dict:
        '''JSON-shaped comparison table'''
        membrane = {kind: {'bytes': report.membrane_bytes,
                           'reads': report.traffic.banks[BANK_MEMBRANE].reads,
                           'writes': report.traffic.banks[BANK_MEMBRANE].writes}
                    for kind, report in ((SERIAL, self.serial), (PARALLEL, self.parallel))}
        return {
            'time_steps': self.time_steps,
            'logits_match': self.logits_match,
            'weight_access': {
                'serial_reads': self.serial_weight_reads,
                'parallel_reads': self.parallel_weight_reads,
                'reduction': self.weight_access_reduction,
                'expected_reduction': 1.0 - 1.0 / self.time_steps,
                'published_reduction': PUBLISHED_WEIGHT_ACCESS_REDUCTION,
                'published_note': 'measured against another design whose access pattern is not '
                                  'published; informational only',
            },
            'membrane': membrane,
            'latency': {
                'serial_cycles': self.serial.total_cycles,
                'parallel_cycles': self.parallel.total_cycles,
                'ratio': self.latency_ratio,
                'serial_frames_per_second': self.serial.frames_per_second,
                'parallel_frames_per_second': self.parallel.frames_per_second,
                'overhead': {SERIAL: asdict(self.serial_overhead), PARALLEL: asdict(self.parallel_overhead)},
            },
            'layers': [dict(asdict(layer), latency_ratio=layer.latency_ratio) for layer in self.layers],
        }


def _pe_layers(serial: RunReport, parallel: RunReport, weighted: set) -> List[LayerComparison]:
    rows = []
    for ser, par in zip(serial.layers, parallel.layers):
        if ser.name not in weighted:
            continue
        rows.append(LayerComparison(ser.name, ser.weight_reads, par.weight_reads, ser.cycles, par.cycles))
    return rows


def _run(cfg: ModelConfig, accel: AccelConfig, img: ByteImage, kind: str, bank_config: Optional[dict],
         energy: Optional[EnergyModel], faults: Sequence) -> Tuple[AccTensor, RunReport, List[LayerPlan]]:
    schedule = make_schedule(kind, cfg.time_steps)
    plans = compile_model(cfg, accel, schedule, default_budget(bank_config))
    banks = default_budget(bank_config, membrane_capacity(plans))
    logits, _, report = execute(plans, img, cfg, accel, schedule, banks, energy, faults)
    return logits, report, plans


def compare_schedules(cfg: ModelConfig, accel: AccelConfig, img: ByteImage,  # pylint: disable=R0913
                      bank_config: Optional[dict] = None, energy: Optional[EnergyModel] = None,
                      faults: Sequence = ()) -> ScheduleComparison:
    '''
    Run the frame under SerialTickBatch and ParallelTickBatch. The weight
    access reduction counts PE-array layers only; the classifier head reads
    its weights once under both schedules.
    '''
    serial_logits, serial, serial_plans = _run(cfg, accel, img, SERIAL, bank_config, energy, faults)
    parallel_logits, parallel, parallel_plans = _run(cfg, accel, img, PARALLEL, bank_config, energy, faults)
    weighted = {plan.name for plan in parallel_plans if plan.weight_words}
    comparison = ScheduleComparison(
        time_steps=cfg.time_steps, serial=serial, parallel=parallel,
        layers=_pe_layers(serial, parallel, weighted),
        serial_overhead=OverheadBreakdown.from_plans(serial_plans, accel),
        parallel_overhead=OverheadBreakdown.from_plans(parallel_plans, accel),
        logits_match=bool(np.array_equal(serial_logits.data, parallel_logits.data)))
    logger.debug('Compared schedules for %s: reduction %.3f, latency ratio %.3f', cfg.name,
                 comparison.weight_access_reduction, comparison.latency_ratio)
    return comparison
