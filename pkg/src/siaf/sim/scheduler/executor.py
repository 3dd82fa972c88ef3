'''
Execute compiled plans on the modeled fabric.

The same ModelWalker that drives the golden reference drives an
AcceleratorBackend here, so the fabric produces a LayerTrace with the same
entry names and the two traces can be compared entry by entry.
'''
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from opentelemetry import trace
from opentelemetry.trace import Tracer

from siaf import version
from siaf.sim.accel import AccelConfig
from siaf.sim.accel.layer import LayerEngine, LayerRun
from siaf.sim.accel.vector_unit import VectorUnit
from siaf.sim.constants import (PUBLISHED_ACTIVATION_SPARSITY, PUBLISHED_FRAMES_PER_SECOND,
                                PUBLISHED_MEMORY_POWER_SHARE, PUBLISHED_TSOPS_PER_WATT, REPORT_SCHEMA_VERSION)
from siaf.sim.errors import UnsupportedLayerError
from siaf.sim.fault.registry import apply_faults
from siaf.sim.memory import BANK_MEMBRANE, BANK_WEIGHT, BankSet, EnergyModel, TrafficReport, default_budget, \
    energy_report
from siaf.sim.reference.model import Backend, LayerTrace, ModelWalker
from siaf.sim.reference.network import ConvBn1x1, ConvBn3x3, Linear, ModelConfig, summarize, weight_layers
from siaf.sim.scheduler import Schedule
from siaf.sim.scheduler.compiler import LayerPlan, membrane_capacity, plans_by_name
from siaf.sim.tensor import AccTensor, ByteImage, QTensor, SpikeTensor

logger = logging.getLogger(__name__)  # pylint: disable=C0103


@dataclass
class LayerRecord:  # pylint: disable=R0902
    '''Measured cost of one executed plan'''
    name: str
    kind: str
    cycles: int
    cycles_without_overlap: int
    compute_cycles: int
    vector_cycles: int
    pe_active_ops: int
    utilization: float
    weight_reads: int
    membrane_reads: int
    membrane_writes: int
    output_sparsity: Optional[float] = None


class AcceleratorBackend(Backend):
    '''Evaluates every walker call through the plan of the same name'''

    def __init__(self, plans: Sequence[LayerPlan], accel: AccelConfig, schedule: Schedule,  # pylint: disable=R0913
                 banks: BankSet, faults: Sequence = (), tracer: Optional[Tracer] = None):
        self.plans = plans_by_name(plans)
        self.accel = accel
        self.schedule = schedule
        self.banks = banks
        self.faults = tuple(faults)
        self.engine = LayerEngine(accel, schedule, banks)
        self.vector = VectorUnit(accel, banks)
        self.tracer = tracer or trace.get_tracer(__name__, version.__version__)
        self.records: List[LayerRecord] = []

    def _plan(self, name: str) -> LayerPlan:
        try:
            return self.plans[name]
        except KeyError:
            raise UnsupportedLayerError(f'no compiled plan for {name}') from None

    def _weights(self, layer) -> np.ndarray:
        return apply_faults(self.faults, layer.name, layer.weights.data)

    def _counters(self) -> Tuple[int, int, int]:
        return (self.banks.banks[BANK_WEIGHT].reads, self.banks.banks[BANK_MEMBRANE].reads,
                self.banks.banks[BANK_MEMBRANE].writes)

    def _span(self, plan: LayerPlan):
        return self.tracer.start_as_current_span(f'siaf.layer {plan.name}')

    def _record(self, span, plan: LayerPlan, before: Tuple[int, int, int], ops: int, output) -> LayerRecord:
        after = self._counters()
        cycles = plan.total_cycles(self.accel.overlap_drain)
        record = LayerRecord(
            name=plan.name, kind=plan.kind, cycles=cycles, cycles_without_overlap=plan.total_cycles(False),
            compute_cycles=plan.compute_cycles, vector_cycles=plan.vector_cycles, pe_active_ops=ops,
            utilization=ops / (cycles * self.accel.peak_ops_per_cycle) if cycles else 0.0,
            weight_reads=after[0] - before[0], membrane_reads=after[1] - before[1],
            membrane_writes=after[2] - before[2],
            output_sparsity=output.sparsity() if isinstance(output, SpikeTensor) else None)
        self.records.append(record)
        if span.is_recording():
            span.set_attribute('siaf.layer.kind', plan.kind)
            span.set_attribute('siaf.schedule', self.schedule.kind)
            span.set_attribute('siaf.layer.cycles', record.cycles)
            span.set_attribute('siaf.layer.pe_active_ops', record.pe_active_ops)
            span.set_attribute('siaf.layer.weight_reads', record.weight_reads)
            if record.output_sparsity is not None:
                span.set_attribute('siaf.layer.output_sparsity', record.output_sparsity)
        logger.debug('Layer %s: %d cycles, %d ops', plan.name, record.cycles, record.pe_active_ops)
        return record

    def _array(self, plan: LayerPlan, run_fn) -> LayerRun:
        with self._span(plan) as span:
            before = self._counters()
            run = run_fn(plan)
            self._record(span, plan, before, run.stats.pe_active_ops, run.spikes)
        return run

    def encode(self, layer, lif, img, time_steps):
        run = self._array(self._plan(layer.name),
                          lambda plan: self.engine.encode(layer, lif, img, self._weights(layer), plan.jobs))
        return run.currents, run.spikes

    def fused(self, layer, lif, x):
        if not isinstance(x, SpikeTensor):
            raise UnsupportedLayerError(f'{layer.name}: the PE array only takes spike inputs')
        if isinstance(layer, ConvBn3x3):
            run_layer = self.engine.conv3x3
        elif isinstance(layer, (ConvBn1x1, Linear)):
            run_layer = self.engine.matmul
        else:
            raise UnsupportedLayerError(f'{type(layer).__name__} does not run on the PE array')
        run = self._array(self._plan(layer.name),
                          lambda plan: run_layer(layer, lif, x, self._weights(layer), plan.jobs))
        return run.currents, run.spikes

    def attention(self, ssa, q, k, v):
        qk_plan = self._plan(f'{ssa.name}.attn.qk')
        av_plan = self._plan(f'{ssa.name}.attn.av')
        with self._span(qk_plan) as qk_span:
            before = self._counters()
            with self._span(av_plan) as av_span:
                qk_run, av_run = self.engine.attention(ssa, q, k, v, qk_plan.jobs, av_plan.jobs,
                                                       av_plan.vector_cycles)
                # bank deltas of the fused pair are booked on the av plan
                self._record(qk_span, qk_plan, self._counters(), qk_run.stats.pe_active_ops, None)
                self._record(av_span, av_plan, before, av_run.stats.pe_active_ops, av_run.spikes)
        return av_run.currents, av_run.spikes

    def _vector(self, name: str, compute):
        plan = self._plan(name)
        with self._span(plan) as span:
            before = self._counters()
            out, _ = compute()
            self._record(span, plan, before, 0, out)
        return out

    def maxpool(self, layer, x):
        if not isinstance(x, SpikeTensor):
            raise UnsupportedLayerError(f'{layer.name}: the vector unit pools spike maps only')
        return self._vector(layer.name, lambda: self.vector.maxpool(x))

    def iand(self, layer, x, y):
        return self._vector(layer.name, lambda: self.vector.iand(x, y))

    def head(self, head, x):
        weights = QTensor(self._weights(head), head.weights.scale_exp)
        return self._vector(head.name, lambda: self.vector.head(x, weights, head.bias, head.name))


@dataclass
class RunReport:  # pylint: disable=R0902
    '''Everything one fabric run measured'''
    model: dict
    schedule: dict
    accel: AccelConfig
    layers: List[LayerRecord]
    traffic: TrafficReport
    energy: dict
    membrane_bytes: int
    weight_fetch_words: int
    verification: Optional[dict] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def total_cycles(self) -> int:
        '''sum of per-layer cycles'''
        return sum(layer.cycles for layer in self.layers)

    @property
    def total_cycles_without_overlap(self) -> int:
        '''sum of per-layer cycles with every drain exposed'''
        return sum(layer.cycles_without_overlap for layer in self.layers)

    @property
    def frames_per_second(self) -> float:
        '''clock_hz / total cycles'''
        return self.accel.clock_hz / self.total_cycles if self.total_cycles else 0.0

    @property
    def spike_ops(self) -> int:
        '''spike operations of every layer'''
        return sum(layer.pe_active_ops for layer in self.layers)

    @property
    def utilization(self) -> float:
        '''PE array utilization over the whole frame'''
        if not self.total_cycles:
            return 0.0
        return self.spike_ops / (self.total_cycles * self.accel.peak_ops_per_cycle)

    @property
    def weight_reads(self) -> int:
        '''weight bank words read'''
        return self.traffic.banks[BANK_WEIGHT].reads

    @property
    def mean_sparsity(self) -> float:
        '''average output sparsity over spiking layers'''
        values = [layer.output_sparsity for layer in self.layers if layer.output_sparsity is not None]
        return float(np.mean(values)) if values else 0.0

    def to_dict(self) -> dict:
        '''JSON-shaped report; key order and values depend only on the run inputs'''
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'model': self.model,
            'schedule': self.schedule,
            'cycles': {
                'per_layer': [{key: value for key, value in vars(layer).items() if key != 'output_sparsity'}
                              for layer in self.layers],
                'total': self.total_cycles,
                'total_without_overlap': self.total_cycles_without_overlap,
                'clock_hz': self.accel.clock_hz,
                'frames_per_second': self.frames_per_second,
                'utilization': self.utilization,
                'spike_ops': self.spike_ops,
                'published_frames_per_second': PUBLISHED_FRAMES_PER_SECOND,
                'published_note': 'measured on a larger model whose dimensions are not published; '
                                  'informational only',
            },
            'traffic': dict(self.traffic.to_dict(), weight_fetch_words=self.weight_fetch_words,
                            membrane_bytes=self.membrane_bytes),
            'energy': dict(self.energy, published_memory_power_share=PUBLISHED_MEMORY_POWER_SHARE,
                           published_tsops_per_watt=PUBLISHED_TSOPS_PER_WATT),
            'sparsity': {
                'per_layer': {layer.name: layer.output_sparsity for layer in self.layers
                              if layer.output_sparsity is not None},
                'mean': self.mean_sparsity,
                'published_mean': PUBLISHED_ACTIVATION_SPARSITY,
            },
            'verification': self.verification,
        }


@dataclass
class Mismatch:
    '''First element where two traces disagree'''
    layer: str
    field: str
    time_step: Optional[int] = None
    index: Tuple[int, ...] = ()
    expected: object = None
    actual: object = None

    def describe(self) -> str:
        '''one-line diff'''
        if self.time_step is None:
            return f'layer={self.layer} field={self.field} expected={self.expected} actual={self.actual}'
        return (f'layer={self.layer} field={self.field} t={self.time_step} index={list(self.index)} '
                f'expected={self.expected} actual={self.actual}')

    def to_dict(self) -> dict:
        '''report section entry'''
        return {'layer': self.layer, 'field': self.field, 'time_step': self.time_step,
                'index': list(self.index), 'expected': self.expected, 'actual': self.actual}


def _values(value) -> Optional[np.ndarray]:
    if value is None:
        return None
    if isinstance(value, SpikeTensor):
        return value.to_bits().astype(np.int64)
    return np.asarray(value.data, dtype=np.int64)


def first_mismatch(expected: LayerTrace, actual: LayerTrace) -> Optional[Mismatch]:
    '''Walk both traces in order; None when every entry is bit-identical'''
    for want, got in zip(expected, actual):
        if want.name != got.name:
            return Mismatch(want.name, 'name', expected=want.name, actual=got.name)
        for field_name in ('currents', 'output'):
            a, b = getattr(want, field_name), getattr(got, field_name)
            if isinstance(a, AccTensor) and isinstance(b, AccTensor) and a.scale_exp != b.scale_exp:
                return Mismatch(want.name, f'{field_name}.scale_exp', expected=a.scale_exp, actual=b.scale_exp)
            a, b = _values(a), _values(b)
            if a is None and b is None:
                continue
            if a is None or b is None or a.shape != b.shape:
                return Mismatch(want.name, f'{field_name}.shape', expected=None if a is None else list(a.shape),
                                actual=None if b is None else list(b.shape))
            diff = np.argwhere(a != b)
            if diff.size:
                where = tuple(int(i) for i in diff[0])
                # logits carry no time axis
                if a.ndim == 1:
                    return Mismatch(want.name, field_name, None, where, int(a[where]), int(b[where]))
                return Mismatch(want.name, field_name, where[0], where[1:], int(a[where]), int(b[where]))
    if len(expected) != len(actual):
        return Mismatch('trace', 'length', expected=len(expected), actual=len(actual))
    return None


def offchip_weight_bytes(cfg: ModelConfig) -> int:
    '''int8 weights plus 32-bit biases, loaded once per frame'''
    return sum(int(layer.weights.data.size) + 4 * int(layer.bias.data.size) for layer in weight_layers(cfg))


def execute(plans: Sequence[LayerPlan], img: ByteImage, cfg: ModelConfig, accel: AccelConfig,  # pylint: disable=R0913,R0914
            schedule: Schedule, banks: Optional[BankSet] = None, energy: Optional[EnergyModel] = None,
            faults: Sequence = (), tracer: Optional[Tracer] = None) -> Tuple[AccTensor, LayerTrace, RunReport]:
    '''
    Run one frame through the plans. Returns the logits, the fabric's
    LayerTrace and the RunReport. Errors propagate unchanged.
    '''
    membrane_bytes = membrane_capacity(plans)
    banks = banks or default_budget(membrane_bytes=membrane_bytes)
    energy = energy or EnergyModel.from_dict({})
    backend = AcceleratorBackend(plans, accel, schedule, banks, faults, tracer)
    banks.off_chip.transfer(int(img.data.size))
    banks.off_chip.transfer(offchip_weight_bytes(cfg))
    with backend.tracer.start_as_current_span('siaf.run') as span:
        if span.is_recording():
            span.set_attribute('siaf.model', cfg.name)
            span.set_attribute('siaf.schedule', schedule.kind)
            span.set_attribute('siaf.time_steps', schedule.time_steps)
        walker = ModelWalker(backend)
        logits = walker.forward(img, cfg)
        traffic = TrafficReport.from_banks(banks)
        records = backend.records
        cycles = sum(record.cycles for record in records)
        ops = sum(record.pe_active_ops for record in records)
        summary = summarize(cfg)
        report = RunReport(
            model={'name': summary.name, 'time_steps': summary.time_steps,
                   'input_shape': list(summary.input_shape), 'tokens': list(summary.tokens),
                   'blocks': summary.blocks, 'classes': summary.classes, 'parameters': summary.parameters},
            schedule=schedule.describe(), accel=accel, layers=records, traffic=traffic,
            energy=energy_report(traffic, ops, energy, cycles / accel.clock_hz if cycles else None),
            membrane_bytes=sum(plan.membrane_bytes for plan in plans),
            weight_fetch_words=sum(plan.weight_fetch_words for plan in plans))
        if span.is_recording():
            span.set_attribute('siaf.cycles', report.total_cycles)
    logger.debug('Executed %s: %d cycles, %.2f frames/s', cfg.name, report.total_cycles, report.frames_per_second)
    return logits, walker.trace, report
