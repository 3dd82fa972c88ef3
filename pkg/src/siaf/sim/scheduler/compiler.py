'''Compile a model into per-layer tile-job plans under a tick-batching schedule'''
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from siaf.sim.accel import AccelConfig
from siaf.sim.accel.jobs import (ConvGeometry, CycleBreakdown, TileJob, ceil_div,
                                 conv3x3_jobs, conv3x3_weight_words, covered_elements, cycle_breakdown,
                                 dense_positions, matmul_jobs, matmul_weight_words)
from siaf.sim.accel.layer import MEMBRANE_BYTES, attention_geometries, conv_geometry, matmul_geometry
from siaf.sim.accel.tiles import KERNEL, PE_COLS, PE_ROWS, TILE_COLS
from siaf.sim.accel.vector_unit import head_cycles, iand_cycles, maxpool_cycles, shift_cycles
from siaf.sim.errors import SiafError, TimeStepMismatchError, UnsupportedLayerError
from siaf.sim.memory import (BANK_SPIKE_IN, BANK_SPIKE_TEMP, BANK_TEMP, BANK_WEIGHT, BankSet,
                             default_budget)
from siaf.sim.reference.network import (OP_ATTENTION, OP_CONV1X1, OP_CONV3X3, OP_ENCODE, OP_HEAD, OP_IAND,
                                        OP_LINEAR, OP_MAXPOOL, ModelConfig, OpSite, op_sites)
from siaf.sim.scheduler import Schedule

logger = logging.getLogger(__name__)  # pylint: disable=C0103

PLAN_QK = 'attention.qk'
PLAN_AV = 'attention.av'
VECTOR_KINDS = (OP_MAXPOOL, OP_IAND, OP_HEAD)


@dataclass
class LayerPlan:  # pylint: disable=R0902
    '''Ordered jobs of one layer plus its static cost'''
    name: str
    kind: str
    in_shape: Tuple[int, ...]
    out_shape: Tuple[int, ...]
    jobs: Tuple[TileJob, ...] = ()
    geometry: object = None
    cycles: CycleBreakdown = field(default_factory=CycleBreakdown)
    vector_cycles: int = 0
    weight_words: int = 0
    weight_fetch_words: int = 0
    temp_footprint_bytes: int = 0
    membrane_bytes: int = 0
    footprints: dict = field(default_factory=dict)

    def total_cycles(self, overlap: bool) -> int:
        '''array compute, accumulator drain and vector work'''
        return self.cycles.total(overlap) + self.vector_cycles

    @property
    def compute_cycles(self) -> int:
        '''PE array cycles alone'''
        return self.cycles.compute

    def describe(self, overlap: bool) -> dict:
        '''per-layer report entry'''
        return {
            'name': self.name,
            'kind': self.kind,
            'jobs': len(self.jobs),
            'compute_cycles': self.cycles.compute,
            'drain_cycles': self.cycles.drain,
            'exposed_drain_cycles': self.cycles.exposed_drain,
            'stall_cycles': self.cycles.stall,
            'vector_cycles': self.vector_cycles,
            'cycles': self.total_cycles(overlap),
            'cycles_without_overlap': self.total_cycles(False),
            'weight_words': self.weight_words,
            'weight_fetch_words': self.weight_fetch_words,
            'temp_footprint_bytes': self.temp_footprint_bytes,
            'membrane_bytes': self.membrane_bytes,
        }


def _spike_bytes(bits: int) -> int:
    return ceil_div(bits, 8)


def _array_plan(site: OpSite, name: str, kind: str, geom, jobs: List[TileJob], weight_words: int,
                accel: AccelConfig, lanes: int, sched: Schedule, vector_cycles: int = 0,
                membrane_elements: int = 0) -> LayerPlan:
    plan = LayerPlan(name=name, kind=kind, in_shape=site.in_shape, out_shape=site.out_shape,
                     jobs=tuple(jobs), geometry=geom, cycles=cycle_breakdown(jobs, geom.released, accel),
                     vector_cycles=vector_cycles, weight_words=weight_words,
                     weight_fetch_words=sum(job.weight_words for job in jobs),
                     temp_footprint_bytes=lanes * geom.released * 4,
                     membrane_bytes=membrane_elements * MEMBRANE_BYTES if sched.spills_membrane else 0)
    if isinstance(geom, ConvGeometry):
        group = min(accel.num_blocks, geom.in_ch)
        spike_in = _spike_bytes(group * lanes * (geom.height + KERNEL - 1) * (geom.col_tiles * PE_ROWS + 2))
        slice_words = group
    else:
        group = min(accel.matmul_group, geom.slices * PE_COLS)
        spike_in = _spike_bytes(group * lanes * ceil_div(geom.positions, PE_ROWS) * PE_ROWS)
        slice_words = group // PE_COLS
    plan.footprints = {
        BANK_TEMP: plan.temp_footprint_bytes,
        BANK_SPIKE_IN: spike_in,
        BANK_SPIKE_TEMP: _spike_bytes(lanes * geom.released),
        # double-buffered weight slice, 9 bytes per word
        BANK_WEIGHT: 2 * slice_words * 9 if weight_words else 0,
    }
    return plan


def _check_footprints(plan: LayerPlan, banks: BankSet) -> None:
    for bank_name, nbytes in plan.footprints.items():
        try:
            banks.banks[bank_name].check_footprint(nbytes)
        except SiafError as err:
            err.location = f'{plan.name}:{bank_name}'
            raise


def compile_model(cfg: ModelConfig, accel: AccelConfig, sched: Schedule,
                  banks: Optional[BankSet] = None, check_coverage: bool = False) -> List[LayerPlan]:
    '''
    Layer-by-layer plans. Under ParallelTickBatch every job carries all time
    steps and each weight slice is fetched once; under SerialTickBatch each
    job carries one time step and the weight slice is fetched once per pass.
    '''
    if sched.time_steps != cfg.time_steps:
        raise TimeStepMismatchError(f'schedule T={sched.time_steps} for a T={cfg.time_steps} model')
    banks = banks or default_budget()
    passes = sched.lane_passes()
    lanes = len(passes[0])
    time_steps = cfg.time_steps
    plans: List[LayerPlan] = []
    for site in op_sites(cfg):
        if site.kind in (OP_ENCODE, OP_CONV3X3):
            geom = conv_geometry(site.layer, site.in_shape, encoding=site.kind == OP_ENCODE)
            plan = _array_plan(site, site.name, site.kind, geom, conv3x3_jobs(geom, accel, passes),
                               conv3x3_weight_words(geom), accel, lanes, sched,
                               membrane_elements=geom.out_ch * geom.released)
        elif site.kind in (OP_CONV1X1, OP_LINEAR):
            geom = matmul_geometry(site.layer, site.in_shape)
            plan = _array_plan(site, site.name, site.kind, geom, matmul_jobs(geom, accel, passes),
                               matmul_weight_words(geom), accel, lanes, sched,
                               membrane_elements=geom.out_ch * geom.positions)
        elif site.kind == OP_ATTENTION:
            tokens, dim = site.in_shape
            qk_geom, av_geom = attention_geometries(site.layer, tokens)
            plans.append(_array_plan(site, f'{site.name}.attn.qk', PLAN_QK, qk_geom,
                                     matmul_jobs(qk_geom, accel, passes, weight_bank=False), 0, accel,
                                     lanes, sched))
            plan = _array_plan(site, f'{site.name}.attn.av', PLAN_AV, av_geom,
                               matmul_jobs(av_geom, accel, passes, weight_bank=False), 0, accel, lanes,
                               sched, vector_cycles=shift_cycles((time_steps, tokens, dim), accel),
                               membrane_elements=tokens * dim)
        elif site.kind == OP_MAXPOOL:
            plan = LayerPlan(site.name, site.kind, site.in_shape, site.out_shape,
                             vector_cycles=maxpool_cycles((time_steps,) + site.out_shape, accel))
        elif site.kind == OP_IAND:
            plan = LayerPlan(site.name, site.kind, site.in_shape, site.out_shape,
                             vector_cycles=iand_cycles((time_steps,) + site.in_shape, accel))
        elif site.kind == OP_HEAD:
            tokens, dim = site.in_shape
            plan = LayerPlan(site.name, site.kind, site.in_shape, site.out_shape,
                             vector_cycles=head_cycles(time_steps, tokens, dim, site.layer.classes, accel),
                             weight_words=0)
        else:
            raise UnsupportedLayerError(f'cannot compile {site.kind}')
        plans.append(plan)
    for plan in plans:
        _check_footprints(plan, banks)
        if check_coverage and plan.jobs:
            check_plan_coverage(plan, time_steps)
    logger.debug('Compiled %d plans for %s under %s schedule', len(plans), cfg.name, sched.kind)
    return plans


def check_plan_coverage(plan: LayerPlan, time_steps: int) -> None:
    '''every (time step, output channel, position) released exactly once'''
    counts = covered_elements(plan.jobs, plan.geometry)
    expected = time_steps * plan.geometry.out_ch * dense_positions(plan.geometry)
    repeated = [key for key, count in counts.items() if count != 1]
    if repeated or len(counts) != expected:
        raise SiafError(f'{plan.name}: jobs cover {len(counts)} of {expected} output elements, '
                        f'{len(repeated)} more than once')


def plans_by_name(plans: Sequence[LayerPlan]) -> dict:
    '''name -> plan'''
    return {plan.name: plan for plan in plans}


def total_cycles(plans: Sequence[LayerPlan], overlap: bool) -> int:
    '''strict layer-by-layer sum'''
    return sum(plan.total_cycles(overlap) for plan in plans)


def membrane_capacity(plans: Sequence[LayerPlan]) -> int:
    '''bytes the membrane bank needs: the largest single layer, since passes never span layers'''
    return max((plan.membrane_bytes for plan in plans), default=0)


__all__ = ['LayerPlan', 'compile_model', 'check_plan_coverage', 'plans_by_name', 'total_cycles',
           'membrane_capacity', 'TILE_COLS']
