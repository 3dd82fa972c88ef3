'''
Functional execution of tile jobs.

LayerEngine drives the PE tiles, the accumulator and the LIF stage for one
layer at a time and counts every SRAM access on the bank set it owns. Cycle
counts come from the jobs themselves (see jobs.cycle_breakdown); the engine
adds the data-dependent part, the spike operations.
'''
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from siaf.sim.accel import AccelConfig, CycleStats
from siaf.sim.accel.accumulator import PartialSumStore, accumulate_group
from siaf.sim.accel.jobs import (ConvGeometry, MatmulGeometry, TileJob, ceil_div, conv3x3_jobs,
                                 cycle_breakdown, matmul_jobs)
from siaf.sim.accel.lif_unit import UnrolledLifUnit, fire_channel
from siaf.sim.accel.tiles import KERNEL, PE_COLS, PE_ROWS, TILE_COLS, Conv3x3Pipeline, matmul_tile
from siaf.sim.errors import ShapeMismatchError, TimeStepMismatchError, UnsupportedLayerError
from siaf.sim.memory import BankSet, default_budget, words_for
from siaf.sim.reference.lif import lif_step
from siaf.sim.reference.network import ConvBn1x1, ConvBn3x3, Lif, Linear, Ssa
from siaf.sim.scheduler import Schedule
from siaf.sim.tensor import (BITPLANES, IMAGE_SCALE_EXP, INT8_MAX, AccTensor, ByteImage, SpikeTensor,
                             bitplane_decompose)

logger = logging.getLogger(__name__)  # pylint: disable=C0103

MEMBRANE_BYTES = 4


@dataclass
class LayerRun:
    '''Result of one layer on the fabric'''
    currents: AccTensor
    spikes: Optional[SpikeTensor]
    stats: CycleStats
    membrane_bytes: int = 0


def conv_geometry(layer: ConvBn3x3, in_shape: Sequence[int], encoding: bool = False) -> ConvGeometry:
    '''geometry of a 3x3 layer on a [C, H, W] input'''
    channels, height, width = in_shape
    return ConvGeometry(channels, layer.out_ch, height, width, layer.stride,
                        BITPLANES if encoding else 1)


def matmul_geometry(layer, in_shape: Sequence[int]) -> MatmulGeometry:
    '''geometry of a 1x1 conv on [C, H, W] or a linear layer on [N, D]'''
    if isinstance(layer, ConvBn1x1):
        channels, height, width = in_shape
        return MatmulGeometry(channels, layer.out_ch, height * width)
    tokens, dim = in_shape
    return MatmulGeometry(dim, layer.out_dim, tokens)


def attention_geometries(ssa: Ssa, tokens: int) -> Tuple[MatmulGeometry, MatmulGeometry]:
    '''Q K^T then S V, one output channel per (head, row)'''
    if ssa.head_dim > INT8_MAX:
        raise UnsupportedLayerError(f'{ssa.name}: head_dim {ssa.head_dim} makes attention scores '
                                    f'exceed the 8-bit operand range')
    return (MatmulGeometry(ssa.head_dim, ssa.heads * tokens, tokens),
            MatmulGeometry(tokens, ssa.heads * tokens, ssa.head_dim))


def _pad_matrix(values: np.ndarray, channels: int, positions: int) -> np.ndarray:
    '''[..., C, P] -> [..., slices*9, ceil(P/8)*8]'''
    padded_c = ceil_div(channels, PE_COLS) * PE_COLS
    padded_p = ceil_div(positions, PE_ROWS) * PE_ROWS
    pad = [(0, 0)] * (values.ndim - 2) + [(0, padded_c - channels), (0, padded_p - positions)]
    return np.pad(values, pad)


def _pad_rows(values: np.ndarray, channels: int) -> np.ndarray:
    '''[..., C] -> [..., slices*9]'''
    padded_c = ceil_div(channels, PE_COLS) * PE_COLS
    pad = [(0, 0)] * (values.ndim - 1) + [(0, padded_c - channels)]
    return np.pad(values, pad)


class LayerEngine:
    '''Executes jobs of one simulation; owns no state beyond the bank counters'''

    def __init__(self, accel: AccelConfig, schedule: Schedule, banks: BankSet):
        self.accel = accel
        self.schedule = schedule
        self.banks = banks
        self.time_steps = schedule.time_steps

    # spike operations

    def _count_ops(self, active_inputs: int, blocks: int, lanes: int, cycles: int) -> int:
        if self.accel.sparsity_gating:
            return active_inputs * self.accel.ops_per_pe_cycle
        return self.accel.pes_per_array * blocks * lanes * cycles * self.accel.ops_per_pe_cycle

    # 3x3 flow

    def _conv_job(self, job: TileJob, lane_inputs: np.ndarray, w9: np.ndarray, geom: ConvGeometry,
                  store: PartialSumStore, bias: int, currents: np.ndarray, shift: int, where: str) -> int:
        '''one 3x3 job; lane_inputs is [L, G, H+2, W'+2] padded spikes, returns spike ops'''
        pipeline = Conv3x3Pipeline(self.accel.fill_cycles)
        block_inputs = lane_inputs.transpose(1, 0, 2, 3)
        x0 = job.tile[0]
        emitted = []
        for y in range(geom.height):
            out = pipeline.step(block_inputs[:, :, y:y + KERNEL, x0:x0 + TILE_COLS], w9)
            if out is not None:
                emitted.append(out)
        emitted.extend(pipeline.drain())
        blocks, lanes = block_inputs.shape[:2]
        self.banks.spike_in.record_read(
            words_for(blocks * lanes * (geom.height + KERNEL - 1) * TILE_COLS, self.banks.spike_in.word_bits))

        stride = geom.stride
        cols = [x for x in range(job.tile[0], job.tile[1]) if x % stride == 0]
        for row, out in enumerate(emitted):
            if row % stride or not cols:
                continue
            positions = [(row // stride) * geom.out_width + x // stride for x in cols]
            partials = out[:, :, [x - x0 for x in cols]]
            released = accumulate_group(partials, store, job.lanes, positions, job.first, job.last,
                                        shift, bias, where)
            if released is not None:
                currents[np.ix_(job.lanes, [job.out_channel], positions)] = released[:, np.newaxis, :]
        return self._count_ops(pipeline.active_inputs, blocks, lanes, geom.height)

    def _run_conv(self, jobs: Sequence[TileJob], geom: ConvGeometry, weights: np.ndarray, bias: np.ndarray,
                  lane_inputs_for, where: str) -> Tuple[np.ndarray, int]:
        currents = np.zeros((self.time_steps, geom.out_ch, geom.released), dtype=np.int64)
        store = PartialSumStore(self.time_steps, geom.released, self.banks.temp, where)
        kernels = weights.reshape(geom.out_ch, geom.in_ch, KERNEL * KERNEL).astype(np.int64)
        ops = 0
        for job in jobs:
            job.check(self.accel)
            if job.fetch_weights:
                self.banks.weight.record_read(job.weight_words)
            c0, c1 = job.channels
            w9 = kernels[job.out_channel, c0:c1][:, np.newaxis, :]
            shift = job.plane or 0
            ops += self._conv_job(job, lane_inputs_for(job)[:, c0:c1], w9, geom, store,
                                  int(bias[job.out_channel]), currents, shift, where)
        return currents, ops

    # matmul flow

    def _matmul_job(self, job: TileJob, inputs: np.ndarray, weights: np.ndarray, store: PartialSumStore,
                    bias: int, currents: np.ndarray, where: str) -> int:
        '''
        inputs: [L, C', P'] padded spikes of the job's lanes.
        weights: [1 or L, C'] padded operand row of the output channel.
        '''
        c0, c1 = job.channels
        slices = (c1 - c0) // PE_COLS
        lanes = inputs.shape[0]
        block_in = inputs[:, c0:c1, :]
        w9 = weights[:, c0:c1].reshape(weights.shape[0], slices, PE_COLS).transpose(1, 0, 2)
        active = 0
        vectors = 0
        for start in range(job.tile[0], job.tile[1], PE_ROWS):
            stop = min(start + PE_ROWS, job.tile[1])
            vector = block_in[:, :, start:start + PE_ROWS]
            cols = vector.reshape(lanes, slices, PE_COLS, PE_ROWS).transpose(1, 0, 3, 2)
            sums, count = matmul_tile(cols, w9)
            active += count
            vectors += 1
            released = accumulate_group(sums[:, :, :stop - start], store, job.lanes, range(start, stop),
                                        job.first, job.last, 0, bias, where)
            if released is not None:
                currents[np.ix_(job.lanes, [job.out_channel], list(range(start, stop)))] = \
                    released[:, np.newaxis, :]
        self.banks.spike_in.record_read(
            words_for(lanes * (c1 - c0) * vectors * PE_ROWS, self.banks.spike_in.word_bits))
        return self._count_ops(active, slices, lanes, vectors)

    def _run_matmul(self, jobs: Sequence[TileJob], geom: MatmulGeometry, inputs_for, weights_for,
                    bias: np.ndarray, where: str) -> Tuple[np.ndarray, int]:
        currents = np.zeros((self.time_steps, geom.out_ch, geom.positions), dtype=np.int64)
        store = PartialSumStore(self.time_steps, geom.positions, self.banks.temp, where)
        ops = 0
        for job in jobs:
            job.check(self.accel)
            if job.fetch_weights:
                self.banks.weight.record_read(job.weight_words)
            ops += self._matmul_job(job, inputs_for(job), weights_for(job), store,
                                    int(bias[job.out_channel]), currents, where)
        return currents, ops

    # LIF stage

    def fire(self, currents: np.ndarray, lif: Lif, where: str) -> np.ndarray:
        '''
        [T, OC, P] currents to spikes. Parallel: every lane at once through the
        unrolled LIF units. Serial: one pass per time step with the membrane
        spilled to the membrane bank between passes.
        '''
        time_steps = currents.shape[0]
        flat = currents.reshape(time_steps, -1)
        if self.schedule.kind == 'parallel':
            unit = UnrolledLifUnit(lif.params, self.schedule.selectors)
            spikes, _ = fire_channel(flat, unit, where)
        else:
            spikes = np.zeros(flat.shape, dtype=np.uint8)
            membrane = np.zeros(flat.shape[1], dtype=np.int64)
            nbytes = flat.shape[1] * MEMBRANE_BYTES
            for t in range(time_steps):
                if t:
                    membrane = np.frombuffer(self.banks.membrane.read(0, nbytes), dtype='<i4').astype(np.int64)
                spikes[t], membrane = lif_step(membrane, flat[t], lif.params, f'{where}[t={t}]')
                if t < time_steps - 1:
                    self.banks.membrane.write(0, membrane.astype('<i4').tobytes())
        self.banks.spike_temp.record_write(words_for(spikes.size, self.banks.spike_temp.word_bits))
        return spikes.reshape(currents.shape)

    def _stats(self, jobs, released: int, ops: int, extra_cycles: int = 0) -> CycleStats:
        cycles = cycle_breakdown(jobs, released, self.accel).total(self.accel.overlap_drain)
        return CycleStats(cycles + extra_cycles, ops, self.accel.peak_ops_per_cycle)

    def _membrane_bytes(self, elements: int) -> int:
        return elements * MEMBRANE_BYTES if self.schedule.spills_membrane else 0

    def _lane_index(self, job: TileJob) -> List[int]:
        if max(job.lanes) >= self.time_steps:
            raise TimeStepMismatchError(f'job lanes {job.lanes} exceed T={self.time_steps}')
        return list(job.lanes)

    # layers

    def encode(self, layer: ConvBn3x3, lif: Lif, img: ByteImage, weights: np.ndarray,
               jobs: Sequence[TileJob]) -> LayerRun:
        '''encoding layer: 8 bitplanes, each shifted by its bit position in the accumulator'''
        geom = conv_geometry(layer, img.shape, encoding=True)
        planes = np.stack([plane.to_bits()[0] for plane in bitplane_decompose(img)])
        padded = np.pad(planes, ((0, 0), (0, 0), (1, 1), (1, geom.col_tiles * PE_ROWS - geom.width + 1)))
        self.banks.spike_in.record_write(words_for(planes.size, self.banks.spike_in.word_bits))

        def lane_inputs(job):
            return np.repeat(padded[job.plane][np.newaxis], len(self._lane_index(job)), axis=0)

        currents, ops = self._run_conv(jobs, geom, weights, layer.bias.wide(), lane_inputs, layer.name)
        spikes = self.fire(currents, lif, lif.name)
        shape = (self.time_steps, layer.out_ch, geom.out_height, geom.out_width)
        return LayerRun(AccTensor(currents.reshape(shape), layer.weights.scale_exp + IMAGE_SCALE_EXP, layer.name),
                        SpikeTensor.from_bits(spikes.reshape(shape)),
                        self._stats(jobs, geom.released, ops), self._membrane_bytes(currents[0].size))

    def conv3x3(self, layer: ConvBn3x3, lif: Lif, x: SpikeTensor, weights: np.ndarray,
                jobs: Sequence[TileJob]) -> LayerRun:
        '''3x3 ConvBN + LIF on [T, C, H, W] spikes'''
        bits = x.to_bits()
        geom = conv_geometry(layer, bits.shape[1:])
        padded = np.pad(bits, ((0, 0), (0, 0), (1, 1), (1, geom.col_tiles * PE_ROWS - geom.width + 1)))
        self.banks.spike_in.record_write(words_for(bits.size, self.banks.spike_in.word_bits))
        currents, ops = self._run_conv(jobs, geom, weights, layer.bias.wide(),
                                       lambda job: padded[self._lane_index(job)], layer.name)
        spikes = self.fire(currents, lif, lif.name)
        shape = (self.time_steps, layer.out_ch, geom.out_height, geom.out_width)
        return LayerRun(AccTensor(currents.reshape(shape), layer.weights.scale_exp, layer.name),
                        SpikeTensor.from_bits(spikes.reshape(shape)),
                        self._stats(jobs, geom.released, ops), self._membrane_bytes(currents[0].size))

    def matmul(self, layer, lif: Lif, x: SpikeTensor, weights: np.ndarray,
               jobs: Sequence[TileJob]) -> LayerRun:
        '''1x1 ConvBN on [T, C, H, W] or Linear on [T, N, D], then LIF'''
        bits = x.to_bits()
        if isinstance(layer, ConvBn1x1):
            time_steps, channels, height, width = bits.shape
            columns = bits.reshape(time_steps, channels, height * width)
        elif isinstance(layer, Linear):
            columns = bits.transpose(0, 2, 1)
        else:
            raise UnsupportedLayerError(f'{layer.name}: {type(layer).__name__} is not a matmul layer')
        geom = matmul_geometry(layer, bits.shape[1:])
        matrix = weights.reshape(geom.out_ch, geom.reduction).astype(np.int64)
        if matrix.shape[1] != columns.shape[1]:
            raise ShapeMismatchError(f'{layer.name}: weights {weights.shape} do not match input {bits.shape}')
        padded = _pad_matrix(columns, geom.reduction, geom.positions)
        rows = _pad_rows(matrix, geom.reduction)
        self.banks.spike_in.record_write(words_for(bits.size, self.banks.spike_in.word_bits))
        currents, ops = self._run_matmul(jobs, geom, lambda job: padded[self._lane_index(job)],
                                         lambda job: rows[job.out_channel][np.newaxis],
                                         layer.bias.wide(), layer.name)
        spikes = self.fire(currents, lif, lif.name)
        if isinstance(layer, ConvBn1x1):
            shape = (self.time_steps, layer.out_ch) + tuple(bits.shape[2:])
            out_currents, out_spikes = currents.reshape(shape), spikes.reshape(shape)
        else:
            out_currents, out_spikes = currents.transpose(0, 2, 1), spikes.transpose(0, 2, 1)
        return LayerRun(AccTensor(out_currents, layer.weights.scale_exp, layer.name),
                        SpikeTensor.from_bits(out_spikes), self._stats(jobs, geom.released, ops),
                        self._membrane_bytes(currents[0].size))

    def attention(self, ssa: Ssa, q: SpikeTensor, k: SpikeTensor, v: SpikeTensor,
                  qk_jobs: Sequence[TileJob], av_jobs: Sequence[TileJob],
                  vector_cycles: int = 0) -> Tuple[LayerRun, LayerRun]:
        '''
        Q K^T with Q as spike input and K rows as per-lane operands, then S V
        with V^T as spike input and score rows as per-lane operands. The shift
        runs on the vector unit, the attention LIF on the LIF units.
        '''
        time_steps, tokens, dim = q.shape
        if not q.shape == k.shape == v.shape or dim != ssa.dim:
            raise ShapeMismatchError(f'{ssa.name}: Q/K/V shapes {q.shape}, {k.shape}, {v.shape}')
        heads, head_dim = ssa.heads, ssa.head_dim
        qk_geom, av_geom = attention_geometries(ssa, tokens)
        qb, kb, vb = (s.to_bits().reshape(time_steps, tokens, heads, head_dim).transpose(0, 2, 1, 3)
                      for s in (q, k, v))
        # per head: Q^T [T, dh, N] as spike columns, K rows [T, N, dh] as operands
        q_cols = _pad_matrix(qb.transpose(1, 0, 3, 2), head_dim, tokens)
        k_rows = _pad_rows(kb.transpose(1, 0, 2, 3), head_dim)
        for spikes in (q, k, v):
            self.banks.spike_in.record_write(words_for(spikes.size, self.banks.spike_in.word_bits))

        def qk_operand(job):
            head, row = divmod(job.out_channel, tokens)
            lanes = self._lane_index(job)
            if job.tile[0] == 0:
                self.banks.spike_temp.record_read(words_for(len(lanes) * head_dim,
                                                            self.banks.spike_temp.word_bits))
            return k_rows[head][lanes, row]

        zero_bias = np.zeros(heads * tokens, dtype=np.int64)
        scores, qk_ops = self._run_matmul(qk_jobs, qk_geom,
                                          lambda job: q_cols[job.out_channel // tokens][self._lane_index(job)],
                                          qk_operand, zero_bias, f'{ssa.name}.attn.qk')
        # scores[t, h*N + m, n] -> [h, T, n, m]
        score_rows = scores.reshape(time_steps, heads, tokens, tokens).transpose(1, 0, 3, 2)
        self.banks.temp.record_write(score_rows.size)
        v_cols = _pad_matrix(vb.transpose(1, 0, 2, 3), tokens, head_dim)
        s_rows = _pad_rows(score_rows, tokens)

        def av_operand(job):
            head, row = divmod(job.out_channel, tokens)
            lanes = self._lane_index(job)
            if job.tile[0] == 0:
                self.banks.temp.record_read(len(lanes) * tokens)
            return s_rows[head][lanes, row]

        values, av_ops = self._run_matmul(av_jobs, av_geom,
                                          lambda job: v_cols[job.out_channel // tokens][self._lane_index(job)],
                                          av_operand, zero_bias, f'{ssa.name}.attn.av')
        # values[t, h*N + n, d] -> [T, N, h*dh + d]
        attn = values.reshape(time_steps, heads, tokens, head_dim).transpose(0, 2, 1, 3).reshape(
            time_steps, tokens, dim)
        shifted = attn >> ssa.scale_shift
        spikes = self.fire(shifted, ssa.attn_lif, ssa.attn_lif.name)
        qk_run = LayerRun(AccTensor(scores, 0, f'{ssa.name}.attn.qk'), None,
                          self._stats(qk_jobs, qk_geom.released, qk_ops))
        av_run = LayerRun(AccTensor(shifted, 0, f'{ssa.name}.attn'), SpikeTensor.from_bits(spikes),
                          self._stats(av_jobs, av_geom.released, av_ops, vector_cycles),
                          self._membrane_bytes(shifted[0].size))
        return qk_run, av_run


def _banks_for(schedule: Schedule, membrane_bytes: int, banks: Optional[BankSet]) -> BankSet:
    if banks is not None:
        return banks
    return default_budget(membrane_bytes=membrane_bytes if schedule.spills_membrane else 0)


def run_layer(layer, lif: Lif, x, accel: AccelConfig, schedule: Schedule,
              banks: Optional[BankSet] = None) -> Tuple[LayerRun, BankSet]:
    '''
    One ConvBN/Linear layer with its LIF on the fabric. x is a SpikeTensor, or
    a ByteImage for the encoding layer. Returns the run and the bank set whose
    counters it advanced.
    '''
    passes = schedule.lane_passes()
    if isinstance(x, ByteImage):
        if not isinstance(layer, ConvBn3x3):
            raise UnsupportedLayerError('only a 3x3 layer can encode an image')
        geom = conv_geometry(layer, x.shape, encoding=True)
        banks = _banks_for(schedule, layer.out_ch * geom.released * MEMBRANE_BYTES, banks)
        engine = LayerEngine(accel, schedule, banks)
        return engine.encode(layer, lif, x, layer.weights.data, conv3x3_jobs(geom, accel, passes)), banks
    if x.time_steps != schedule.time_steps:
        raise TimeStepMismatchError(f'T={x.time_steps} input under a T={schedule.time_steps} schedule')
    if isinstance(layer, ConvBn3x3):
        geom = conv_geometry(layer, x.shape[1:])
        banks = _banks_for(schedule, layer.out_ch * geom.released * MEMBRANE_BYTES, banks)
        engine = LayerEngine(accel, schedule, banks)
        return engine.conv3x3(layer, lif, x, layer.weights.data, conv3x3_jobs(geom, accel, passes)), banks
    if isinstance(layer, (ConvBn1x1, Linear)):
        geom = matmul_geometry(layer, x.shape[1:])
        banks = _banks_for(schedule, geom.out_ch * geom.positions * MEMBRANE_BYTES, banks)
        engine = LayerEngine(accel, schedule, banks)
        return engine.matmul(layer, lif, x, layer.weights.data, matmul_jobs(geom, accel, passes)), banks
    raise UnsupportedLayerError(f'{type(layer).__name__} does not run on the PE array')
